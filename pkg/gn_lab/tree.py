"""Labelled trees as parent-closed sets of integer sequences.

A label is a tuple of positive integers; the empty tuple is the root ε. The
children of a vertex a of degree d are a+(1,), ..., a+(d,), so a tree is fully
described by its label set and parent lookup is structural.

Vertices are also indexed by birth order (root = 0). Child lists are kept in
birth order, which makes the i-th child of a the vertex labelled a+(i,).
"""

import logging
from collections import Counter
from dataclasses import dataclass
from typing import Dict, Iterable, List, Optional, Tuple

from .config import DEBUG_CHECKS
from .errors import InvariantViolation, UnknownVertexError, format_label

logger = logging.getLogger('gn_lab')

Label = Tuple[int, ...]
ROOT: Label = ()


def parent(label: Label) -> Label:
    """Parent sequence a1..a(m-1); undefined for the root."""
    if not label:
        raise ValueError('the root has no parent')
    return label[:-1]


def parse_label(text: str) -> Label:
    """Inverse of format_label: 'ε' or '' -> (), '1.2.1' -> (1, 2, 1)."""
    text = text.strip()
    if text in ('', 'ε', 'e'):
        return ROOT
    label = tuple(int(part) for part in text.split('.'))
    if any(i < 1 for i in label):
        raise ValueError(f'label entries must be >= 1: {text!r}')
    return label


class LabelledTree:
    """Finite parent-closed label set with cached degrees."""

    __slots__ = ('_labels', '_parents', '_children', '_index')

    def __init__(self):
        self._labels: List[Label] = [ROOT]
        self._parents: List[int] = [-1]
        self._children: List[List[int]] = [[]]
        self._index: Dict[Label, int] = {ROOT: 0}

    # --- construction ---

    @classmethod
    def from_labels(cls, labels: Iterable[Label]) -> 'LabelledTree':
        """Build from a parent-closed, contiguous label set."""
        tree = cls()
        for label in sorted(set(map(tuple, labels)), key=lambda a: (len(a), a)):
            if not label:
                continue
            pa = label[:-1]
            if pa not in tree._index:
                raise ValueError(f'label set is not parent-closed at {format_label(label)}')
            if label[-1] != tree.deg(pa) + 1:
                raise ValueError(f'label set is not contiguous at {format_label(label)}')
            tree.add_child(pa)
        return tree

    @classmethod
    def from_parent_array(cls, parents: List[int]) -> 'LabelledTree':
        """Rebuild from parent indices in birth order (root has parent -1)."""
        if not parents or parents[0] != -1:
            raise ValueError('parent array must start with the root (-1)')
        tree = cls()
        for i, pi in enumerate(parents[1:], start=1):
            if not 0 <= pi < i:
                raise ValueError(f'vertex {i} has invalid parent index {pi}')
            tree.add_child_at(pi)
        return tree

    def copy(self) -> 'LabelledTree':
        other = LabelledTree.__new__(LabelledTree)
        other._labels = list(self._labels)
        other._parents = list(self._parents)
        other._children = [list(c) for c in self._children]
        other._index = dict(self._index)
        return other

    # --- mutation ---

    def add_child(self, a: Label) -> Label:
        """Attach a·(deg(a)+1) and return its label."""
        return self._labels[self.add_child_at(self.index_of(a))]

    def add_child_at(self, i: int) -> int:
        """Attach a new child to the vertex with birth index i; return the new index."""
        label = self._labels[i] + (len(self._children[i]) + 1,)
        j = len(self._labels)
        self._labels.append(label)
        self._parents.append(i)
        self._children.append([])
        self._children[i].append(j)
        self._index[label] = j
        if DEBUG_CHECKS:
            self.check_invariants()
        return j

    # --- queries ---

    @property
    def size(self) -> int:
        return len(self._labels)

    def __len__(self):
        return len(self._labels)

    def __contains__(self, label) -> bool:
        return tuple(label) in self._index

    def __iter__(self):
        return iter(self._labels)

    def __eq__(self, other):
        if not isinstance(other, LabelledTree):
            return NotImplemented
        return set(self._labels) == set(other._labels)

    def __repr__(self):
        return f'LabelledTree(size={self.size})'

    @property
    def labels(self) -> List[Label]:
        return list(self._labels)

    def index_of(self, a: Label) -> int:
        try:
            return self._index[tuple(a)]
        except KeyError:
            raise UnknownVertexError(tuple(a)) from None

    def label_of(self, i: int) -> Label:
        return self._labels[i]

    def parent_index(self, i: int) -> int:
        return self._parents[i]

    def children_at(self, i: int) -> List[int]:
        return self._children[i]

    def children(self, a: Label) -> List[Label]:
        return [self._labels[j] for j in self._children[self.index_of(a)]]

    def deg(self, a: Label) -> int:
        return len(self._children[self.index_of(a)])

    def degree_at(self, i: int) -> int:
        return len(self._children[i])

    def degrees(self) -> List[int]:
        return [len(c) for c in self._children]

    def parent_array(self) -> List[int]:
        return list(self._parents)

    def subtree_sizes(self) -> List[int]:
        """Vertices in the subtree of every vertex, by birth index."""
        sizes = [1] * len(self._labels)
        # children are born after their parents
        for j in range(len(self._labels) - 1, 0, -1):
            sizes[self._parents[j]] += sizes[j]
        return sizes

    def depths(self) -> List[int]:
        return [len(a) for a in self._labels]

    def height(self) -> int:
        return max(len(a) for a in self._labels)

    def degree_histogram(self) -> Dict[int, int]:
        return dict(sorted(Counter(len(c) for c in self._children).items()))

    def max_degree_vertex(self) -> Label:
        """Vertex of maximum degree; ties go to the lexicographically smallest label."""
        best = max(len(c) for c in self._children)
        return min(self._labels[i] for i, c in enumerate(self._children) if len(c) == best)

    def subtree_indices(self, i: int) -> List[int]:
        """Birth indices of the subtree rooted at i, in birth order."""
        out, stack = [], [i]
        while stack:
            j = stack.pop()
            out.append(j)
            stack.extend(self._children[j])
        out.sort()
        return out

    def check_invariants(self):
        """Parent closure, contiguity and the degree sum."""
        deg_sum = 0
        for i, label in enumerate(self._labels):
            kids = self._children[i]
            deg_sum += len(kids)
            for pos, j in enumerate(kids, start=1):
                if self._labels[j] != label + (pos,):
                    raise InvariantViolation(
                        f'contiguity broken below {format_label(label)}: '
                        f'child {pos} is {format_label(self._labels[j])}')
            if label and self._labels[self._parents[i]] != label[:-1]:
                raise InvariantViolation(f'{format_label(label)} is not parent-closed')
        if deg_sum != self.size - 1:
            raise InvariantViolation(f'degree sum {deg_sum} != size-1 = {self.size - 1}')
        if len(self._index) != self.size:
            raise InvariantViolation('duplicate labels')

    # --- serialization ---

    def to_parent_lines(self) -> str:
        """Newline-delimited 'index parent_index' records."""
        return ''.join(f'{i} {pi}\n' for i, pi in enumerate(self._parents))

    @classmethod
    def from_parent_lines(cls, text: str) -> 'LabelledTree':
        parents = []
        for line_no, line in enumerate(text.splitlines()):
            line = line.strip()
            if not line:
                continue
            i, pi = (int(x) for x in line.split())
            if i != len(parents):
                raise ValueError(f'line {line_no + 1}: expected index {len(parents)}, got {i}')
            parents.append(pi)
        return cls.from_parent_array(parents)

    def to_dict(self) -> dict:
        return {
            'size': self.size,
            'labels': [format_label(a) for a in self._labels],
            'parents': list(self._parents),
        }

    @classmethod
    def from_dict(cls, data: dict) -> 'LabelledTree':
        tree = cls.from_parent_array(list(data['parents']))
        labels = data.get('labels')
        if labels is not None and [format_label(a) for a in tree._labels] != list(labels):
            raise ValueError('labels do not match the parent array')
        return tree


# --- fertility ---

def descendant_count(tree: LabelledTree, a: Label) -> int:
    """|subtree rooted at a| - 1."""
    return len(tree.subtree_indices(tree.index_of(a))) - 1


def is_k_fertile(tree: LabelledTree, a: Label, k: int) -> bool:
    return descendant_count(tree, a) >= k


# --- shapes ---

@dataclass(frozen=True, order=True)
class Shape:
    """Rooted tree up to isomorphism, as a canonical parenthesis code."""
    size: int
    code: str

    @classmethod
    def from_code(cls, code: str) -> 'Shape':
        return cls(code.count('('), code)

    def __str__(self):
        return self.code


SINGLETON = Shape(1, '()')


def _combine(child_codes: List[str]) -> str:
    return '(' + ''.join(sorted(child_codes)) + ')'


def subtree_codes(tree: LabelledTree, max_size: Optional[int] = None,
                  sizes: Optional[List[int]] = None) -> Dict[int, str]:
    """Canonical codes of every subtree with at most max_size vertices."""
    if sizes is None:
        sizes = tree.subtree_sizes()
    codes: Dict[int, str] = {}
    for i in range(tree.size - 1, -1, -1):
        if max_size is not None and sizes[i] > max_size:
            continue
        codes[i] = _combine([codes[j] for j in tree.children_at(i)])
    return codes


def canonical_shape(tree: LabelledTree, a: Label) -> Shape:
    """Canonical code of the subtree rooted at a, invariant under child reordering."""
    root = tree.index_of(a)
    members = tree.subtree_indices(root)
    codes: Dict[int, str] = {}
    for i in reversed(members):
        codes[i] = _combine([codes[j] for j in tree.children_at(i)])
    return Shape(len(members), codes[root])


def shape_to_tree(shape: Shape) -> LabelledTree:
    """Materialize a shape as a labelled tree (children in code order)."""
    tree = LabelledTree()
    graft(tree, 0, shape.code)
    return tree


def graft(tree: LabelledTree, at: int, code: str) -> int:
    """Add the descendants encoded by `code` below vertex `at`, which plays the code's root.

    Returns the number of vertices added.
    """
    stack = [at]
    added = 0
    for ch in code[1:-1]:
        if ch == '(':
            stack.append(tree.add_child_at(stack[-1]))
            added += 1
        else:
            stack.pop()
    return added


def enumerate_shapes(max_size: int) -> List[Shape]:
    """All rooted trees with at most max_size vertices, sorted by (size, code)."""
    if max_size < 1:
        return []
    layers = [{SINGLETON.code}]
    for _ in range(2, max_size + 1):
        grown = set()
        for code in layers[-1]:
            base = shape_to_tree(Shape.from_code(code))
            for i in range(base.size):
                candidate = base.copy()
                candidate.add_child_at(i)
                grown.add(canonical_shape(candidate, ROOT).code)
        layers.append(grown)
    return sorted(Shape.from_code(c) for layer in layers for c in layer)


# --- Glue ---

def glue_construct(tree: LabelledTree, v: Label, k: int, copies_per_shape: int) -> LabelledTree:
    """Truncated Glue(T, v, k): copies of every rooted tree on <= k vertices hung from v."""
    out = tree.copy()
    vi = out.index_of(v)
    for shape in enumerate_shapes(k):
        for _ in range(copies_per_shape):
            root = out.add_child_at(vi)
            graft(out, root, shape.code)
    return out


@dataclass
class GlueDecomposition:
    core: LabelledTree
    v: Label
    inventory: Dict[Shape, int]
    leftover: int

    def inventory_table(self) -> List[dict]:
        return [{'shape': s.code, 'size': s.size, 'count': n}
                for s, n in sorted(self.inventory.items())]


def glue_decompose(tree: LabelledTree, k: int, v: Optional[Label] = None) -> GlueDecomposition:
    """Split off the small children subtrees of the max-degree vertex.

    Children of v whose subtree has at most k vertices are detached and tallied
    by shape; the rest of the tree is relabelled contiguously into the core.
    """
    if v is None:
        v = tree.max_degree_vertex()
    vi = tree.index_of(v)
    sizes = tree.subtree_sizes()
    codes = subtree_codes(tree, max_size=k, sizes=sizes)

    inventory: Counter = Counter()
    detached = set()
    leftover = 0
    for c in tree.children_at(vi):
        if sizes[c] <= k:
            inventory[Shape(sizes[c], codes[c])] += 1
            detached.add(c)
            leftover += sizes[c]

    core = LabelledTree()
    new_index = {0: 0}
    for i in range(1, tree.size):
        pi = tree.parent_index(i)
        if pi not in new_index or i in detached:
            continue
        new_index[i] = core.add_child_at(new_index[pi])
    return GlueDecomposition(core, v, dict(inventory), leftover)
