"""The discrete-time labelled GN chain.

From state A the next vertex links to a in A with probability
f(deg_A(a)) / sum_b f(deg_A(b)); the newcomer receives label a(deg_A(a)+1).
"""

import logging
import math
from dataclasses import dataclass, field
from typing import List, Optional, Tuple

import numpy as np

from .config import SUM_TREE_THRESHOLD
from .errors import InvariantViolation, RateBoundViolation, SimulationError
from .kernel import Kernel
from .sampler import WeightIndex
from .tree import Label, LabelledTree

logger = logging.getLogger('gn_lab')

# float slack on the (n+1) f(n) comparison; the inequality itself is exact
RATE_BOUND_SLACK = 1e-12


@dataclass
class AttachmentLog:
    """attached_to[s] is the birth index the vertex born at step s linked to."""
    attached_to: List[int] = field(default_factory=list)

    def __len__(self):
        return len(self.attached_to)

    def record(self, parent_index: int):
        self.attached_to.append(parent_index)

    def parent_array(self) -> List[int]:
        return [-1] + list(self.attached_to)

    def pairs(self, tree: LabelledTree) -> List[Tuple[Label, Label]]:
        """(attached_to, new_label) per step, as labels of `tree`."""
        return [(tree.label_of(a), tree.label_of(s + 1)) for s, a in enumerate(self.attached_to)]

    # --- text / binary streams ---

    def to_text(self) -> str:
        return ''.join(f'{s} {a}\n' for s, a in enumerate(self.attached_to))

    @classmethod
    def from_text(cls, text: str) -> 'AttachmentLog':
        log = cls()
        for line in text.splitlines():
            line = line.strip()
            if not line:
                continue
            s, a = (int(x) for x in line.split())
            if s != len(log):
                raise ValueError(f'attachment log out of order at step {s}')
            log.record(a)
        return log

    def to_array(self) -> np.ndarray:
        return np.asarray(self.attached_to, dtype=np.int64)

    @classmethod
    def from_array(cls, arr) -> 'AttachmentLog':
        return cls([int(a) for a in np.asarray(arr, dtype=np.int64)])

    def save(self, path: str):
        if path.endswith('.npy'):
            np.save(path, self.to_array())
        else:
            with open(path, 'w', encoding='utf-8') as f:
                f.write(self.to_text())

    @classmethod
    def load(cls, path: str) -> 'AttachmentLog':
        if path.endswith('.npy'):
            return cls.from_array(np.load(path))
        with open(path, encoding='utf-8') as f:
            return cls.from_text(f.read())


@dataclass
class GnState:
    """Tree plus the cached normalizer sum_b f(deg(b))."""
    tree: LabelledTree
    total_weight: float
    births: int
    weights: WeightIndex

    @classmethod
    def initial(cls, kernel: Kernel, threshold: int = SUM_TREE_THRESHOLD) -> 'GnState':
        return cls.from_tree(LabelledTree(), kernel, threshold)

    @classmethod
    def from_tree(cls, tree: LabelledTree, kernel: Kernel,
                  threshold: int = SUM_TREE_THRESHOLD) -> 'GnState':
        weights = WeightIndex((kernel.eval(d) for d in tree.degrees()), threshold=threshold)
        return cls(tree, weight_sum(tree, kernel), tree.size - 1, weights)

    def recompute_weight(self, kernel: Kernel) -> float:
        return weight_sum(self.tree, kernel)

    def check_coherence(self, kernel: Kernel, rtol: float = 1e-9):
        check_weight_coherence(self, kernel, rtol)
        if self.births != self.tree.size - 1:
            raise InvariantViolation(f'births {self.births} != size-1 {self.tree.size - 1}')

    def attach_probability(self, kernel: Kernel, a: Label) -> float:
        return kernel.eval(self.tree.deg(a)) / self.total_weight


def weight_sum(tree: LabelledTree, kernel: Kernel) -> float:
    """sum_b f(deg(b)), recomputed from scratch."""
    return math.fsum(kernel.eval(d) for d in tree.degrees())


def check_weight_coherence(state, kernel: Kernel, rtol: float = 1e-9):
    """The cached total_weight of a discrete or embedded state against a fresh sum."""
    fresh = weight_sum(state.tree, kernel)
    if abs(state.total_weight - fresh) > rtol * fresh:
        raise InvariantViolation(
            f'cached total weight {state.total_weight!r} != recomputed {fresh!r}')


def rate_bound(kernel: Kernel, n: int) -> float:
    """(n+1) f(n), the bound on the total weight after n births."""
    return (n + 1) * kernel.eval(n)


def check_rate_bound(state, kernel: Kernel):
    """Raise if total_weight exceeds (n+1) f(n) after n births; discrete or embedded state."""
    # the bound needs f nondecreasing
    if not kernel.is_nondecreasing:
        return
    bound = rate_bound(kernel, state.births)
    if state.total_weight > bound * (1.0 + RATE_BOUND_SLACK):
        raise RateBoundViolation(
            f'total weight {state.total_weight!r} exceeds (n+1)f(n)={bound!r} at n={state.births}')


def step(state: GnState, kernel: Kernel, rng: np.random.Generator,
         log: Optional[AttachmentLog] = None) -> Tuple[Label, Label]:
    """One transition of the chain; returns (attached_to, new_label)."""
    u = rng.random() * state.weights.total
    i = state.weights.sample(u)
    tree = state.tree
    d = tree.degree_at(i)
    j = tree.add_child_at(i)

    old_w, new_w, leaf_w = kernel.eval(d), kernel.eval(d + 1), kernel.eval(0)
    state.weights.update(i, new_w)
    state.weights.append(leaf_w)
    state.total_weight += new_w - old_w + leaf_w
    state.births += 1
    if not math.isfinite(state.total_weight):
        raise SimulationError(f'attachment weight overflow after {state.births} births')
    check_rate_bound(state, kernel)
    if log is not None:
        log.record(i)
    return tree.label_of(i), tree.label_of(j)


def advance(state: GnState, kernel: Kernel, births: int, rng: np.random.Generator,
            log: Optional[AttachmentLog] = None) -> GnState:
    """Step until the tree has had `births` births."""
    while state.births < births:
        step(state, kernel, rng, log)
    return state


def run(kernel: Kernel, m: int, rng: np.random.Generator) -> Tuple[LabelledTree, AttachmentLog]:
    """T_m from the single-root start, with its attachment log."""
    if m < 0:
        raise ValueError(f'number of births must be >= 0, got {m}')
    state = GnState.initial(kernel)
    log = AttachmentLog()
    advance(state, kernel, m, rng, log)
    return state.tree, log


def run_timed(kernel: Kernel, m: int,
              rng: np.random.Generator) -> Tuple[LabelledTree, AttachmentLog, np.ndarray]:
    """T_m together with continuous birth times B_0=0 < B_1 < ... < B_m.

    Holding time in state A is exponential with rate sum_b f(deg_A(b)), the
    continuous-time Markov chain view of the embedded process.
    """
    state = GnState.initial(kernel)
    log = AttachmentLog()
    times = np.zeros(m + 1)
    for n in range(m):
        times[n + 1] = times[n] + rng.standard_exponential() / state.total_weight
        step(state, kernel, rng, log)
    return state.tree, log, times


def replay(log: AttachmentLog) -> LabelledTree:
    """Rebuild the tree a log was recorded from."""
    return LabelledTree.from_parent_array(log.parent_array())
