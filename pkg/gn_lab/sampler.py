"""Weighted index sampling for the discrete chain.

Small populations use a linear prefix scan; once the population passes a
threshold the weights move into an array-backed sum-tree with logarithmic
update and sampling. Internal sums are recomputed from children on every
update, so they never drift.
"""

from bisect import bisect_right
from itertools import accumulate
from typing import List

from .config import SUM_TREE_THRESHOLD


class WeightIndex:
    """Nonnegative weights over indices 0..n-1 with proportional sampling."""

    def __init__(self, weights=(), threshold: int = SUM_TREE_THRESHOLD):
        self.threshold = threshold
        self._weights: List[float] = [float(w) for w in weights]
        self._tree: List[float] = []
        self._capacity = 0
        if len(self._weights) > threshold:
            self._build(len(self._weights))

    def __len__(self):
        return len(self._weights)

    @property
    def uses_sum_tree(self) -> bool:
        return self._capacity > 0

    @property
    def total(self) -> float:
        if self._capacity:
            return self._tree[1]
        return sum(self._weights)

    def weight(self, i: int) -> float:
        return self._weights[i]

    def append(self, w: float):
        self._weights.append(float(w))
        n = len(self._weights)
        if self._capacity:
            if n > self._capacity:
                self._build(n)
            else:
                self._set_leaf(n - 1, float(w))
        elif n > self.threshold:
            self._build(n)

    def update(self, i: int, w: float):
        self._weights[i] = float(w)
        if self._capacity:
            self._set_leaf(i, float(w))

    def sample(self, u: float) -> int:
        """Index i with u in [W_{<i}, W_{<=i}), for u in [0, total)."""
        if self._capacity:
            return self._descend(u)
        prefix = list(accumulate(self._weights))
        i = bisect_right(prefix, u)
        # u == total can only arise from rounding
        return min(i, len(self._weights) - 1)

    # --- sum-tree ---

    def _build(self, n: int):
        cap = 1
        while cap < n:
            cap *= 2
        cap = max(cap, 2 * self.threshold)
        tree = [0.0] * (2 * cap)
        tree[cap:cap + len(self._weights)] = self._weights
        for node in range(cap - 1, 0, -1):
            tree[node] = tree[2 * node] + tree[2 * node + 1]
        self._tree = tree
        self._capacity = cap

    def _set_leaf(self, i: int, w: float):
        tree = self._tree
        node = self._capacity + i
        tree[node] = w
        node //= 2
        while node:
            tree[node] = tree[2 * node] + tree[2 * node + 1]
            node //= 2

    def _descend(self, u: float) -> int:
        tree = self._tree
        node = 1
        while node < self._capacity:
            left = 2 * node
            if u < tree[left] or tree[left + 1] == 0.0:
                node = left
            else:
                u -= tree[left]
                node = left + 1
        return min(node - self._capacity, len(self._weights) - 1)
