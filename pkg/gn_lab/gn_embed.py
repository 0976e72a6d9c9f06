"""Continuous-time embedding of the GN process via exponential clocks.

Every label a owns i.i.d. clocks X(a, j) ~ Exp(f(j)); the j-th child of a is
born at B(a) + X(a,0) + ... + X(a,j-1). Clocks are realized lazily from a
per-label counter-based stream, so any clock can be queried without running
the process and two runs sharing a master seed share every clock.

The process is event driven: a heap holds one pending birth per living vertex,
keyed by (time, label), so simultaneous events resolve in lexicographic label
order.
"""

import heapq
import logging
import math
from dataclasses import dataclass, field
from typing import Dict, List, NamedTuple, Optional, Sequence, Tuple

import numpy as np

from .config import (
    CLOCK_BLOCK, DEFAULT_CONFIDENCE, DEFAULT_N_TRUNC, MODE_DISCRETE, MODE_EMBEDDED, SCREEN_TERMS,
)
from .errors import ConfigError, InvariantViolation, KernelError, SimulationError, format_label
from .gn_discrete import check_rate_bound, check_weight_coherence
from .kernel import Kernel, lgdev_threshold, tail_mean
from .models import STOP_BIRTHS, STOP_NEAR_EXPLOSION, STOP_WALL_TIME, StopRule
from .seeding import keyed_rng, make_rng
from .tree import Label, LabelledTree

logger = logging.getLogger('gn_lab')

STOPPED_BIRTHS = 'births'
STOPPED_WALL_TIME = 'wall_time'
STOPPED_NEAR_EXPLOSION = 'near_explosion'
STOPPED_BIRTH_CAP = 'birth_cap'

# near-explosion checks run after 64 births, then every 25% growth or as soon
# as the clock passes the last estimated stopping time
CHECK_START = 64
CHECK_GROWTH = 1.25


class ClockSource:
    """Deterministic unit exponentials E(a, j), with X(a, j) = E(a, j) / f(j).

    The stream of a label is keyed on (master_seed, label), and blocks are
    regenerated from the start of the stream, so a longer block always extends
    a shorter one.
    """

    def __init__(self, master_seed: int):
        self.master_seed = int(master_seed)
        self._cache: Dict[Label, np.ndarray] = {}

    def unit_exponentials(self, label: Label, stop: int, cache: bool = True) -> np.ndarray:
        """E(label, 0..stop-1)."""
        label = tuple(label)
        have = self._cache.get(label)
        if have is not None and len(have) >= stop:
            return have[:stop]
        size = max(stop, CLOCK_BLOCK)
        if cache:
            # doubling keeps regeneration amortized
            size = max(size, 2 * len(have) if have is not None else 0)
        u = keyed_rng(self.master_seed, 'clock', label).random(size)
        block = -np.log1p(-u)
        if cache:
            self._cache[label] = block
        return block[:stop]

    def clock(self, label: Label, j: int, kernel: Kernel) -> float:
        """X(label, j)."""
        return float(self.unit_exponentials(label, j + 1)[j]) / kernel.eval(j)

    def clocks(self, label: Label, stop: int, kernel: Kernel, cache: bool = True) -> np.ndarray:
        """X(label, 0..stop-1) as an array."""
        e = self.unit_exponentials(label, stop, cache=cache)
        return e / kernel.rates(np.arange(stop, dtype=np.float64))

    def clock_sum(self, label: Label, stop: int, kernel: Kernel, cache: bool = False) -> float:
        """sum_{j<stop} X(label, j)."""
        if stop <= 0:
            return 0.0
        return float(np.sum(self.clocks(label, stop, kernel, cache=cache)))

    def __len__(self):
        return len(self._cache)


@dataclass
class EmbedState:
    """Process state at the current time.

    front[i] is the pending birth time of vertex i's next child,
    B(a) + X(a,0) + ... + X(a,deg(a)), accumulated left to right.
    total_weight is the running sum_b f(deg(b)), the total birth rate.
    """
    tree: LabelledTree
    now: float
    birth_times: List[float]
    front: List[float]
    pending: List[Tuple[float, Label, int]] = field(default_factory=list)
    total_weight: float = 0.0

    @classmethod
    def initial(cls, kernel: Kernel, clocks: ClockSource) -> 'EmbedState':
        first = 0.0 + clocks.clock((), 0, kernel)
        return cls(LabelledTree(), 0.0, [0.0], [first], [(first, (), 0)], kernel.eval(0))

    @property
    def births(self) -> int:
        return self.tree.size - 1

    @property
    def next_time(self) -> float:
        return self.pending[0][0] if self.pending else math.inf

    def birth_time(self, a: Label) -> float:
        return self.birth_times[self.tree.index_of(a)]

    def check_coherence(self, kernel: Kernel, rtol: float = 1e-9):
        check_weight_coherence(self, kernel, rtol)

    def check_clocks(self, kernel: Kernel, clocks: ClockSource):
        """Recompute every pending time from the clocks, in the same summation order."""
        for i in range(self.tree.size):
            a = self.tree.label_of(i)
            expected = self.birth_times[i]
            for j in range(self.tree.degree_at(i) + 1):
                expected += clocks.clock(a, j, kernel)
            if expected != self.front[i]:
                raise InvariantViolation(
                    f'pending time of {format_label(a)} is {self.front[i]!r}, clocks give {expected!r}')
            for pos, c in enumerate(self.tree.children_at(i)):
                if self.birth_times[c] < self.birth_times[i]:
                    raise InvariantViolation(
                        f'{format_label(self.tree.label_of(c))} born before its parent')
                if pos and self.birth_times[c] < self.birth_times[self.tree.children_at(i)[pos - 1]]:
                    raise InvariantViolation(f'children of {format_label(a)} out of time order')


def next_birth(state: EmbedState, kernel: Kernel, clocks: ClockSource) -> Tuple[Label, float]:
    """Realize the earliest pending birth; returns (new_label, birth_time)."""
    if not state.pending:
        raise SimulationError('no pending births')
    t, a, i = heapq.heappop(state.pending)
    if t < state.now:
        raise InvariantViolation(f'birth at {t!r} precedes current time {state.now!r}')
    tree = state.tree
    d = tree.degree_at(i)
    j = tree.add_child_at(i)
    state.birth_times.append(t)
    state.now = t
    state.total_weight += kernel.eval(d + 1) - kernel.eval(d) + kernel.eval(0)
    if not math.isfinite(state.total_weight):
        raise SimulationError(f'birth rate overflow after {state.births} births')
    check_rate_bound(state, kernel)

    nxt = t + clocks.clock(a, d + 1, kernel)
    state.front[i] = nxt
    heapq.heappush(state.pending, (nxt, a, i))

    c = tree.label_of(j)
    first = t + clocks.clock(c, 0, kernel)
    state.front.append(first)
    heapq.heappush(state.pending, (first, c, j))
    return c, t


# --- explosion estimates ---

class Interval(NamedTuple):
    low: float
    high: float
    delta: float = 0.0

    @property
    def mid(self) -> float:
        return 0.5 * (self.low + self.high)

    @property
    def width(self) -> float:
        return self.high - self.low

    def shift(self, by: float) -> 'Interval':
        return Interval(self.low + by, self.high + by, self.delta)

    def __contains__(self, x) -> bool:
        return self.low <= x <= self.high

    def to_dict(self) -> dict:
        return {'low': self.low, 'high': self.high, 'mid': self.mid, 'delta': self.delta}


def deviation_delta(kernel: Kernel, n: int, confidence: float = DEFAULT_CONFIDENCE) -> float:
    """ln(2/(1-confidence)) / n^(p-1/2), the two-sided suffix deviation allowance."""
    if not 0 < confidence < 1:
        raise ValueError(f'confidence must be in (0, 1), got {confidence}')
    return math.log(2.0 / (1.0 - confidence)) / float(n) ** (kernel.p - 0.5)


def explosion_estimate(a: Label, kernel: Kernel, clocks: ClockSource,
                       n_trunc: int = DEFAULT_N_TRUNC,
                       confidence: float = DEFAULT_CONFIDENCE, warn: bool = True) -> Interval:
    """Interval for P(a) = sum_{j>=0} X(a, j).

    The first n_trunc clocks are summed exactly; the suffix is replaced by its
    mean, widened by the numerical error of the mean and the deviation
    allowance.
    """
    if not kernel.is_explosive():
        raise KernelError(f'explosion time is infinite for kernel {kernel}')
    if n_trunc < 1:
        raise ValueError(f'n_trunc must be >= 1, got {n_trunc}')
    tail = tail_mean(kernel, n_trunc)
    delta = deviation_delta(kernel, n_trunc, confidence)
    if n_trunc < lgdev_threshold(kernel):
        widened = max(delta, tail.value)
        if warn:
            logger.warning(f'n_trunc={n_trunc} is below the deviation threshold '
                           f'{lgdev_threshold(kernel)} for {kernel}; widening delta to {widened:.3g}')
        delta = widened
    head = clocks.clock_sum(a, n_trunc, kernel)
    return Interval(head + tail.low - delta, head + tail.high + delta, delta)


class TreeExplosion(NamedTuple):
    s_hat: Interval
    v_hat: Label
    candidates: int


def tree_explosion_estimate(state: EmbedState, kernel: Kernel, clocks: ClockSource,
                            n_trunc: int = DEFAULT_N_TRUNC,
                            confidence: float = DEFAULT_CONFIDENCE) -> TreeExplosion:
    """Estimate S = min_a (B(a) + P(a)) over the living tree and its argmin.

    Every vertex first gets a coarse interval from a short clock prefix; only
    vertices whose coarse interval can still beat the best coarse upper end
    are refined with max(n_trunc, deg+1) clocks.
    """
    if not kernel.is_explosive():
        raise KernelError(f'explosion time is infinite for kernel {kernel}')
    tree = state.tree
    floor_n = lgdev_threshold(kernel)
    screen = []
    for i in range(tree.size):
        n = max(tree.degree_at(i) + 1, floor_n) + SCREEN_TERMS
        screen.append(explosion_estimate(tree.label_of(i), kernel, clocks, n, confidence,
                                         warn=False).shift(state.birth_times[i]))
    best_high = min(iv.high for iv in screen)
    candidates = [i for i, iv in enumerate(screen) if iv.low <= best_high]

    best: Optional[Tuple[float, Label, Interval]] = None
    for i in candidates:
        a = tree.label_of(i)
        n = max(n_trunc, tree.degree_at(i) + 1)
        iv = explosion_estimate(a, kernel, clocks, n, confidence).shift(state.birth_times[i])
        key = (iv.mid, a, iv)
        if best is None or key[:2] < best[:2]:
            best = key
    _, v_hat, s_hat = best
    logger.debug(f'S_hat=[{s_hat.low:.6g}, {s_hat.high:.6g}] at {format_label(v_hat)}, '
                 f'{len(candidates)}/{tree.size} candidates refined')
    return TreeExplosion(s_hat, v_hat, len(candidates))


# --- runs ---

class EmbedResult(NamedTuple):
    tree: LabelledTree
    birth_times: List[float]
    stopped_reason: str
    state: EmbedState
    explosion: Optional[TreeExplosion] = None


def run_embedded(kernel: Kernel, stop: StopRule, clocks: ClockSource,
                 state: Optional[EmbedState] = None,
                 confidence: float = DEFAULT_CONFIDENCE,
                 until: Optional[int] = None) -> EmbedResult:
    """Run the embedded process from `state` (or the single root) until `stop` fires.

    `until` pauses the run once the tree has that many births; the result then
    reports 'births' and the same state can be resumed with the same rule.
    """
    stop.validate()
    if state is None:
        state = EmbedState.initial(kernel, clocks)
    cap = stop.max_births if until is None else min(stop.max_births, until)

    def capped() -> EmbedResult:
        if until is not None and cap == until:
            return EmbedResult(state.tree, state.birth_times, STOPPED_BIRTHS, state)
        logger.warning(f'{stop.kind} stop rule hit the birth cap {stop.max_births} '
                       f'at time {state.now:.6g}')
        return EmbedResult(state.tree, state.birth_times, STOPPED_BIRTH_CAP, state)

    if stop.kind == STOP_BIRTHS:
        while state.births < stop.m:
            if state.births >= cap:
                return capped()
            next_birth(state, kernel, clocks)
        return EmbedResult(state.tree, state.birth_times, STOPPED_BIRTHS, state)

    if stop.kind == STOP_WALL_TIME:
        while state.next_time <= stop.t:
            if state.births >= cap:
                return capped()
            next_birth(state, kernel, clocks)
        return EmbedResult(state.tree, state.birth_times, STOPPED_WALL_TIME, state)

    if stop.kind == STOP_NEAR_EXPLOSION:
        if not kernel.is_explosive():
            raise SimulationError(f'near_explosion stop needs an explosive kernel, got {kernel}')
        next_check = max(CHECK_START, state.births)
        threshold = math.inf
        while True:
            if state.births >= next_check or state.now >= threshold:
                est = tree_explosion_estimate(state, kernel, clocks, stop.n_trunc, confidence)
                margin = stop.delta * est.s_hat.mid if stop.relative else stop.delta
                if state.now >= est.s_hat.mid - margin:
                    logger.info(f'near explosion after {state.births} births: now={state.now:.6g}, '
                                f'S_hat={est.s_hat.mid:.6g} at {format_label(est.v_hat)}')
                    return EmbedResult(state.tree, state.birth_times, STOPPED_NEAR_EXPLOSION,
                                       state, est)
                threshold = est.s_hat.mid - margin
                next_check = int(math.ceil(state.births * CHECK_GROWTH)) + 1
            if state.births >= cap:
                return capped()
            next_birth(state, kernel, clocks)

    raise ConfigError(f'unknown stop rule {stop.kind!r}')


def birth_time_table(tree: LabelledTree, birth_times: Sequence[float]) -> List[dict]:
    """Rows of (index, label, parent, birth_time) for export."""
    return [{'index': i, 'label': format_label(tree.label_of(i)),
             'parent': tree.parent_index(i), 'birth_time': birth_times[i]}
            for i in range(tree.size)]


# --- balls in bins ---

def balls_in_bins_run(feedback: Kernel, bins: int, balls: int, mode: str = MODE_DISCRETE,
                      rng: Optional[np.random.Generator] = None,
                      clocks: Optional[ClockSource] = None,
                      start: Optional[Sequence[int]] = None) -> np.ndarray:
    """Occupancies after `balls` balls, bin i attracting the next ball at rate f(occupancy).

    `start` sets initial occupancies (default all zero). In embedded mode bin i
    draws its j-th ball after clock X((i+1,), j) and clocks of a bin with a
    start occupancy n begin at index n.
    """
    if bins < 2:
        raise ValueError(f'need at least 2 bins, got {bins}')
    if balls < 0:
        raise ValueError(f'number of balls must be >= 0, got {balls}')
    occ = np.zeros(bins, dtype=np.int64) if start is None else np.array(start, dtype=np.int64)
    if occ.shape != (bins,) or (occ < 0).any():
        raise ValueError(f'start occupancy must be {bins} nonnegative counts')

    if mode == MODE_DISCRETE:
        rng = rng if rng is not None else make_rng(0)
        for _ in range(balls):
            weights = feedback.rates(occ)
            cum = np.cumsum(weights)
            i = int(np.searchsorted(cum, rng.random() * cum[-1], side='right'))
            occ[min(i, bins - 1)] += 1
        return occ

    if mode == MODE_EMBEDDED:
        clocks = clocks if clocks is not None else ClockSource(0)
        heap = [(clocks.clock((i + 1,), int(occ[i]), feedback), i) for i in range(bins)]
        heapq.heapify(heap)
        for _ in range(balls):
            t, i = heapq.heappop(heap)
            occ[i] += 1
            heapq.heappush(heap, (t + clocks.clock((i + 1,), int(occ[i]), feedback), i))
        return occ

    raise ValueError(f'unknown mode {mode!r}')
