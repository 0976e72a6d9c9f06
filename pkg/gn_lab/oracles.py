"""Exact and Monte Carlo checks of the quantitative lemmas behind the GN process.

Suffix sums sum_{j>=n} X_j with X_j ~ Exp(f(j)) are sampled exactly up to a cut
N and closed with the deterministic tail mean sum_{j>=N} 1/f(j). Samples are
drawn in chunks, each chunk with its own Philox substream, so results depend
only on (seed, inputs).
"""

import logging
import math
from collections import Counter
from typing import Dict, List, NamedTuple, Optional

import numpy as np
from scipy import special, stats

from .analysis import scaling_fit
from .config import BIAS_FLAG_FRACTION, MC_CHUNK_ELEMENTS, MODE_DISCRETE, MODE_EMBEDDED
from .errors import KernelError
from .gn_discrete import run_timed
from .gn_embed import ClockSource, run_embedded
from .kernel import Kernel, critical_k, tail_mean, tail_square_mean
from .models import BoundCheckResult, StopRule
from .seeding import make_rng, mix64
from .tree import ROOT, LabelledTree, Shape, canonical_shape

logger = logging.getLogger('gn_lab')

FLAG_TRUNCATION_BIAS = 'truncation_bias'
FLAG_NO_TRIALS = 'no_trials'


# --- Erlang tail ---

def erlang_tail(k: int, lam: float) -> float:
    """Pr[Z_1 + ... + Z_k <= lam] for i.i.d. unit exponentials.

    Equal to e^{-lam} sum_{j>=k} lam^j/j!, evaluated as the regularized lower
    incomplete gamma function so small values do not cancel.
    """
    if k < 1:
        raise ValueError(f'k must be >= 1, got {k}')
    if lam < 0:
        raise ValueError(f'lambda must be >= 0, got {lam}')
    if lam == 0:
        return 0.0
    return float(special.gammainc(k, lam))


def erlang_bound(k: int, lam: float) -> float:
    """lam^k / k!, the upper bound on erlang_tail(k, lam)."""
    return math.exp(k * math.log(lam) - math.lgamma(k + 1)) if lam > 0 else 0.0


# --- exact fertility probability ---

def exact_fertility_probability(n: int, k: int, kernel: Kernel, cut: int = 1_000_000) -> float:
    """q_n = Pr[sum_{l<k} X_l <= sum_{j>=n} X_j] in closed form.

    With Y the hypoexponential sum on distinct rates f(0..k-1),
    Pr[Y > s] = sum_l c_l e^{-f(l) s}, so q_n = 1 - sum_l c_l prod_{j>=n} f(j)/(f(j)+f(l)).
    The infinite product is summed in log space up to `cut` and closed with the
    tail mean.
    """
    if n < 1:
        raise ValueError(f'n must be >= 1, got {n}')
    if k <= 0:
        return 1.0
    if not kernel.is_explosive():
        return 1.0
    rates = [kernel.eval(l) for l in range(k)]
    if len(set(rates)) != k:
        raise KernelError('exact fertility probability needs distinct rates f(0..k-1)')
    cut = max(cut, n)
    js = np.arange(n, cut, dtype=np.float64)
    inv_f = 1.0 / kernel.rates(js)
    tail1 = tail_mean(kernel, cut).value
    tail2 = tail_square_mean(kernel, cut)

    q = 0.0
    for l, lam in enumerate(rates):
        c = 1.0
        for m, other in enumerate(rates):
            if m != l:
                c *= other / (other - lam)
        log_prod = -float(np.sum(np.log1p(lam * inv_f)[::-1]))
        log_prod -= lam * tail1 - 0.5 * lam * lam * tail2
        # sum_l c_l = 1, so q = -sum_l c_l (prod_l - 1)
        q -= c * math.expm1(log_prod)
    return min(max(q, 0.0), 1.0)


# --- suffix sampling ---

class SuffixPlan(NamedTuple):
    n: int
    cut: int
    correction: float
    suffix_mean: float

    @property
    def biased(self) -> bool:
        return self.correction > BIAS_FLAG_FRACTION * self.suffix_mean


def suffix_plan(kernel: Kernel, n: int, n_trunc: Optional[int] = None) -> SuffixPlan:
    """Cut for sampling sum_{j>=n} X_j.

    An explicit n_trunc is the absolute index of the first clock replaced by its
    mean. Without one, the cut is doubled from 2n until the correction is at most
    half the bias threshold.
    """
    if not kernel.is_explosive():
        raise KernelError(f'suffix sums diverge for kernel {kernel}')
    suffix_mean = tail_mean(kernel, n).value
    if n_trunc is None:
        cut = 2 * n
        while tail_mean(kernel, cut).value > 0.5 * BIAS_FLAG_FRACTION * suffix_mean:
            cut *= 2
    else:
        cut = max(int(n_trunc), n)
    return SuffixPlan(n, cut, tail_mean(kernel, cut).value, suffix_mean)


def _chunks(total: int, terms: int):
    rows = max(1, MC_CHUNK_ELEMENTS // max(terms, 1))
    start = 0
    while start < total:
        yield start // rows, min(rows, total - start)
        start += rows


def sample_suffix(kernel: Kernel, plan: SuffixPlan, rng: np.random.Generator, size: int) -> np.ndarray:
    """`size` draws of sum_{n<=j<cut} X_j + sum_{j>=cut} 1/f(j)."""
    inv_f = 1.0 / kernel.rates(np.arange(plan.n, plan.cut, dtype=np.float64))
    if len(inv_f) == 0:
        return np.full(size, plan.correction)
    return rng.standard_exponential((size, len(inv_f))) @ inv_f + plan.correction


def _plan_flags(plan: SuffixPlan) -> List[str]:
    if plan.biased:
        logger.warning(f'suffix from n={plan.n} cut at {plan.cut}: tail correction '
                       f'{plan.correction:.3g} exceeds {BIAS_FLAG_FRACTION:.0%} of {plan.suffix_mean:.3g}')
        return [FLAG_TRUNCATION_BIAS]
    return []


def mc_fertility_bound(n: int, k: int, kernel: Kernel, trials: int,
                       n_trunc: Optional[int] = None, seed: int = 0) -> BoundCheckResult:
    """Monte Carlo q_n = Pr[sum_{l<k} X_l <= sum_{j>=n} X_j]; bound shape n^{-k(p-1)}."""
    if n < 1:
        raise ValueError(f'n must be >= 1, got {n}')
    bound_shape = float(n) ** (-k * (kernel.p - 1.0))
    if k <= 0:
        return BoundCheckResult(1.0, bound_shape, n, trials)
    if trials <= 0:
        return BoundCheckResult(None, bound_shape, n, 0, [FLAG_NO_TRIALS])
    plan = suffix_plan(kernel, n, n_trunc)
    head_inv = 1.0 / kernel.rates(np.arange(k, dtype=np.float64))
    hits = 0
    for chunk, size in _chunks(trials, plan.cut - n + k):
        rng = make_rng(mix64(seed, chunk))
        y = rng.standard_exponential((size, k)) @ head_inv
        hits += int(np.count_nonzero(y <= sample_suffix(kernel, plan, rng, size)))
    return BoundCheckResult(hits / trials, bound_shape, n, trials, _plan_flags(plan))


def lgdev_tail_check(n: int, kernel: Kernel, delta: float, trials: int,
                     n_trunc: Optional[int] = None, seed: int = 0) -> BoundCheckResult:
    """Monte Carlo Pr[|sum_{j>=n} X_j - tail_mean(n)| > delta]; bound shape e^{-delta n^{p-1/2}}."""
    if n < 1:
        raise ValueError(f'n must be >= 1, got {n}')
    if delta <= 0:
        raise ValueError(f'delta must be positive, got {delta}')
    bound_shape = math.exp(-delta * float(n) ** (kernel.p - 0.5))
    if trials <= 0:
        return BoundCheckResult(None, bound_shape, n, 0, [FLAG_NO_TRIALS])
    plan = suffix_plan(kernel, n, n_trunc)
    hits = 0
    for chunk, size in _chunks(trials, plan.cut - n):
        rng = make_rng(mix64(seed, chunk))
        s = sample_suffix(kernel, plan, rng, size)
        hits += int(np.count_nonzero(np.abs(s - plan.suffix_mean) > delta))
    return BoundCheckResult(hits / trials, bound_shape, n, trials, _plan_flags(plan))


def explosion_window(kernel: Kernel, n: int):
    """[1/(2(p-1)n^{p-1}), 3/(2(p-1)n^{p-1})], the window around the suffix mean."""
    scale = 1.0 / ((kernel.p - 1.0) * float(n) ** (kernel.p - 1.0))
    return 0.5 * scale, 1.5 * scale


def explosion_window_check(n: int, kernel: Kernel, trials: int,
                           n_trunc: Optional[int] = None, seed: int = 0) -> BoundCheckResult:
    """Monte Carlo probability that sum_{j>=n} X_j leaves its explosion window."""
    if n < 1:
        raise ValueError(f'n must be >= 1, got {n}')
    low, high = explosion_window(kernel, n)
    bound_shape = math.exp(-low * float(n) ** (kernel.p - 0.5))
    if trials <= 0:
        return BoundCheckResult(None, bound_shape, n, 0, [FLAG_NO_TRIALS])
    plan = suffix_plan(kernel, n, n_trunc)
    hits = 0
    for chunk, size in _chunks(trials, plan.cut - n):
        rng = make_rng(mix64(seed, chunk))
        s = sample_suffix(kernel, plan, rng, size)
        hits += int(np.count_nonzero((s < low) | (s > high)))
    return BoundCheckResult(hits / trials, bound_shape, n, trials, _plan_flags(plan))


# --- inter-birth dominance ---

class InterbirthCheck(NamedTuple):
    j: int
    rate_bound: float
    grid: List[BoundCheckResult]
    max_excess: float
    passed: bool
    ks_statistic: Optional[float] = None
    ks_p_value: Optional[float] = None

    def to_dict(self) -> dict:
        return {
            'j': self.j,
            'rate_bound': self.rate_bound,
            'max_excess_std_errors': self.max_excess,
            'passed': self.passed,
            'ks_statistic': self.ks_statistic,
            'ks_p_value': self.ks_p_value,
            'grid': [r.to_dict() for r in self.grid],
        }


def dominance_grid(kernel: Kernel, j: int, points: int = 50) -> np.ndarray:
    """Times at which 1 - e^{-(j+1) f(j) t} runs through 0.02 .. 0.98."""
    q = np.linspace(0.02, 0.98, points)
    return -np.log1p(-q) / ((j + 1) * kernel.eval(j))


def interbirth_samples(kernel: Kernel, j_max: int, trials: int, seed: int = 0,
                       mode: str = MODE_DISCRETE) -> np.ndarray:
    """trials x (j_max+1) array of inter-birth intervals T_0..T_{j_max} from the root start.

    discrete: holding times of the chain. embedded: gaps between birth times
    realized from the exponential clocks, one clock source per trial.
    """
    out = np.empty((trials, j_max + 1))
    if mode == MODE_DISCRETE:
        rng = make_rng(seed)
        for t in range(trials):
            _, _, times = run_timed(kernel, j_max + 1, rng)
            out[t] = np.diff(times)
    elif mode == MODE_EMBEDDED:
        stop = StopRule.births(j_max + 1)
        for t in range(trials):
            result = run_embedded(kernel, stop, ClockSource(mix64(seed, t)))
            out[t] = np.diff(result.birth_times)
    else:
        raise ValueError(f'unknown mode {mode!r}')
    return out


def interbirth_dominance_check(kernel: Kernel, j_max: int, trials: int, seed: int = 0,
                               tolerance: float = 3.0, points: int = 50,
                               mode: str = MODE_DISCRETE) -> List[InterbirthCheck]:
    """Pr[T_j <= t] <= 1 - e^{-(j+1) f(j) t} on a time grid, for j = 0..j_max.

    T_j is the holding time after the j-th birth. At j = 0 the law is exactly
    exponential with rate f(0), checked with a Kolmogorov-Smirnov test.
    """
    if mode not in (MODE_DISCRETE, MODE_EMBEDDED):
        raise ValueError(f'unknown mode {mode!r}')
    if j_max < 0:
        raise ValueError(f'j_max must be >= 0, got {j_max}')
    samples = interbirth_samples(kernel, j_max, trials, seed, mode) if trials > 0 else None
    checks = []
    for j in range(j_max + 1):
        rate = (j + 1) * kernel.eval(j)
        grid = dominance_grid(kernel, j, points)
        results, worst = [], -math.inf
        for t in grid:
            bound = float(-np.expm1(-rate * t))
            if samples is None:
                results.append(BoundCheckResult(None, bound, j, 0, [FLAG_NO_TRIALS], t=float(t)))
                continue
            empirical = float(np.mean(samples[:, j] <= t))
            se = math.sqrt(bound * (1.0 - bound) / trials)
            worst = max(worst, (empirical - bound) / se)
            results.append(BoundCheckResult(empirical, bound, j, trials, t=float(t)))
        ks_stat = ks_p = None
        if samples is not None and j == 0:
            ks = stats.kstest(samples[:, 0], 'expon', args=(0.0, 1.0 / kernel.eval(0)))
            ks_stat, ks_p = float(ks.statistic), float(ks.pvalue)
        passed = samples is None or worst <= tolerance
        checks.append(InterbirthCheck(j, rate, results, worst if samples is not None else 0.0,
                                      passed, ks_stat, ks_p))
    return checks


# --- exact shape law ---

def exact_shape_law(kernel: Kernel, m: int) -> Dict[Shape, float]:
    """Law of the canonical shape of T_m, by enumerating every attachment sequence."""
    if m < 0:
        raise ValueError(f'number of births must be >= 0, got {m}')
    law: Counter = Counter()

    def visit(tree: LabelledTree, prob: float):
        if tree.size - 1 == m:
            law[canonical_shape(tree, ROOT)] += prob
            return
        weights = [kernel.eval(d) for d in tree.degrees()]
        total = math.fsum(weights)
        for i, w in enumerate(weights):
            child = tree.copy()
            child.add_child_at(i)
            visit(child, prob * w / total)

    visit(LabelledTree(), 1.0)
    return dict(sorted(law.items()))


# --- suite ---

def lemma_suite(kernel: Kernel, seed: int = 0, trials: int = 100_000,
                fertility_ns=(16, 32, 64, 128, 256), k: Optional[int] = None,
                lgdev_ns=(50, 100, 200), lgdev_scale: float = 1.0,
                j_max: int = 10, erlang_k: int = 20, erlang_lam: int = 20,
                mode: str = MODE_DISCRETE) -> dict:
    """Run every lemma check for one kernel; JSON-ready records with their inputs."""
    if k is None:
        k = critical_k(kernel.p)
    records: dict = {'kernel': kernel.to_spec(), 'seed': seed, 'trials': trials}

    worst = 0.0
    for kk in range(1, erlang_k + 1):
        for lam in range(0, erlang_lam + 1):
            value = erlang_tail(kk, lam)
            if value > erlang_bound(kk, lam):
                worst = max(worst, value - erlang_bound(kk, lam))
    records['erlang'] = {'k_max': erlang_k, 'lambda_max': erlang_lam, 'bound_excess': worst}

    fertility = []
    for i, n in enumerate(fertility_ns):
        mc = mc_fertility_bound(n, k, kernel, trials, seed=mix64(seed, i))
        exact = exact_fertility_probability(n, k, kernel)
        fertility.append({'n': n, 'k': k, 'exact': exact, **mc.to_dict()})
    positive = [(r['n'], r['empirical']) for r in fertility if r['empirical']]
    fit = scaling_fit(positive) if len(positive) >= 3 else None
    exact_fit = scaling_fit([(r['n'], r['exact']) for r in fertility]) \
        if len(fertility) >= 3 and all(r['exact'] > 0 for r in fertility) else None
    records['fertility'] = {
        'points': fertility,
        'expected_slope': -k * (kernel.p - 1.0),
        'slope': fit.slope if fit else None,
        'slope_stderr': fit.stderr if fit else None,
        'exact_slope': exact_fit.slope if exact_fit else None,
    }

    lgdev = []
    for i, n in enumerate(lgdev_ns):
        delta = lgdev_scale * float(n) ** (0.75 - kernel.p)
        res = lgdev_tail_check(n, kernel, delta, trials, seed=mix64(seed, 100 + i))
        lgdev.append({'delta': delta, **res.to_dict()})
    ratios = [r['empirical'] / r['bound_shape'] for r in lgdev if r['empirical'] is not None]
    records['lgdev'] = {'points': lgdev, 'sup_ratio': max(ratios) if ratios else None}

    window = [explosion_window_check(n, kernel, trials, seed=mix64(seed, 200 + i)).to_dict()
              for i, n in enumerate(lgdev_ns)]
    records['explosion_window'] = {'points': window}

    dominance = interbirth_dominance_check(kernel, j_max, trials, seed=mix64(seed, 300), mode=mode)
    records['interbirth'] = {'mode': mode, 'checks': [c.to_dict() for c in dominance],
                             'passed': all(c.passed for c in dominance)}
    logger.info(f'lemma suite for {kernel}: fertility slope '
                f'{records["fertility"]["slope"]}, lgdev sup ratio {records["lgdev"]["sup_ratio"]}, '
                f'inter-birth dominance {"passed" if records["interbirth"]["passed"] else "FAILED"}')
    return records
