"""Fertility censuses, shape inventories, scaling fits and equivalence tests."""

import logging
from collections import Counter
from typing import Dict, Hashable, Iterable, List, Mapping, NamedTuple, Optional, Sequence, Tuple

import numpy as np
import pandas as pd
from scipy import stats

from .config import CHI_SQUARE_MIN_EXPECTED, MODE_DISCRETE, MODE_EMBEDDED
from .errors import format_label
from .gn_discrete import GnState, advance, run
from .gn_embed import (
    STOPPED_BIRTHS, ClockSource, EmbedState, balls_in_bins_run, run_embedded,
    tree_explosion_estimate,
)
from .kernel import Kernel
from .models import STOP_BIRTHS, CensusReport, CheckpointCensus, RunConfig, StopRule
from .seeding import trial_rng, trial_seed
from .tree import ROOT, LabelledTree, Shape, canonical_shape, glue_decompose

logger = logging.getLogger('gn_lab')


# --- censuses ---

def fertility_census(tree: LabelledTree, k_max: int) -> Dict[int, int]:
    """Number of k-fertile vertices (>= k descendants) for k = 1..k_max."""
    descendants = np.asarray(tree.subtree_sizes()) - 1
    return {k: int(np.count_nonzero(descendants >= k)) for k in range(1, k_max + 1)}


def census_snapshot(tree: LabelledTree, k_max: int, shape_cap: int,
                    time: Optional[float] = None) -> CheckpointCensus:
    v = tree.max_degree_vertex()
    glue = glue_decompose(tree, shape_cap, v)
    small = sum(glue.inventory.values())
    return CheckpointCensus(
        m=tree.size - 1,
        size=tree.size,
        k_fertile=fertility_census(tree, k_max),
        degree_histogram=tree.degree_histogram(),
        height=tree.height(),
        max_degree_vertex=format_label(v),
        max_degree=tree.deg(v),
        inventory={s.code: n for s, n in sorted(glue.inventory.items())},
        detached=glue.leftover,
        large_children=tree.deg(v) - small,
        time=time,
    )


def census_trajectory(config: RunConfig, trial: int = 0) -> CensusReport:
    """One run of `config`, censused at every checkpoint.

    The run uses the trial's derived seed, so (config, trial) fixes the result.
    """
    config.validate()
    seed = trial_seed(config.master_seed, trial)
    kernel = config.kernel
    report = CensusReport(seed=seed, kernel=kernel.to_spec(), mode=config.mode, trial=trial)
    points = config.census_points()

    if config.mode == MODE_DISCRETE:
        rng = trial_rng(config.master_seed, trial)
        state = GnState.initial(kernel)
        for m in points:
            advance(state, kernel, m, rng)
            state.check_coherence(kernel)
            report.snapshots.append(census_snapshot(state.tree, config.k_max, config.inventory_cap))
        report.stopped_reason = STOPPED_BIRTHS
        return report

    clocks = ClockSource(seed)
    state = EmbedState.initial(kernel, clocks)
    for m in points:
        result = run_embedded(kernel, config.stop, clocks, state, until=m)
        state.check_coherence(kernel)
        report.snapshots.append(census_snapshot(state.tree, config.k_max, config.inventory_cap,
                                                time=state.now))
        if result.stopped_reason != STOPPED_BIRTHS or state.births < m:
            report.stopped_reason = result.stopped_reason
            return report
    if config.stop.kind == STOP_BIRTHS:
        report.stopped_reason = STOPPED_BIRTHS
        return report
    result = run_embedded(kernel, config.stop, clocks, state)
    state.check_coherence(kernel)
    report.snapshots.append(census_snapshot(state.tree, config.k_max, config.inventory_cap,
                                            time=state.now))
    report.stopped_reason = result.stopped_reason
    return report


def census_frame(reports: Iterable[CensusReport]) -> pd.DataFrame:
    """Long table: one row per (trial, checkpoint, k)."""
    rows = []
    for r in reports:
        for s in r.snapshots:
            for k, count in s.k_fertile.items():
                rows.append({'trial': r.trial, 'seed': r.seed, 'm': s.m, 'k': k, 'count': count})
    return pd.DataFrame(rows, columns=['trial', 'seed', 'm', 'k', 'count'])


def checkpoint_frame(report: CensusReport) -> pd.DataFrame:
    """Flat table of one report: one row per checkpoint."""
    rows = []
    for s in report.snapshots:
        row = {'m': s.m, 'size': s.size, 'height': s.height, 'time': s.time,
               'max_degree_vertex': s.max_degree_vertex, 'max_degree': s.max_degree,
               'detached': s.detached, 'large_children': s.large_children}
        row.update({f'fertile_{k}': n for k, n in sorted(s.k_fertile.items())})
        rows.append(row)
    return pd.DataFrame(rows)


def ensemble_means(reports: Sequence[CensusReport], k: int) -> pd.Series:
    """Mean k-fertile count per checkpoint across reports."""
    frame = census_frame(reports)
    frame = frame[frame['k'] == k]
    return frame.groupby('m')['count'].mean()


def mean_growth(reports: Sequence[CensusReport], k: int) -> float:
    """Relative change of the ensemble-mean k-fertile count, first to last checkpoint."""
    means = ensemble_means(reports, k)
    first, last = float(means.iloc[0]), float(means.iloc[-1])
    if first == 0:
        return 0.0 if last == 0 else float('inf')
    return (last - first) / first


def stabilization_fraction(reports: Sequence[CensusReport], k: int) -> float:
    """Share of runs whose k-fertile count did not change over the last two checkpoints."""
    series = [r.fertile_series(k) for r in reports if len(r.snapshots) >= 2]
    if not series:
        return float('nan')
    return sum(1 for s in series if s[-1] == s[-2]) / len(series)


# --- scaling ---

class FitResult(NamedTuple):
    slope: float
    stderr: float
    intercept: float
    r_value: float


def scaling_fit(points: Sequence[Tuple[float, float]]) -> FitResult:
    """Least-squares line through (ln x, ln y)."""
    if len(points) < 3:
        raise ValueError(f'scaling fit needs at least 3 points, got {len(points)}')
    xs = np.array([p[0] for p in points], dtype=float)
    ys = np.array([p[1] for p in points], dtype=float)
    if (xs <= 0).any() or (ys <= 0).any():
        raise ValueError('scaling fit needs positive x and y')
    fit = stats.linregress(np.log(xs), np.log(ys))
    return FitResult(float(fit.slope), float(fit.stderr), float(fit.intercept), float(fit.rvalue))


# --- chi-square homogeneity ---

class ChiSquareResult(NamedTuple):
    statistic: float
    p_value: float
    dof: int
    categories: int


def pool_categories(table: np.ndarray, min_expected: float = CHI_SQUARE_MIN_EXPECTED) -> np.ndarray:
    """Merge the rarest columns of a 2 x K table until every expected cell is >= min_expected."""
    table = table[:, table.sum(axis=0) > 0]
    while table.shape[1] > 1:
        col = table.sum(axis=0)
        expected = np.outer(table.sum(axis=1), col) / table.sum()
        if expected.min() >= min_expected:
            break
        order = np.argsort(col, kind='stable')
        a, b = order[0], order[1]
        table[:, b] += table[:, a]
        table = np.delete(table, a, axis=1)
    return table


def shape_distribution_test(sample_a: Mapping[Hashable, int],
                            sample_b: Mapping[Hashable, int]) -> ChiSquareResult:
    """Two-sample chi-square homogeneity test on category counts."""
    if sum(sample_a.values()) <= 0 or sum(sample_b.values()) <= 0:
        raise ValueError('both samples must be nonempty')
    keys = sorted(set(sample_a) | set(sample_b), key=str)
    table = np.array([[sample_a.get(key, 0) for key in keys],
                      [sample_b.get(key, 0) for key in keys]], dtype=float)
    table = pool_categories(table)
    if table.shape[1] < 2:
        return ChiSquareResult(0.0, 1.0, 0, table.shape[1])
    statistic, p_value, dof, _ = stats.chi2_contingency(table, correction=False)
    return ChiSquareResult(float(statistic), float(p_value), int(dof), table.shape[1])


# --- ensembles of small trees ---

def sample_tree(kernel: Kernel, m: int, mode: str, master_seed: int, trial: int) -> LabelledTree:
    if mode == MODE_DISCRETE:
        tree, _ = run(kernel, m, trial_rng(master_seed, trial))
        return tree
    if mode == MODE_EMBEDDED:
        clocks = ClockSource(trial_seed(master_seed, trial))
        return run_embedded(kernel, StopRule.births(m), clocks).tree
    raise ValueError(f'unknown mode {mode!r}')


def shape_sample(kernel: Kernel, m: int, trials: int, mode: str,
                 master_seed: int) -> Counter:
    """Canonical shapes of `trials` independent trees with m births."""
    counts: Counter = Counter()
    for trial in range(trials):
        counts[canonical_shape(sample_tree(kernel, m, mode, master_seed, trial), ROOT)] += 1
    return counts


def occupancy_sample(feedback: Kernel, balls: int, trials: int, mode: str,
                     master_seed: int, bins: int = 2) -> Counter:
    """Distribution of the first bin's count after `balls` balls."""
    counts: Counter = Counter()
    for trial in range(trials):
        if mode == MODE_DISCRETE:
            occ = balls_in_bins_run(feedback, bins, balls, mode, rng=trial_rng(master_seed, trial))
        else:
            occ = balls_in_bins_run(feedback, bins, balls, mode,
                                    clocks=ClockSource(trial_seed(master_seed, trial)))
        counts[int(occ[0])] += 1
    return counts


def embedding_equivalence(kernel: Kernel, m: int, trials: int, master_seed: int,
                          balls: int = 0) -> dict:
    """Discrete chain vs exponential embedding on tree shapes (and optionally balls in bins).

    The two modes use disjoint seed families so the samples are independent.
    """
    discrete = shape_sample(kernel, m, trials, MODE_DISCRETE, master_seed)
    embedded = shape_sample(kernel, m, trials, MODE_EMBEDDED, master_seed + 1)
    test = shape_distribution_test(discrete, embedded)
    logger.info(f'shape equivalence m={m}, {trials} trials/mode: '
                f'chi2={test.statistic:.3f}, p={test.p_value:.4f}')
    record = {
        'kernel': kernel.to_spec(),
        'm': m,
        'trials': trials,
        'master_seed': master_seed,
        'shapes': test._asdict(),
        'discrete': {s.code: n for s, n in sorted(discrete.items())},
        'embedded': {s.code: n for s, n in sorted(embedded.items())},
    }
    if balls > 0:
        occ_d = occupancy_sample(kernel, balls, trials, MODE_DISCRETE, master_seed)
        occ_e = occupancy_sample(kernel, balls, trials, MODE_EMBEDDED, master_seed + 1)
        occ_test = shape_distribution_test(occ_d, occ_e)
        logger.info(f'balls-in-bins equivalence, {balls} balls: p={occ_test.p_value:.4f}')
        record['balls'] = balls
        record['occupancy'] = occ_test._asdict()
    return record


# --- exploder vs Glue vertex ---

def exploder_agreement(kernel: Kernel, m: int, master_seed: int, trial: int,
                       shape_cap: int = 2, n_trunc: Optional[int] = None,
                       checkpoints: Sequence[int] = ()) -> dict:
    """Compare the Glue vertex of an embedded run with its estimated exploder.

    Censuses are also taken at each checkpoint below m, from the same run.
    """
    clocks = ClockSource(trial_seed(master_seed, trial))
    stop = StopRule.births(m)
    state = EmbedState.initial(kernel, clocks)
    snapshots = []
    for point in [c for c in checkpoints if c < m] + [m]:
        run_embedded(kernel, stop, clocks, state, until=point)
        snapshots.append(census_snapshot(state.tree, 2, shape_cap, time=state.now).to_dict())
    glue = glue_decompose(state.tree, shape_cap)
    kwargs = {} if n_trunc is None else {'n_trunc': n_trunc}
    est = tree_explosion_estimate(state, kernel, clocks, **kwargs)
    return {
        'trial': trial,
        'glue_vertex': format_label(glue.v),
        'v_hat': format_label(est.v_hat),
        'agree': glue.v == est.v_hat,
        's_hat': est.s_hat.to_dict(),
        'inventory': {s.code: n for s, n in sorted(glue.inventory.items())},
        'max_degree': state.tree.deg(glue.v),
        'snapshots': snapshots,
    }


def inventory_by_size(inventory: Mapping[str, int]) -> Dict[int, int]:
    """Vertices held in an inventory, grouped by shape size."""
    out: Dict[int, int] = {}
    for code, count in inventory.items():
        size = Shape.from_code(code).size
        out[size] = out.get(size, 0) + size * count
    return dict(sorted(out.items()))
