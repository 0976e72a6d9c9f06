"""Experiment orchestration: trial ensembles, sweeps over p, replay from a manifest."""

import logging
import os
from concurrent.futures import ProcessPoolExecutor
from typing import List, Optional, Sequence, Tuple

import pandas as pd

from .analysis import census_trajectory, mean_growth, stabilization_fraction
from .config import MODE_DISCRETE
from .errors import ConfigError, GnLabError
from .gn_discrete import run
from .gn_embed import STOPPED_BIRTH_CAP, ClockSource, run_embedded
from .kernel import Kernel, critical_k
from .models import RunConfig, TrialResult
from .output import (
    experiment_manifest, load_manifest, save_aggregate, save_manifest, save_trial_result,
    save_tree, write_csv,
)
from .seeding import trial_rng, trial_seed

logger = logging.getLogger('gn_lab')

EXIT_OK = 0
EXIT_TRIAL_FAILED = 1
EXIT_BAD_CONFIG = 2

PHASE_TABLE = 'phase_table.csv'


def run_trial(config: RunConfig, trial: int) -> TrialResult:
    """Census trajectory of one trial; failures are recorded, not raised."""
    result = TrialResult(trial=trial, seed=trial_seed(config.master_seed, trial))
    try:
        result.census = census_trajectory(config, trial)
        result.status = 'success'
        if result.census.stopped_reason == STOPPED_BIRTH_CAP:
            result.warnings.append(f'stopped at the birth cap {config.stop.max_births}')
    except Exception as e:
        result.status = 'failed'
        result.errors.append(f'{type(e).__name__}: {e}')
        logger.error(f'Trial {trial} failed: {e}', exc_info=True)
    return result


def _run_trial_args(args: Tuple[RunConfig, int]) -> TrialResult:
    return run_trial(*args)


def run_trials(config: RunConfig) -> List[TrialResult]:
    """All trials of `config`, in trial order, on a process pool when workers > 1."""
    jobs = [(config, t) for t in range(config.trials)]
    if config.workers > 1 and config.trials > 1:
        with ProcessPoolExecutor(max_workers=config.workers) as pool:
            return list(pool.map(_run_trial_args, jobs))
    return [run_trial(*job) for job in jobs]


def save_final_tree(config: RunConfig, trial: int):
    """Re-run a trial to its stop rule and write the final tree."""
    if config.mode == MODE_DISCRETE:
        tree, log = run(config.kernel, config.stop.m, trial_rng(config.master_seed, trial))
        save_tree(tree, config.output_dir, trial, log=log)
    else:
        clocks = ClockSource(trial_seed(config.master_seed, trial))
        result = run_embedded(config.kernel, config.stop, clocks)
        save_tree(result.tree, config.output_dir, trial, birth_times=result.birth_times)


def run_experiment(config: RunConfig, save_trees: bool = False,
                   generated_at: Optional[str] = None) -> Tuple[int, List[TrialResult]]:
    """Run every trial and persist manifest, per-trial censuses and the aggregate.

    Returns (exit_status, results); the status is nonzero if any trial failed.
    """
    config.validate()
    save_manifest(config.output_dir, 'experiment', experiment_manifest(config), generated_at)
    logger.info(f'Running {config.trials} trial(s) of {config.kernel} in {config.mode} mode, '
                f'stop={config.stop.to_dict()}')

    results = run_trials(config)
    failed = 0
    for r in results:
        save_trial_result(r, config.output_dir)
        if r.status == 'success':
            last = r.census.snapshots[-1] if r.census.snapshots else None
            logger.info(f'  trial {r.trial}: {r.census.stopped_reason}, '
                        f'{last.m if last else 0} births')
            if save_trees:
                save_final_tree(config, r.trial)
        else:
            failed += 1
            logger.warning(f'  trial {r.trial}: {r.status} {r.errors}')

    save_aggregate(results, config)
    logger.info(f'Done: {len(results) - failed}/{len(results)} trials succeeded, '
                f'artifacts in {config.output_dir}')
    return (EXIT_TRIAL_FAILED if failed else EXIT_OK), results


def replay_trial(directory: str, trial: int) -> TrialResult:
    """Re-run a single trial from the manifest of a finished experiment."""
    manifest = load_manifest(directory)
    if manifest['kind'] != 'experiment':
        raise GnLabError(f'{directory} holds a {manifest["kind"]} run, not an experiment')
    config = RunConfig.from_dict(manifest['config'])
    if not 0 <= trial < config.trials:
        raise ConfigError(f'trial {trial} is outside 0..{config.trials - 1}')
    return run_trial(config, trial)


def sweep(p_values: Sequence[float], template: RunConfig,
          generated_at: Optional[str] = None) -> Tuple[int, pd.DataFrame]:
    """Census ensembles for each p; one phase-table row per (p, k)."""
    if not p_values:
        raise ConfigError('sweep needs at least one p value')
    if any(p <= 1 for p in p_values):
        raise ConfigError(f'sweep needs every p > 1, got {list(p_values)}')
    root = template.output_dir
    save_manifest(root, 'sweep', {'p_values': list(p_values), 'template': template.to_dict()},
                  generated_at)

    rows, status = [], EXIT_OK
    for p in p_values:
        config = template.with_overrides(kernel=Kernel.power(p).to_spec(),
                                         output_dir=os.path.join(root, p_dir(p)))
        code, results = run_experiment(config, generated_at=generated_at)
        status = max(status, code)
        reports = [r.census for r in results if r.census is not None]
        k_p = critical_k(p)
        for k in range(1, config.k_max + 1):
            rows.append({
                'p': p,
                'k': k,
                'k_p': k_p,
                'stabilization_fraction': stabilization_fraction(reports, k) if reports else float('nan'),
                'mean_growth': mean_growth(reports, k) if reports else float('nan'),
                'trials': len(reports),
            })
    table = pd.DataFrame(rows, columns=['p', 'k', 'k_p', 'stabilization_fraction',
                                        'mean_growth', 'trials'])
    path = write_csv(table, os.path.join(root, PHASE_TABLE))
    logger.info(f'Phase table for p={list(p_values)} saved to {path}')
    return status, table


def p_dir(p: float) -> str:
    return f'p_{p:g}'

