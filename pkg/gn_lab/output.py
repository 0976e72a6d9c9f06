"""JSON and CSV writers for run artifacts."""

import json
import logging
import os
from datetime import datetime
from typing import List, Optional, Sequence

import pandas as pd

from . import __version__
from .analysis import census_frame, checkpoint_frame
from .errors import GnLabError
from .gn_discrete import AttachmentLog
from .gn_embed import birth_time_table
from .models import RunConfig, TrialResult, trial_file_stem
from .seeding import trial_seed
from .tree import LabelledTree

logger = logging.getLogger('gn_lab')

MANIFEST = 'manifest.json'
TRIALS_DIR = 'trials'
TREES_DIR = 'trees'
AGGREGATE = 'aggregate.json'
CENSUS_CSV = 'census.csv'


def ensure_dir(path: str) -> str:
    try:
        os.makedirs(path, exist_ok=True)
    except OSError as e:
        raise GnLabError(f'cannot create output directory {path}: {e}') from None
    if not os.access(path, os.W_OK):
        raise GnLabError(f'output directory is not writable: {path}')
    return path


def write_json(data, path: str) -> str:
    ensure_dir(os.path.dirname(path) or '.')
    with open(path, 'w', encoding='utf-8') as f:
        json.dump(data, f, ensure_ascii=False, indent=2, sort_keys=True)
        f.write('\n')
    return path


def read_json(path: str):
    with open(path, encoding='utf-8') as f:
        return json.load(f)


def write_csv(frame: pd.DataFrame, path: str) -> str:
    ensure_dir(os.path.dirname(path) or '.')
    frame.to_csv(path, index=False, lineterminator='\n')
    return path


def save_manifest(output_dir: str, kind: str, payload: dict,
                  generated_at: Optional[str] = None) -> str:
    """Write the run manifest; the only artifact that carries a timestamp."""
    manifest = {
        'kind': kind,
        'code_version': __version__,
        'generated_at': generated_at or datetime.now().isoformat(),
        **payload,
    }
    path = write_json(manifest, os.path.join(output_dir, MANIFEST))
    logger.info(f'Manifest saved to {path}')
    return path


def experiment_manifest(config: RunConfig) -> dict:
    return {
        'config': config.to_dict(),
        'trials': [{'trial': t, 'seed': trial_seed(config.master_seed, t)}
                   for t in range(config.trials)],
    }


def load_manifest(directory: str) -> dict:
    path = os.path.join(directory, MANIFEST)
    if not os.path.exists(path):
        raise GnLabError(f'no manifest in {directory}')
    try:
        manifest = read_json(path)
    except (OSError, ValueError) as e:
        raise GnLabError(f'corrupt manifest {path}: {e}') from None
    if not isinstance(manifest, dict) or 'kind' not in manifest:
        raise GnLabError(f'corrupt manifest {path}: missing "kind"')
    return manifest


def save_trial_result(result: TrialResult, output_dir: str) -> str:
    """Per-trial JSON document plus a flat CSV with one row per checkpoint."""
    stem = trial_file_stem(result.trial)
    path = write_json(result.to_dict(), os.path.join(output_dir, TRIALS_DIR, f'{stem}.json'))
    if result.census is not None:
        write_csv(checkpoint_frame(result.census), os.path.join(output_dir, TRIALS_DIR, f'{stem}.csv'))
    return path


def load_trial_results(output_dir: str) -> List[TrialResult]:
    trials_dir = os.path.join(output_dir, TRIALS_DIR)
    if not os.path.isdir(trials_dir):
        return []
    return [TrialResult.from_dict(read_json(os.path.join(trials_dir, name)))
            for name in sorted(os.listdir(trials_dir)) if name.endswith('.json')]


def save_tree(tree: LabelledTree, output_dir: str, trial: int,
              log: Optional[AttachmentLog] = None,
              birth_times: Optional[Sequence[float]] = None) -> str:
    """Parent-array text of a final tree, with its attachment log or birth times."""
    stem = trial_file_stem(trial)
    trees_dir = ensure_dir(os.path.join(output_dir, TREES_DIR))
    path = os.path.join(trees_dir, f'{stem}.parents')
    with open(path, 'w', encoding='utf-8') as f:
        f.write(tree.to_parent_lines())
    if log is not None:
        log.save(os.path.join(trees_dir, f'{stem}.log'))
    if birth_times is not None:
        write_csv(pd.DataFrame(birth_time_table(tree, birth_times)),
                  os.path.join(trees_dir, f'{stem}_births.csv'))
    return path


def save_aggregate(results: List[TrialResult], config: RunConfig) -> str:
    """Ensemble statistics over successful trials, in trial order."""
    reports = [r.census for r in results if r.census is not None]
    frame = census_frame(reports)
    write_csv(frame, os.path.join(config.output_dir, CENSUS_CSV))

    means = {}
    if not frame.empty:
        grouped = frame.groupby(['k', 'm'])['count'].agg(['mean', 'std', 'min', 'max'])
        for (k, m), row in grouped.iterrows():
            means.setdefault(str(k), {})[str(m)] = {
                'mean': float(row['mean']),
                'std': None if pd.isna(row['std']) else float(row['std']),
                'min': int(row['min']),
                'max': int(row['max']),
            }
    status_counts = {}
    for r in results:
        status_counts[r.status] = status_counts.get(r.status, 0) + 1
    aggregate = {
        'config': config.to_dict(),
        'trials': len(results),
        'status_counts': status_counts,
        'fertile_counts': means,
        'stopped_reasons': {str(r.trial): r.census.stopped_reason for r in results if r.census},
    }
    path = write_json(aggregate, os.path.join(config.output_dir, AGGREGATE))
    logger.info(f'Aggregate over {len(reports)} censuses saved to {path}')
    return path