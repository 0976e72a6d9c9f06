"""Human-readable summaries and plot-ready CSVs for artifact directories.

Reports are derived only from the data files of a run, never from the
manifest timestamp, so regenerating a report rewrites identical files.
"""

import logging
import os
from typing import List

import pandas as pd

from .analysis import census_frame, stabilization_fraction
from .errors import GnLabError
from .experiment import PHASE_TABLE, p_dir
from .models import CensusReport
from .output import load_manifest, load_trial_results, read_json, write_csv

logger = logging.getLogger('gn_lab')

REPORT_DIR = 'report'
SUMMARY = 'summary.txt'


def degree_frame(reports: List[CensusReport]) -> pd.DataFrame:
    rows = [{'trial': r.trial, 'm': s.m, 'degree': d, 'count': n}
            for r in reports for s in r.snapshots for d, n in sorted(s.degree_histogram.items())]
    return pd.DataFrame(rows, columns=['trial', 'm', 'degree', 'count'])


def inventory_frame(reports: List[CensusReport]) -> pd.DataFrame:
    rows = [{'trial': r.trial, 'm': s.m, 'vertex': s.max_degree_vertex, 'shape': code,
             'size': code.count('('), 'count': n}
            for r in reports for s in r.snapshots for code, n in sorted(s.inventory.items())]
    return pd.DataFrame(rows, columns=['trial', 'm', 'vertex', 'shape', 'size', 'count'])


def _experiment_lines(directory: str, out: str, prefix: str = '') -> List[str]:
    results = load_trial_results(directory)
    reports = [r.census for r in results if r.census is not None]
    write_csv(census_frame(reports), os.path.join(out, f'{prefix}census_trajectories.csv'))
    write_csv(degree_frame(reports), os.path.join(out, f'{prefix}degree_histograms.csv'))
    write_csv(inventory_frame(reports), os.path.join(out, f'{prefix}shape_inventories.csv'))

    lines = []
    if not results:
        lines.append('trials completed: 0 (no trial results found)')
        return lines
    statuses = {}
    for r in results:
        statuses[r.status] = statuses.get(r.status, 0) + 1
    lines.append(f'trials completed: {len(results)} '
                 f'({", ".join(f"{k}={v}" for k, v in sorted(statuses.items()))})')
    frame = census_frame(reports)
    if frame.empty:
        return lines
    means = frame.groupby(['k', 'm'])['count'].mean()
    for k in sorted(frame['k'].unique()):
        series = means.loc[k]
        points = ', '.join(f'm={m}: {v:.2f}' for m, v in series.items())
        lines.append(f'  {k}-fertile mean  {points}')
        if len(series) >= 2:
            lines.append(f'  {k}-fertile stabilized in '
                         f'{stabilization_fraction(reports, int(k)):.0%} of runs')
    return lines


def _sweep_lines(directory: str, manifest: dict, out: str) -> List[str]:
    lines = []
    table_path = os.path.join(directory, PHASE_TABLE)
    if os.path.exists(table_path):
        table = pd.read_csv(table_path)
        write_csv(table, os.path.join(out, PHASE_TABLE))
        lines.append('phase table:')
        lines.extend('  ' + line for line in table.to_string(index=False).splitlines())
    for p in manifest.get('p_values', []):
        sub = os.path.join(directory, p_dir(p))
        lines.append(f'p={p:g}:')
        if not os.path.isdir(sub):
            lines.append('  trials completed: 0 (no trial results found)')
            continue
        lines.extend('  ' + line for line in _experiment_lines(sub, out, prefix=f'{p_dir(p)}_'))
    return lines


def _embed_equiv_lines(directory: str, out: str) -> List[str]:
    path = os.path.join(directory, 'embed_equiv.json')
    if not os.path.exists(path):
        return ['no equivalence record found']
    record = read_json(path)
    tests = [{'test': 'shapes', **record['shapes']}]
    if 'occupancy' in record:
        tests.append({'test': 'occupancy', **record['occupancy']})
    write_csv(pd.DataFrame(tests), os.path.join(out, 'equivalence_tests.csv'))
    shapes = sorted(set(record['discrete']) | set(record['embedded']))
    write_csv(pd.DataFrame([{'shape': s, 'discrete': record['discrete'].get(s, 0),
                             'embedded': record['embedded'].get(s, 0)} for s in shapes]),
              os.path.join(out, 'shape_counts.csv'))
    return [f'm={record["m"]}, {record["trials"]} trials per mode'] + [
        f'  {t["test"]}: chi2={t["statistic"]:.3f}, dof={t["dof"]}, p={t["p_value"]:.4g}'
        for t in tests]


def _lemma_lines(directory: str, out: str) -> List[str]:
    path = os.path.join(directory, 'lemma_check.json')
    if not os.path.exists(path):
        return ['no lemma records found']
    records = read_json(path)
    rows = []
    for family in ('fertility', 'lgdev', 'explosion_window'):
        for point in records[family]['points']:
            ratio = None
            if point['empirical'] is not None and point['bound_shape']:
                ratio = point['empirical'] / point['bound_shape']
            rows.append({'family': family, 'n': point['n'], 'delta': point.get('delta'),
                         'empirical': point['empirical'], 'bound_shape': point['bound_shape'],
                         'ratio': ratio, 'std_error': point['std_error'],
                         'flags': ';'.join(point['flags'])})
    write_csv(pd.DataFrame(rows), os.path.join(out, 'oracle_ratios.csv'))
    grid = [{'j': c['j'], 't': g['t'], 'empirical': g['empirical'], 'bound': g['bound_shape']}
            for c in records['interbirth']['checks'] for g in c['grid']]
    write_csv(pd.DataFrame(grid), os.path.join(out, 'interbirth_grid.csv'))

    fert = records['fertility']
    return [
        f'erlang bound excess: {records["erlang"]["bound_excess"]}',
        f'fertility slope: {fert["slope"]} (expected {fert["expected_slope"]}, '
        f'exact {fert["exact_slope"]})',
        f'large-deviation sup ratio: {records["lgdev"]["sup_ratio"]}',
        f'inter-birth dominance: {"passed" if records["interbirth"]["passed"] else "FAILED"}',
    ]


def report(directory: str) -> str:
    """Write <directory>/report/summary.txt and plot-data CSVs; returns the summary path."""
    manifest = load_manifest(directory)
    out = os.path.join(directory, REPORT_DIR)
    os.makedirs(out, exist_ok=True)
    kind = manifest['kind']

    lines = [f'kind: {kind}', f'code version: {manifest.get("code_version")}']
    if 'config' in manifest:
        config = manifest['config']
        lines.append(f'kernel: {config.get("kernel")}')
        if 'mode' in config:
            lines.append(f'mode: {config["mode"]}, stop: {config.get("stop")}')
    elif 'kernel' in manifest:
        lines.append(f'kernel: {manifest["kernel"]}')

    if kind == 'experiment':
        lines.extend(_experiment_lines(directory, out))
    elif kind == 'sweep':
        lines.extend(_sweep_lines(directory, manifest, out))
    elif kind == 'embed_equiv':
        lines.extend(_embed_equiv_lines(directory, out))
    elif kind == 'lemma_check':
        lines.extend(_lemma_lines(directory, out))
    else:
        raise GnLabError(f'unknown artifact kind {kind!r} in {directory}')

    path = os.path.join(out, SUMMARY)
    with open(path, 'w', encoding='utf-8') as f:
        f.write('\n'.join(lines) + '\n')
    logger.info(f'Report written to {out}')
    return path
