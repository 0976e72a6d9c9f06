import json
import os

import pytest

from gn_lab import experiment
from gn_lab.config import MODE_DISCRETE, MODE_EMBEDDED
from gn_lab.errors import ConfigError, GnLabError
from gn_lab.experiment import (
    EXIT_BAD_CONFIG, EXIT_OK, EXIT_TRIAL_FAILED, PHASE_TABLE, replay_trial, run_experiment, sweep,
)
from gn_lab.kernel import Kernel
from gn_lab.main import main
from gn_lab.models import RunConfig, StopRule, TrialResult
from gn_lab.output import MANIFEST, experiment_manifest, load_trial_results, save_manifest
from gn_lab.report import REPORT_DIR, SUMMARY, report

STAMP = '2026-01-01T00:00:00'


def small_config(out, **kwargs):
    defaults = dict(kernel=Kernel.power(1.75), stop=StopRule.births(40), checkpoints=(10, 20),
                    k_max=2, trials=3, master_seed=5, output_dir=str(out))
    defaults.update(kwargs)
    return RunConfig(**defaults)


def read_tree(root):
    files = {}
    for dirpath, _, names in os.walk(root):
        for name in names:
            path = os.path.join(dirpath, name)
            with open(path, 'rb') as f:
                files[os.path.relpath(path, root)] = f.read()
    return files


def test_run_experiment_writes_artifacts(tmp_path):
    out = tmp_path / 'exp'
    status, results = run_experiment(small_config(out), save_trees=True, generated_at=STAMP)
    assert status == EXIT_OK
    assert [r.status for r in results] == ['success'] * 3
    for name in (MANIFEST, 'aggregate.json', 'census.csv', 'trials/trial_0000.json',
                 'trials/trial_0002.csv', 'trees/trial_0001.parents', 'trees/trial_0001.log'):
        assert (out / name).exists(), name
    assert results[0].census.checkpoints == [10, 20, 40]
    loaded = load_trial_results(str(out))
    assert [r.to_dict() for r in loaded] == [r.to_dict() for r in results]


def test_embedded_experiment_keeps_birth_times(tmp_path):
    out = tmp_path / 'emb'
    config = small_config(out, mode=MODE_EMBEDDED, trials=1)
    status, _ = run_experiment(config, save_trees=True, generated_at=STAMP)
    assert status == EXIT_OK
    assert (out / 'trees' / 'trial_0000_births.csv').exists()


def test_rerun_is_byte_identical(tmp_path):
    out = tmp_path / 'exp'
    run_experiment(small_config(out), generated_at=STAMP)
    first = read_tree(out)
    run_experiment(small_config(out), generated_at=STAMP)
    assert read_tree(out) == first


def test_worker_pool_gives_the_same_trials(tmp_path):
    _, serial = run_experiment(small_config(tmp_path / 'a'), generated_at=STAMP)
    _, pooled = run_experiment(small_config(tmp_path / 'b', workers=2), generated_at=STAMP)
    assert [r.to_dict() for r in pooled] == [r.to_dict() for r in serial]
    assert read_tree(tmp_path / 'a' / 'trials') == read_tree(tmp_path / 'b' / 'trials')


def test_failed_trials_are_recorded(tmp_path, monkeypatch):
    def broken(config, trial):
        raise RuntimeError('boom')

    monkeypatch.setattr(experiment, 'census_trajectory', broken)
    status, results = run_experiment(small_config(tmp_path / 'x', trials=2), generated_at=STAMP)
    assert status == EXIT_TRIAL_FAILED
    assert results[0].status == 'failed'
    assert results[0].errors == ['RuntimeError: boom']


def test_replay_trial_matches_the_saved_result(tmp_path):
    out = tmp_path / 'exp'
    _, results = run_experiment(small_config(out), generated_at=STAMP)
    assert replay_trial(str(out), 1).to_dict() == results[1].to_dict()
    with pytest.raises(ConfigError):
        replay_trial(str(out), 7)


def test_run_config_round_trip(tmp_path):
    config = small_config(tmp_path, mode=MODE_EMBEDDED, shape_cap=3)
    assert RunConfig.from_dict(config.to_dict()) == config
    near = small_config(tmp_path, mode=MODE_EMBEDDED, stop=StopRule.near_explosion(1e-3, 500),
                        checkpoints=())
    assert RunConfig.from_dict(json.loads(json.dumps(near.to_dict()))) == near


@pytest.mark.parametrize('changes', [
    {'mode': 'sideways'},
    {'stop': StopRule.wall_time(1.0)},
    {'mode': MODE_EMBEDDED, 'stop': StopRule.near_explosion(), 'kernel': Kernel.power(1.0),
     'checkpoints': ()},
    {'checkpoints': (20, 10)},
    {'checkpoints': (10, 50)},
    {'trials': 0},
    {'k_max': 0},
    {'workers': 0},
])
def test_invalid_configs(tmp_path, changes):
    with pytest.raises(ConfigError):
        small_config(tmp_path, **changes).validate()


def test_config_from_dict_rejects_bad_input():
    with pytest.raises(ConfigError, match='unknown config fields'):
        RunConfig.from_dict({'kernel': {'form': 'power', 'p': 2}, 'colour': 'red'})
    with pytest.raises(ConfigError):
        RunConfig.from_dict({'kernel': {'form': 'power', 'p': -2}})
    with pytest.raises(ConfigError):
        RunConfig.from_dict({'kernel': {'form': 'power', 'p': 2}, 'stop': {'kind': 'forever'}})
    with pytest.raises(ConfigError):
        RunConfig.from_dict({'stop': {'kind': 'births', 'm': 3}})


def test_with_overrides_ignores_none(tmp_path):
    config = small_config(tmp_path)
    assert config.with_overrides(trials=None, master_seed=9).master_seed == 9
    assert config.with_overrides(trials=None).trials == 3


# --- sweep ---

def sweep_template(out, **kwargs):
    return small_config(out, trials=1, stop=StopRule.births(10), checkpoints=(5,), **kwargs)


def test_sweep_single_p(tmp_path):
    status, table = sweep([1.75], sweep_template(tmp_path / 's'), generated_at=STAMP)
    assert status == EXIT_OK
    assert list(table['k']) == [1, 2]
    assert set(table['p']) == {1.75}
    assert (tmp_path / 's' / PHASE_TABLE).exists()
    assert (tmp_path / 's' / 'p_1.75' / MANIFEST).exists()


def test_sweep_critical_k_column(tmp_path):
    _, table = sweep([1.4, 1.75, 2.5], sweep_template(tmp_path / 's', k_max=1),
                     generated_at=STAMP)
    assert list(table['k_p']) == [3, 2, 1]


def test_sweep_rejects_non_superlinear_p(tmp_path):
    with pytest.raises(ConfigError):
        sweep([1.5, 1.0], sweep_template(tmp_path / 's'))
    with pytest.raises(ConfigError):
        sweep([], sweep_template(tmp_path / 's'))


# --- reports ---

def test_report_on_an_empty_experiment(tmp_path):
    config = small_config(tmp_path)
    save_manifest(str(tmp_path), 'experiment', experiment_manifest(config), STAMP)
    path = report(str(tmp_path))
    with open(path, encoding='utf-8') as f:
        assert 'trials completed: 0' in f.read()


def test_report_needs_a_manifest(tmp_path):
    with pytest.raises(GnLabError):
        report(str(tmp_path))


def test_report_is_idempotent(tmp_path):
    out = tmp_path / 'exp'
    run_experiment(small_config(out), generated_at=STAMP)
    report(str(out))
    first = read_tree(out / REPORT_DIR)
    report(str(out))
    assert read_tree(out / REPORT_DIR) == first
    assert set(first) == {SUMMARY, 'census_trajectories.csv', 'degree_histograms.csv',
                          'shape_inventories.csv'}


def test_sweep_report_has_per_p_tables(tmp_path):
    out = tmp_path / 's'
    sweep([1.75, 2.5], sweep_template(out), generated_at=STAMP)
    report(str(out))
    assert (out / REPORT_DIR / PHASE_TABLE).exists()
    assert (out / REPORT_DIR / 'p_2.5_census_trajectories.csv').exists()


# --- command line ---

def test_census_command_and_report(tmp_path):
    out = str(tmp_path / 'cli')
    assert main(['census', '--p', '1.75', '--checkpoints', '10,30', '--trials', '2',
                 '--out', out]) == EXIT_OK
    results = load_trial_results(out)
    assert [r.census.checkpoints for r in results] == [[10, 30], [10, 30]]
    assert main(['report', out]) == EXIT_OK
    assert os.path.exists(os.path.join(out, REPORT_DIR, SUMMARY))


def test_simulate_command(tmp_path):
    out = str(tmp_path / 'sim')
    assert main(['simulate', '--p', '2', '--births', '25', '--out', out, '--seed', '3']) == EXIT_OK
    assert os.path.exists(os.path.join(out, 'trees', 'trial_0000.parents'))


def test_bad_config_exits_with_config_status(tmp_path):
    path = tmp_path / 'bad.json'
    path.write_text(json.dumps({'kernel': {'form': 'power', 'p': 2}, 'mode': 'sideways'}))
    assert main(['census', '--config', str(path), '--out', str(tmp_path / 'o')]) == EXIT_BAD_CONFIG
    assert main(['sweep', '--p', '1.5,0.9', '--out', str(tmp_path / 'o')]) == EXIT_BAD_CONFIG


def test_report_without_manifest_exits_with_failure(tmp_path):
    assert main(['report', str(tmp_path)]) == EXIT_TRIAL_FAILED


def test_embed_equiv_command(tmp_path):
    out = str(tmp_path / 'eq')
    status = main(['embed-equiv', '--p', '1.5', '--births', '3', '--trials', '300', '--out', out])
    assert status in (EXIT_OK, EXIT_TRIAL_FAILED)
    with open(os.path.join(out, 'embed_equiv.json'), encoding='utf-8') as f:
        record = json.load(f)
    assert sum(record['discrete'].values()) == 300
    assert main(['report', out]) == EXIT_OK
    assert os.path.exists(os.path.join(out, REPORT_DIR, 'equivalence_tests.csv'))


def test_trial_result_round_trip(tmp_path):
    _, results = run_experiment(small_config(tmp_path / 'r', trials=1), generated_at=STAMP)
    data = json.loads(json.dumps(results[0].to_dict()))
    assert TrialResult.from_dict(data).to_dict() == results[0].to_dict()
    assert results[0].census.mode == MODE_DISCRETE
