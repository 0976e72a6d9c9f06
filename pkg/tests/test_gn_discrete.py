from collections import Counter

import numpy as np
import pytest
from scipy import stats

from gn_lab.errors import RateBoundViolation
from gn_lab.gn_discrete import (
    AttachmentLog, GnState, advance, rate_bound, replay, run, run_timed, step,
)
from gn_lab.kernel import Kernel
from gn_lab.oracles import exact_shape_law
from gn_lab.seeding import make_rng
from gn_lab.tree import ROOT, LabelledTree, canonical_shape


def test_zero_and_one_birth(p2):
    tree, log = run(p2, 0, make_rng(0))
    assert tree.labels == [ROOT]
    assert len(log) == 0
    tree, log = run(p2, 1, make_rng(0))
    assert tree.labels == [ROOT, (1,)]
    assert log.attached_to == [0]
    assert log.pairs(tree) == [(ROOT, (1,))]


def test_negative_births_rejected(p2):
    with pytest.raises(ValueError):
        run(p2, -1, make_rng(0))


def test_first_step_attaches_to_root(p2):
    state = GnState.initial(p2)
    assert step(state, p2, make_rng(1)) == (ROOT, (1,))
    assert state.births == 1
    assert state.total_weight == pytest.approx(p2.eval(1) + p2.eval(0))


def test_second_step_law(p2):
    start = LabelledTree.from_labels([ROOT, (1,)])
    assert GnState.from_tree(start, p2).attach_probability(p2, ROOT) == pytest.approx(0.8)
    rng = make_rng(2)
    trials = 20_000
    to_root = 0
    for _ in range(trials):
        state = GnState.from_tree(start.copy(), p2)
        attached, new = step(state, p2, rng)
        to_root += attached == ROOT
        assert new == ((2,) if attached == ROOT else (1, 1))
    # standard error is about 0.0028
    assert abs(to_root / trials - 0.8) < 0.015


def test_shape_law_after_three_births():
    kernel = Kernel.power(1.5)
    law = exact_shape_law(kernel, 3)
    rng = make_rng(3)
    trials = 4000
    counts = Counter(canonical_shape(run(kernel, 3, rng)[0], ROOT) for _ in range(trials))
    shapes = list(law)
    observed = [counts.get(s, 0) for s in shapes]
    expected = [law[s] * trials for s in shapes]
    assert sum(observed) == trials
    assert stats.chisquare(observed, expected).pvalue > 1e-3


def test_rate_bound_violation_is_raised(p2):
    state = GnState.initial(p2)
    state.total_weight = 100.0
    with pytest.raises(RateBoundViolation):
        step(state, p2, make_rng(0))


def test_rate_bound_holds_along_a_run():
    kernel = Kernel.power(1.3)
    state = GnState.initial(kernel)
    rng = make_rng(4)
    for _ in range(300):
        step(state, kernel, rng)
        assert state.total_weight <= rate_bound(kernel, state.births) * (1 + 1e-12)


def test_non_monotone_kernel_skips_rate_bound():
    kernel = Kernel.table([3.0, 1.0], 2.0)
    tree, _ = run(kernel, 50, make_rng(5))
    assert tree.size == 51


def test_cached_weight_stays_coherent_past_sum_tree_threshold():
    kernel = Kernel.power(1.2)
    state = GnState.initial(kernel)
    advance(state, kernel, 1500, make_rng(6))
    assert state.weights.uses_sum_tree
    state.check_coherence(kernel)
    state.tree.check_invariants()
    assert state.weights.total == pytest.approx(state.recompute_weight(kernel), rel=1e-9)


def test_runs_are_reproducible(p175):
    a, log_a = run(p175, 200, make_rng(9))
    b, log_b = run(p175, 200, make_rng(9))
    assert log_a == log_b
    assert a.labels == b.labels


def test_replay_rebuilds_the_tree(random_trees, p175):
    tree, log = run(p175, 120, make_rng(10))
    assert replay(log).labels == tree.labels
    for t in random_trees:
        rebuilt = replay(AttachmentLog(t.parent_array()[1:]))
        assert rebuilt.labels == t.labels


@pytest.mark.parametrize('name', ['attach.log', 'attach.npy'])
def test_log_save_and_load(tmp_path, p175, name):
    _, log = run(p175, 80, make_rng(11))
    path = str(tmp_path / name)
    log.save(path)
    assert AttachmentLog.load(path) == log


def test_log_text_rejects_out_of_order_steps():
    with pytest.raises(ValueError):
        AttachmentLog.from_text('0 0\n2 1\n')


def test_run_timed_birth_times(p175):
    tree, log, times = run_timed(p175, 60, make_rng(12))
    assert tree.size == 61
    assert len(log) == 60
    assert times[0] == 0.0
    assert np.all(np.diff(times) > 0)
