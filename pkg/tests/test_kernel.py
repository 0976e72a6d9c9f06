import math

import numpy as np
import pytest

from gn_lab.errors import KernelError
from gn_lab.kernel import (
    Kernel, critical_k, eval_kernel, is_explosive, lgdev_threshold, tail_mean, tail_square_mean,
    transition_point,
)

ZETA2 = math.pi ** 2 / 6


def test_power_eval():
    assert Kernel.power(2).eval(0) == 1.0
    assert Kernel.power(2).eval(2) == 9.0
    assert Kernel.power(1.75).eval(3) == pytest.approx(11.313708498984761, rel=1e-15)


def test_eval_is_positive_and_nondecreasing():
    for p in (0.3, 1.0, 1.75, 3.0):
        values = [Kernel.power(p).eval(x) for x in range(200)]
        assert all(v > 0 for v in values)
        assert all(a <= b for a, b in zip(values, values[1:]))


def test_eval_kernel_rejects_negative_argument():
    with pytest.raises(KernelError):
        eval_kernel(Kernel.power(2), -1)


def test_rates_match_eval():
    for kernel in (Kernel.power(1.4), Kernel.table([1.0, 2.0, 5.0], 2.0)):
        xs = np.arange(20)
        assert np.allclose(kernel.rates(xs), [kernel.eval(int(x)) for x in xs], rtol=1e-15)


def test_table_kernel_continues_with_power_tail():
    kernel = Kernel.table([1.0, 2.0, 3.0], 2.0)
    assert kernel.eval(0) == 1.0
    assert kernel.eval(2) == 3.0
    assert kernel.eval(3) == pytest.approx(3.0 * (4.0 / 3.0) ** 2)
    assert kernel.head_length == 3
    assert kernel.is_nondecreasing
    assert not Kernel.table([3.0, 1.0], 2.0).is_nondecreasing


def test_kernel_spec_round_trip():
    for kernel in (Kernel.power(1.75), Kernel.table([1.0, 4.0], 1.5)):
        assert Kernel.from_spec(kernel.to_spec()) == kernel


@pytest.mark.parametrize('spec', [
    {'form': 'power'},
    {'form': 'power', 'p': -1},
    {'form': 'table', 'values': [], 'tail_p': 2},
    {'form': 'table', 'values': [1.0, 0.0], 'tail_p': 2},
    {'form': 'cubic', 'p': 2},
    [2.0],
])
def test_bad_kernel_specs(spec):
    with pytest.raises(KernelError):
        Kernel.from_spec(spec)


def test_tail_mean_zeta_values():
    p2 = Kernel.power(2)
    assert abs(tail_mean(p2, 1).value - (ZETA2 - 1)) < 1e-8
    assert abs(tail_mean(p2, 0).value - ZETA2) < 1e-8
    assert tail_mean(p2, 0).error_bound < 1e-8


def test_tail_mean_large_n_inside_integral_bracket():
    n = 10_000
    value = tail_mean(Kernel.power(2), n).value
    assert 1.0 / (n + 1) <= value <= 1.0 / n


@pytest.mark.parametrize('p', [1.1, 1.5, 2.0, 3.0])
@pytest.mark.parametrize('n', [1, 2, 5, 50])
def test_tail_mean_bounds(p, n):
    value = tail_mean(Kernel.power(p), n).value
    low = 1.0 / ((p - 1) * (n + 1) ** (p - 1))
    high = 1.0 / ((p - 1) * max((n - 1) ** (p - 1), 1.0))
    assert low <= value <= high


@pytest.mark.parametrize('p', [1.2, 2.0])
def test_tail_mean_differences(p):
    kernel = Kernel.power(p)
    for n in (0, 3, 40):
        a, b = tail_mean(kernel, n), tail_mean(kernel, n + 1)
        assert abs((a.value - b.value) - 1.0 / kernel.eval(n)) <= a.error_bound + b.error_bound + 1e-15


def test_tail_mean_table_kernel_matches_partial_sums():
    kernel = Kernel.table([1.0, 2.0, 3.0], 2.0)
    head = 1.0 + 1 / 2.0 + 1 / 3.0
    assert tail_mean(kernel, 0).value == pytest.approx(head + tail_mean(kernel, 3).value, rel=1e-8)


def test_tail_mean_diverges_for_linear_kernel():
    with pytest.raises(KernelError, match='tail diverges'):
        tail_mean(Kernel.power(1.0), 5)


def test_tail_square_mean_dominates_the_sum():
    kernel = Kernel.power(2)
    direct = float(np.sum(1.0 / kernel.rates(np.arange(30, 2_000_000)) ** 2))
    assert tail_square_mean(kernel, 30) >= direct


def test_is_explosive():
    assert is_explosive(Kernel.power(2))
    assert not is_explosive(Kernel.power(1))
    assert is_explosive(Kernel.power(1.01))
    assert Kernel.table([1.0], 1.5).is_explosive()


def test_critical_k_examples():
    assert critical_k(2.5) == 1
    assert critical_k(1.75) == 2
    assert critical_k(1.4) == 3
    # p = 2 sits on the transition p_1, which is not strictly exceeded
    assert critical_k(2.0) == 2


@pytest.mark.parametrize('p', [1.05, 1.2, 1.3333, 1.5, 1.5000001, 1.99, 2.0, 2.01, 7.0])
def test_critical_k_characterization(p):
    k = critical_k(p)
    assert p > transition_point(k)
    if k >= 2:
        assert p <= transition_point(k - 1)


def test_critical_k_needs_superlinear_p():
    with pytest.raises(KernelError, match='no finite k_p'):
        critical_k(1.0)


@pytest.mark.parametrize('p', [1.1, 1.75, 2.0, 4.0])
def test_lgdev_threshold(p):
    n0 = lgdev_threshold(Kernel.power(p))
    assert n0 ** (p - 0.5) <= (n0 + 1) ** p / 2
    if n0 > 1:
        assert (n0 - 1) ** (p - 0.5) > n0 ** p / 2
