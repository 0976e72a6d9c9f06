"""Attachment kernels f, their tail sums, explosivity and the critical index k_p.

Two forms are supported:

    power:  f(x) = (x+1)^p
    table:  f(x) = values[x] for x < len(values), continued by the power tail
            values[-1] * ((x+1)/len(values))^tail_p

A kernel is explosive iff sum_{n>=0} 1/f(n) < inf, i.e. iff the (tail) exponent
exceeds 1.
"""

import logging
import math
from dataclasses import dataclass
from functools import lru_cache
from typing import NamedTuple, Tuple

import numpy as np

from .config import DEFAULT_TAIL_RTOL, MAX_TAIL_TERMS
from .errors import KernelError

logger = logging.getLogger('gn_lab')

FORM_POWER = 'power'
FORM_TABLE = 'table'

_CHUNK = 1_000_000


class TailSum(NamedTuple):
    value: float
    error_bound: float

    @property
    def low(self) -> float:
        return self.value - self.error_bound

    @property
    def high(self) -> float:
        return self.value + self.error_bound


@dataclass(frozen=True)
class Kernel:
    """Attachment / feedback kernel.

    For the power form `p` is the exponent; for the table form it is the
    declared tail exponent and `values` holds the tabulated head.
    """
    form: str
    p: float
    values: Tuple[float, ...] = ()

    def __post_init__(self):
        if self.form not in (FORM_POWER, FORM_TABLE):
            raise KernelError(f'unknown kernel form: {self.form!r}')
        if not (isinstance(self.p, (int, float)) and math.isfinite(self.p) and self.p > 0):
            raise KernelError(f'kernel exponent must be a positive real, got {self.p!r}')
        if self.form == FORM_TABLE:
            if not self.values:
                raise KernelError('table kernel needs at least one value')
            if any(not math.isfinite(v) or v <= 0 for v in self.values):
                raise KernelError('table kernel values must be finite and positive')

    @classmethod
    def power(cls, p: float) -> 'Kernel':
        return cls(FORM_POWER, float(p))

    @classmethod
    def table(cls, values, tail_p: float) -> 'Kernel':
        return cls(FORM_TABLE, float(tail_p), tuple(float(v) for v in values))

    @classmethod
    def from_spec(cls, spec: dict) -> 'Kernel':
        """Build from {"form":"power","p":..} or {"form":"table","values":[..],"tail_p":..}."""
        if not isinstance(spec, dict):
            raise KernelError(f'kernel spec must be an object, got {type(spec).__name__}')
        form = spec.get('form', FORM_POWER)
        try:
            if form == FORM_POWER:
                return cls.power(spec['p'])
            if form == FORM_TABLE:
                return cls.table(spec['values'], spec['tail_p'])
        except KeyError as e:
            raise KernelError(f'kernel spec missing field {e}') from None
        except TypeError as e:
            raise KernelError(f'bad kernel spec: {e}') from None
        raise KernelError(f'unknown kernel form: {form!r}')

    def to_spec(self) -> dict:
        if self.form == FORM_POWER:
            return {'form': FORM_POWER, 'p': self.p}
        return {'form': FORM_TABLE, 'values': list(self.values), 'tail_p': self.p}

    # --- evaluation ---

    def eval(self, x: int) -> float:
        """f(x) for a nonnegative integer x."""
        if self.form == FORM_POWER:
            return (x + 1.0) ** self.p
        n = len(self.values)
        if x < n:
            return self.values[x]
        return self.values[-1] * ((x + 1.0) / n) ** self.p

    def rates(self, xs) -> np.ndarray:
        """Vectorized f over an integer array."""
        xs = np.asarray(xs)
        if self.form == FORM_POWER:
            return (xs + 1.0) ** self.p
        n = len(self.values)
        head = np.asarray(self.values)
        tail = self.values[-1] * ((xs + 1.0) / n) ** self.p
        idx = np.minimum(xs, n - 1).astype(np.int64)
        return np.where(xs < n, head[idx], tail)

    @property
    def head_length(self) -> int:
        """Index from which f follows its pure power tail."""
        return len(self.values) if self.form == FORM_TABLE else 0

    @property
    def tail_scale(self) -> float:
        """c such that f(j) = c (j+1)^p for j >= head_length."""
        if self.form == FORM_POWER:
            return 1.0
        return self.values[-1] / len(self.values) ** self.p

    @property
    def is_nondecreasing(self) -> bool:
        if self.form == FORM_POWER:
            return True
        return all(a <= b for a, b in zip(self.values, self.values[1:]))

    def is_explosive(self) -> bool:
        return is_explosive(self)

    def tail_mean(self, n: int, rtol: float = DEFAULT_TAIL_RTOL) -> TailSum:
        return tail_mean(self, n, rtol)

    def __str__(self):
        if self.form == FORM_POWER:
            return f'(x+1)^{self.p:g}'
        return f'table[{len(self.values)}]~x^{self.p:g}'


def eval_kernel(kernel: Kernel, x: int) -> float:
    if x < 0:
        raise KernelError(f'kernel argument must be >= 0, got {x}')
    return kernel.eval(x)


def is_explosive(kernel: Kernel) -> bool:
    """True iff sum_{n>=0} 1/f(n) converges."""
    return kernel.p > 1


def critical_k(p: float) -> int:
    """Smallest positive k with p > 1 + 1/k."""
    if not p > 1:
        raise KernelError(f'no finite k_p for p={p}')
    k = int(math.floor(1.0 / (p - 1.0))) + 1
    # float rounding at the transition points p_k = 1 + 1/k
    while not p > 1.0 + 1.0 / k:
        k += 1
    while k > 1 and p > 1.0 + 1.0 / (k - 1):
        k -= 1
    return k


def transition_point(k: int) -> float:
    """p_k = 1 + 1/k."""
    return 1.0 + 1.0 / k


def _partial_sum(kernel: Kernel, start: int, stop: int) -> float:
    """sum_{j=start}^{stop-1} 1/f(j), accumulated from the small end."""
    total = 0.0
    hi = stop
    while hi > start:
        lo = max(start, hi - _CHUNK)
        terms = 1.0 / kernel.rates(np.arange(lo, hi, dtype=np.float64))
        total += float(np.sum(terms[::-1]))
        hi = lo
    return total


def _integral_bracket(kernel: Kernel, big_n: int) -> Tuple[float, float]:
    """Bracket of sum_{j>=N} 1/f(j) for N past the table head."""
    p, c = kernel.p, kernel.tail_scale
    low = (big_n + 1.0) ** (1.0 - p) / ((p - 1.0) * c)
    high = float(big_n) ** (1.0 - p) / ((p - 1.0) * c)
    return low, high


@lru_cache(maxsize=4096)
def tail_mean(kernel: Kernel, n: int, rtol: float = DEFAULT_TAIL_RTOL) -> TailSum:
    """sum_{j>=n} 1/f(j) as a partial sum plus an integral-bracketed remainder.

    The cut N is chosen so the bracket width is below rtol relative to the
    value, capped at MAX_TAIL_TERMS explicit terms.
    """
    if not is_explosive(kernel):
        raise KernelError(f'tail diverges for kernel {kernel} (exponent <= 1)')
    if n < 0:
        raise KernelError(f'tail index must be >= 0, got {n}')

    p, c = kernel.p, kernel.tail_scale
    floor_n = max(n, kernel.head_length, 1)
    # lower estimate of the answer, used only to size the cut
    estimate = (floor_n + 1.0) ** (1.0 - p) / ((p - 1.0) * c)
    if n < floor_n:
        estimate += _partial_sum(kernel, n, floor_n)
    wanted = (1.0 / (c * rtol * estimate)) ** (1.0 / p)
    big_n = int(min(max(math.ceil(wanted), floor_n), n + MAX_TAIL_TERMS))
    big_n = max(big_n, floor_n)

    partial = _partial_sum(kernel, n, big_n)
    low, high = _integral_bracket(kernel, big_n)
    value = partial + 0.5 * (low + high)
    # half-width of the bracket plus accumulated rounding
    error_bound = 0.5 * (high - low) + 8.0 * np.finfo(float).eps * value
    if big_n - n >= MAX_TAIL_TERMS and error_bound > rtol * value:
        logger.debug(f'tail_mean({kernel}, {n}) capped at {MAX_TAIL_TERMS} terms, '
                     f'relative error {error_bound / value:.2e}')
    return TailSum(value, error_bound)


def tail_square_mean(kernel: Kernel, n: int) -> float:
    """Upper estimate of sum_{j>=n} 1/f(j)^2, the variance of the clock suffix."""
    p, c = kernel.p, kernel.tail_scale
    floor_n = max(n, kernel.head_length, 1)
    head = 0.0
    if n < floor_n:
        head = float(np.sum(1.0 / kernel.rates(np.arange(n, floor_n)) ** 2))
    return head + float(floor_n) ** (1.0 - 2.0 * p) / ((2.0 * p - 1.0) * c * c)


@lru_cache(maxsize=256)
def lgdev_threshold(kernel: Kernel, limit: int = 1_000_000) -> int:
    """Smallest n >= 1 with n^(p-1/2) <= (n+1)^p / 2.

    Below this index the exponent n^(p-1/2) is not an admissible Chernoff
    parameter and deviation bounds built on it are widened.
    """
    p = kernel.p
    for n in range(1, limit):
        if n ** (p - 0.5) <= (n + 1) ** p / 2.0:
            return n
    return limit
