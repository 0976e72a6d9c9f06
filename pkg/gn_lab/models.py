"""Run configuration and result records."""

import os
from dataclasses import asdict, dataclass, field
from typing import Dict, List, Optional, Tuple

from .config import (
    DEFAULT_MAX_BIRTHS, DEFAULT_N_TRUNC, DEFAULT_NEAR_EXPLOSION_DELTA,
    MODE_DISCRETE, MODE_EMBEDDED, MODES, OUTPUT_DIR,
)
from .errors import ConfigError, KernelError
from .kernel import Kernel

STOP_BIRTHS = 'births'
STOP_WALL_TIME = 'wall_time'
STOP_NEAR_EXPLOSION = 'near_explosion'
STOP_KINDS = (STOP_BIRTHS, STOP_WALL_TIME, STOP_NEAR_EXPLOSION)


@dataclass(frozen=True)
class StopRule:
    """Tagged union of stopping rules.

    births(m): stop after m births.
    wall_time(t): stop before the first birth later than process time t.
    near_explosion(delta, n_trunc): stop once now >= S_hat - delta, delta taken
        relative to S_hat unless `relative` is false.
    Every rule also stops at max_births.
    """
    kind: str
    m: int = 0
    t: float = 0.0
    delta: float = DEFAULT_NEAR_EXPLOSION_DELTA
    n_trunc: int = DEFAULT_N_TRUNC
    relative: bool = True
    max_births: int = DEFAULT_MAX_BIRTHS

    @classmethod
    def births(cls, m: int, max_births: int = DEFAULT_MAX_BIRTHS) -> 'StopRule':
        return cls(STOP_BIRTHS, m=int(m), max_births=max(int(m), max_births))

    @classmethod
    def wall_time(cls, t: float, max_births: int = DEFAULT_MAX_BIRTHS) -> 'StopRule':
        return cls(STOP_WALL_TIME, t=float(t), max_births=max_births)

    @classmethod
    def near_explosion(cls, delta: float = DEFAULT_NEAR_EXPLOSION_DELTA,
                       n_trunc: int = DEFAULT_N_TRUNC, relative: bool = True,
                       max_births: int = DEFAULT_MAX_BIRTHS) -> 'StopRule':
        return cls(STOP_NEAR_EXPLOSION, delta=float(delta), n_trunc=int(n_trunc),
                   relative=relative, max_births=max_births)

    def validate(self):
        if self.kind not in STOP_KINDS:
            raise ConfigError(f'unknown stop rule {self.kind!r}; expected one of {STOP_KINDS}')
        if self.kind == STOP_BIRTHS and self.m < 0:
            raise ConfigError(f'births(m) needs m >= 0, got {self.m}')
        if self.kind == STOP_WALL_TIME and self.t < 0:
            raise ConfigError(f'wall_time(t) needs t >= 0, got {self.t}')
        if self.kind == STOP_NEAR_EXPLOSION and (self.delta <= 0 or self.n_trunc < 1):
            raise ConfigError('near_explosion needs delta > 0 and n_trunc >= 1')
        if self.max_births < 0:
            raise ConfigError('max_births must be >= 0')

    def to_dict(self) -> dict:
        if self.kind == STOP_BIRTHS:
            return {'kind': self.kind, 'm': self.m, 'max_births': self.max_births}
        if self.kind == STOP_WALL_TIME:
            return {'kind': self.kind, 't': self.t, 'max_births': self.max_births}
        return {'kind': self.kind, 'delta': self.delta, 'n_trunc': self.n_trunc,
                'relative': self.relative, 'max_births': self.max_births}

    @classmethod
    def from_dict(cls, data: dict) -> 'StopRule':
        if not isinstance(data, dict) or 'kind' not in data:
            raise ConfigError(f'stop rule must be an object with a "kind", got {data!r}')
        kind = data['kind']
        cap = int(data.get('max_births', DEFAULT_MAX_BIRTHS))
        try:
            if kind == STOP_BIRTHS:
                rule = cls.births(int(data['m']), cap)
            elif kind == STOP_WALL_TIME:
                rule = cls.wall_time(float(data['t']), cap)
            elif kind == STOP_NEAR_EXPLOSION:
                rule = cls.near_explosion(float(data.get('delta', DEFAULT_NEAR_EXPLOSION_DELTA)),
                                          int(data.get('n_trunc', DEFAULT_N_TRUNC)),
                                          bool(data.get('relative', True)), cap)
            else:
                raise ConfigError(f'unknown stop rule {kind!r}; expected one of {STOP_KINDS}')
        except (KeyError, TypeError, ValueError) as e:
            if isinstance(e, ConfigError):
                raise
            raise ConfigError(f'bad {kind} stop rule: {e}') from None
        rule.validate()
        return rule


@dataclass
class RunConfig:
    kernel: Kernel
    mode: str = MODE_DISCRETE
    stop: StopRule = field(default_factory=lambda: StopRule.births(1000))
    checkpoints: Tuple[int, ...] = ()
    k_max: int = 3
    trials: int = 1
    master_seed: int = 0
    output_dir: str = OUTPUT_DIR
    workers: int = 1
    shape_cap: Optional[int] = None

    def __post_init__(self):
        self.checkpoints = tuple(int(m) for m in self.checkpoints)

    @property
    def inventory_cap(self) -> int:
        """Largest children-subtree size tallied by shape."""
        return self.shape_cap if self.shape_cap is not None else self.k_max

    @property
    def final_births(self) -> Optional[int]:
        if self.stop.kind == STOP_BIRTHS:
            return self.stop.m
        return None

    def census_points(self) -> Tuple[int, ...]:
        """Checkpoints, closed by the births stop target when there is one."""
        points = list(self.checkpoints)
        if self.stop.kind == STOP_BIRTHS and (not points or points[-1] < self.stop.m):
            points.append(self.stop.m)
        return tuple(points)

    def validate(self) -> 'RunConfig':
        if self.mode not in MODES:
            raise ConfigError(f'mode must be one of {MODES}, got {self.mode!r}')
        self.stop.validate()
        if self.stop.kind != STOP_BIRTHS and self.mode != MODE_EMBEDDED:
            raise ConfigError(f'{self.stop.kind} stop rule requires mode={MODE_EMBEDDED}')
        if self.stop.kind == STOP_NEAR_EXPLOSION and not self.kernel.is_explosive():
            raise ConfigError(f'near_explosion stop rule needs an explosive kernel, got {self.kernel}')
        if any(m < 0 for m in self.checkpoints):
            raise ConfigError('checkpoints must be >= 0')
        if any(b <= a for a, b in zip(self.checkpoints, self.checkpoints[1:])):
            raise ConfigError(f'checkpoints must be strictly ascending: {list(self.checkpoints)}')
        if self.stop.kind == STOP_BIRTHS and self.checkpoints and self.checkpoints[-1] > self.stop.m:
            raise ConfigError(f'checkpoint {self.checkpoints[-1]} exceeds births({self.stop.m})')
        if self.trials < 1:
            raise ConfigError(f'trials must be >= 1, got {self.trials}')
        if self.k_max < 1:
            raise ConfigError(f'k_max must be >= 1, got {self.k_max}')
        if self.workers < 1:
            raise ConfigError(f'workers must be >= 1, got {self.workers}')
        if self.shape_cap is not None and self.shape_cap < 1:
            raise ConfigError('shape_cap must be >= 1')
        return self

    def to_dict(self) -> dict:
        return {
            'kernel': self.kernel.to_spec(),
            'mode': self.mode,
            'stop': self.stop.to_dict(),
            'checkpoints': list(self.checkpoints),
            'k_max': self.k_max,
            'trials': self.trials,
            'master_seed': self.master_seed,
            'output_dir': self.output_dir,
            'workers': self.workers,
            'shape_cap': self.shape_cap,
        }

    @classmethod
    def from_dict(cls, data: dict) -> 'RunConfig':
        if not isinstance(data, dict):
            raise ConfigError('run config must be a JSON object')
        unknown = set(data) - set(cls.__dataclass_fields__)
        if unknown:
            raise ConfigError(f'unknown config fields: {sorted(unknown)}')
        if 'kernel' not in data:
            raise ConfigError('run config needs a kernel')
        try:
            kernel = Kernel.from_spec(data['kernel'])
        except KernelError as e:
            raise ConfigError(str(e)) from None
        try:
            config = cls(
                kernel=kernel,
                mode=data.get('mode', MODE_DISCRETE),
                stop=StopRule.from_dict(data['stop']) if 'stop' in data else StopRule.births(1000),
                checkpoints=tuple(data.get('checkpoints', ())),
                k_max=int(data.get('k_max', 3)),
                trials=int(data.get('trials', 1)),
                master_seed=int(data.get('master_seed', 0)),
                output_dir=data.get('output_dir') or OUTPUT_DIR,
                workers=int(data.get('workers', 1)),
                shape_cap=None if data.get('shape_cap') is None else int(data['shape_cap']),
            )
        except (TypeError, ValueError) as e:
            if isinstance(e, ConfigError):
                raise
            raise ConfigError(f'bad run config: {e}') from None
        return config.validate()

    def with_overrides(self, **overrides) -> 'RunConfig':
        data = self.to_dict()
        for key, value in overrides.items():
            if value is not None:
                data[key] = value
        return RunConfig.from_dict(data)


@dataclass
class CheckpointCensus:
    """Census of one tree snapshot."""
    m: int
    size: int
    k_fertile: Dict[int, int]
    degree_histogram: Dict[int, int]
    height: int
    max_degree_vertex: str
    max_degree: int
    inventory: Dict[str, int]
    detached: int
    large_children: int
    time: Optional[float] = None

    def to_dict(self) -> dict:
        data = asdict(self)
        data['k_fertile'] = {str(k): v for k, v in self.k_fertile.items()}
        data['degree_histogram'] = {str(k): v for k, v in self.degree_histogram.items()}
        return data

    @classmethod
    def from_dict(cls, data: dict) -> 'CheckpointCensus':
        data = dict(data)
        data['k_fertile'] = {int(k): v for k, v in data['k_fertile'].items()}
        data['degree_histogram'] = {int(k): v for k, v in data['degree_histogram'].items()}
        return cls(**data)


@dataclass
class CensusReport:
    """Censuses of one run at its checkpoints, with run metadata."""
    seed: int
    kernel: dict
    mode: str
    trial: int = 0
    snapshots: List[CheckpointCensus] = field(default_factory=list)
    stopped_reason: Optional[str] = None

    @property
    def checkpoints(self) -> List[int]:
        return [s.m for s in self.snapshots]

    def fertile_series(self, k: int) -> List[int]:
        return [s.k_fertile.get(k, 0) for s in self.snapshots]

    def to_dict(self) -> dict:
        return {
            'seed': self.seed,
            'kernel': self.kernel,
            'mode': self.mode,
            'trial': self.trial,
            'stopped_reason': self.stopped_reason,
            'snapshots': [s.to_dict() for s in self.snapshots],
        }

    @classmethod
    def from_dict(cls, data: dict) -> 'CensusReport':
        return cls(
            seed=data['seed'], kernel=data['kernel'], mode=data['mode'],
            trial=data.get('trial', 0),
            snapshots=[CheckpointCensus.from_dict(s) for s in data.get('snapshots', [])],
            stopped_reason=data.get('stopped_reason'),
        )


@dataclass
class BoundCheckResult:
    """Empirical probability of a lemma event next to the lemma's bound shape."""
    empirical: Optional[float]
    bound_shape: float
    n: int
    trials: int
    flags: List[str] = field(default_factory=list)
    t: Optional[float] = None

    @property
    def std_error(self) -> Optional[float]:
        if self.empirical is None or self.trials == 0:
            return None
        return (self.empirical * (1.0 - self.empirical) / self.trials) ** 0.5

    @property
    def ratio(self) -> Optional[float]:
        if self.empirical is None or self.bound_shape == 0:
            return None
        return self.empirical / self.bound_shape

    def to_dict(self) -> dict:
        data = asdict(self)
        data['std_error'] = self.std_error
        return data


@dataclass
class TrialResult:
    """Outcome of one trial of an experiment."""
    trial: int
    seed: int
    status: str = 'pending'  # pending | success | failed | skipped
    census: Optional[CensusReport] = None
    errors: List[str] = field(default_factory=list)
    warnings: List[str] = field(default_factory=list)

    def to_dict(self) -> dict:
        return {
            'trial': self.trial,
            'seed': self.seed,
            'status': self.status,
            'errors': self.errors,
            'warnings': self.warnings,
            'census': self.census.to_dict() if self.census else None,
        }

    @classmethod
    def from_dict(cls, data: dict) -> 'TrialResult':
        census = data.get('census')
        return cls(
            trial=data['trial'], seed=data['seed'], status=data.get('status', 'pending'),
            census=CensusReport.from_dict(census) if census else None,
            errors=list(data.get('errors', [])), warnings=list(data.get('warnings', [])),
        )


def trial_file_stem(trial: int) -> str:
    return f'trial_{trial:04d}'


def output_path(config: RunConfig, *parts) -> str:
    return os.path.join(config.output_dir, *parts)
