"""Abstract base class for CLI subcommands."""

import argparse
import logging
import os
from abc import ABC, abstractmethod

from .config import MODES, OUTPUT_DIR
from .errors import ConfigError
from .kernel import Kernel
from .models import RunConfig, StopRule
from .output import read_json

logger = logging.getLogger('gn_lab')


class BaseCommand(ABC):
    """A subcommand: declares its flags and runs against parsed arguments."""

    NAME: str = ''
    HELP: str = ''

    @classmethod
    def add_arguments(cls, parser: argparse.ArgumentParser):
        """Shared run flags; override to add more."""
        parser.add_argument('--config', help='JSON run config')
        parser.add_argument('--seed', type=int, help='Master seed')
        parser.add_argument('--trials', type=int, help='Number of trials')
        parser.add_argument('--out', help=f'Output directory (default under {OUTPUT_DIR})')
        parser.add_argument('--mode', choices=MODES, help='discrete or embedded')
        parser.add_argument('--p', help='Kernel exponent')
        parser.add_argument('--k', type=int, help='Largest k to census')
        parser.add_argument('--births', type=int, help='Stop after this many births')
        parser.add_argument('--workers', type=int, help='Worker processes')

    @abstractmethod
    def run(self, args: argparse.Namespace) -> int:
        """Execute; returns the process exit status."""
        pass

    # --- Utility methods ---

    @staticmethod
    def parse_p_values(text: str):
        try:
            return [float(part) for part in text.split(',') if part.strip()]
        except ValueError:
            raise ConfigError(f'--p expects numbers separated by commas, got {text!r}') from None

    def load_config(self, args: argparse.Namespace, default_p: float = 1.75) -> RunConfig:
        """Config file (or defaults) with command-line overrides applied."""
        if args.config:
            try:
                data = read_json(args.config)
            except (OSError, ValueError) as e:
                raise ConfigError(f'cannot read config {args.config}: {e}') from None
        else:
            data = {'kernel': Kernel.power(default_p).to_spec()}
        if not isinstance(data, dict):
            raise ConfigError('run config must be a JSON object')

        if getattr(args, 'p', None):
            values = self.parse_p_values(args.p)
            if len(values) != 1:
                raise ConfigError(f'{self.NAME} takes a single --p value')
            data['kernel'] = Kernel.power(values[0]).to_spec()
        if getattr(args, 'births', None) is not None:
            data['stop'] = StopRule.births(args.births).to_dict()
        overrides = {
            'master_seed': getattr(args, 'seed', None),
            'trials': getattr(args, 'trials', None),
            'mode': getattr(args, 'mode', None),
            'k_max': getattr(args, 'k', None),
            'workers': getattr(args, 'workers', None),
        }
        data.update({key: value for key, value in overrides.items() if value is not None})
        data['output_dir'] = self.output_dir(args, data.get('output_dir'))
        return RunConfig.from_dict(data)

    def output_dir(self, args: argparse.Namespace, configured=None) -> str:
        return getattr(args, 'out', None) or configured or os.path.join(OUTPUT_DIR, self.NAME)
