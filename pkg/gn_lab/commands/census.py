"""census: fertility censuses at checkpoints."""

from ..base_command import BaseCommand
from ..errors import ConfigError
from ..experiment import run_experiment
from . import register_command


@register_command
class CensusCommand(BaseCommand):
    NAME = 'census'
    HELP = 'Run trials and census k-fertile counts, degrees and shape inventories at checkpoints'

    @classmethod
    def add_arguments(cls, parser):
        super().add_arguments(parser)
        parser.add_argument('--checkpoints', help='Comma-separated birth counts')

    def run(self, args) -> int:
        checkpoints = None
        if args.checkpoints:
            try:
                checkpoints = [int(m) for m in args.checkpoints.split(',') if m.strip()]
            except ValueError:
                raise ConfigError(f'--checkpoints expects integers, got {args.checkpoints!r}') from None
            # the last checkpoint doubles as the stop target unless one is given
            if checkpoints and args.births is None and not args.config:
                args.births = checkpoints[-1]
        config = self.load_config(args)
        if checkpoints is not None:
            config = config.with_overrides(checkpoints=checkpoints)
        status, _ = run_experiment(config)
        return status
