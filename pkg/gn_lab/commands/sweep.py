"""sweep: census ensembles across kernel exponents."""

from ..base_command import BaseCommand
from ..errors import ConfigError
from ..experiment import sweep
from . import register_command


@register_command
class SweepCommand(BaseCommand):
    NAME = 'sweep'
    HELP = 'Phase table of stabilization fractions over a list of p values (--p 1.4,1.75,2.5)'

    def run(self, args) -> int:
        if not args.p:
            raise ConfigError('sweep needs --p with one or more values')
        p_values = self.parse_p_values(args.p)
        args.p = None
        template = self.load_config(args, default_p=p_values[0])
        status, _ = sweep(p_values, template)
        return status
