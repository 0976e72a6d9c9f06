"""simulate: run trials and keep every final tree."""

from ..base_command import BaseCommand
from ..experiment import run_experiment
from . import register_command


@register_command
class SimulateCommand(BaseCommand):
    NAME = 'simulate'
    HELP = 'Run trials, writing censuses plus final trees and attachment logs or birth times'

    def run(self, args) -> int:
        status, _ = run_experiment(self.load_config(args), save_trees=True)
        return status
