"""report: summary text and plot-ready CSVs for an artifact directory."""

from ..base_command import BaseCommand
from ..experiment import EXIT_OK
from ..report import report
from . import register_command


@register_command
class ReportCommand(BaseCommand):
    NAME = 'report'
    HELP = 'Summarize an artifact directory into summary.txt and plot-data CSVs'

    @classmethod
    def add_arguments(cls, parser):
        parser.add_argument('directory', help='Artifact directory holding a manifest')

    def run(self, args) -> int:
        report(args.directory)
        return EXIT_OK
