"""embed-equiv: discrete chain vs exponential embedding."""

import os

from ..analysis import embedding_equivalence
from ..base_command import BaseCommand
from ..experiment import EXIT_OK, EXIT_TRIAL_FAILED
from ..output import save_manifest, write_json
from . import register_command

SIGNIFICANCE = 0.001


@register_command
class EmbedEquivCommand(BaseCommand):
    NAME = 'embed-equiv'
    HELP = 'Chi-square test of tree shapes (and balls in bins) across the two modes'

    @classmethod
    def add_arguments(cls, parser):
        super().add_arguments(parser)
        parser.add_argument('--balls', type=int, default=0, help='Also compare two-bin occupancies')

    def run(self, args) -> int:
        if args.births is None:
            args.births = 6
        if args.trials is None and not args.config:
            args.trials = 10_000
        config = self.load_config(args)
        out = config.output_dir
        save_manifest(out, 'embed_equiv', {'config': config.to_dict(), 'balls': args.balls})
        record = embedding_equivalence(config.kernel, config.stop.m, config.trials,
                                       config.master_seed, balls=args.balls)
        write_json(record, os.path.join(out, 'embed_equiv.json'))
        p_values = [record['shapes']['p_value']]
        if 'occupancy' in record:
            p_values.append(record['occupancy']['p_value'])
        return EXIT_OK if min(p_values) > SIGNIFICANCE else EXIT_TRIAL_FAILED
