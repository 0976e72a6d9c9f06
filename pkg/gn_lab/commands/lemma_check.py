"""lemma-check: exact and Monte Carlo lemma oracles."""

import os

from ..base_command import BaseCommand
from ..experiment import EXIT_OK, EXIT_TRIAL_FAILED
from ..oracles import lemma_suite
from ..output import save_manifest, write_json
from . import register_command


@register_command
class LemmaCheckCommand(BaseCommand):
    NAME = 'lemma-check'
    HELP = 'Erlang tails, fertility scaling, large deviations and inter-birth dominance'

    @classmethod
    def add_arguments(cls, parser):
        super().add_arguments(parser)
        parser.add_argument('--j-max', type=int, default=10, help='Largest inter-birth index')

    def run(self, args) -> int:
        if args.trials is None and not args.config:
            args.trials = 100_000
        config = self.load_config(args)
        trials = config.trials
        out = config.output_dir
        save_manifest(out, 'lemma_check', {'kernel': config.kernel.to_spec(),
                                           'master_seed': config.master_seed, 'trials': trials})
        k = args.k if args.k else None
        records = lemma_suite(config.kernel, seed=config.master_seed, trials=trials, k=k,
                              j_max=args.j_max, mode=config.mode)
        write_json(records, os.path.join(out, 'lemma_check.json'))
        return EXIT_OK if records['interbirth']['passed'] else EXIT_TRIAL_FAILED
