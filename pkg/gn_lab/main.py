"""Command-line entry point."""

import argparse
import logging
import os
import sys
from typing import Optional, Sequence

from .commands import COMMAND_REGISTRY
from .config import LOG_DIR
from .errors import ConfigError, GnLabError
from .experiment import EXIT_BAD_CONFIG, EXIT_TRIAL_FAILED

# Import all commands so they register themselves
from .commands import simulate, census, sweep, embed_equiv, lemma_check, report  # noqa: F401

logger = logging.getLogger('gn_lab')


def setup_logging(verbose: bool = False, log_dir: str = LOG_DIR):
    os.makedirs(log_dir, exist_ok=True)
    logging.basicConfig(
        level=logging.DEBUG if verbose else logging.INFO,
        format='%(asctime)s [%(levelname)s] %(message)s',
        handlers=[
            logging.FileHandler(os.path.join(log_dir, 'gn_lab.log'), encoding='utf-8'),
            logging.StreamHandler(sys.stdout),
        ],
    )


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog='gn_lab', description='Simulate and verify super-linear preferential attachment trees')
    parser.add_argument('--verbose', action='store_true', help='Debug logging')
    subparsers = parser.add_subparsers(dest='command', required=True)
    for command_cls in COMMAND_REGISTRY:
        sub = subparsers.add_parser(command_cls.NAME, help=command_cls.HELP)
        command_cls.add_arguments(sub)
        sub.set_defaults(command_cls=command_cls)
    return parser


def main(argv: Optional[Sequence[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    setup_logging(args.verbose)
    try:
        return args.command_cls().run(args)
    except ConfigError as e:
        logger.error(f'Invalid configuration: {e}')
        return EXIT_BAD_CONFIG
    except GnLabError as e:
        logger.error(f'{args.command} failed: {e}')
        return EXIT_TRIAL_FAILED


if __name__ == '__main__':
    sys.exit(main())
