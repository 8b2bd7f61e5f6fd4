# -*- coding: utf-8 -*-

__author__ = 'Overlayembed developers'

# Native Python packages
import argparse
import logging
import sys

# Project imports
from overlayembed import __version__
from overlayembed.cli.commands import COMMANDS
from overlayembed.cli.config import load_config_file, build_run_config
from overlayembed.exceptions import OverlayEmbedError

logger = logging.getLogger(__name__)

LOG_FORMAT = '%(asctime)s %(name)s %(levelname)s %(message)s'

# (flags, config key, argparse options); every config key has exactly one flag
OPTIONS = (
    (('--dataset',), 'dataset', dict(help="Edge-list path or builtin dataset name")),
    (('--sig', '--signature'), 'signature', dict(help="Signature, e.g. E10, H5xS4, OL1:t=1, DOT")),
    (('--signatures',), 'signatures', dict(nargs='+', help="Signature list for sweeps")),
    (('--dim',), 'dim', dict(type=int, help="Ambient dimension d")),
    (('--loss',), 'loss', dict(choices=('distortion', 'proxy'))),
    (('--conv', '--conversion'), 'conversion', dict(choices=('t1', 't2', 't3'))),
    (('--conversion-reading',), 'conversion_reading', dict(choices=('default', 'literal', 'floored'))),
    (('--d0',), 'd0', dict(type=float)),
    (('--lr',), 'lr', dict(type=float)),
    (('--lr-sweep',), 'lr_sweep', dict(type=float, nargs='+')),
    (('--iters', '--iterations'), 'iterations', dict(type=int)),
    (('--iterations-proxy',), 'iterations_proxy', dict(type=int)),
    (('--seed',), 'seed', dict(type=int)),
    (('--output', '-o'), 'output', dict(help="Output directory")),
    (('--threads',), 'threads', dict(type=int)),
    (('--weighted',), 'weighted', dict(action=argparse.BooleanOptionalAction)),
    (('--raw-weights',), 'raw_weights', dict(action=argparse.BooleanOptionalAction)),
    (('--sphere-convention',), 'sphere_convention', dict(choices=('stored', 'ambient'))),
    (('--init-scale',), 'init_scale', dict(type=float)),
    (('--exclude-self',), 'exclude_self', dict(action=argparse.BooleanOptionalAction)),
    (('--pair-sample',), 'pair_sample', dict(type=int)),
    (('--denominator-sample',), 'denominator_sample', dict(type=int)),
    (('--eval-every',), 'eval_every', dict(type=int)),
    (('--log-every',), 'log_every', dict(type=int)),
    (('--restarts',), 'restarts', dict(type=int)),
    (('--manifest',), 'manifest', dict(help="YAML manifest mapping dataset names to local files")),
    (('--n-small',), 'n_small', dict(type=int)),
    (('--n-large',), 'n_large', dict(type=int)),
    (('--p',), 'p', dict(type=float, help="Edge probability of the bipartite graph")),
    (('--embedding',), 'embedding', dict(help="Embedding dump to evaluate")),
)


def build_parser():
    """
    Creates the argument parser with one subcommand per entry of ``COMMANDS``

    Absent flags do not appear in the parsed namespace, so they never override values of the config file.
    """
    parser = argparse.ArgumentParser(prog='overlayembed', description="Graph embeddings in overlaying spaces")
    parser.add_argument('--version', action='version', version='%(prog)s ' + __version__)
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument('--config', help="Flat YAML file with run configuration keys")
    common.add_argument('-v', '--verbose', action='store_true', help="Log at DEBUG level")
    for flags, key, options in OPTIONS:
        common.add_argument(*flags, dest=key, default=argparse.SUPPRESS, **options)
    subparsers = parser.add_subparsers(dest='command', required=True)
    for name in COMMANDS:
        subparsers.add_parser(name, parents=[common])
    return parser


def main(argv=None):
    """
    Console entry point

    :param argv: Argument list (defaults to ``sys.argv[1:]``)
    :return: Exit code: 0 success, 2 configuration error, 3 data error, 4 numerical failure
    """
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.INFO, format=LOG_FORMAT)
    flags = {key: value for key, value in vars(args).items() if key not in ('command', 'config', 'verbose')}
    try:
        file_values = load_config_file(args.config) if args.config else None
        config = build_run_config(file_values, flags)
        return COMMANDS[args.command](config)
    except OverlayEmbedError as err:
        logger.error("%s: %s", type(err).__name__, err)
        return err.exit_code
    except (IOError, OSError) as err:
        logger.error("%s: %s", type(err).__name__, err)
        return 3


if __name__ == '__main__':
    sys.exit(main())
