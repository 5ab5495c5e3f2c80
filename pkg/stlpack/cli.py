"""
Command line entry point: `stlpack train|eval|monitor|plot`.

Configuration and usage errors exit with status 2, failures while running with status 1.
"""

import argparse
import json
import logging
import sys

from stlpack.config import ABLATIONS
from stlpack.errors import (CheckpointError, DimensionError, MultiValidationError, ParamError, ParseError,
                            StlPackError, ValidationError)
from stlpack.services import EvaluateService, MonitorService, PlotService, TrainService

logger = logging.getLogger(__name__)

USAGE_ERRORS = (MultiValidationError, ValidationError, ParamError, ParseError, CheckpointError, DimensionError)


def build_parser():
    parser = argparse.ArgumentParser(prog='stlpack', description='Delay-aware STL control with soft actor-critic.')
    parser.add_argument('-v', '--verbose', action='store_true', help='log at DEBUG level')
    commands = parser.add_subparsers(dest='command', required=True)

    train = commands.add_parser('train', help='train an agent')
    train.add_argument('--config', help='INI configuration file; built-in defaults when omitted')
    train.add_argument('--seed', type=int)
    train.add_argument('--ablation', choices=ABLATIONS)
    train.add_argument('--out', help='output directory')
    train.add_argument('--overwrite', action='store_true', help='train even if OUT already holds results')

    evaluate = commands.add_parser('eval', help='evaluate a saved actor')
    evaluate.add_argument('--checkpoint', required=True, help='actor.bin written by train')
    evaluate.add_argument('--config', help='configuration the actor was trained with')
    evaluate.add_argument('-n', type=int, default=100, help='number of trajectories')
    evaluate.add_argument('--seed', type=int)

    monitor = commands.add_parser('monitor', help='check a trace CSV against a formula')
    monitor.add_argument('--spec', required=True, help='formula text')
    monitor.add_argument('--trace', required=True, help='CSV with columns x0, x1, ...')
    monitor.add_argument('-t', type=int, default=0, help='time index')

    plot = commands.add_parser('plot', help='plot learning curves of several runs')
    plot.add_argument('metrics', nargs='+', help='metrics.csv files')
    plot.add_argument('--labels', help='comma separated label per file; equal labels are aggregated')
    plot.add_argument('--out', default='curves.svg')
    return parser


def _drop_none(values):
    return {k: v for k, v in values.items() if v is not None}


def run(args):
    """Runs the parsed command and returns what should be printed."""
    if args.command == 'train':
        result = TrainService().call(_drop_none({
            'config': args.config, 'seed': args.seed, 'ablation': args.ablation, 'out': args.out,
            'overwrite': args.overwrite,
        }))
        if result is None:
            return 'skipped: results exist, use --overwrite'
        return 'trained %s steps, checkpoint %s' % (result['steps'], result['checkpoint'])
    if args.command == 'eval':
        report = EvaluateService().call(_drop_none({
            'checkpoint': args.checkpoint, 'config': args.config, 'n': args.n, 'seed': args.seed,
        }))
        return json.dumps({'mean_return': report.mean_return, 'success_rate': report.success_rate})
    if args.command == 'monitor':
        return json.dumps(MonitorService().call({'spec': args.spec, 'trace': args.trace, 't': args.t}))
    labels = args.labels.split(',') if args.labels else None
    return PlotService().call(_drop_none({'metrics': args.metrics, 'labels': labels, 'out': args.out}))


def main(argv=None):
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.INFO,
                        format='%(asctime)s %(levelname)s %(name)s: %(message)s')
    try:
        print(run(args))
    except USAGE_ERRORS as ex:
        print('error: %s' % ex, file=sys.stderr)
        return 2
    except StlPackError as ex:
        logger.debug('Command failed', exc_info=True)
        print('error: %s' % ex, file=sys.stderr)
        return 1
    return 0
