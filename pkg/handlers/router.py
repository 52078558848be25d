"""
fabsim v1.0 - 指令路由

職責：僅負責指令分發與錯誤轉結束碼，具體邏輯委託給各 handler
"""
from __future__ import annotations

import argparse
from typing import Callable, Dict, List, Optional, Sequence, Tuple

import config
from models.errors import FabsimError
from pylib.atoms.time_utils import parse_duration

from . import presets_handler, report_handler, run_handler
from .base import EXIT_FAILURE, BaseHandler, logger

Handler = Callable[[argparse.Namespace], int]

ROUTES: Dict[Tuple[str, ...], Handler] = {
    ('run',): run_handler.handle_run,
    ('baseline',): run_handler.handle_baseline,
    ('sweep',): run_handler.handle_sweep,
    ('check',): run_handler.handle_check,
    ('report', 'heatmap'): report_handler.handle_heatmap,
    ('report', 'timeseries'): report_handler.handle_timeseries,
    ('report', 'xlsx'): report_handler.handle_xlsx,
    ('presets', 'list'): presets_handler.handle_list,
}


def _duration(text: str) -> int:
    try:
        value = parse_duration(text)
    except ValueError as exc:
        raise argparse.ArgumentTypeError(str(exc)) from None
    if value <= 0:
        raise argparse.ArgumentTypeError(f"must be positive: {text!r}")
    return value


def _seed(text: str) -> int:
    try:
        value = int(text, 0)
    except ValueError:
        raise argparse.ArgumentTypeError(f"not an integer: {text!r}") from None
    if not 0 <= value < 2 ** 64:
        raise argparse.ArgumentTypeError(f"seed must fit in 64 bits: {text!r}")
    return value


def _experiment_args(p: argparse.ArgumentParser) -> None:
    p.add_argument('--config', required=True, help='experiment config file')
    p.add_argument('--seed', type=_seed, default=None, help='override the master seed')
    p.add_argument('--out', default=None, help=f'output directory (default {config.OUT_DIR})')
    p.add_argument('--threads', type=int, default=None, help='parallel cells (default FABSIM_THREADS)')
    p.add_argument('--baseline', action='store_true', help='victim alone; congested columns stay empty')


def _report_args(p: argparse.ArgumentParser) -> None:
    p.add_argument('table', help='ResultTable CSV')
    p.add_argument('--x', default='nodes', help='x axis column (default nodes)')
    p.add_argument('--y', default='vector_bytes', help='y axis column (default vector_bytes)')
    p.add_argument('--facet', default=None, help='comma-separated columns, one output per combination')
    p.add_argument('--out', default=None, help='output directory')


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog='fabsim', description='cell-level interconnect congestion simulator')
    parser.add_argument('--version', action='version', version=f'%(prog)s {config.VERSION}')
    sub = parser.add_subparsers(dest='command', metavar='command')
    sub.required = True

    run = sub.add_parser('run', help='baseline + congested runs for each victim vector')
    _experiment_args(run)
    run.add_argument('--trace', action='store_true', default=config.TRACE_DEFAULT,
                     help='also write the event trace per vector')
    run.add_argument('--probe', type=_duration, default=None, metavar='INTERVAL',
                     help='also write a victim throughput series sampled at INTERVAL (e.g. 5us)')

    base = sub.add_parser('baseline', help='victim-only runs (same as run --baseline)')
    _experiment_args(base)
    base.add_argument('--trace', action='store_true', default=config.TRACE_DEFAULT)
    base.add_argument('--probe', type=_duration, default=None, metavar='INTERVAL')

    sweep = sub.add_parser('sweep', help='resumable sweep over the sweep.* axes')
    _experiment_args(sweep)
    mode = sweep.add_mutually_exclusive_group()
    mode.add_argument('--resume', action='store_true', help='require an existing manifest and continue it')
    mode.add_argument('--fresh', action='store_true', help='discard previous output and start over')

    check = sub.add_parser('check', help='validate a config and print it normalized')
    check.add_argument('--config', required=True)

    report = sub.add_parser('report', help='render artifacts from result files')
    rsub = report.add_subparsers(dest='report_command', metavar='kind')
    rsub.required = True
    _report_args(rsub.add_parser('heatmap', help='SVG ratio heatmap'))
    _report_args(rsub.add_parser('xlsx', help='xlsx workbook'))
    ts = rsub.add_parser('timeseries', help='SVG throughput plot')
    ts.add_argument('trace', help='throughput series CSV (time_ns,rate_bps,capacity_bps)')
    ts.add_argument('--out', default=None, help='output directory')

    presets = sub.add_parser('presets', help='list built-in presets')
    psub = presets.add_subparsers(dest='presets_command', metavar='action')
    psub.required = True
    psub.add_parser('list', help='topology and congestion-control presets')
    return parser


def route(args: argparse.Namespace) -> Handler:
    key: Tuple[str, ...] = (args.command,)
    for sub in ('report_command', 'presets_command'):
        if getattr(args, sub, None):
            key += (getattr(args, sub),)
    return ROUTES[key]


def dispatch(argv: Optional[Sequence[str]] = None) -> int:
    """解析參數、執行對應 handler；fabsim 錯誤轉為各自的結束碼"""
    args = build_parser().parse_args(argv)
    handler = route(args)
    try:
        return handler(args)
    except FabsimError as exc:
        BaseHandler.error(str(exc))
        for problem in _problems(exc):
            BaseHandler.error(f"  {problem}")
        return exc.exit_code
    except KeyboardInterrupt:
        BaseHandler.error('interrupted')
        return 130
    except Exception as exc:  # noqa: BLE001
        logger.exception(f"unexpected failure in {' '.join(_command(args))}")
        BaseHandler.error(str(exc))
        return EXIT_FAILURE


def _problems(exc: FabsimError) -> List[str]:
    problems = getattr(exc, 'problems', None) or []
    return [p for p in problems if p not in str(exc)]


def _command(args: argparse.Namespace) -> List[str]:
    return [v for v in (args.command, getattr(args, 'report_command', None),
                        getattr(args, 'presets_command', None)) if v]
