from __future__ import annotations

import argparse
from pathlib import Path
import sys
from typing import Sequence

import pandas as pd

from ..constants import DEFAULT_BETA_L, TOOLKIT_NAME, TOOLKIT_VERSION
from ..errors import SquidFaninError, VerificationDisagreementError
from ..logging import log_cli
from ..types import JsonObject
from ..units import from_uA
from .commands import (
    cmd_activity_table,
    cmd_design,
    cmd_fanin,
    cmd_response_curve,
    cmd_threshold,
    cmd_tree_verify,
    parse_bias_spec,
    parse_float_list,
    parse_int_list,
    parse_int_range,
    parse_range,
)
from .formatting import frame_to_json_payload, render_csv, render_json, write_text
from .run_config import DESIGN_MODES, RunConfig, load_design_config


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog=TOOLKIT_NAME,
        description='Fan-in, inductance design and SQUID response tables for dendritic superconducting neurons.',
    )
    parser.add_argument('--version', action='version', version=f'%(prog)s {TOOLKIT_VERSION}')

    common = argparse.ArgumentParser(add_help=False)
    common.add_argument('--output', type=Path, default=None, help='Output file (default: standard output).')
    common.add_argument('--format', choices=('csv', 'json'), default='csv', dest='output_format')

    windows = argparse.ArgumentParser(add_help=False)
    windows.add_argument('--t-settle', type=float, default=None, help='Settle window, normalised time.')
    windows.add_argument('--t-measure', type=float, default=None, help='Measurement window, normalised time.')

    sub = parser.add_subparsers(dest='command', required=True)

    response = sub.add_parser('response', parents=[common, windows], help='SQUID response curves r_fq(phi_a).')
    response.add_argument('--bias', default='0.5,0.7,0.9', help='Comma-separated bias ratios (default: %(default)s).')
    response.add_argument('--range', default='0:1', dest='flux_range', help='Flux range lo:hi in PHI0 (default: %(default)s).')
    response.add_argument('--points', type=int, default=101, help='Samples per curve (default: %(default)s).')
    response.add_argument('--ic-uA', type=float, default=300.0, dest='ic_uA')
    response.add_argument('--beta-l', type=float, default=DEFAULT_BETA_L)
    response.add_argument('--beta-c', type=float, default=0.0)

    activity = sub.add_parser('activity', parents=[common], help='Threshold activity fraction vs bias and depth.')
    activity.add_argument('--bias', default='0:1:0.01', help='Bias list or lo:hi:step (default: %(default)s).')
    activity.add_argument('--H', default='1,2,3,4,5', dest='h_values', help='Depths (default: %(default)s).')
    activity.add_argument('--integer', action='store_true', help='Use integer input counts p = ceil(n f).')
    activity.add_argument('--n', type=int, default=None, help='Fan-in for integer mode.')

    design = sub.add_parser('design', parents=[common], help='Inductance design tables and feasibility report.')
    design.add_argument('--mode', choices=DESIGN_MODES, default='collection')
    design.add_argument('--config', type=Path, default=None, help='Design config JSON.')
    design.add_argument('--n', default=None, dest='n_values', help='Fan-in sweep lo:hi[:step] or list.')
    design.add_argument('--report', type=Path, default=None, help='Feasibility report path.')

    verify = sub.add_parser('tree-verify', parents=[common, windows], help='Check P = p^H on a small tree.')
    verify.add_argument('n', type=int)
    verify.add_argument('H', type=int)
    verify.add_argument('bias', type=float)
    verify.add_argument('--mode', choices=('exhaustive', 'constructive', 'dynamical'), default='exhaustive')

    fanin = sub.add_parser('fanin', parents=[common], help='Fan-in factor and dendrite counts vs synapse count.')
    fanin.add_argument('--synapses', default='8,64,1000,10000,10648', help='Synapse counts, list or lo:hi[:step].')
    fanin.add_argument('--H', default='1,2,3,4', dest='h_values')

    threshold = sub.add_parser('threshold', parents=[common, windows], help='Threshold flux for one bias.')
    threshold.add_argument('--bias', type=float, required=True)
    threshold.add_argument('--tol', type=float, default=1e-3)
    threshold.add_argument('--beta-l', type=float, default=DEFAULT_BETA_L)
    threshold.add_argument('--static-only', action='store_true', help='Skip the simulated search.')
    threshold.add_argument(
        '--matched-screening',
        action='store_true',
        help='Pick beta_L so the quasi-static threshold equals the lumped estimate (overrides --beta-l).',
    )

    return parser


def _sidecar_path(run: RunConfig, explicit: Path | None) -> Path | None:
    if explicit is not None:
        return explicit
    if run.output is None:
        return None
    return run.output.with_name(f'{run.output.name}.feasibility.json')


def _emit_table(run: RunConfig, frame: pd.DataFrame, argv: Sequence[str], extra: JsonObject | None = None) -> None:
    if run.output_format == 'csv':
        text = render_csv(frame, argv)
    else:
        text = render_json({**frame_to_json_payload(frame), **(extra or {})}, argv)
    write_text(text, run.output)


def _run(args: argparse.Namespace, argv: Sequence[str]) -> int:
    run = RunConfig(command=args.command, params=dict(vars(args)), output=args.output, output_format=args.output_format)
    log_cli('start', command=run.command, format=run.output_format)

    if run.command == 'response':
        lo, hi = parse_range(args.flux_range, '--range')
        frame = cmd_response_curve(
            parse_float_list(args.bias, '--bias'),
            lo,
            hi,
            args.points,
            ic=from_uA(args.ic_uA),
            beta_l=args.beta_l,
            beta_c=args.beta_c,
            t_settle=args.t_settle,
            t_measure=args.t_measure,
        )
        _emit_table(run, frame, argv)
        log_cli('done', command=run.command, rows=len(frame))
        return 0

    if run.command == 'activity':
        frame = cmd_activity_table(
            parse_bias_spec(args.bias),
            parse_int_list(args.h_values, '--H'),
            integer_mode=args.integer,
            n=args.n,
        )
        _emit_table(run, frame, argv)
        log_cli('done', command=run.command, rows=len(frame))
        return 0

    if run.command == 'design':
        params = load_design_config(args.config, args.mode)
        n_values = parse_int_range(args.n_values, '--n') if args.n_values else None
        frame, feasibility = cmd_design(params, args.mode, n_values)
        _emit_table(run, frame, argv, {'feasibility': feasibility})
        sidecar = _sidecar_path(run, args.report)
        if sidecar is not None:
            write_text(render_json(feasibility, argv), sidecar)
        elif run.output_format == 'csv':
            # the table owns stdout
            sys.stderr.write(render_json(feasibility, argv))
        warnings = feasibility.get('warnings')
        log_cli('done', command=run.command, rows=len(frame), warnings=len(warnings) if isinstance(warnings, list) else 0)
        return 0

    if run.command == 'tree-verify':
        report = cmd_tree_verify(
            args.n, args.H, args.bias, args.mode, t_settle=args.t_settle, t_measure=args.t_measure,
        )
        write_text(render_json(report, argv), run.output)
        log_cli('done', command=run.command, agree=report['agree'])
        if not report['agree']:
            raise VerificationDisagreementError(
                f'tree-verify {args.mode} disagrees with P = p^H for n={args.n} H={args.H} bias={args.bias}'
            )
        return 0

    if run.command == 'fanin':
        frame = cmd_fanin(parse_int_range(args.synapses, '--synapses'), parse_int_list(args.h_values, '--H'))
        _emit_table(run, frame, argv)
        log_cli('done', command=run.command, rows=len(frame))
        return 0

    if run.command == 'threshold':
        payload = cmd_threshold(
            args.bias,
            tol=args.tol,
            beta_l=args.beta_l,
            t_settle=args.t_settle,
            t_measure=args.t_measure,
            simulate=not args.static_only,
            matched=args.matched_screening,
        )
        write_text(render_json(payload, argv), run.output)
        log_cli('done', command=run.command)
        return 0

    raise AssertionError(f'unhandled command {run.command!r}')


def main(argv: Sequence[str] | None = None) -> int:
    arguments = list(sys.argv[1:] if argv is None else argv)
    args = build_parser().parse_args(arguments)
    try:
        return _run(args, arguments)
    except SquidFaninError as exc:
        log_cli('failed', command=args.command, error_code=exc.error_code, exit_code=exc.exit_code)
        print(f'error: {exc}', file=sys.stderr)
        return exc.exit_code
    except OSError as exc:
        print(f'error: {exc}', file=sys.stderr)
        return 2


if __name__ == '__main__':
    sys.exit(main())
