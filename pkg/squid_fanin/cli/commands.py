from __future__ import annotations

from dataclasses import asdict, replace
from typing import Sequence

import numpy as np
import pandas as pd

from ..config import load_config
from ..constants import DEFAULT_BETA_L, DEFAULT_IC, DEFAULT_PHI_MAX, PHI0
from ..errors import ArgumentError, UnreachableThresholdError
from ..physics.fanin_analytics import (
    BiasPoint,
    dendrite_count_report,
    point_activity_fraction,
    required_inputs,
    tree_activity_fraction,
)
from ..physics.inductance_designer import (
    CollectionLoopDesign,
    DesignRow,
    FeasibilityReport,
    designed,
    ldi2_asymptote,
    sfq_consistency_report,
    sweep_collection,
    sweep_no_collection,
    sweep_sfq,
    sweep_vary_ic,
)
from ..physics.squid_dynamics import (
    SquidParams,
    analytic_threshold_flux,
    find_threshold_flux,
    static_threshold_flux,
    sweep_response,
)
from ..physics.tree_engine import (
    SynapseState,
    analytic_min_active,
    build_tree,
    constructive_witness,
    min_active_synapses,
    propagate_binary,
    propagate_dynamical,
    dynamical_context,
)
from ..types import JsonObject
from ..units import to_pH
from .run_config import DESIGN_MODES

RESPONSE_COLUMNS = ['bias_ratio', 'phi_over_phi0', 'r_fq_normalized']
ACTIVITY_COLUMNS = ['bias_ratio', 'H', 'activity_fraction', 'unreachable']
DESIGN_COLUMNS = [
    'mode', 'n', 'k', 'ic_A', 'l_di2_H', 'l_di2_pH', 'ic_di_A',
    'round_trip_error', 'difficult_to_fabricate', 'above_sfq_level',
]
FANIN_COLUMNS = [
    'n_synapses', 'H', 'n_real', 'exact', 'n_integer',
    'n_synapses_integer_n', 'dendrites_real_n', 'dendrites_integer_n',
]

DEFAULT_DESIGN_N_VALUES = list(range(2, 101))


def parse_float_list(raw: str, name: str) -> list[float]:
    try:
        values = [float(part) for part in raw.split(',') if part.strip()]
    except ValueError as exc:
        raise ArgumentError(f'{name} must be a comma-separated list of numbers, got {raw!r}') from exc
    if not values:
        raise ArgumentError(f'{name} must not be empty')
    return values


def parse_int_list(raw: str, name: str) -> list[int]:
    try:
        values = [int(part) for part in raw.split(',') if part.strip()]
    except ValueError as exc:
        raise ArgumentError(f'{name} must be a comma-separated list of integers, got {raw!r}') from exc
    if not values:
        raise ArgumentError(f'{name} must not be empty')
    return values


def parse_range(raw: str, name: str) -> tuple[float, float]:
    """`lo:hi` as two floats."""
    parts = raw.split(':')
    if len(parts) != 2:
        raise ArgumentError(f'{name} must look like lo:hi, got {raw!r}')
    try:
        lo, hi = float(parts[0]), float(parts[1])
    except ValueError as exc:
        raise ArgumentError(f'{name} must look like lo:hi, got {raw!r}') from exc
    if not lo < hi:
        raise ArgumentError(f'{name} needs lo < hi, got {raw!r}')
    return lo, hi


def parse_int_range(raw: str, name: str) -> list[int]:
    """`lo:hi[:step]` inclusive, or a comma list."""
    if ':' not in raw:
        return parse_int_list(raw, name)
    parts = raw.split(':')
    if len(parts) not in (2, 3):
        raise ArgumentError(f'{name} must look like lo:hi[:step], got {raw!r}')
    try:
        lo, hi = int(parts[0]), int(parts[1])
        step = int(parts[2]) if len(parts) == 3 else 1
    except ValueError as exc:
        raise ArgumentError(f'{name} must look like lo:hi[:step], got {raw!r}') from exc
    if step < 1 or lo > hi:
        raise ArgumentError(f'{name} needs lo <= hi and step >= 1, got {raw!r}')
    return list(range(lo, hi + 1, step))


def parse_bias_spec(raw: str) -> list[float]:
    """A comma list, or `lo:hi:step` with both ends included."""
    if ':' in raw:
        parts = raw.split(':')
        if len(parts) != 3:
            raise ArgumentError(f'bias range must look like lo:hi:step, got {raw!r}')
        try:
            lo, hi, step = (float(part) for part in parts)
        except ValueError as exc:
            raise ArgumentError(f'bias range must look like lo:hi:step, got {raw!r}') from exc
        if not step > 0 or hi < lo:
            raise ArgumentError(f'bias range needs lo <= hi and step > 0, got {raw!r}')
        count = int(round((hi - lo) / step)) + 1
        values = [round(lo + index * step, 12) for index in range(count)]
    else:
        values = parse_float_list(raw, 'bias')
    for value in values:
        if not 0.0 <= value <= 1.0:
            raise ArgumentError(f'bias values must lie in [0, 1], got {value!r}')
    return values


def cmd_response_curve(
    biases: Sequence[float],
    phi_min: float,
    phi_max: float,
    points: int,
    ic: float = DEFAULT_IC,
    beta_l: float = DEFAULT_BETA_L,
    beta_c: float = 0.0,
    t_settle: float | None = None,
    t_measure: float | None = None,
) -> pd.DataFrame:
    """One block of `points` samples per bias, blocks in ascending bias order."""
    frames: list[pd.DataFrame] = []
    for bias in sorted(set(biases)):
        params = SquidParams.standard(bias, ic=ic, beta_l=beta_l, beta_c=beta_c)
        curve = sweep_response(params, phi_min, phi_max, points, t_settle, t_measure)
        frames.append(pd.DataFrame({
            'bias_ratio': np.full(points, bias),
            'phi_over_phi0': curve.phi,
            'r_fq_normalized': curve.rate,
        }))
    return pd.concat(frames, ignore_index=True)[RESPONSE_COLUMNS]


def cmd_activity_table(
    biases: Sequence[float],
    h_values: Sequence[int],
    integer_mode: bool = False,
    n: int | None = None,
) -> pd.DataFrame:
    """Activity fraction per (bias, H). Integer mode needs the fan-in n and reports (p/n)^H."""
    if integer_mode and (n is None or n < 1):
        raise ArgumentError('integer mode needs a fan-in n >= 1')
    for h_depth in h_values:
        if h_depth < 1:
            raise ArgumentError(f'H values must be >= 1, got {h_depth!r}')

    rows: list[dict[str, object]] = []
    for bias in biases:
        fraction = point_activity_fraction(BiasPoint(bias))
        unreachable = fraction > 1.0
        for h_depth in h_values:
            if not integer_mode:
                value: float = tree_activity_fraction(bias, h_depth)
            elif unreachable:
                value = float('nan')
            else:
                assert n is not None
                value = (required_inputs(n, fraction) / n) ** h_depth
            rows.append({
                'bias_ratio': bias,
                'H': h_depth,
                'activity_fraction': value,
                'unreachable': unreachable,
            })
    return pd.DataFrame(rows, columns=ACTIVITY_COLUMNS)


def _design_rows_frame(mode: str, rows: Sequence[DesignRow]) -> pd.DataFrame:
    records = []
    for row in rows:
        record = asdict(row)
        records.append({
            'mode': mode,
            'n': record['n'],
            'k': record['k'],
            'ic_A': record['ic'],
            'l_di2_H': record['l_di2'],
            'l_di2_pH': to_pH(record['l_di2']),
            'ic_di_A': record['ic_di'],
            'round_trip_error': record['round_trip_error'],
            'difficult_to_fabricate': record['difficult_to_fabricate'],
            'above_sfq_level': record['above_sfq_level'],
        })
    return pd.DataFrame(records, columns=DESIGN_COLUMNS)


def _param_float(params: dict[str, object], key: str, default: float) -> float:
    value = params.get(key, default)
    assert isinstance(value, (int, float))
    return float(value)


def _param_floats(params: dict[str, object], key: str, default: list[float]) -> list[float]:
    value = params.get(key, default)
    assert isinstance(value, list)
    return [float(item) for item in value]


def cmd_design(
    params: dict[str, object],
    mode: str,
    n_values: Sequence[int] | None = None,
) -> tuple[pd.DataFrame, JsonObject]:
    """Design table for one circuit family plus its feasibility report.

    Every row is checked by forward substitution; a failed check raises
    ConstraintViolationError.
    """
    if mode not in DESIGN_MODES:
        raise ArgumentError(f'unknown design mode {mode!r}; expected one of {", ".join(DESIGN_MODES)}')
    config = load_config()
    configured_n = params.get('n_values')
    sweep = list(n_values) if n_values else list(configured_n) if isinstance(configured_n, list) else DEFAULT_DESIGN_N_VALUES
    report = FeasibilityReport()
    extras: JsonObject = {}

    if mode == 'collection':
        base = CollectionLoopDesign(alpha=config.alpha, l_dc3=config.l_dc3)
        overrides = {
            key: _param_float(params, key, 0.0)
            for key in ('ic', 'l_dc1', 'alpha', 'l_dc3', 'k1', 'k2', 'l_di1', 'gamma', 'phi_max')
            if key in params
        }
        base = replace(base, **overrides)
        k_values = _param_floats(params, 'k_values', []) or None
        rows = sweep_collection(base, sweep, k_values, report)
        extras['sfq_level_H'] = PHI0 / base.ic
        extras['l_di2_asymptote_H'] = {
            f'{k:g}': ldi2_asymptote(replace(base, k1=k, k2=k) if k_values else base)
            for k in (k_values or [base.k1])
        }
    elif mode == 'no_collection':
        rows = sweep_no_collection(
            sweep,
            _param_floats(params, 'k_values', [0.5]),
            _param_floats(params, 'ic_values', [DEFAULT_IC]),
            _param_float(params, 'phi_max', DEFAULT_PHI_MAX),
            report,
        )
    elif mode == 'sfq':
        ic = _param_float(params, 'ic', DEFAULT_IC)
        rows = sweep_sfq(sweep, ic, report)
        extras['sfq_level_H'] = PHI0 / ic
    else:
        k = _param_float(params, 'k', 0.5)
        ic_dr = _param_float(params, 'ic_dr', DEFAULT_IC)
        sfq_mode = bool(params.get('sfq_mode', True))
        ic_di = _param_float(params, 'ic_di', 0.0) if 'ic_di' in params else None
        rows = sweep_vary_ic(sweep, k, ic_dr, sfq_mode, ic_di, report)
        if sfq_mode:
            extras['sfq_consistency'] = [sfq_consistency_report(n, k, ic_dr) for n in sweep]

    feasibility: JsonObject = {'mode': mode, **report.to_json(), **extras}
    return _design_rows_frame(mode, rows), feasibility


def cmd_fanin(n_synapses: Sequence[int], h_values: Sequence[int]) -> pd.DataFrame:
    rows = []
    for h_depth in h_values:
        for count in n_synapses:
            report = dendrite_count_report(count, h_depth)
            rows.append({
                'n_synapses': count,
                'H': h_depth,
                'n_real': report['n_real'],
                'exact': report['exact'],
                'n_integer': report['n_integer'],
                'n_synapses_integer_n': report['n_synapses_integer_n'],
                'dendrites_real_n': report['dendrites_real_n'],
                'dendrites_integer_n': report['dendrites_integer_n'],
            })
    return pd.DataFrame(rows, columns=FANIN_COLUMNS)


def cmd_threshold(
    bias_ratio: float,
    tol: float = 1e-3,
    ic: float = DEFAULT_IC,
    beta_l: float = DEFAULT_BETA_L,
    t_settle: float | None = None,
    t_measure: float | None = None,
    simulate: bool = True,
    matched: bool = False,
) -> JsonObject:
    """Simulated, quasi-static and lumped-estimate threshold flux for one bias.

    matched replaces beta_l with the screening parameter that makes the quasi-static
    threshold equal the lumped estimate.
    """
    if matched:
        params = SquidParams.matched(bias_ratio, ic=ic)
    else:
        params = SquidParams.standard(bias_ratio, ic=ic, beta_l=beta_l)
    analytic = analytic_threshold_flux(bias_ratio)
    static = static_threshold_flux(params)
    payload: JsonObject = {
        'bias_ratio': bias_ratio,
        'beta_l': params.beta_l,
        'phi_th_analytic': analytic,
        'phi_th_static': static,
        'tol': tol,
    }
    if simulate:
        simulated = find_threshold_flux(params, tol, t_settle, t_measure)
        payload['phi_th_simulated'] = simulated
        payload['relative_to_analytic'] = (simulated - analytic) / analytic if analytic > 0 else None
    return payload


def cmd_tree_verify(
    n: int,
    h_depth: int,
    bias_ratio: float,
    mode: str = 'exhaustive',
    t_settle: float | None = None,
    t_measure: float | None = None,
) -> JsonObject:
    """Check P = p^H on one tree; the `agree` field says whether the check passed."""
    tree = build_tree(n, h_depth, bias_ratio)
    fraction = tree.node_threshold_fraction
    if fraction > 1.0:
        raise UnreachableThresholdError(fraction)
    p = tree.required_per_node
    p_analytic = analytic_min_active(tree)
    report: JsonObject = {
        'n': n,
        'H': h_depth,
        'bias_ratio': bias_ratio,
        'mode': mode,
        'p': p,
        'P_analytic': p_analytic,
    }

    if mode == 'exhaustive':
        result = min_active_synapses(tree, 'exhaustive')
        witness = list(result.witness)
        minimal = all(
            not propagate_binary(tree, witness[:i] + witness[i + 1:]).soma_fired
            for i in range(len(witness))
        )
        report.update({
            'P_bruteforce': result.count,
            'evaluations': result.evaluations,
            'witness': witness,
            'witness_minimal': minimal,
            'agree': result.count == p_analytic and minimal,
        })
        return report

    if mode == 'constructive':
        witness = list(constructive_witness(tree))
        propagation = propagate_binary(tree, witness)
        counts = propagation.fired_counts()
        expected = [p**level for level in range(h_depth + 1)]
        report.update({
            'P_constructive': len(witness),
            'witness': witness,
            'fired_per_level': counts,
            'agree': propagation.soma_fired and counts == expected and len(witness) == p_analytic,
        })
        return report

    if mode == 'dynamical':
        if bias_ratio >= 1.0:
            raise ArgumentError('dynamical mode needs bias_ratio < 1')
        config = load_config()
        squid = SquidParams.standard(bias_ratio)
        design = designed(CollectionLoopDesign(ic=squid.ic, n=n, alpha=config.alpha, l_dc3=config.l_dc3))
        context = dynamical_context(tree, squid, design, t_settle=t_settle, t_measure=t_measure)
        squid = context.squid
        i_sat = design.i_sat
        leaves = tree.leaf_count

        def run(currents: list[float]) -> tuple[bool, float]:
            result = propagate_dynamical(tree, SynapseState.analog(currents, i_sat), squid, context=context)
            return result.soma_fired, result.soma_rate or 0.0

        all_fired, all_rate = run([i_sat] * leaves)
        zero_fired, zero_rate = run([0.0] * leaves)
        witness = list(constructive_witness(tree))
        chosen = set(witness)
        witness_fired, witness_rate = run([i_sat if leaf in chosen else 0.0 for leaf in range(leaves)])
        binary_all = propagate_binary(tree, range(leaves)).soma_fired
        binary_zero = propagate_binary(tree, []).soma_fired
        report.update({
            'beta_l': squid.beta_l,
            'witness': witness,
            'soma_fired_all_saturated': {'binary': binary_all, 'dynamical': all_fired},
            'soma_fired_all_zero': {'binary': binary_zero, 'dynamical': zero_fired},
            'soma_rate_all_saturated': all_rate,
            'soma_rate_all_zero': zero_rate,
            'soma_rate_witness': witness_rate,
            'soma_fired_witness_dynamical': witness_fired,
            'agree': binary_all == all_fired and binary_zero == zero_fired,
        })
        return report

    raise ArgumentError(f'unknown tree-verify mode {mode!r}; expected exhaustive, constructive or dynamical')
