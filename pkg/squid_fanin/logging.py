from __future__ import annotations

import sys
from typing import Any

from .config import load_config
from .types import JsonObject


def _format_value(value: Any) -> str:
    if isinstance(value, str):
        return repr(value)
    if isinstance(value, float):
        return f'{value:.6g}'
    return str(value)


def _log_with_payload(prefix: str, payload: JsonObject) -> None:
    if not load_config().verbose:
        return
    formatted_fields = ' '.join(
        f'{key}={_format_value(value)}' for key, value in payload.items()
    )
    print(f'{prefix} {formatted_fields}'.rstrip(), file=sys.stderr)


def log_squid_sweep(
    bias_ratio: float,
    n_points: int,
    phi_min: float,
    phi_max: float,
    nonzero_points: int,
) -> None:
    _log_with_payload('[SQUID][SWEEP]', {
        'bias_ratio': bias_ratio,
        'n_points': n_points,
        'phi_min': phi_min,
        'phi_max': phi_max,
        'nonzero_points': nonzero_points,
    })


def log_squid_threshold(bias_ratio: float, phi_th: float, evaluations: int, tol: float) -> None:
    _log_with_payload('[SQUID][THRESHOLD]', {
        'bias_ratio': bias_ratio,
        'phi_th': phi_th,
        'evaluations': evaluations,
        'tol': tol,
    })


def log_integration_failure(message: str, phi_applied: float | None, t_reached: float) -> None:
    _log_with_payload('[SQUID][INTEGRATION_FAILURE]', {
        'message': message,
        'phi_applied': phi_applied,
        't_reached': t_reached,
    })


def log_design(mode: str, rows: int, **fields: Any) -> None:
    _log_with_payload(f'[DESIGN] {mode}', {'rows': rows, **fields})


def log_feasibility(mode: str, warnings: list[str]) -> None:
    _log_with_payload('[DESIGN][FEASIBILITY]', {
        'mode': mode,
        'warnings': len(warnings),
        'first': warnings[0] if warnings else None,
    })


def log_tree_search(
    mode: str,
    n: int,
    h_depth: int,
    bias_ratio: float,
    count: int,
    evaluations: int | None = None,
) -> None:
    fields: JsonObject = {
        'n': n,
        'H': h_depth,
        'bias_ratio': bias_ratio,
        'count': count,
    }
    if evaluations is not None:
        fields['evaluations'] = evaluations
    _log_with_payload(f'[TREE][{mode.upper()}]', fields)


def log_tree_dynamical(n: int, h_depth: int, soma_rate: float, soma_fired: bool, exact: bool) -> None:
    _log_with_payload('[TREE][DYNAMICAL]', {
        'n': n,
        'H': h_depth,
        'soma_rate': soma_rate,
        'soma_fired': soma_fired,
        'exact': exact,
    })


def log_cli(event: str, **fields: Any) -> None:
    _log_with_payload(f'[CLI] {event}', fields)


def log_http(method: str, path: str, status: int, **fields: Any) -> None:
    _log_with_payload('[HTTP]', {'method': method, 'path': path, 'status': status, **fields})
