from __future__ import annotations

from datetime import datetime, timezone
from typing import Any, Callable

from ..constants import TOOLKIT_VERSION
from ..errors import ArgumentError, SquidFaninError
from ..cli.commands import cmd_activity_table, cmd_design, cmd_threshold, cmd_tree_verify
from ..cli.formatting import frame_to_json_payload, to_jsonable
from ..cli.run_config import parse_design_config
from ..types import JsonObject

HandlerResult = tuple[JsonObject, int]


def _utc_now_iso() -> str:
    return datetime.now(timezone.utc).isoformat()


def error_response(exc: SquidFaninError) -> HandlerResult:
    status = 400 if isinstance(exc, ArgumentError) else 422
    return {'ok': False, 'error': str(exc), 'error_code': exc.error_code}, status


def health_response(*, utc_now_iso: Callable[[], str] = _utc_now_iso) -> HandlerResult:
    return {'status': 'ok', 'version': TOOLKIT_VERSION, 'timestamp': utc_now_iso()}, 200


def _require_number(payload: JsonObject, key: str, default: float | None = None) -> float:
    value = payload.get(key, default)
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise ArgumentError(f'{key} must be a number.')
    return float(value)


def _require_int(payload: JsonObject, key: str, default: int | None = None) -> int:
    value = payload.get(key, default)
    if isinstance(value, bool) or not isinstance(value, int):
        raise ArgumentError(f'{key} must be an integer.')
    return value


def _number_list(payload: JsonObject, key: str, default: list[float]) -> list[float]:
    value = payload.get(key, default)
    if not isinstance(value, list) or not value:
        raise ArgumentError(f'{key} must be a non-empty list of numbers.')
    for item in value:
        if isinstance(item, bool) or not isinstance(item, (int, float)):
            raise ArgumentError(f'{key} must be a non-empty list of numbers.')
    return [float(item) for item in value]


def _guarded(payload: Any, handler: Callable[[JsonObject], JsonObject]) -> HandlerResult:
    if not isinstance(payload, dict):
        return {'ok': False, 'error': 'Body must be a JSON object.'}, 400
    try:
        body = handler(payload)
    except SquidFaninError as exc:
        return error_response(exc)
    return {'ok': True, **{key: to_jsonable(value) for key, value in body.items()}}, 200


def handle_activity(payload: Any) -> HandlerResult:
    def run(body: JsonObject) -> JsonObject:
        biases = _number_list(body, 'bias', [0.7])
        h_values = [int(h) for h in _number_list(body, 'H', [1.0])]
        integer_mode = bool(body.get('integer', False))
        n = _require_int(body, 'n') if integer_mode else None
        return frame_to_json_payload(cmd_activity_table(biases, h_values, integer_mode, n))

    return _guarded(payload, run)


def handle_design(payload: Any) -> HandlerResult:
    def run(body: JsonObject) -> JsonObject:
        mode = body.get('mode', 'collection')
        if not isinstance(mode, str):
            raise ArgumentError('mode must be a string.')
        config = body.get('config', {})
        if not isinstance(config, dict):
            raise ArgumentError('config must be a JSON object.')
        params = parse_design_config(config, mode)
        frame, feasibility = cmd_design(params, mode)
        return {**frame_to_json_payload(frame), 'feasibility': feasibility}

    return _guarded(payload, run)


def handle_tree_verify(payload: Any) -> HandlerResult:
    def run(body: JsonObject) -> JsonObject:
        mode = body.get('mode', 'exhaustive')
        if not isinstance(mode, str):
            raise ArgumentError('mode must be a string.')
        return cmd_tree_verify(
            _require_int(body, 'n'),
            _require_int(body, 'H'),
            _require_number(body, 'bias'),
            mode,
        )

    return _guarded(payload, run)


def handle_threshold(payload: Any) -> HandlerResult:
    def run(body: JsonObject) -> JsonObject:
        simulate = body.get('simulate', False)
        matched = body.get('matched', False)
        if not isinstance(simulate, bool) or not isinstance(matched, bool):
            raise ArgumentError('simulate and matched must be true or false.')
        return cmd_threshold(
            _require_number(body, 'bias'),
            tol=_require_number(body, 'tol', 1e-3),
            simulate=simulate,
            matched=matched,
        )

    return _guarded(payload, run)
