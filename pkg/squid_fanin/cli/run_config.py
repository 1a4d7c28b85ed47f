from __future__ import annotations

from dataclasses import dataclass, field
import json
from pathlib import Path
from typing import Literal

from ..errors import ArgumentError
from ..types import JsonObject
from ..units import split_unit_key

OutputFormat = Literal['csv', 'json']
DesignMode = Literal['collection', 'no_collection', 'sfq', 'vary_ic']

DESIGN_MODES: tuple[str, ...] = ('collection', 'no_collection', 'sfq', 'vary_ic')

# key kind -> unit suffixes accepted on that key
_SUFFIXES_BY_KIND: dict[str, frozenset[str]] = {
    'current': frozenset({'_uA', '_mA', '_A'}),
    'inductance': frozenset({'_pH', '_nH', '_H'}),
    'flux': frozenset({'_phi0'}),
}

_KEY_KINDS: dict[str, str] = {
    'ic': 'current',
    'ic_dr': 'current',
    'ic_di': 'current',
    'ic_values': 'current',
    'l_dc1': 'inductance',
    'l_dc3': 'inductance',
    'l_di1': 'inductance',
    'phi_max': 'flux',
    'alpha': 'number',
    'k': 'number',
    'k1': 'number',
    'k2': 'number',
    'gamma': 'number',
    'k_values': 'number',
    'n_values': 'integer',
    'sfq_mode': 'bool',
}

_MODE_KEYS: dict[str, frozenset[str]] = {
    'collection': frozenset({
        'ic', 'l_dc1', 'alpha', 'l_dc3', 'k1', 'k2', 'l_di1', 'gamma', 'phi_max', 'n_values', 'k_values',
    }),
    'no_collection': frozenset({'n_values', 'k_values', 'ic_values', 'phi_max'}),
    'sfq': frozenset({'n_values', 'ic'}),
    'vary_ic': frozenset({'n_values', 'k', 'ic_dr', 'ic_di', 'sfq_mode'}),
}


@dataclass(frozen=True)
class RunConfig:
    command: str
    params: JsonObject = field(default_factory=dict)
    output: Path | None = None
    output_format: OutputFormat = 'csv'


def _scaled_number(key: str, value: object, scale: float) -> float:
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise ArgumentError(f'config key {key!r} must be a number, got {value!r}')
    return float(value) * scale


def _parse_value(key: str, base: str, kind: str, value: object, scale: float) -> object:
    is_list = base.endswith('_values')
    if kind == 'bool':
        if not isinstance(value, bool):
            raise ArgumentError(f'config key {key!r} must be true or false, got {value!r}')
        return value
    if kind == 'integer':
        if not isinstance(value, list) or not value:
            raise ArgumentError(f'config key {key!r} must be a non-empty list of integers')
        for item in value:
            if isinstance(item, bool) or not isinstance(item, int) or item < 1:
                raise ArgumentError(f'config key {key!r} holds a non-positive or non-integer entry {item!r}')
        return [int(item) for item in value]
    if is_list:
        if not isinstance(value, list) or not value:
            raise ArgumentError(f'config key {key!r} must be a non-empty list of numbers')
        return [_scaled_number(key, item, scale) for item in value]
    return _scaled_number(key, value, scale)


def parse_design_config(raw: JsonObject, mode: str) -> dict[str, object]:
    """Validate a design config object and return its values in SI units keyed by bare name.

    Physical quantities carry their unit in the key (`ic_uA`, `l_dc1_pH`). Bare
    physical keys are accepted only when the object declares `"units": "SI"`.
    """
    if mode not in _MODE_KEYS:
        raise ArgumentError(f'unknown design mode {mode!r}; expected one of {", ".join(DESIGN_MODES)}')
    if not isinstance(raw, dict):
        raise ArgumentError('design config must be a JSON object')

    units = raw.get('units')
    if units is not None and units != 'SI':
        raise ArgumentError(f'config "units" must be "SI", got {units!r}')
    declared_si = units == 'SI'

    allowed = _MODE_KEYS[mode]
    parsed: dict[str, object] = {}
    for key, value in raw.items():
        if key == 'units':
            continue
        if key in _KEY_KINDS:
            base, scale = key, None
        else:
            base, scale = split_unit_key(key)
            if scale is None:
                raise ArgumentError(f'unknown config key {key!r} for mode {mode!r}')
        kind = _KEY_KINDS.get(base)
        if kind is None or base not in allowed:
            raise ArgumentError(f'unknown config key {key!r} for mode {mode!r}')

        suffix = key[len(base):]
        accepted = _SUFFIXES_BY_KIND.get(kind)
        if accepted is None:
            if suffix:
                raise ArgumentError(f'config key {key!r} is dimensionless and takes no unit suffix')
            scale = 1.0
        elif suffix:
            if suffix not in accepted:
                raise ArgumentError(f'config key {key!r} has a unit that does not fit a {kind}')
        else:
            if not declared_si and kind != 'flux':
                raise ArgumentError(
                    f'config key {key!r} needs a unit suffix (e.g. {base}{sorted(accepted)[0]}) '
                    'or a top-level "units": "SI" tag'
                )
            scale = 1.0

        if base in parsed:
            raise ArgumentError(f'config key {base!r} given more than once')
        assert scale is not None
        parsed[base] = _parse_value(key, base, kind, value, scale)
    return parsed


def load_design_config(path: Path | str | None, mode: str) -> dict[str, object]:
    if path is None:
        return parse_design_config({}, mode)
    try:
        raw = json.loads(Path(path).read_text(encoding='utf-8'))
    except FileNotFoundError as exc:
        raise ArgumentError(f'config file not found: {path}') from exc
    except json.JSONDecodeError as exc:
        raise ArgumentError(f'config file {path} is not valid JSON: {exc}') from exc
    return parse_design_config(raw, mode)
