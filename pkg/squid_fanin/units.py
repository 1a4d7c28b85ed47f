from __future__ import annotations

from .errors import ArgumentError

PICO = 1e-12
NANO = 1e-9
MICRO = 1e-6

# config-key suffix -> SI multiplier
UNIT_SUFFIXES: dict[str, float] = {
    '_pH': PICO,
    '_nH': NANO,
    '_H': 1.0,
    '_uA': MICRO,
    '_mA': 1e-3,
    '_A': 1.0,
    '_phi0': 1.0,
}


def to_pH(inductance: float) -> float:
    return inductance / PICO


def from_uA(value: float) -> float:
    return value * MICRO


def format_inductance(inductance: float) -> str:
    if abs(inductance) >= NANO:
        return f'{inductance / NANO:.4g} nH'
    return f'{to_pH(inductance):.4g} pH'


def split_unit_key(key: str) -> tuple[str, float | None]:
    """Split `l_dc1_pH` into (`l_dc1`, 1e-12). Keys without a known suffix return None."""
    for suffix, scale in UNIT_SUFFIXES.items():
        if key.endswith(suffix) and len(key) > len(suffix):
            return key[: -len(suffix)], scale
    return key, None


def require_positive(name: str, value: float) -> float:
    if not value > 0:
        raise ArgumentError(f'{name} must be positive, got {value!r}')
    return float(value)
