from __future__ import annotations

from dataclasses import dataclass
import os

from .constants import DEFAULT_ALPHA, DEFAULT_L_DC3


def env_bool(name: str, default: bool) -> bool:
    raw = os.getenv(name)
    if raw is None:
        return default
    return raw.strip().lower() in {'1', 'true', 'yes', 'on'}


def env_int(name: str, default: int, *, minimum: int | None = None, maximum: int | None = None) -> int:
    raw = os.getenv(name)
    parsed = default
    if raw is not None:
        try:
            parsed = int(raw.strip())
        except Exception:
            parsed = default

    if minimum is not None:
        parsed = max(minimum, parsed)
    if maximum is not None:
        parsed = min(maximum, parsed)
    return parsed


def env_float(
    name: str,
    default: float,
    *,
    minimum: float | None = None,
    maximum: float | None = None,
) -> float:
    raw = os.getenv(name, str(default)).strip()
    try:
        parsed = float(raw)
    except Exception:
        parsed = default
    if parsed != parsed:
        parsed = default

    if minimum is not None:
        parsed = max(minimum, parsed)
    if maximum is not None:
        parsed = min(maximum, parsed)
    return parsed


@dataclass(frozen=True)
class ToolkitConfig:
    max_step: float = 0.01
    rtol: float = 1e-8
    atol: float = 1e-8
    t_settle: float = 100.0
    t_measure: float = 400.0
    chunk: float = 50.0
    rate_cutoff: float = 1e-6
    alpha: float = DEFAULT_ALPHA
    l_dc3: float = DEFAULT_L_DC3
    exhaustive_leaf_cap: int = 24
    max_tree_nodes: int = 2_000_000
    response_points: int = 101
    host: str = '127.0.0.1'
    port: int = 5600
    verbose: bool = True


def load_config() -> ToolkitConfig:
    return ToolkitConfig(
        max_step=env_float('SQUID_FANIN_MAX_STEP', 0.01, minimum=1e-4, maximum=0.01),
        rtol=env_float('SQUID_FANIN_RTOL', 1e-8, minimum=1e-12, maximum=1e-4),
        atol=env_float('SQUID_FANIN_ATOL', 1e-8, minimum=1e-12, maximum=1e-4),
        t_settle=env_float('SQUID_FANIN_T_SETTLE', 100.0, minimum=0.0, maximum=1e5),
        t_measure=env_float('SQUID_FANIN_T_MEASURE', 400.0, minimum=1.0, maximum=1e6),
        chunk=env_float('SQUID_FANIN_CHUNK', 50.0, minimum=1.0, maximum=1e4),
        rate_cutoff=env_float('SQUID_FANIN_RATE_CUTOFF', 1e-6, minimum=0.0, maximum=1e-2),
        alpha=env_float('SQUID_FANIN_ALPHA', DEFAULT_ALPHA, minimum=0.0, maximum=1.0),
        l_dc3=env_float('SQUID_FANIN_L_DC3_PH', DEFAULT_L_DC3 * 1e12, minimum=10.0, maximum=1000.0) * 1e-12,
        exhaustive_leaf_cap=env_int('SQUID_FANIN_EXHAUSTIVE_LEAF_CAP', 24, minimum=1, maximum=24),
        max_tree_nodes=env_int('SQUID_FANIN_MAX_TREE_NODES', 2_000_000, minimum=1, maximum=100_000_000),
        response_points=env_int('SQUID_FANIN_RESPONSE_POINTS', 101, minimum=11, maximum=2001),
        host=os.getenv('SQUID_FANIN_HOST', '127.0.0.1').strip() or '127.0.0.1',
        port=env_int('SQUID_FANIN_PORT', 5600, minimum=1, maximum=65535),
        verbose=env_bool('SQUID_FANIN_VERBOSE', True),
    )
