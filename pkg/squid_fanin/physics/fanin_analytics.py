"""Closed-form activity fractions and tree geometry for homogeneous dendritic trees.

A node (dendrite or soma) with fan-in n whose total input is capped at PHI0/2
reaches threshold when a fraction ((3pi+2)/2pi)(1 - I_b/I_c) of its inputs is
saturated. Stacking H such levels multiplies the fractions.
"""
from __future__ import annotations

from dataclasses import dataclass
import math

import numpy as np

from ..constants import ACTIVITY_PREFACTOR, DEFAULT_PHI_MAX, REQUIRED_INPUTS_EPS
from ..errors import ArgumentError, CapacityError, UnreachableThresholdError

# largest synapse count representable as a signed 64-bit index
MAX_SYNAPSES = 2**63 - 1


@dataclass(frozen=True)
class TreeTopology:
    n: int
    h_depth: int

    def __post_init__(self) -> None:
        if isinstance(self.n, bool) or not isinstance(self.n, int) or self.n < 1:
            raise ArgumentError(f'fan-in factor n must be a positive integer, got {self.n!r}')
        if isinstance(self.h_depth, bool) or not isinstance(self.h_depth, int) or self.h_depth < 1:
            raise ArgumentError(f'depth H must be a positive integer, got {self.h_depth!r}')
        if self.n_synapses > MAX_SYNAPSES:
            raise CapacityError(f'n^H = {self.n}^{self.h_depth} overflows the synapse index range')

    @property
    def n_synapses(self) -> int:
        return self.n**self.h_depth

    @property
    def node_count(self) -> int:
        return sum(self.n**h for h in range(self.h_depth + 1))

    @property
    def dendrite_count(self) -> int:
        return sum(self.n**h for h in range(1, self.h_depth))


@dataclass(frozen=True)
class BiasPoint:
    bias_ratio: float

    def __post_init__(self) -> None:
        if not 0.0 <= self.bias_ratio <= 1.0:
            raise ArgumentError(f'bias_ratio must lie in [0, 1], got {self.bias_ratio!r}')


@dataclass(frozen=True)
class ActivityResult:
    fraction_continuous: float
    p_integer: int | None
    reachable: bool


@dataclass(frozen=True)
class TreeGeometry:
    n_synapses: int
    h_depth: int
    n_real: float
    dendrite_count_real: float
    exact: bool
    topology: TreeTopology | None
    dendrite_count: int | None
    nearest_n: int
    nearest_n_synapses: int
    nearest_dendrite_count: int

    def rounding_report(self) -> str:
        if self.exact:
            return f'exact: {self.nearest_n}^{self.h_depth} = {self.n_synapses}'
        return (
            f'inexact: N={self.n_synapses} H={self.h_depth} gives n={self.n_real:.6g}; '
            f'nearest integer n={self.nearest_n} gives N={self.nearest_n_synapses} '
            f'and {self.nearest_dendrite_count} intermediate dendrites '
            f'(real-n count {self.dendrite_count_real:.6g})'
        )


def _as_bias(bias: BiasPoint | float) -> BiasPoint:
    if isinstance(bias, BiasPoint):
        return bias
    return BiasPoint(float(bias))


def synapse_flux_quota(tree: TreeTopology) -> float:
    """Flux per maximally weighted synapse in PHI0 units: n * quota = 1/2."""
    return DEFAULT_PHI_MAX / tree.n


def point_activity_fraction(bias: BiasPoint | float) -> float:
    bias = _as_bias(bias)
    return ACTIVITY_PREFACTOR * (1.0 - bias.bias_ratio)


def tree_activity_fraction(bias: BiasPoint | float, h_depth: int) -> float:
    if h_depth < 1:
        raise ArgumentError(f'depth H must be >= 1, got {h_depth!r}')
    return point_activity_fraction(bias) ** h_depth


def required_inputs(n: int, fraction: float) -> int:
    """Smallest integer count of saturated inputs reaching `fraction` of n."""
    return max(0, math.ceil(n * fraction - REQUIRED_INPUTS_EPS))


def activity_result(bias: BiasPoint | float, n: int) -> ActivityResult:
    fraction = point_activity_fraction(bias)
    reachable = fraction <= 1.0
    return ActivityResult(
        fraction_continuous=fraction,
        p_integer=required_inputs(n, fraction) if reachable else None,
        reachable=reachable,
    )


def total_unit_fraction(bias: BiasPoint | float, tree: TreeTopology, integer_mode: bool) -> float:
    """Fraction of all units (synapses, dendrites, soma) active at threshold."""
    fraction = point_activity_fraction(bias)
    if integer_mode:
        if fraction > 1.0:
            raise UnreachableThresholdError(fraction)
        p: float = float(required_inputs(tree.n, fraction))
    else:
        p = tree.n * fraction

    levels = np.arange(tree.h_depth + 1)
    active = float(np.sum(np.power(p, levels, dtype=float)))
    total = float(np.sum(np.power(float(tree.n), levels, dtype=float)))
    return active / total


def _integer_root(value: int, degree: int) -> int | None:
    guess = round(value ** (1.0 / degree))
    for candidate in (guess - 1, guess, guess + 1):
        if candidate >= 1 and candidate**degree == value:
            return candidate
    return None


def tree_geometry(n_synapses: int, h_depth: int) -> TreeGeometry:
    if n_synapses < 1:
        raise ArgumentError(f'n_synapses must be >= 1, got {n_synapses!r}')
    if h_depth < 1:
        raise ArgumentError(f'depth H must be >= 1, got {h_depth!r}')

    n_real = float(n_synapses) ** (1.0 / h_depth)
    dendrites_real = sum(n_real**h for h in range(1, h_depth))
    nearest = max(1, round(n_real))
    nearest_topology = TreeTopology(nearest, h_depth)

    root = _integer_root(n_synapses, h_depth)
    if root is not None:
        topology = TreeTopology(root, h_depth)
        return TreeGeometry(
            n_synapses=n_synapses,
            h_depth=h_depth,
            n_real=float(root),
            dendrite_count_real=float(topology.dendrite_count),
            exact=True,
            topology=topology,
            dendrite_count=topology.dendrite_count,
            nearest_n=root,
            nearest_n_synapses=topology.n_synapses,
            nearest_dendrite_count=topology.dendrite_count,
        )

    return TreeGeometry(
        n_synapses=n_synapses,
        h_depth=h_depth,
        n_real=n_real,
        dendrite_count_real=dendrites_real,
        exact=False,
        topology=None,
        dendrite_count=None,
        nearest_n=nearest,
        nearest_n_synapses=nearest_topology.n_synapses,
        nearest_dendrite_count=nearest_topology.dendrite_count,
    )


def dendrite_count_report(n_synapses: int, h_depth: int) -> dict[str, object]:
    """Integral-n and real-n intermediate dendrite counts for one (N, H)."""
    geometry = tree_geometry(n_synapses, h_depth)
    return {
        'n_synapses': n_synapses,
        'h_depth': h_depth,
        'exact': geometry.exact,
        'n_real': geometry.n_real,
        'dendrites_real_n': geometry.dendrite_count_real,
        'n_integer': geometry.nearest_n,
        'dendrites_integer_n': geometry.nearest_dendrite_count,
        'n_synapses_integer_n': geometry.nearest_n_synapses,
        'report': geometry.rounding_report(),
    }


def fanin_factor_curve(n_synapses: list[int] | np.ndarray, h_depths: list[int]) -> dict[int, np.ndarray]:
    """n = N^(1/H) for every N, keyed by H."""
    values = np.asarray(n_synapses, dtype=float)
    if np.any(values < 1):
        raise ArgumentError('n_synapses values must be >= 1')
    curves: dict[int, np.ndarray] = {}
    for h_depth in h_depths:
        if h_depth < 1:
            raise ArgumentError(f'depth H must be >= 1, got {h_depth!r}')
        curves[h_depth] = np.power(values, 1.0 / h_depth)
    return curves


def bias_for_fraction(fraction: float) -> float:
    """Inverse of point_activity_fraction."""
    if not 0.0 <= fraction <= ACTIVITY_PREFACTOR:
        raise ArgumentError(f'fraction must lie in [0, {ACTIVITY_PREFACTOR:.6g}], got {fraction!r}')
    return 1.0 - fraction / ACTIVITY_PREFACTOR


def bias_for_required_inputs(n: int, p: int) -> float:
    """A bias ratio at which a node of fan-in n needs exactly p saturated inputs."""
    if not 1 <= p <= n:
        raise ArgumentError(f'p must lie in [1, n={n}], got {p!r}')
    return bias_for_fraction((p - 0.5) / n)


def unreachable_bias_boundary() -> float:
    """Below this bias even a fully saturated node cannot reach threshold."""
    return 1.0 - 1.0 / ACTIVITY_PREFACTOR
