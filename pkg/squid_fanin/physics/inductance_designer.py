"""Inductance and critical-current constraints for loop-neuron dendrites.

All quantities are SI (henries, amperes); fluxes passed in or out are in PHI0
units. The circuit is a set of n dendritic integration (DI) loops coupled into
a dendritic collection (DC) loop, which couples into the dendritic receiving
(DR) SQUID. Without a collection loop each DI loop couples straight into a
segment of the SQUID washer.
"""
from __future__ import annotations

from dataclasses import dataclass, field, replace
import math
from typing import Iterable, Sequence

from ..constants import (
    CONSTRAINT_RTOL,
    DEFAULT_ALPHA,
    DEFAULT_GAMMA,
    DEFAULT_L_DC1,
    DEFAULT_L_DC3,
    DEFAULT_L_DI1,
    DEFAULT_PHI_MAX,
    FABRICATION_MIN_INDUCTANCE,
    PHI0,
    ROUND_TRIP_RTOL,
    SQUID_TOTAL_INDUCTANCE_FACTOR,
)
from ..errors import ArgumentError, ConstraintViolationError, SaturationViolationError
from ..logging import log_design, log_feasibility
from ..units import format_inductance, require_positive


@dataclass(frozen=True)
class DrLoopSpec:
    ic: float
    l_washer: float
    l_total: float


def size_squid(ic: float) -> DrLoopSpec:
    """beta_L = 1 washer plus the two junction inductances near threshold."""
    ic = require_positive('ic', ic)
    return DrLoopSpec(
        ic=ic,
        l_washer=PHI0 / (2.0 * ic),
        l_total=(PHI0 / ic) * SQUID_TOTAL_INDUCTANCE_FACTOR,
    )


def _check_coupling(name: str, value: float) -> None:
    if not 0.0 < value <= 1.0:
        raise ArgumentError(f'{name} must lie in (0, 1], got {value!r}')


def _check_fan_in(n: int) -> None:
    if isinstance(n, bool) or not isinstance(n, int) or n < 1:
        raise ArgumentError(f'fan-in n must be a positive integer, got {n!r}')


@dataclass(frozen=True)
class CollectionLoopDesign:
    ic: float = 300e-6
    n: int = 10
    l_dc1: float = DEFAULT_L_DC1
    alpha: float = DEFAULT_ALPHA
    l_dc3: float = DEFAULT_L_DC3
    k1: float = 0.5
    k2: float = 0.5
    l_di1: float = DEFAULT_L_DI1
    l_di2: float | None = None
    gamma: float = DEFAULT_GAMMA
    phi_max: float = DEFAULT_PHI_MAX

    def __post_init__(self) -> None:
        require_positive('ic', self.ic)
        _check_fan_in(self.n)
        require_positive('l_dc1', self.l_dc1)
        require_positive('l_dc3', self.l_dc3)
        require_positive('l_di1', self.l_di1)
        require_positive('gamma', self.gamma)
        if self.l_di2 is not None:
            require_positive('l_di2', self.l_di2)
        if not self.alpha >= 0:
            raise ArgumentError(f'alpha must be non-negative, got {self.alpha!r}')
        _check_coupling('k1', self.k1)
        _check_coupling('k2', self.k2)
        if not 0.0 < self.phi_max <= DEFAULT_PHI_MAX:
            raise ArgumentError(f'phi_max must lie in (0, 0.5], got {self.phi_max!r}')

    @property
    def i_sat(self) -> float:
        return self.gamma * self.ic

    @property
    def dr_loop(self) -> DrLoopSpec:
        return size_squid(self.ic)

    @property
    def l_dc2(self) -> float:
        return self.alpha * self.l_dc3

    @property
    def l_dc_total(self) -> float:
        return self.n * self.l_dc1 + (1.0 + self.alpha) * self.l_dc3

    @property
    def l_di_total(self) -> float:
        return self.l_di1 + self.required_l_di2()

    @property
    def m_dr_dc(self) -> float:
        return self.k2 * math.sqrt(self.l_dc3 * self.dr_loop.l_washer)

    @property
    def m_dc_di(self) -> float:
        return self.k1 * math.sqrt(self.required_l_di2() * self.l_dc1)

    def required_l_di2(self) -> float:
        if self.l_di2 is None:
            raise ArgumentError('design has no l_di2; run design_ldi2_collection first')
        return self.l_di2

    def with_l_di2(self, l_di2: float) -> CollectionLoopDesign:
        return replace(self, l_di2=l_di2)


@dataclass(frozen=True)
class NoCollectionDesign:
    n: int = 10
    k: float = 0.5
    ic_dr: float = 300e-6
    ic_di: float = 300e-6
    l_dr1: float | None = None
    sfq_mode: bool = False

    def __post_init__(self) -> None:
        _check_fan_in(self.n)
        _check_coupling('k', self.k)
        require_positive('ic_dr', self.ic_dr)
        require_positive('ic_di', self.ic_di)
        if self.l_dr1 is not None:
            require_positive('l_dr1', self.l_dr1)

    @property
    def washer_segment(self) -> float:
        # the beta_L = 1 washer PHI0/(2 I_c) split evenly over the n transformers
        if self.l_dr1 is not None:
            return self.l_dr1
        return PHI0 / (2.0 * self.n * self.ic_dr)

    @property
    def i_sat(self) -> float:
        return self.ic_di


def design_ldi2_collection(design: CollectionLoopDesign) -> float:
    """L^di2 that makes n saturated inputs apply exactly phi_max to the DR loop."""
    l_washer = design.dr_loop.l_washer
    budget = design.phi_max * PHI0 / (design.k1 * design.k2 * design.i_sat)
    bracket = (
        math.sqrt(design.l_dc1 / design.l_dc3)
        + math.sqrt(design.l_dc3 / design.l_dc1) * (1.0 + design.alpha) / design.n
    )
    return (budget * bracket) ** 2 / l_washer


def designed(design: CollectionLoopDesign) -> CollectionLoopDesign:
    return design.with_l_di2(design_ldi2_collection(design))


def ldi2_asymptote(design: CollectionLoopDesign) -> float:
    """Large-n limit of design_ldi2_collection."""
    budget = design.phi_max * PHI0 / (design.k1 * design.k2 * design.i_sat)
    return budget**2 * (design.l_dc1 / design.l_dc3) / design.dr_loop.l_washer


def applied_flux_collection(design: CollectionLoopDesign, di_currents: Sequence[float]) -> float:
    """Flux applied to the DR loop, PHI0 units."""
    if len(di_currents) != design.n:
        raise ArgumentError(f'expected {design.n} DI currents, got {len(di_currents)}')
    i_sat = design.i_sat
    for index, current in enumerate(di_currents):
        if current < 0:
            raise ArgumentError(f'DI current {index} is negative: {current!r}')
        if current > i_sat * (1.0 + ROUND_TRIP_RTOL):
            raise SaturationViolationError(
                f'DI current {index} = {current:.6g} A exceeds i_sat = {i_sat:.6g} A'
            )
    flux = design.m_dr_dc / design.l_dc_total * design.m_dc_di * math.fsum(di_currents)
    return flux / PHI0


def check_collection_constraint(design: CollectionLoopDesign, rtol: float = CONSTRAINT_RTOL) -> None:
    required = design_ldi2_collection(design)
    actual = design.required_l_di2()
    if abs(actual - required) > rtol * required:
        raise ConstraintViolationError(
            f'l_di2 = {format_inductance(actual)} violates the monotonicity constraint '
            f'(required {format_inductance(required)} for n={design.n})'
        )


def round_trip_error(design: CollectionLoopDesign) -> float:
    """Relative error between phi_max and the flux of n saturated inputs."""
    flux = applied_flux_collection(design, [design.i_sat] * design.n)
    return abs(flux - design.phi_max) / design.phi_max


def threshold_fraction_circuit(design: CollectionLoopDesign, bias_ratio: float) -> float:
    """p/n from the circuit: saturated inputs needed to supply L_tot (I_c - I_b)."""
    check_collection_constraint(design)
    if not 0.0 < bias_ratio < 1.0:
        raise ArgumentError(f'bias_ratio must lie in (0, 1), got {bias_ratio!r}')

    single = [0.0] * design.n
    single[0] = design.i_sat
    per_input_flux = applied_flux_collection(design, single) * PHI0
    threshold_flux = design.dr_loop.l_total * (design.ic - bias_ratio * design.ic)
    p = threshold_flux / per_input_flux
    return p / design.n


def crosstalk_current(design: CollectionLoopDesign, p_active: int) -> float:
    """Current induced in one DI loop by p saturated siblings on the same collection coil."""
    if not 0 <= p_active <= design.n:
        raise ArgumentError(f'p_active must lie in [0, {design.n}], got {p_active!r}')
    l_di2 = design.required_l_di2()
    per_input = (design.k1**2 * l_di2 * design.l_dc1) / (design.l_dc_total * design.l_di_total) * design.i_sat
    return p_active * per_input


def design_no_collection(design: NoCollectionDesign, phi_max: float = DEFAULT_PHI_MAX) -> float:
    """L^di2 that caps n saturated inputs at phi_max without a collection loop."""
    if not 0.0 < phi_max <= DEFAULT_PHI_MAX:
        raise ArgumentError(f'phi_max must lie in (0, 0.5], got {phi_max!r}')
    budget = phi_max * PHI0 / (design.n * design.k * design.i_sat)
    return budget**2 / design.washer_segment


def applied_flux_no_collection(
    design: NoCollectionDesign,
    l_di2: float,
    di_currents: Sequence[float],
) -> float:
    """Flux applied to the DR loop by DI loops coupled straight into the washer, PHI0 units."""
    require_positive('l_di2', l_di2)
    if len(di_currents) != design.n:
        raise ArgumentError(f'expected {design.n} DI currents, got {len(di_currents)}')
    for index, current in enumerate(di_currents):
        if current < 0:
            raise ArgumentError(f'DI current {index} is negative: {current!r}')
        if current > design.i_sat * (1.0 + ROUND_TRIP_RTOL):
            raise SaturationViolationError(
                f'DI current {index} = {current:.6g} A exceeds i_sat = {design.i_sat:.6g} A'
            )
    mutual = design.k * math.sqrt(l_di2 * design.washer_segment)
    return mutual * math.fsum(di_currents) / PHI0


def sfq_coupling(n: int) -> float:
    _check_fan_in(n)
    return (2.0 * n) ** -0.5


def vary_ic_no_collection(
    n: int,
    k: float,
    ic_dr: float,
    sfq_mode: bool,
    ic_di: float | None = None,
) -> tuple[float, float]:
    """(l_di2, ic_di) when DI and DR junctions may differ in I_c.

    In SFQ mode ic_di follows ic_dr/(n k^2); see sfq_consistency_report
    for the factor of two against the SFQ inductance.
    """
    _check_fan_in(n)
    _check_coupling('k', k)
    require_positive('ic_dr', ic_dr)
    if sfq_mode:
        ic_di = ic_dr / (n * k**2)
        return PHI0 / ic_di, ic_di
    if ic_di is None:
        raise ArgumentError('ic_di is required when sfq_mode is off')
    require_positive('ic_di', ic_di)
    l_di2 = (PHI0 / (2.0 * n * k**2)) * ic_dr / ic_di**2
    return l_di2, ic_di


def sfq_consistency_report(n: int, k: float, ic_dr: float) -> dict[str, float | bool | str]:
    """Compare the direct SFQ ic_di with the value the SFQ inductance actually requires."""
    l_direct, ic_direct = vary_ic_no_collection(n, k, ic_dr, sfq_mode=True)
    ic_consistent = ic_dr / (2.0 * n * k**2)
    l_required_at_direct, _ = vary_ic_no_collection(n, k, ic_dr, sfq_mode=False, ic_di=ic_direct)

    design = NoCollectionDesign(n=n, k=k, ic_dr=ic_dr, ic_di=ic_direct)
    flux_direct = applied_flux_no_collection(design, l_direct, [design.i_sat] * n)
    consistent_design = NoCollectionDesign(n=n, k=k, ic_dr=ic_dr, ic_di=ic_consistent)
    flux_consistent = applied_flux_no_collection(
        consistent_design, PHI0 / ic_consistent, [consistent_design.i_sat] * n
    )
    return {
        'n': n,
        'k': k,
        'ic_dr': ic_dr,
        'ic_di_direct': ic_direct,
        'ic_di_consistent': ic_consistent,
        'ratio': ic_direct / ic_consistent,
        'l_di2_sfq_direct': l_direct,
        'l_di2_flux_limit_at_direct': l_required_at_direct,
        'phi_max_direct': flux_direct,
        'phi_max_consistent': flux_consistent,
        'consistent': math.isclose(ic_direct, ic_consistent, rel_tol=ROUND_TRIP_RTOL),
        'note': (
            'SFQ storage (L^di2 = PHI0/I_c^di) together with the flux limit gives '
            'I_c^di = I_c^dr/(2 n k^2); the direct relation I_c^dr/(n k^2) omits the factor 2 '
            'and lets n saturated inputs apply PHI0/sqrt(2).'
        ),
    }


@dataclass
class FeasibilityReport:
    warnings: list[str] = field(default_factory=list)
    rows_checked: int = 0
    below_fabrication_limit: int = 0
    above_sfq_level: int = 0

    def check(self, label: str, l_di2: float, ic_di: float) -> dict[str, bool]:
        self.rows_checked += 1
        too_small = l_di2 < FABRICATION_MIN_INDUCTANCE
        above_sfq = l_di2 > PHI0 / ic_di
        if too_small:
            self.below_fabrication_limit += 1
            self.warnings.append(
                f'{label}: l_di2 = {format_inductance(l_di2)} is below '
                f'{format_inductance(FABRICATION_MIN_INDUCTANCE)}, difficult to fabricate'
            )
        if above_sfq:
            self.above_sfq_level += 1
        return {'difficult_to_fabricate': too_small, 'above_sfq_level': above_sfq}

    def to_json(self) -> dict[str, object]:
        return {
            'rows_checked': self.rows_checked,
            'below_fabrication_limit': self.below_fabrication_limit,
            'above_sfq_level': self.above_sfq_level,
            'fabrication_limit_H': FABRICATION_MIN_INDUCTANCE,
            'warnings': list(self.warnings),
        }


def feasibility_report(rows: Iterable[tuple[str, float, float]]) -> FeasibilityReport:
    """rows of (label, l_di2, ic_di)."""
    report = FeasibilityReport()
    for label, l_di2, ic_di in rows:
        report.check(label, l_di2, ic_di)
    return report


@dataclass(frozen=True)
class DesignRow:
    n: int
    k: float
    ic: float
    l_di2: float
    ic_di: float
    round_trip_error: float
    difficult_to_fabricate: bool
    above_sfq_level: bool


def sweep_collection(
    base: CollectionLoopDesign,
    n_values: Sequence[int],
    k_values: Sequence[float] | None = None,
    report: FeasibilityReport | None = None,
) -> list[DesignRow]:
    """Designed l_di2 per (k, n) with k1 = k2 = k. Rows ordered by k then n."""
    report = report if report is not None else FeasibilityReport()
    shared_k = bool(k_values)
    rows: list[DesignRow] = []
    for k in (list(k_values) if k_values else [base.k1]):
        for n in n_values:
            design = designed(replace(base, n=n, k1=k, k2=k if shared_k else base.k2))
            error = round_trip_error(design)
            if error > ROUND_TRIP_RTOL:
                raise ConstraintViolationError(
                    f'round trip failed for n={n} k={k}: relative error {error:.3g}'
                )
            flags = report.check(f'collection n={n} k={k:g}', design.required_l_di2(), base.ic)
            rows.append(DesignRow(
                n=n,
                k=k,
                ic=base.ic,
                l_di2=design.required_l_di2(),
                ic_di=base.ic,
                round_trip_error=error,
                **flags,
            ))
    log_design('collection', len(rows), ic=base.ic, l_dc1=base.l_dc1, l_dc3=base.l_dc3, alpha=base.alpha)
    log_feasibility('collection', report.warnings)
    return rows


def sweep_no_collection(
    n_values: Sequence[int],
    k_values: Sequence[float],
    ic_values: Sequence[float],
    phi_max: float = DEFAULT_PHI_MAX,
    report: FeasibilityReport | None = None,
) -> list[DesignRow]:
    """Shared-I_c designs without a collection loop. Rows ordered by ic, k, n."""
    report = report if report is not None else FeasibilityReport()
    rows: list[DesignRow] = []
    for ic in ic_values:
        for k in k_values:
            for n in n_values:
                design = NoCollectionDesign(n=n, k=k, ic_dr=ic, ic_di=ic)
                l_di2 = design_no_collection(design, phi_max)
                flux = applied_flux_no_collection(design, l_di2, [design.i_sat] * n)
                error = abs(flux - phi_max) / phi_max
                if error > ROUND_TRIP_RTOL:
                    raise ConstraintViolationError(
                        f'round trip failed for n={n} k={k} ic={ic}: relative error {error:.3g}'
                    )
                flags = report.check(f'no_collection n={n} k={k:g} ic={ic:g}', l_di2, ic)
                rows.append(DesignRow(
                    n=n, k=k, ic=ic, l_di2=l_di2, ic_di=ic, round_trip_error=error, **flags,
                ))
    log_design('no_collection', len(rows), phi_max=phi_max)
    log_feasibility('no_collection', report.warnings)
    return rows


def sweep_sfq(
    n_values: Sequence[int],
    ic: float,
    report: FeasibilityReport | None = None,
) -> list[DesignRow]:
    """Shared-I_c SFQ operation without a collection loop: k = (2n)^-1/2, l_di2 = PHI0/I_c."""
    report = report if report is not None else FeasibilityReport()
    rows: list[DesignRow] = []
    for n in n_values:
        k = sfq_coupling(n)
        design = NoCollectionDesign(n=n, k=k, ic_dr=ic, ic_di=ic, sfq_mode=True)
        l_di2 = design_no_collection(design)
        error = abs(l_di2 - PHI0 / ic) / (PHI0 / ic)
        if error > ROUND_TRIP_RTOL:
            raise ConstraintViolationError(f'SFQ coupling inconsistent for n={n}: relative error {error:.3g}')
        flags = report.check(f'sfq n={n}', l_di2, ic)
        rows.append(DesignRow(n=n, k=k, ic=ic, l_di2=l_di2, ic_di=ic, round_trip_error=error, **flags))
    log_design('sfq', len(rows), ic=ic)
    log_feasibility('sfq', report.warnings)
    return rows


def sweep_vary_ic(
    n_values: Sequence[int],
    k: float,
    ic_dr: float,
    sfq_mode: bool,
    ic_di: float | None = None,
    report: FeasibilityReport | None = None,
) -> list[DesignRow]:
    report = report if report is not None else FeasibilityReport()
    rows: list[DesignRow] = []
    for n in n_values:
        l_di2, row_ic_di = vary_ic_no_collection(n, k, ic_dr, sfq_mode, ic_di)
        if sfq_mode:
            error = abs(l_di2 * row_ic_di / PHI0 - 1.0)
        else:
            design = NoCollectionDesign(n=n, k=k, ic_dr=ic_dr, ic_di=row_ic_di)
            flux = applied_flux_no_collection(design, l_di2, [design.i_sat] * n)
            error = abs(flux - DEFAULT_PHI_MAX) / DEFAULT_PHI_MAX
        if error > ROUND_TRIP_RTOL:
            raise ConstraintViolationError(f'round trip failed for n={n}: relative error {error:.3g}')
        flags = report.check(f'vary_ic n={n}', l_di2, row_ic_di)
        rows.append(DesignRow(
            n=n, k=k, ic=ic_dr, l_di2=l_di2, ic_di=row_ic_di, round_trip_error=error, **flags,
        ))
    log_design('vary_ic', len(rows), k=k, ic_dr=ic_dr, sfq_mode=sfq_mode)
    log_feasibility('vary_ic', report.warnings)
    return rows
