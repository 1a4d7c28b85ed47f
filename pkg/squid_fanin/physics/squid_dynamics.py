"""Phase dynamics of a symmetric two-junction SQUID.

Normalised time tau = t * 2*pi*I_c*R/PHI0, currents in units of I_c. Each junction
carries I_b from the bias plus or minus the circulating current j:

    beta_c * phi1'' + phi1' = rho * (i_b - j - sin(phi1))
    beta_c * phi2'' + phi2' = rho * (i_b + j - sin(phi2))
    j = (phi1 - phi2 - 2*pi*phi_a) / (pi * beta_L)

Positive applied flux pushes current into junction 1, which switches first.
The reported rate is the advance of theta = (phi1 + phi2)/2 per unit tau, timed
between its first and last 2*pi crossing in the measurement window, i.e. the
fluxon rate in units of I_c*R/PHI0. Fewer than MIN_SLIPS whole slips read as 0.

Many flux points are integrated together as one vector system so a sweep costs
about as much as a single point.
"""
from __future__ import annotations

from dataclasses import dataclass, replace
import math
from typing import Callable

import numpy as np
from scipy.integrate import solve_ivp
from scipy.optimize import brentq, minimize_scalar

from ..config import load_config
from ..constants import (
    DEFAULT_BETA_L,
    DEFAULT_IC,
    DEFAULT_PHI_MAX,
    MATCHED_BETA_L_MAX,
    MATCHED_BETA_L_MIN,
    PHI0,
    SQUID_TOTAL_INDUCTANCE_FACTOR,
)
from ..errors import ArgumentError, IntegrationFailureError, NoThresholdError
from ..logging import log_integration_failure, log_squid_sweep, log_squid_threshold

TWO_PI = 2.0 * math.pi

# fewer whole slips in the measurement window read as a static state
MIN_SLIPS = 2
# a window whose last crossing is older than this many periods caught a dying transient
STALL_PERIODS = 2.0


@dataclass(frozen=True)
class SquidParams:
    ic: float
    bias_ratio: float
    l_sq: float
    beta_c: float = 0.0
    r_shunt: float = 1.0

    def __post_init__(self) -> None:
        if not self.ic > 0:
            raise ArgumentError(f'ic must be positive, got {self.ic!r}')
        if not 0.0 <= self.bias_ratio < 1.0:
            raise ArgumentError(f'bias_ratio must lie in [0, 1), got {self.bias_ratio!r}')
        if not self.l_sq > 0:
            raise ArgumentError(f'l_sq must be positive, got {self.l_sq!r}')
        if not self.beta_c >= 0:
            raise ArgumentError(f'beta_c must be non-negative, got {self.beta_c!r}')
        if not self.r_shunt > 0:
            raise ArgumentError(f'r_shunt must be positive, got {self.r_shunt!r}')

    @classmethod
    def standard(
        cls,
        bias_ratio: float,
        ic: float = DEFAULT_IC,
        beta_l: float = DEFAULT_BETA_L,
        beta_c: float = 0.0,
        r_shunt: float = 1.0,
    ) -> SquidParams:
        """SQUID sized for a given screening parameter (beta_L = 1 unless told otherwise)."""
        if not beta_l > 0:
            raise ArgumentError(f'beta_l must be positive, got {beta_l!r}')
        return cls(
            ic=ic,
            bias_ratio=bias_ratio,
            l_sq=beta_l * PHI0 / (2.0 * ic),
            beta_c=beta_c,
            r_shunt=r_shunt,
        )

    @property
    def beta_l(self) -> float:
        return 2.0 * self.l_sq * self.ic / PHI0

    def with_bias(self, bias_ratio: float) -> SquidParams:
        return replace(self, bias_ratio=bias_ratio)

    @classmethod
    def matched(
        cls,
        bias_ratio: float,
        ic: float = DEFAULT_IC,
        beta_c: float = 0.0,
        r_shunt: float = 1.0,
    ) -> SquidParams:
        """SQUID whose quasi-static threshold equals the lumped estimate at this bias."""
        return cls.standard(bias_ratio, ic=ic, beta_l=matched_beta_l(bias_ratio), beta_c=beta_c, r_shunt=r_shunt)

    def with_matched_screening(self, bias_ratio: float) -> SquidParams:
        return SquidParams.matched(bias_ratio, ic=self.ic, beta_c=self.beta_c, r_shunt=self.r_shunt)


@dataclass(frozen=True)
class ResponseCurve:
    bias_ratio: float
    samples: tuple[tuple[float, float], ...]

    def __post_init__(self) -> None:
        phis = [phi for phi, _ in self.samples]
        if any(b < a for a, b in zip(phis, phis[1:])):
            raise ArgumentError('response samples must be sorted by applied flux')
        if any(rate < 0 for _, rate in self.samples):
            raise ArgumentError('response rates must be non-negative')

    @property
    def phi(self) -> np.ndarray:
        return np.array([phi for phi, _ in self.samples], dtype=float)

    @property
    def rate(self) -> np.ndarray:
        return np.array([rate for _, rate in self.samples], dtype=float)

    @property
    def max_rate(self) -> float:
        return max((rate for _, rate in self.samples), default=0.0)

    def first_nonzero_phi(self) -> float | None:
        for phi, rate in self.samples:
            if rate > 0:
                return phi
        return None


@dataclass(frozen=True)
class IntegrationSettings:
    max_step: float = 0.01
    rtol: float = 1e-8
    atol: float = 1e-8
    chunk: float = 50.0
    rate_cutoff: float = 1e-6

    @classmethod
    def from_config(cls) -> IntegrationSettings:
        config = load_config()
        return cls(
            max_step=config.max_step,
            rtol=config.rtol,
            atol=config.atol,
            chunk=config.chunk,
            rate_cutoff=config.rate_cutoff,
        )


def _default_windows(t_settle: float | None, t_measure: float | None) -> tuple[float, float]:
    config = load_config()
    settle = config.t_settle if t_settle is None else float(t_settle)
    measure = config.t_measure if t_measure is None else float(t_measure)
    if settle < 0 or measure < 0:
        raise ArgumentError(f'durations must be non-negative, got t_settle={settle!r} t_measure={measure!r}')
    if measure == 0:
        raise ArgumentError('t_measure must be positive')
    return settle, measure


def _make_rhs(params: SquidParams, phi_applied: np.ndarray) -> tuple[Callable[[float, np.ndarray], np.ndarray], np.ndarray]:
    m = phi_applied.size
    i_b = params.bias_ratio
    rho = params.r_shunt
    screening = math.pi * params.beta_l
    flux_phase = TWO_PI * phi_applied
    beta_c = params.beta_c

    if beta_c == 0.0:
        def overdamped(_t: float, y: np.ndarray) -> np.ndarray:
            phi1 = y[:m]
            phi2 = y[m:]
            j = (phi1 - phi2 - flux_phase) / screening
            return np.concatenate((
                rho * (i_b - j - np.sin(phi1)),
                rho * (i_b + j - np.sin(phi2)),
            ))

        y0 = np.concatenate((flux_phase, np.zeros(m)))
        return overdamped, y0

    def underdamped(_t: float, y: np.ndarray) -> np.ndarray:
        phi1 = y[:m]
        phi2 = y[m:2 * m]
        v1 = y[2 * m:3 * m]
        v2 = y[3 * m:]
        j = (phi1 - phi2 - flux_phase) / screening
        return np.concatenate((
            v1,
            v2,
            (rho * (i_b - j - np.sin(phi1)) - v1) / beta_c,
            (rho * (i_b + j - np.sin(phi2)) - v2) / beta_c,
        ))

    # phi1 - phi2 = 2*pi*phi_a leaves j = 0, so phi_a and phi_a + 1 start on identical orbits
    y0 = np.concatenate((flux_phase, np.zeros(3 * m)))
    return underdamped, y0


def _integrate(
    rhs: Callable[[float, np.ndarray], np.ndarray],
    t0: float,
    t1: float,
    y0: np.ndarray,
    settings: IntegrationSettings,
    t_eval: np.ndarray | None,
    phi_hint: float | None,
):
    sol = solve_ivp(
        rhs,
        (t0, t1),
        y0,
        method='RK45',
        t_eval=t_eval,
        max_step=settings.max_step,
        rtol=settings.rtol,
        atol=settings.atol,
    )
    if sol.status < 0 or not sol.success:
        t_reached = float(sol.t[-1]) if sol.t.size else t0
        log_integration_failure(str(sol.message), phi_hint, t_reached)
        raise IntegrationFailureError(f'integration failed at tau={t_reached:.6g}: {sol.message}', phi_hint)
    return sol


def _crossings(theta: np.ndarray, t: np.ndarray) -> tuple[np.ndarray, np.ndarray, np.ndarray, np.ndarray, np.ndarray]:
    """First and last 2*pi crossing of each row of theta (shape m x K) within one chunk."""
    k = np.floor(theta / TWO_PI)
    changed = k[:, 1:] != k[:, :-1]
    has = changed.any(axis=1)
    width = changed.shape[1]
    first_idx = np.argmax(changed, axis=1)
    last_idx = width - 1 - np.argmax(changed[:, ::-1], axis=1)

    def at(idx: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        rows = np.arange(theta.shape[0])
        k_after = np.maximum(k[rows, idx], k[rows, idx + 1])
        level = TWO_PI * k_after
        th0 = theta[rows, idx]
        th1 = theta[rows, idx + 1]
        span = np.where(th1 != th0, th1 - th0, 1.0)
        frac = np.clip((level - th0) / span, 0.0, 1.0)
        return t[idx] + frac * (t[idx + 1] - t[idx]), k_after

    first_t, first_k = at(first_idx)
    last_t, last_k = at(last_idx)
    return has, first_t, first_k, last_t, last_k


def _measure_rates(
    params: SquidParams,
    phi_applied: np.ndarray,
    t_settle: float,
    t_measure: float,
    settings: IntegrationSettings,
) -> np.ndarray:
    phi_applied = np.asarray(phi_applied, dtype=float)
    m = phi_applied.size
    if m == 0:
        return np.zeros(0)
    phi_hint = float(phi_applied[0]) if m == 1 else None
    rhs, y = _make_rhs(params, phi_applied)

    if t_settle > 0:
        sol = _integrate(rhs, 0.0, t_settle, y, settings, np.array([t_settle]), phi_hint)
        y = sol.y[:, -1]

    first_t = np.full(m, np.nan)
    first_k = np.zeros(m)
    last_t = np.full(m, np.nan)
    last_k = np.zeros(m)

    t0 = t_settle
    t_end = t_settle + t_measure
    while t0 < t_end:
        t1 = min(t0 + settings.chunk, t_end)
        samples = max(2, int(math.ceil((t1 - t0) / settings.max_step)) + 1)
        grid = np.linspace(t0, t1, samples)
        sol = _integrate(rhs, t0, t1, y, settings, grid, phi_hint)
        theta = 0.5 * (sol.y[:m] + sol.y[m:2 * m])
        has, c_first_t, c_first_k, c_last_t, c_last_k = _crossings(theta, sol.t)

        fresh = has & np.isnan(first_t)
        first_t = np.where(fresh, c_first_t, first_t)
        first_k = np.where(fresh, c_first_k, first_k)
        last_t = np.where(has, c_last_t, last_t)
        last_k = np.where(has, c_last_k, last_k)

        y = sol.y[:, -1]
        t0 = t1

    slips = np.nan_to_num(last_k - first_k)
    span = np.nan_to_num(last_t - first_t)
    since_last = t_end - np.nan_to_num(last_t, nan=t_settle)
    # a running orbit needs MIN_SLIPS whole periods in the window and must still be crossing at its end
    safe_slips = np.where(slips > 0, slips, 1.0)
    periodic = (slips >= MIN_SLIPS) & (span > 0) & (since_last <= STALL_PERIODS * span / safe_slips)
    safe_span = np.where(periodic, span, 1.0)
    rates = np.where(periodic, TWO_PI * slips / safe_span, 0.0)
    return np.where(rates < settings.rate_cutoff, 0.0, rates)


def simulate_rfq(
    params: SquidParams,
    phi_applied: float,
    t_settle: float | None = None,
    t_measure: float | None = None,
    settings: IntegrationSettings | None = None,
) -> float:
    """Steady-state fluxon rate at one applied flux (PHI0 units)."""
    settle, measure = _default_windows(t_settle, t_measure)
    settings = settings or IntegrationSettings.from_config()
    rates = _measure_rates(params, np.array([float(phi_applied)]), settle, measure, settings)
    return float(rates[0])


def simulate_rfq_batch(
    params: SquidParams,
    phi_applied: np.ndarray | list[float],
    t_settle: float | None = None,
    t_measure: float | None = None,
    settings: IntegrationSettings | None = None,
) -> np.ndarray:
    """simulate_rfq over many fluxes in one vector integration; order follows the input."""
    settle, measure = _default_windows(t_settle, t_measure)
    settings = settings or IntegrationSettings.from_config()
    phis = np.asarray(phi_applied, dtype=float)
    try:
        return _measure_rates(params, phis, settle, measure, settings)
    except IntegrationFailureError:
        if phis.size <= 1:
            raise
        # pin the failure on a single flux value
        for phi in phis:
            simulate_rfq(params, float(phi), settle, measure, settings)
        raise


def sweep_response(
    params: SquidParams,
    phi_min: float,
    phi_max: float,
    n_points: int,
    t_settle: float | None = None,
    t_measure: float | None = None,
    settings: IntegrationSettings | None = None,
) -> ResponseCurve:
    if not phi_min < phi_max:
        raise ArgumentError(f'phi_min must be below phi_max, got {phi_min!r} >= {phi_max!r}')
    if n_points < 2:
        raise ArgumentError(f'n_points must be >= 2, got {n_points!r}')

    phis = np.linspace(phi_min, phi_max, n_points)
    rates = simulate_rfq_batch(params, phis, t_settle, t_measure, settings)
    log_squid_sweep(params.bias_ratio, n_points, phi_min, phi_max, int(np.count_nonzero(rates)))
    return ResponseCurve(
        bias_ratio=params.bias_ratio,
        samples=tuple((float(phi), float(rate)) for phi, rate in zip(phis, rates)),
    )


def find_threshold_flux(
    params: SquidParams,
    tol: float = 1e-3,
    t_settle: float | None = None,
    t_measure: float | None = None,
    settings: IntegrationSettings | None = None,
    splits: int = 7,
) -> float:
    """Smallest applied flux in [0, 0.5] with a nonzero rate, to within tol.

    The bracket [lo, hi] always has rate(lo) == 0 and rate(hi) > 0. Each round
    evaluates `splits` interior points in one batch; splits=1 is plain bisection.
    """
    if not 0.0 < params.bias_ratio < 1.0:
        raise ArgumentError(f'bias_ratio must lie in (0, 1), got {params.bias_ratio!r}')
    if not tol > 0:
        raise ArgumentError(f'tol must be positive, got {tol!r}')
    if splits < 1:
        raise ArgumentError(f'splits must be >= 1, got {splits!r}')

    lo, hi = 0.0, DEFAULT_PHI_MAX
    end_rates = simulate_rfq_batch(params, [lo, hi], t_settle, t_measure, settings)
    evaluations = 2
    if end_rates[1] <= 0:
        raise NoThresholdError(
            f'no fluxon production in [0, {hi}] at bias_ratio={params.bias_ratio:.6g}'
        )
    if end_rates[0] > 0:
        log_squid_threshold(params.bias_ratio, 0.0, evaluations, tol)
        return 0.0

    while hi - lo > tol:
        interior = np.linspace(lo, hi, splits + 2)[1:-1]
        rates = simulate_rfq_batch(params, interior, t_settle, t_measure, settings)
        evaluations += interior.size
        firing = np.flatnonzero(rates > 0)
        if firing.size == 0:
            lo = float(interior[-1])
            continue
        first = int(firing[0])
        hi = float(interior[first])
        if first > 0:
            lo = float(interior[first - 1])

    log_squid_threshold(params.bias_ratio, hi, evaluations, tol)
    return hi


def analytic_threshold_flux(bias_ratio: float) -> float:
    """L_tot^sq * (I_c - I_b) / PHI0 with the lumped junction-inductance estimate."""
    if not 0.0 <= bias_ratio <= 1.0:
        raise ArgumentError(f'bias_ratio must lie in [0, 1], got {bias_ratio!r}')
    return SQUID_TOTAL_INDUCTANCE_FACTOR * (1.0 - bias_ratio)


def _branch_flux(phi1: np.ndarray | float, i_b: float, beta_l: float) -> np.ndarray | float:
    # applied flux that holds the zero-voltage state with junction-1 phase phi1
    sin2 = np.clip(2.0 * i_b - np.sin(phi1), -1.0, 1.0)
    j = i_b - np.sin(phi1)
    return (phi1 - np.arcsin(sin2) - math.pi * beta_l * j) / TWO_PI


def static_threshold_flux(params: SquidParams) -> float:
    """Flux at which the zero-voltage state of the overdamped SQUID disappears.

    Follows the stable branch from phi_a = 0 and returns the first maximum of the
    applied flux along it (saddle-node). Can exceed 0.5 for low bias.
    """
    i_b = params.bias_ratio
    beta_l = params.beta_l
    start = math.asin(i_b)
    stop = math.pi - math.asin(max(2.0 * i_b - 1.0, 0.0))
    if stop <= start:
        return 0.0

    grid = np.linspace(start, stop, 4001)
    flux = _branch_flux(grid, i_b, beta_l)
    rising = np.diff(flux) > 0
    turn = int(np.argmin(rising)) if not rising.all() else grid.size - 1
    if turn == 0:
        return float(flux[0])

    lo = grid[max(turn - 1, 0)]
    hi = grid[min(turn + 1, grid.size - 1)]
    result = minimize_scalar(
        lambda x: -float(_branch_flux(x, i_b, beta_l)),
        bounds=(lo, hi),
        method='bounded',
        options={'xatol': 1e-12},
    )
    return max(float(-result.fun), float(flux[turn]))


def matched_beta_l(bias_ratio: float) -> float:
    """Screening parameter at which static_threshold_flux equals analytic_threshold_flux.

    The threshold grows with beta_L from arccos(i_b)/pi at beta_L -> 0. Above a bias
    of about 0.745 that floor already exceeds the lumped estimate and the result is
    clamped to MATCHED_BETA_L_MIN. Below a bias of 0.45 the estimate lies past 0.5 PHI0;
    when no loop in range reaches it the result is MATCHED_BETA_L_MAX.
    """
    target = analytic_threshold_flux(bias_ratio)

    def gap(beta_l: float) -> float:
        params = SquidParams.standard(bias_ratio, beta_l=beta_l)
        return static_threshold_flux(params) - target

    if gap(MATCHED_BETA_L_MIN) >= 0:
        return MATCHED_BETA_L_MIN
    if gap(MATCHED_BETA_L_MAX) <= 0:
        return MATCHED_BETA_L_MAX
    return float(brentq(gap, MATCHED_BETA_L_MIN, MATCHED_BETA_L_MAX, xtol=1e-12))


class ResponseLookup:
    """Response curve over [0, phi_max] for one SQUID, interpolated linearly.

    Built once per (params, phi_max); used where many nodes share the same SQUID.
    """

    def __init__(
        self,
        params: SquidParams,
        phi_max: float = DEFAULT_PHI_MAX,
        n_points: int | None = None,
        t_settle: float | None = None,
        t_measure: float | None = None,
        settings: IntegrationSettings | None = None,
    ) -> None:
        self.params = params
        self.phi_max = phi_max
        points = n_points or load_config().response_points
        self.curve = sweep_response(params, 0.0, phi_max, points, t_settle, t_measure, settings)
        self._phi = self.curve.phi
        # running maximum: rates on the restricted branch never fall with flux
        self._rate = np.maximum.accumulate(self.curve.rate)

    @property
    def max_rate(self) -> float:
        return float(self._rate[-1])

    def rate(self, phi_applied: np.ndarray | float) -> np.ndarray:
        values = np.asarray(phi_applied, dtype=float)
        if np.any(values < -1e-12) or np.any(values > self.phi_max + 1e-12):
            raise ArgumentError(f'lookup flux must lie in [0, {self.phi_max}]')
        return np.interp(np.clip(values, 0.0, self.phi_max), self._phi, self._rate)
