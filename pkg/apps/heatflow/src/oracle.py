"""Brute-force frequency quadratures used to check the pole sums.

Every integrand evaluates Ĝ(iω) by direct inversion. The pencil eigenvalues
are computed once and used only to place breakpoints around resonances.
"""

import logging
from dataclasses import dataclass, field
from typing import Callable, List, Optional, Sequence, Tuple

import numpy as np
import pandas as pd
import scipy.integrate
import scipy.linalg

from .digamma import omega_coth
from .errors import ErrorCode, HeatflowError
from .heat import HeatCurrentMatrix
from .network import HarmonicNetwork, ReservoirSet
from .spectral import assemble, green_direct
from .stationary import BLOCK_ORDERS, CovarianceBlocks, Regime, blocks_from_moments, is_classical

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class QuadratureConfig:
    rel_tol: float = 1e-8
    abs_tol: float = 1e-14
    max_subdivisions: int = 10000
    omega_max_factor: float = 50.0
    # breakpoints at Re ω ± k Im ω around every resonance
    refinement_widths: Tuple[float, ...] = (0.0, 1.0, 3.0, 10.0)

    def halved(self) -> "QuadratureConfig":
        return QuadratureConfig(
            rel_tol=self.rel_tol / 2,
            abs_tol=self.abs_tol / 2,
            max_subdivisions=self.max_subdivisions,
            omega_max_factor=self.omega_max_factor,
            refinement_widths=self.refinement_widths,
        )


def _regime(reservoirs: ReservoirSet) -> Regime:
    return Regime.INFINITE_CUTOFF if reservoirs.is_infinite_cutoff else Regime.FINITE_CUTOFF


def _drude(reservoirs: ReservoirSet, omega: float) -> float:
    if reservoirs.is_infinite_cutoff:
        return 1.0
    lam = reservoirs.cutoff
    return lam**2 / (omega**2 + lam**2)


def _thermal_weights(reservoirs: ReservoirSet, omega: float, classical: bool) -> np.ndarray:
    """ω coth(ω/2T_l) per reservoir, or 2T_l in the classical limit."""
    if classical:
        return 2 * np.asarray(reservoirs.temperatures)
    return np.array([float(omega_coth(omega, t)) for t in reservoirs.temperatures])


def covariance_integrand(
    network: HarmonicNetwork,
    reservoirs: ReservoirSet,
    omega: float,
    classical: bool = False,
) -> np.ndarray:
    """(3, K, K) real integrand for σ^(0,0), σ^(0,1), σ^(1,1); even in ω."""
    green = green_direct(network, reservoirs, 1j * omega)
    weights = reservoirs.weights(network.K)
    scale = (2 / np.pi) * reservoirs.gamma0 * _drude(reservoirs, abs(omega))
    noise = scale * (_thermal_weights(reservoirs, omega, classical) @ weights)
    # the (1,1) block of memoryless damping only converges with the classical weight
    pp_noise = noise
    if reservoirs.is_infinite_cutoff and not classical:
        pp_noise = scale * (2 * np.asarray(reservoirs.temperatures) @ weights)

    values = np.empty((3, network.K, network.K))
    for k, (n, m) in enumerate(BLOCK_ORDERS):
        nu = pp_noise if (n, m) == (1, 1) else noise
        block = (omega ** (n + m)) * (1j ** (n - m)) * (green * nu) @ green.conj().T
        values[k] = block.real
    return values


def heat_integrand(
    network: HarmonicNetwork,
    reservoirs: ReservoirSet,
    omega: float,
    classical: bool = False,
) -> np.ndarray:
    """(L, L) integrand of q[l, l']: transmission times the population difference."""
    green = green_direct(network, reservoirs, 1j * omega)
    weights = reservoirs.weights(network.K)
    power = np.abs(green) ** 2
    transfer = weights @ power @ weights.T
    thermal = _thermal_weights(reservoirs, omega, classical)
    prefactor = (4 / np.pi) * reservoirs.gamma0**2 * omega**2 * _drude(reservoirs, abs(omega)) ** 2
    return prefactor * transfer * (thermal[:, None] - thermal[None, :])


def resonance_breakpoints(
    network: HarmonicNetwork,
    reservoirs: ReservoirSet,
    config: QuadratureConfig,
) -> Tuple[float, List[float]]:
    """ω_max and the breakpoints in (0, ω_max) from a one-time eigenvalue solve."""
    pencil = assemble(network, reservoirs)
    poles = -1j * scipy.linalg.eigvals(pencil.A, pencil.B)
    omega_max = config.omega_max_factor * float(np.abs(poles).max())

    points = set()
    for pole in poles:
        centre, width = abs(pole.real), abs(pole.imag)
        for k in config.refinement_widths:
            for p in (centre - k * width, centre + k * width):
                if 0 < p < omega_max:
                    points.add(float(p))
    for t in reservoirs.temperatures:
        if 0 < 2 * np.pi * t < omega_max:
            points.add(float(2 * np.pi * t))
    return omega_max, sorted(points)


def integrate(
    integrand: Callable[[float], np.ndarray],
    omega_max: float,
    points: Sequence[float],
    config: QuadratureConfig,
    label: str = "integral",
) -> Tuple[np.ndarray, float]:
    """∫_0^∞ with breakpoints on [0, ω_max] and a separate tail; returns (value, error)."""
    options = dict(epsabs=config.abs_tol, epsrel=config.rel_tol, norm="max", limit=config.max_subdivisions)
    body, body_error, info = scipy.integrate.quad_vec(
        integrand, 0.0, omega_max, points=list(points) or None, full_output=True, **options
    )
    if not info.success:
        raise HeatflowError(
            ErrorCode.QUADRATURE_FAILURE,
            f"{label}: quadrature did not converge on [0, ω_max]",
            status=info.status,
            reason=info.message,
            intervals=len(info.intervals),
            error=float(body_error),
            omega_max=omega_max,
        )
    tail, tail_error, tail_info = scipy.integrate.quad_vec(integrand, omega_max, np.inf, full_output=True, **options)
    if not tail_info.success:
        raise HeatflowError(
            ErrorCode.QUADRATURE_FAILURE,
            f"{label}: tail quadrature did not converge",
            status=tail_info.status,
            reason=tail_info.message,
            omega_max=omega_max,
        )
    logger.debug(
        "%s: %d evaluations, tail beyond ω_max=%.4g is %.3g (error %.2g)",
        label,
        info.neval + tail_info.neval,
        omega_max,
        float(np.abs(tail).max()),
        float(body_error + tail_error),
    )
    return body + tail, float(body_error + tail_error)


def quadrature_covariance(
    network: HarmonicNetwork,
    reservoirs: ReservoirSet,
    config: Optional[QuadratureConfig] = None,
    classical: bool = False,
) -> CovarianceBlocks:
    """σ^(n,m) = Re ∫_0^∞ ω^(n+m) i^(n-m) Ĝ(iω) ν(ω) Ĝ(iω)^† dω."""
    config = config or QuadratureConfig()
    omega_max, points = resonance_breakpoints(network, reservoirs, config)
    values, error = integrate(
        lambda w: covariance_integrand(network, reservoirs, w, classical),
        omega_max,
        points,
        config,
        label="covariance",
    )
    moments = {order: values[k] for k, order in enumerate(BLOCK_ORDERS)}
    valid = True
    if classical or reservoirs.is_infinite_cutoff:
        valid = is_classical(reservoirs, omega_max / config.omega_max_factor)
    blocks = blocks_from_moments(moments, network, _regime(reservoirs), valid)
    blocks.error_estimate = error
    if reservoirs.is_infinite_cutoff and not classical:
        blocks.notes["sigma_pp"] = "high-temperature term only"
    return blocks


def quadrature_heat(
    network: HarmonicNetwork,
    reservoirs: ReservoirSet,
    config: Optional[QuadratureConfig] = None,
    classical: bool = False,
) -> HeatCurrentMatrix:
    config = config or QuadratureConfig()
    reservoirs.require_disjoint()
    omega_max, points = resonance_breakpoints(network, reservoirs, config)
    pairs, error = integrate(
        lambda w: heat_integrand(network, reservoirs, w, classical),
        omega_max,
        points,
        config,
        label="heat",
    )
    currents = HeatCurrentMatrix(pairwise=pairs, regime=_regime(reservoirs), error_estimate=error)
    scale = np.abs(currents.totals).max()
    if scale > 0 and abs(currents.totals.sum()) > max(error * reservoirs.L, 1e-8 * scale):
        logger.warning("oracle currents violate conservation: sum %.3g", float(currents.totals.sum()))
    return currents


@dataclass
class DiscrepancyRow:
    block: str
    i: int
    j: int
    spectral: float
    oracle: float
    rel_error: float
    passed: bool


@dataclass
class DiscrepancyReport:
    """Entry-wise comparison against one magnitude shared by every block in the report.

    Errors are relative to max(|oracle|, floor * scale). Entries below
    ``small_fraction * scale`` get the looser ``small_tolerance``; differences
    below ``atol * scale`` count as exact.
    """

    tolerance: float
    scale: float = 0.0
    floor: float = 1e-3
    atol: float = 1e-12
    small_fraction: float = 1e-10
    small_tolerance: float = 1e-4
    rows: List[DiscrepancyRow] = field(default_factory=list)

    @property
    def passed(self) -> bool:
        return all(row.passed for row in self.rows)

    @property
    def failures(self) -> List[DiscrepancyRow]:
        return [row for row in self.rows if not row.passed]

    @property
    def max_rel_error(self) -> float:
        return max((row.rel_error for row in self.rows), default=0.0)

    def extend(self, block: str, spectral: np.ndarray, oracle: np.ndarray) -> None:
        spectral, oracle = np.atleast_2d(spectral), np.atleast_2d(oracle)
        # an unset scale falls back to this block alone
        norm = max(self.scale, float(np.abs(oracle).max()))
        loose = max(self.small_tolerance, self.tolerance)
        for (i, j), reference in np.ndenumerate(oracle):
            difference = abs(spectral[i, j] - reference)
            scale = max(abs(reference), self.floor * norm)
            if difference <= self.atol * norm:
                rel = 0.0
            else:
                rel = np.inf if scale == 0 else difference / scale
            limit = loose if abs(reference) < self.small_fraction * norm else self.tolerance
            self.rows.append(
                DiscrepancyRow(block, i, j, float(spectral[i, j]), float(reference), float(rel), rel <= limit)
            )

    def to_frame(self) -> pd.DataFrame:
        return pd.DataFrame([row.__dict__ for row in self.rows])

    def to_text(self) -> str:
        lines = [f"{'block':<10} {'i':>3} {'j':>3} {'spectral':>22} {'oracle':>22} {'rel_err':>10}  result"]
        for row in self.rows:
            mark = "pass" if row.passed else "FAIL"
            lines.append(
                f"{row.block:<10} {row.i:>3} {row.j:>3} {row.spectral:>22.14e} {row.oracle:>22.14e} "
                f"{row.rel_error:>10.3e}  {mark}"
            )
        status = "✅ all rows pass" if self.passed else f"❌ {len(self.failures)} of {len(self.rows)} rows fail"
        lines.append(f"{status} (tolerance {self.tolerance:.1e}, max rel_err {self.max_rel_error:.3e})")
        return "\n".join(lines)


def compare_covariance(spectral: CovarianceBlocks, oracle: CovarianceBlocks, tolerance: float = 1e-6) -> DiscrepancyReport:
    scale = max(float(np.abs(block).max()) for block in (oracle.sigma_xx, oracle.sigma_xp, oracle.sigma_pp))
    report = DiscrepancyReport(tolerance, scale=scale)
    report.extend("sigma_xx", spectral.sigma_xx, oracle.sigma_xx)
    report.extend("sigma_xp", spectral.sigma_xp, oracle.sigma_xp)
    report.extend("sigma_pp", spectral.sigma_pp, oracle.sigma_pp)
    return report


def compare_heat(
    spectral: HeatCurrentMatrix,
    oracle: HeatCurrentMatrix,
    tolerance: float = 1e-6,
    reference_scale: float = 0.0,
) -> DiscrepancyReport:
    """``reference_scale`` sets the magnitude when every oracle current vanishes (equal temperatures)."""
    report = DiscrepancyReport(tolerance, scale=max(reference_scale, float(np.abs(oracle.pairwise).max())))
    report.extend("heat", spectral.pairwise, oracle.pairwise)
    return report
