"""Stationary covariance matrix of the network in the three coupling regimes.

The pole sums produce the velocity correlations σ^(n,m) = <x^(n) x^(m)T>
(σ^(0,1)_ij = <x_i dx_j/dt>); they are converted to positions and momenta
with p = M dx/dt when the blocks are assembled.
"""

import logging
from dataclasses import dataclass, field
from enum import Enum
from typing import Dict, Optional, Tuple

import numpy as np
import scipy.linalg

from .digamma import thermal_digamma
from .errors import ErrorCode, HeatflowError
from .network import HarmonicNetwork, ReservoirSet
from .normal_modes import ClosedModes, cluster_contact_blocks, perturb_modes
from .spectral import ModeSet, PencilKind, spectral_product

logger = logging.getLogger(__name__)

IMAGINARY_TOLERANCE = 1e-9
CLASSICALITY_FACTOR = 10.0
BLOCK_ORDERS = ((0, 0), (0, 1), (1, 1))


class Regime(str, Enum):
    FINITE_CUTOFF = "FINITE_CUTOFF"
    INFINITE_CUTOFF = "INFINITE_CUTOFF"
    WEAK = "WEAK"


@dataclass
class CovarianceBlocks:
    sigma_xx: np.ndarray
    sigma_xp: np.ndarray
    sigma_pp: np.ndarray
    regime: Regime
    pp_low_T_valid: bool
    imag_residual: float = 0.0
    error_estimate: Optional[float] = None
    notes: Dict[str, str] = field(default_factory=dict)

    @property
    def K(self) -> int:
        return self.sigma_xx.shape[0]

    def full_matrix(self) -> np.ndarray:
        """Symmetrized 2K x 2K covariance of (x, p)."""
        return np.block([[self.sigma_xx, self.sigma_xp], [self.sigma_xp.T, self.sigma_pp]])

    def uncertainty_min_eigenvalue(self) -> float:
        """Smallest eigenvalue of Σ + (i/2) J; nonnegative for a physical state."""
        K = self.K
        J = np.block([[np.zeros((K, K)), np.eye(K)], [-np.eye(K), np.zeros((K, K))]])
        return float(np.linalg.eigvalsh(self.full_matrix() + 0.5j * J).min())

    def stationarity_residual(self, network: HarmonicNetwork) -> float:
        inv_m = network.inverse_mass()
        residual = inv_m @ self.sigma_xp.T + self.sigma_xp @ inv_m
        return float(np.abs(residual).max())


@dataclass
class LocalTemperatures:
    values: np.ndarray
    high_t_only: bool


def blocks_from_moments(
    moments: Dict[Tuple[int, int], np.ndarray],
    network: HarmonicNetwork,
    regime: Regime,
    pp_low_T_valid: bool,
    imag_residual: float = 0.0,
) -> CovarianceBlocks:
    M = network.mass
    xx = moments[(0, 0)]
    pp = M @ moments[(1, 1)] @ M
    return CovarianceBlocks(
        sigma_xx=0.5 * (xx + xx.T),
        sigma_xp=moments[(0, 1)] @ M,
        sigma_pp=0.5 * (pp + pp.T),
        regime=regime,
        pp_low_T_valid=pp_low_T_valid,
        imag_residual=imag_residual,
    )


def is_classical(reservoirs: ReservoirSet, max_frequency: float, factor: float = CLASSICALITY_FACTOR) -> bool:
    return min(reservoirs.temperatures) >= factor * max_frequency


def _low_temperature_weights(modes: ModeSet, reservoirs: ReservoirSet, overlaps: np.ndarray) -> np.ndarray:
    """sum_l (ω_a/iπ) ψ(1 - iω_a/2πT_l) overlaps[l][a, b]."""
    omega = modes.poles
    total = np.zeros_like(overlaps[0])
    for l, temperature in enumerate(reservoirs.temperatures):
        coefficient = omega / (1j * np.pi) * thermal_digamma(omega, temperature)
        total += coefficient[:, None] * overlaps[l]
    return total


def _pair_denominator(omega: np.ndarray) -> np.ndarray:
    denominator = omega[:, None] + omega[None, :]
    if np.abs(denominator).min() <= 1e-14 * np.abs(omega).max():
        raise HeatflowError(ErrorCode.NUMERICAL_DEGENERACY, "pole collision ω_a + ω_b ≈ 0")
    return denominator


def _real_parts(values: Dict[Tuple[int, int], np.ndarray]) -> Tuple[Dict[Tuple[int, int], np.ndarray], float]:
    """Drop imaginary parts, measured against the largest real entry of the whole state."""
    scale = max(max(float(np.abs(v.real).max()) for v in values.values()), np.finfo(float).tiny)
    residual = 0.0
    for (n, m), value in values.items():
        r = float(np.abs(value.imag).max() / scale)
        if r > IMAGINARY_TOLERANCE:
            logger.warning("σ^(%d,%d): imaginary residue %.3g exceeds %.0e", n, m, r, IMAGINARY_TOLERANCE)
        residual = max(residual, r)
    return {key: value.real for key, value in values.items()}, residual


def covariance_finite_cutoff(
    modes: ModeSet,
    reservoirs: ReservoirSet,
    network: HarmonicNetwork,
    classical: bool = False,
    deterministic: bool = False,
    classicality_factor: float = CLASSICALITY_FACTOR,
) -> CovarianceBlocks:
    """σ = σ_H - (σ_L + (-1)^(n+m) σ_L^T) from the cubic pole sums."""
    if modes.kind is not PencilKind.CUBIC:
        raise HeatflowError(ErrorCode.INVALID_INPUT, "finite-cutoff covariance needs a cubic mode set")
    lam, gamma0 = reservoirs.cutoff, reservoirs.gamma0
    R, Lh = modes.right, modes.left_h
    omega = modes.poles
    denominator = _pair_denominator(omega)

    weights = reservoirs.weights(network.K)
    overlaps = np.stack([(Lh * w) @ R for w in weights])
    high = np.tensordot(2 * np.asarray(reservoirs.temperatures), overlaps, axes=1)
    low = None if classical else _low_temperature_weights(modes, reservoirs, overlaps)

    def pole_sum(weight: np.ndarray, n: int, m: int) -> np.ndarray:
        coefficients = (omega ** (n + m))[:, None] * weight / denominator
        total = (1j ** (n - m + 1)) * spectral_product(R, coefficients, Lh, deterministic)
        return 2 * gamma0 * lam**2 * total

    values = {}
    for n, m in BLOCK_ORDERS:
        value = pole_sum(high, n, m)
        if low is not None:
            sigma_low = pole_sum(low, n, m)
            value = value - (sigma_low + (-1) ** (n + m) * sigma_low.T)
        values[(n, m)] = value
    moments, residual = _real_parts(values)

    valid = True
    if classical:
        max_frequency = np.abs(omega[modes.retained()].real).max()
        valid = is_classical(reservoirs, max_frequency, classicality_factor)
    logger.debug("finite-cutoff covariance: K=%d, imaginary residue %.2e", network.K, residual)
    return blocks_from_moments(moments, network, Regime.FINITE_CUTOFF, valid, residual)


def covariance_infinite_cutoff(
    modes: ModeSet,
    reservoirs: ReservoirSet,
    network: HarmonicNetwork,
    classical: bool = False,
    deterministic: bool = False,
    classicality_factor: float = CLASSICALITY_FACTOR,
) -> CovarianceBlocks:
    """Quadratic pole sums; σ_pp keeps only the high-temperature term."""
    if modes.kind is not PencilKind.QUADRATIC:
        raise HeatflowError(ErrorCode.INVALID_INPUT, "infinite-cutoff covariance needs a quadratic mode set")
    gamma0 = reservoirs.gamma0
    R = modes.right
    omega = modes.poles
    denominator = _pair_denominator(omega)

    weights = reservoirs.weights(network.K)
    overlaps = np.stack([R.T @ (w[:, None] * R) for w in weights])
    high = np.tensordot(2 * np.asarray(reservoirs.temperatures), overlaps, axes=1)
    low = None if classical else _low_temperature_weights(modes, reservoirs, overlaps)

    def pole_sum(weight: np.ndarray, n: int, m: int) -> np.ndarray:
        coefficients = (omega ** (n + m + 1))[:, None] * omega[None, :] * weight / denominator
        total = (1j ** (n - m - 1)) * spectral_product(R, coefficients, R.T, deterministic)
        return 2 * gamma0 * total

    values = {}
    for n, m in BLOCK_ORDERS:
        value = pole_sum(high, n, m)
        # the low-temperature (1,1) sum diverges for memoryless damping
        if low is not None and (n, m) != (1, 1):
            sigma_low = pole_sum(low, n, m)
            value = value - (sigma_low + (-1) ** (n + m) * sigma_low.T)
        values[(n, m)] = value
    moments, residual = _real_parts(values)

    valid = is_classical(reservoirs, np.abs(omega.real).max(), classicality_factor)
    blocks = blocks_from_moments(moments, network, Regime.INFINITE_CUTOFF, valid, residual)
    blocks.notes["sigma_pp"] = "high-temperature term only"
    return blocks


def covariance_weak_coupling(
    modes: ClosedModes,
    reservoirs: ReservoirSet,
    network: HarmonicNetwork,
    quantum: bool = False,
    classicality_factor: float = CLASSICALITY_FACTOR,
) -> CovarianceBlocks:
    """Leading-order state: each mode at the contact-weighted average temperature.

    With ``quantum=True`` the classical weight 2T_l/Ω is replaced by coth(Ω/2T_l).
    Degenerate clusters solve D_T C + C D_T = 2 sum_l θ_l D_l inside the cluster,
    which reduces to the weighted average for a single mode.
    """
    perturbed = perturb_modes(modes, reservoirs, with_corrections=False)
    K = network.K
    xx = np.zeros((K, K))
    vv = np.zeros((K, K))
    temperatures = np.asarray(reservoirs.temperatures)

    for cluster in perturbed.clusters:
        blocks = cluster_contact_blocks(perturbed, reservoirs, cluster)
        total = blocks.sum(axis=0)
        if np.linalg.eigvalsh(total).min() <= 1e-12 * max(1.0, np.abs(total).max()):
            raise HeatflowError(
                ErrorCode.UNDAMPED_MODE,
                "normal mode without contact weight has no stationary temperature",
                frequency=float(perturbed.frequencies[cluster[0]]),
            )
        frequency = float(perturbed.frequencies[cluster[0]])
        if quantum:
            theta = np.array([_bose_energy(frequency, t) for t in temperatures])
        else:
            theta = temperatures
        source = np.tensordot(2 * theta, blocks, axes=1)
        occupation = scipy.linalg.solve_continuous_lyapunov(total, source)
        q = perturbed.vectors[:, list(cluster)]
        mode_matrix = q @ occupation @ q.T
        xx += mode_matrix / frequency**2
        vv += mode_matrix

    moments = {(0, 0): xx, (0, 1): np.zeros((K, K)), (1, 1): vv}
    valid = quantum or is_classical(reservoirs, perturbed.frequencies.max(), classicality_factor)
    return blocks_from_moments(moments, network, Regime.WEAK, valid)


def _bose_energy(frequency: float, temperature: float) -> float:
    """(Ω/2) coth(Ω/2T), the quantum replacement of T."""
    if temperature == 0:
        return 0.5 * frequency
    return 0.5 * frequency / np.tanh(frequency / (2 * temperature))


def local_temperatures(cov: CovarianceBlocks, network: HarmonicNetwork) -> LocalTemperatures:
    """Kinetic temperature <p_i^2>/m_i per site."""
    values = np.diag(cov.sigma_pp) / np.diag(network.mass)
    if not cov.pp_low_T_valid:
        logger.info("local temperatures flagged HIGH_T_ONLY")
    return LocalTemperatures(values=values, high_t_only=not cov.pp_low_T_valid)
