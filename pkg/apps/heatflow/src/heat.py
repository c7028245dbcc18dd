"""Stationary heat currents between reservoirs.

Sign convention: q[l, l'] > 0 and Q_l > 0 mean energy flows from reservoir l
into the network.
"""

import logging
from dataclasses import dataclass
from typing import Optional

import numpy as np
import scipy.integrate

from .digamma import omega_coth, thermal_digamma
from .errors import ErrorCode, HeatflowError
from .network import HarmonicNetwork, ReservoirSet
from .normal_modes import ClosedModes, cluster_contact_blocks, perturb_modes
from .spectral import ModeSet, PencilKind, green_direct
from .stationary import IMAGINARY_TOLERANCE, CovarianceBlocks, Regime

logger = logging.getLogger(__name__)


@dataclass
class HeatCurrentMatrix:
    pairwise: np.ndarray
    regime: Regime
    imag_residual: float = 0.0
    per_mode: Optional[np.ndarray] = None
    error_estimate: Optional[float] = None

    @property
    def totals(self) -> np.ndarray:
        """Q_l = sum_{l' != l} q[l, l']."""
        return self.pairwise.sum(axis=1)

    @property
    def L(self) -> int:
        return self.pairwise.shape[0]

    def conservation_residual(self) -> float:
        totals = self.totals
        scale = np.abs(totals).max()
        return 0.0 if scale == 0 else float(abs(totals.sum()) / scale)


@dataclass
class TransmissionSpectrum:
    """values[l, l', k] = Q_ll'(ω_k); diagonal from the Im-Tr form."""

    frequencies: np.ndarray
    values: np.ndarray

    def current(self, l: int, lp: int, temperatures) -> float:
        """Trapezoid estimate of q[l, l'] on this grid."""
        weight = omega_coth(self.frequencies, temperatures[l]) - omega_coth(self.frequencies, temperatures[lp])
        return float(scipy.integrate.trapezoid(-self.values[l, lp] * weight, self.frequencies))


@dataclass
class SymmetricEstimate:
    current: float
    per_site: float
    contact_size: int
    mean_inverse_mass: float


def delta_ll(omega, t_l: float, t_lp: float, classical: bool = False):
    """Δ_ll'(ω) = 2i(T_l - T_l')/ω - (2/π)[ψ(1 - iω/2πT_l) - ψ(1 - iω/2πT_l')]."""
    omega = np.asarray(omega, dtype=complex)
    if np.any(omega == 0):
        raise HeatflowError(ErrorCode.DIVERGENT_ARGUMENT, "Δ is singular at ω = 0")
    if t_l == t_lp:
        result = np.zeros_like(omega)
    else:
        result = 2j * (t_l - t_lp) / omega
        if not classical:
            result = result - (2 / np.pi) * (thermal_digamma(omega, t_l) - thermal_digamma(omega, t_lp))
    return result if result.ndim else complex(result)


def _assemble(pairs: np.ndarray, regime: Regime, per_mode=None) -> HeatCurrentMatrix:
    scale = max(np.abs(pairs.real).max(), np.finfo(float).tiny)
    residual = float(np.abs(pairs.imag).max() / scale)
    if residual > IMAGINARY_TOLERANCE:
        logger.warning("heat currents: imaginary residue %.3g", residual)
    return HeatCurrentMatrix(pairwise=pairs.real, regime=regime, imag_residual=residual, per_mode=per_mode)


def heat_finite_cutoff(
    modes: ModeSet,
    reservoirs: ReservoirSet,
    classical: bool = False,
) -> HeatCurrentMatrix:
    """Cubic pole sum; poles at ω = iΛ are left out of the outer index."""
    if modes.kind is not PencilKind.CUBIC:
        raise HeatflowError(ErrorCode.INVALID_INPUT, "finite-cutoff currents need a cubic mode set")
    reservoirs.require_disjoint()
    lam, gamma0 = reservoirs.cutoff, reservoirs.gamma0
    R, Lh = modes.right, modes.left_h
    omega = modes.poles
    keep = modes.retained()
    denominator = omega[:, None] + omega[None, :]

    # overlaps[l][b, a] = l_b^† P_l r_a
    overlaps = [(Lh * w) @ R for w in reservoirs.weights(modes.pencil.K)]
    temperatures = reservoirs.temperatures
    L = reservoirs.L
    pairs = np.zeros((L, L), dtype=complex)
    w = omega[keep]
    for l in range(L):
        for lp in range(L):
            if l == lp or temperatures[l] == temperatures[lp]:
                continue
            weight = w**3 * delta_ll(w, temperatures[l], temperatures[lp], classical) / (w**2 + lam**2)
            inner = (overlaps[l].T * overlaps[lp] / denominator)[keep]
            pairs[l, lp] = (2 * gamma0 * lam**2) ** 2 * np.sum(weight * inner.sum(axis=1))
    return _assemble(pairs, Regime.FINITE_CUTOFF)


def heat_infinite_cutoff(
    modes: ModeSet,
    reservoirs: ReservoirSet,
    classical: bool = False,
) -> HeatCurrentMatrix:
    if modes.kind is not PencilKind.QUADRATIC:
        raise HeatflowError(ErrorCode.INVALID_INPUT, "infinite-cutoff currents need a quadratic mode set")
    reservoirs.require_disjoint()
    gamma0 = reservoirs.gamma0
    R = modes.right
    omega = modes.poles
    denominator = omega[:, None] + omega[None, :]

    overlaps = [R.T @ (w[:, None] * R) for w in reservoirs.weights(modes.pencil.K)]
    kernel = (omega**4)[:, None] * omega[None, :] / denominator
    temperatures = reservoirs.temperatures
    L = reservoirs.L
    pairs = np.zeros((L, L), dtype=complex)
    for l in range(L):
        for lp in range(L):
            if l == lp or temperatures[l] == temperatures[lp]:
                continue
            delta = delta_ll(omega, temperatures[l], temperatures[lp], classical)
            pairs[l, lp] = -4 * gamma0**2 * np.sum(delta[:, None] * kernel * overlaps[l] * overlaps[lp].T)
    return _assemble(pairs, Regime.INFINITE_CUTOFF)


def heat_weak_coupling(
    modes: ClosedModes,
    reservoirs: ReservoirSet,
    classical: bool = False,
) -> HeatCurrentMatrix:
    """q[l, l'] = γ0 sum_a I_a(l, l') Re(-iΩ_a Δ_ll'(Ω_a)), per-mode terms in ``per_mode``.

    I_a = a_l a_l' / a_T for an isolated mode (a_l = q_a^T P_l q_a); inside a
    degenerate cluster I_a = sum_b 2 D_l[a,b] D_l'[a,b] / (d_a + d_b) in the
    eigenbasis of the cluster damping matrix D_T.
    """
    reservoirs.require_disjoint()
    perturbed = perturb_modes(modes, reservoirs, with_corrections=False)
    gamma0 = reservoirs.gamma0
    temperatures = reservoirs.temperatures
    L, K = reservoirs.L, modes.K
    per_mode = np.zeros((K, L, L))

    for cluster in perturbed.clusters:
        blocks = cluster_contact_blocks(perturbed, reservoirs, cluster)
        damping, rotation = np.linalg.eigh(blocks.sum(axis=0))
        blocks = np.einsum("ai,lab,bj->lij", rotation, blocks, rotation)
        active = damping > 1e-12 * max(1.0, damping.max())
        if not active.any():
            continue
        d = damping[active]
        blocks = blocks[:, active][:, :, active]
        pair_width = d[:, None] + d[None, :]
        frequency = float(perturbed.frequencies[cluster[0]])
        members = np.asarray(cluster)[np.flatnonzero(active)]
        for l in range(L):
            for lp in range(L):
                if l == lp or temperatures[l] == temperatures[lp]:
                    continue
                conduction = (2 * blocks[l] * blocks[lp] / pair_width).sum(axis=1)
                thermal = (-1j * frequency * delta_ll(frequency, temperatures[l], temperatures[lp], classical)).real
                per_mode[members, l, lp] = gamma0 * conduction * thermal

    return HeatCurrentMatrix(pairwise=per_mode.sum(axis=0), regime=Regime.WEAK, per_mode=per_mode)


def conduction_weights(modes: ClosedModes, reservoirs: ReservoirSet, l: int = 0, lp: int = 1) -> np.ndarray:
    """Per-mode I_a for the reservoir pair (l, l'), independent of temperatures."""
    hot = reservoirs.with_temperatures([2.0 if i == l else 1.0 for i in range(reservoirs.L)])
    currents = heat_weak_coupling(modes, hot, classical=True)
    return currents.per_mode[:, l, lp] / (2 * reservoirs.gamma0)


def heat_symmetric_estimate(
    network: HarmonicNetwork,
    reservoirs: ReservoirSet,
    permutation: Optional[np.ndarray] = None,
    check_symmetry: bool = True,
    tol: float = 1e-9,
) -> SymmetricEstimate:
    """q = c γ0 <1/m> (T_A - T_B) for mirror-symmetric two-reservoir networks."""
    if reservoirs.L != 2:
        raise HeatflowError(ErrorCode.INVALID_INPUT, "symmetric estimate needs exactly two reservoirs")
    if not network.is_diagonal_mass:
        raise HeatflowError(ErrorCode.INVALID_INPUT, "symmetric estimate needs a diagonal mass matrix")
    K = network.K
    weights = reservoirs.weights(K)
    if check_symmetry:
        perm = np.arange(K)[::-1] if permutation is None else np.asarray(permutation)
        M, V = network.mass, network.potential
        mismatch = max(
            np.abs(M - M[np.ix_(perm, perm)]).max() / np.abs(M).max(),
            np.abs(V - V[np.ix_(perm, perm)]).max() / np.abs(V).max(),
            np.abs(weights[0] - weights[1][perm]).max(),
        )
        if mismatch > tol:
            raise HeatflowError(ErrorCode.NOT_SYMMETRIC, "network is not mirror symmetric", mismatch=float(mismatch))

    sites = list(reservoirs.contacts[0])
    inverse_mass = float(np.mean(1.0 / np.diag(network.mass)[sites]))
    c = len(sites)
    t_a, t_b = reservoirs.temperatures
    current = c * reservoirs.gamma0 * inverse_mass * (t_a - t_b)
    return SymmetricEstimate(current=current, per_site=current / c, contact_size=c, mean_inverse_mass=inverse_mass)


def coupling_spectrum(reservoirs: ReservoirSet, omega: np.ndarray) -> np.ndarray:
    """Scalar part of I_l(ω) = (2/π) γ0 ω Λ^2/(ω^2 + Λ^2)."""
    omega = np.asarray(omega, dtype=float)
    value = (2 / np.pi) * reservoirs.gamma0 * omega
    if not reservoirs.is_infinite_cutoff:
        lam = reservoirs.cutoff
        value = value * lam**2 / (omega**2 + lam**2)
    return value


def transmission_spectrum(
    network: HarmonicNetwork,
    reservoirs: ReservoirSet,
    frequencies,
) -> TransmissionSpectrum:
    """Q_ll'(ω) = -π Tr(I_l Ĝ(iω) I_l' Ĝ†(iω)) for l != l'.

    Diagonal entries use Q_ll = -Im Tr(I_l Ĝ) - π Tr(I_l Ĝ I_l Ĝ†) so that
    every column sums to zero.
    """
    reservoirs.require_disjoint()
    frequencies = np.asarray(frequencies, dtype=float)
    weights = reservoirs.weights(network.K)
    L = reservoirs.L
    values = np.zeros((L, L, len(frequencies)))
    couplings = coupling_spectrum(reservoirs, frequencies)
    for k, omega in enumerate(frequencies):
        green = _green_on_axis(network, reservoirs, omega)
        power = np.abs(green) ** 2
        c = couplings[k]
        for l in range(L):
            for lp in range(L):
                values[l, lp, k] = -np.pi * c * c * (weights[l] @ power @ weights[lp])
            values[l, l, k] -= c * float(np.sum(weights[l] * np.diag(green).imag))
    return TransmissionSpectrum(frequencies=frequencies, values=values)


def transmission(network: HarmonicNetwork, reservoirs: ReservoirSet, l: int, lp: int, frequencies) -> np.ndarray:
    if l == lp:
        raise HeatflowError(ErrorCode.INVALID_INPUT, "transmission is defined between distinct reservoirs", l=l)
    return transmission_spectrum(network, reservoirs, frequencies).values[l, lp]


def _green_on_axis(network: HarmonicNetwork, reservoirs: ReservoirSet, omega: float) -> np.ndarray:
    green = green_direct(network, reservoirs, 1j * omega)
    if not np.all(np.isfinite(green)) or np.linalg.cond(green) > 1e15:
        raise HeatflowError(ErrorCode.POLE_EVALUATION, "frequency grid hits a pole", omega=float(omega))
    return green


def heat_from_covariance(cov: CovarianceBlocks, network: HarmonicNetwork, reservoirs: ReservoirSet) -> np.ndarray:
    """Q_l = Tr(P_l V_R <x dx/dt^T>), the power delivered to the contacted sites."""
    velocity_corr = cov.sigma_xp @ network.inverse_mass()
    injected = network.potential @ velocity_corr
    return reservoirs.weights(network.K) @ np.diag(injected)
