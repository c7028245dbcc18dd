"""Closed-network normal modes and their first-order damping."""

import logging
from dataclasses import dataclass, replace
from typing import Optional, Tuple

import numpy as np
import scipy.linalg

from .errors import ErrorCode, HeatflowError
from .network import HarmonicNetwork, ReservoirSet
from .spectral import value_clusters

logger = logging.getLogger(__name__)

CLUSTER_TOLERANCE = 1e-8
UNDAMPED_TOLERANCE = 1e-12


@dataclass(frozen=True)
class ClosedModes:
    """Frequencies Ω_a and M-orthonormal real vectors q_a (columns).

    Exactly degenerate frequencies are grouped in ``clusters``. After
    :func:`perturb_modes` the vectors inside each cluster diagonalize the
    restricted damping matrix and ``decay_rates`` holds Γ_a.
    """

    frequencies: np.ndarray
    vectors: np.ndarray
    clusters: Tuple[Tuple[int, ...], ...]
    decay_rates: Optional[np.ndarray] = None
    corrected_vectors: Optional[np.ndarray] = None
    undamped: Optional[np.ndarray] = None

    @property
    def K(self) -> int:
        return len(self.frequencies)

    def poles(self) -> np.ndarray:
        """Positive-frequency branch ω_a = Ω_a + iΓ_a."""
        if self.decay_rates is None:
            raise HeatflowError(ErrorCode.INVALID_INPUT, "decay rates not computed; call perturb_modes first")
        return self.frequencies + 1j * self.decay_rates


def closed_modes(network: HarmonicNetwork, cluster_tolerance: float = CLUSTER_TOLERANCE) -> ClosedModes:
    squared, vectors = scipy.linalg.eigh(network.potential, network.mass)
    if squared.min() <= 0:
        raise HeatflowError(
            ErrorCode.UNSTABLE_NETWORK,
            "closed network has a non-positive squared frequency",
            min_squared_frequency=float(squared.min()),
        )
    frequencies = np.sqrt(squared)
    clusters = value_clusters(frequencies, cluster_tolerance * frequencies.max())
    return ClosedModes(frequencies, vectors, tuple(tuple(int(i) for i in c) for c in clusters))


def contact_overlaps(modes: ClosedModes, reservoirs: ReservoirSet) -> np.ndarray:
    """(L, K, K) array of q_a^T P_l q_b."""
    weights = reservoirs.weights(modes.K)
    return np.einsum("ia,li,ib->lab", modes.vectors, weights, modes.vectors)


def perturb_modes(
    modes: ClosedModes,
    reservoirs: ReservoirSet,
    with_corrections: bool = True,
) -> ClosedModes:
    """Decay rates Γ_a = γ0 q_a^T P_T q_a and first-order corrected vectors.

    Degenerate clusters are rotated to diagonalize q^T P_T q inside the
    cluster. Corrections use the branch ω_a = Ω_a + iΓ_a and skip partners
    from the same cluster.
    """
    gamma0 = reservoirs.gamma0
    vectors = modes.vectors.copy()
    damping = contact_overlaps(modes, reservoirs).sum(axis=0)
    for cluster in modes.clusters:
        if len(cluster) > 1:
            idx = list(cluster)
            _, rotation = np.linalg.eigh(damping[np.ix_(idx, idx)])
            vectors[:, idx] = vectors[:, idx] @ rotation

    rotated = replace(modes, vectors=vectors)
    damping = contact_overlaps(rotated, reservoirs).sum(axis=0)
    weight = np.clip(np.diag(damping), 0.0, None)
    decay = gamma0 * weight
    undamped = weight <= UNDAMPED_TOLERANCE * max(1.0, weight.max())
    if undamped.any():
        logger.warning("%d normal modes have no weight on any contact", int(undamped.sum()))

    omega = modes.frequencies
    cluster_of = np.empty(modes.K, dtype=int)
    for c, cluster in enumerate(modes.clusters):
        cluster_of[list(cluster)] = c
    distinct = cluster_of[:, None] != cluster_of[None, :]

    if distinct.any():
        spacing = np.abs(omega[:, None] - omega[None, :])
        widths = decay[:, None] + decay[None, :]
        with np.errstate(divide="ignore", invalid="ignore"):
            ratio = np.where(distinct & (widths > 0), spacing / widths, np.inf)
        worst = float(ratio.min())
        if worst < 10:
            logger.warning("weak-coupling condition is marginal: min spacing/width ratio %.3g", worst)
        if with_corrections and worst < 1:
            raise HeatflowError(
                ErrorCode.DEGENERATE_SPECTRUM,
                "overlapping resonances between distinct frequencies; perturbative vectors are invalid",
                min_ratio=worst,
            )

    corrected = None
    if with_corrections:
        with np.errstate(divide="ignore", invalid="ignore"):
            factor = np.where(
                distinct,
                omega[None, :] / (omega[:, None] ** 2 - omega[None, :] ** 2) * damping,
                0.0,
            )
        corrected = vectors - 2j * gamma0 * (vectors @ factor)

    logger.debug("perturbed %d modes, max decay rate %.4g", modes.K, float(decay.max()))
    return replace(
        rotated,
        decay_rates=decay,
        corrected_vectors=corrected,
        undamped=undamped,
    )


def cluster_contact_blocks(modes: ClosedModes, reservoirs: ReservoirSet, cluster: Tuple[int, ...]) -> np.ndarray:
    """(L, d, d) restricted contact matrices q_a^T P_l q_b inside one cluster."""
    q = modes.vectors[:, list(cluster)]
    weights = reservoirs.weights(modes.K)
    return np.einsum("ia,li,ib->lab", q, weights, q)
