"""Pinned hypercubic lattices with binary mass disorder.

Sites are ordered slab-major: the first lattice coordinate runs along the
transport direction and is the most significant index, so slab ``j`` holds the
contiguous sites ``j*N**(dim-1) ... (j+1)*N**(dim-1) - 1`` and neighbouring slabs
are coupled by ``-coupling`` times the identity.
"""

import logging
from dataclasses import dataclass
from typing import Sequence, Tuple

import numpy as np

from .errors import ErrorCode, HeatflowError
from .network import INFINITE, HarmonicNetwork, ReservoirSet

logger = logging.getLogger(__name__)

BOUNDARIES = ("FIXED", "FREE")


@dataclass(frozen=True)
class LatticeSpec:
    dim: int
    N: int
    k0: float = 10.0
    coupling: float = 1.0
    mass_mean: float = 1.0
    mass_spread: float = 0.0
    seed: int = 0
    boundary: str = "FIXED"

    def __post_init__(self):
        if self.dim not in (1, 2, 3):
            raise HeatflowError(ErrorCode.INVALID_INPUT, "lattice dimension must be 1, 2 or 3", dim=self.dim)
        if self.N < 2:
            raise HeatflowError(ErrorCode.INVALID_INPUT, "lattice needs N >= 2", N=self.N)
        if not 0 <= self.mass_spread < self.mass_mean:
            raise HeatflowError(
                ErrorCode.INVALID_INPUT,
                "mass spread must satisfy 0 <= spread < mean",
                mass_mean=self.mass_mean,
                mass_spread=self.mass_spread,
            )
        if self.boundary not in BOUNDARIES:
            raise HeatflowError(ErrorCode.INVALID_INPUT, f"boundary must be one of {BOUNDARIES}", boundary=self.boundary)
        if self.k0 < 0:
            raise HeatflowError(ErrorCode.INVALID_INPUT, "pinning constant must be nonnegative", k0=self.k0)

    @property
    def K(self) -> int:
        return self.N**self.dim

    @property
    def slab_size(self) -> int:
        return self.N ** (self.dim - 1)


@dataclass(frozen=True)
class DisorderRealization:
    masses: Tuple[float, ...]
    realization_index: int
    parent_seed: int


def realization_rng(seed: int, realization_index: int) -> np.random.Generator:
    """Independent stream per realization so ensembles are order independent."""
    return np.random.default_rng(np.random.SeedSequence(entropy=seed, spawn_key=(realization_index,)))


def disorder_masses(spec: LatticeSpec, realization_index: int) -> np.ndarray:
    K = spec.K
    heavy = K // 2
    masses = np.concatenate(
        [
            np.full(heavy, spec.mass_mean + spec.mass_spread),
            np.full(K - heavy, spec.mass_mean - spec.mass_spread),
        ]
    )
    return realization_rng(spec.seed, realization_index).permutation(masses)


def lattice_potential(spec: LatticeSpec) -> np.ndarray:
    K, N, dim = spec.K, spec.N, spec.dim
    shape = (N,) * dim
    coords = np.array(np.unravel_index(np.arange(K), shape)).T
    potential = np.zeros((K, K))
    neighbours = np.zeros(K)
    for axis in range(dim):
        stride = N ** (dim - 1 - axis)
        sites = np.flatnonzero(coords[:, axis] < N - 1)
        potential[sites, sites + stride] = -spec.coupling
        potential[sites + stride, sites] = -spec.coupling
        neighbours[sites] += 1
        neighbours[sites + stride] += 1
    if spec.boundary == "FIXED":
        diagonal = np.full(K, spec.k0 + 2 * dim * spec.coupling)
    else:
        diagonal = spec.k0 + spec.coupling * neighbours
    potential[np.diag_indices(K)] = diagonal
    return potential


def build_lattice(spec: LatticeSpec, realization_index: int = 0) -> Tuple[HarmonicNetwork, DisorderRealization]:
    """Network for one disorder realization; deterministic in (seed, realization_index)."""
    if realization_index < 0:
        raise HeatflowError(ErrorCode.INVALID_INPUT, "realization index must be nonnegative", index=realization_index)
    masses = disorder_masses(spec, realization_index)
    network = HarmonicNetwork(np.diag(masses), lattice_potential(spec))
    logger.debug("built %dD lattice N=%d (K=%d), realization %d", spec.dim, spec.N, spec.K, realization_index)
    return network, DisorderRealization(tuple(float(m) for m in masses), realization_index, spec.seed)


def contacts_for_lattice(spec: LatticeSpec) -> Tuple[Tuple[int, ...], Tuple[int, ...]]:
    """Sites of the first and the last slab."""
    n = spec.slab_size
    first = tuple(range(n))
    last = tuple(range(spec.K - n, spec.K))
    return first, last


def lattice_reservoirs(
    spec: LatticeSpec,
    temperatures: Sequence[float],
    gamma0: float,
    cutoff: float = INFINITE,
) -> ReservoirSet:
    return ReservoirSet(contacts_for_lattice(spec), tuple(temperatures), gamma0, cutoff)


def slab_reversal(spec: LatticeSpec) -> np.ndarray:
    """Permutation mapping slab j to slab N-1-j, keeping the transverse index."""
    n = spec.slab_size
    idx = np.arange(spec.K)
    slab, transverse = divmod(idx, n)
    return (spec.N - 1 - slab) * n + transverse
