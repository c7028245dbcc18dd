"""Harmonic networks, reservoir couplings and their validation."""

import logging
import math
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import List, Optional, Sequence, Tuple

import numpy as np

from .errors import ErrorCode, HeatflowError

logger = logging.getLogger(__name__)

INFINITE = math.inf


def _frozen(array: np.ndarray) -> np.ndarray:
    array = np.array(array, dtype=float, copy=True)
    array.setflags(write=False)
    return array


@dataclass(frozen=True)
class HarmonicNetwork:
    """K coupled oscillators: mass matrix M and renormalized potential V_R."""

    mass: np.ndarray
    potential: np.ndarray

    def __post_init__(self):
        mass = np.atleast_2d(np.asarray(self.mass, dtype=float))
        potential = np.atleast_2d(np.asarray(self.potential, dtype=float))
        if mass.ndim != 2 or mass.shape[0] != mass.shape[1]:
            raise HeatflowError(ErrorCode.INVALID_INPUT, "mass matrix must be square", shape=mass.shape)
        if potential.shape != mass.shape:
            raise HeatflowError(
                ErrorCode.INVALID_INPUT,
                "potential and mass matrices must have the same shape",
                mass_shape=mass.shape,
                potential_shape=potential.shape,
            )
        if not (np.all(np.isfinite(mass)) and np.all(np.isfinite(potential))):
            raise HeatflowError(ErrorCode.INVALID_INPUT, "network matrices contain non-finite entries")
        object.__setattr__(self, "mass", _frozen(mass))
        object.__setattr__(self, "potential", _frozen(potential))

    @property
    def K(self) -> int:
        return self.mass.shape[0]

    @property
    def is_diagonal_mass(self) -> bool:
        return bool(np.all(self.mass == np.diag(np.diag(self.mass))))

    def inverse_mass(self) -> np.ndarray:
        if self.is_diagonal_mass:
            return np.diag(1.0 / np.diag(self.mass))
        return np.linalg.inv(self.mass)

    @classmethod
    def from_files(cls, mass_path: str, potential_path: str) -> "HarmonicNetwork":
        return cls(load_matrix(mass_path), load_matrix(potential_path))


@dataclass(frozen=True)
class ReservoirSet:
    """Ohmic reservoirs sharing the coupling gamma0 and Lorentz-Drude cutoff.

    ``cutoff`` is a positive float or ``INFINITE``. Contact sets define the
    diagonal 0/1 projectors P_l; overlaps are allowed here and reported by
    :func:`validate`, the heat routines refuse them.
    """

    contacts: Tuple[Tuple[int, ...], ...]
    temperatures: Tuple[float, ...]
    gamma0: float
    cutoff: float = INFINITE

    def __post_init__(self):
        contacts = tuple(tuple(int(i) for i in sites) for sites in self.contacts)
        temperatures = tuple(float(t) for t in self.temperatures)
        if not contacts:
            raise HeatflowError(ErrorCode.INVALID_INPUT, "at least one reservoir is required")
        if len(contacts) != len(temperatures):
            raise HeatflowError(
                ErrorCode.INVALID_INPUT,
                "one temperature per reservoir is required",
                reservoirs=len(contacts),
                temperatures=len(temperatures),
            )
        if any(len(sites) == 0 for sites in contacts):
            raise HeatflowError(ErrorCode.INVALID_INPUT, "empty contact set")
        if any(not math.isfinite(t) or t < 0 for t in temperatures):
            raise HeatflowError(ErrorCode.INVALID_INPUT, "temperatures must be finite and nonnegative")
        if not (self.gamma0 > 0 and math.isfinite(self.gamma0)):
            raise HeatflowError(ErrorCode.INVALID_INPUT, "gamma0 must be positive", gamma0=self.gamma0)
        if not self.cutoff > 0:
            raise HeatflowError(ErrorCode.INVALID_INPUT, "cutoff must be positive", cutoff=self.cutoff)
        object.__setattr__(self, "contacts", contacts)
        object.__setattr__(self, "temperatures", temperatures)
        object.__setattr__(self, "gamma0", float(self.gamma0))
        object.__setattr__(self, "cutoff", float(self.cutoff))

    @property
    def L(self) -> int:
        return len(self.contacts)

    @property
    def is_infinite_cutoff(self) -> bool:
        return math.isinf(self.cutoff)

    def weights(self, K: int) -> np.ndarray:
        """Diagonals of the projectors P_l as an (L, K) array."""
        masks = np.zeros((self.L, K))
        for l, sites in enumerate(self.contacts):
            for i in sites:
                if not 0 <= i < K:
                    raise HeatflowError(ErrorCode.INVALID_INPUT, "contact site out of range", site=i, K=K)
                masks[l, i] = 1.0
        return masks

    def projectors(self, K: int) -> np.ndarray:
        """P_l as an (L, K, K) array."""
        return np.stack([np.diag(w) for w in self.weights(K)])

    def total_projector(self, K: int) -> np.ndarray:
        """P_T = sum_l P_l."""
        return np.diag(self.weights(K).sum(axis=0))

    def has_overlap(self) -> bool:
        seen = set()
        for sites in self.contacts:
            if seen.intersection(sites):
                return True
            seen.update(sites)
        return False

    def require_disjoint(self) -> None:
        if self.has_overlap():
            raise HeatflowError(
                ErrorCode.CONTACT_OVERLAP,
                "reservoir contact sets must be pairwise disjoint",
                contacts=[list(c) for c in self.contacts],
            )

    def with_temperatures(self, temperatures: Sequence[float]) -> "ReservoirSet":
        return replace(self, temperatures=tuple(temperatures))

    def with_coupling(self, gamma0: Optional[float] = None, cutoff: Optional[float] = None) -> "ReservoirSet":
        return replace(
            self,
            gamma0=self.gamma0 if gamma0 is None else gamma0,
            cutoff=self.cutoff if cutoff is None else cutoff,
        )


@dataclass
class ValidationReport:
    K: int
    rank_total_projector: int
    lambda_pole_multiplicity: int
    min_potential_eigenvalue: float
    errors: List[str] = field(default_factory=list)
    warnings: List[str] = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return not self.errors

    def summary(self) -> str:
        status = "✅ OK" if self.ok else "❌ INVALID"
        lines = [
            f"{status}: K={self.K}, rank(P_T)={self.rank_total_projector}, "
            f"iΛ-pole multiplicity={self.lambda_pole_multiplicity}"
        ]
        lines += [f"  ❌ {e}" for e in self.errors]
        lines += [f"  ⚠️ {w}" for w in self.warnings]
        return "\n".join(lines)


def validate(network: HarmonicNetwork, reservoirs: ReservoirSet, tol: float = 1e-10) -> ValidationReport:
    """Check the assumptions the solvers rely on. Never raises."""
    K = network.K
    M, V = network.mass, network.potential
    errors: List[str] = []
    warnings: List[str] = []

    scale_m = max(np.abs(M).max(), 1.0)
    scale_v = max(np.abs(V).max(), 1.0)
    if np.abs(M - M.T).max() > tol * scale_m:
        errors.append("mass matrix is not symmetric")
    elif np.linalg.eigvalsh(M).min() <= 0:
        errors.append("mass matrix is not positive definite")
    if np.abs(V - V.T).max() > tol * scale_v:
        errors.append("potential is not symmetric")
    min_eig = float(np.linalg.eigvalsh(0.5 * (V + V.T)).min())
    if min_eig <= 0:
        errors.append(f"unstable network: potential has eigenvalue {min_eig:.6g} <= 0")

    weights = np.zeros((reservoirs.L, K))
    for l, sites in enumerate(reservoirs.contacts):
        bad = [i for i in sites if not 0 <= i < K]
        if bad:
            errors.append(f"reservoir {l} has sites out of range: {bad}")
        for i in sites:
            if 0 <= i < K:
                weights[l, i] = 1.0
    if reservoirs.has_overlap():
        errors.append("overlapping contact sets")

    rank = int(np.count_nonzero(weights.sum(axis=0)))
    multiplicity = 0 if reservoirs.is_infinite_cutoff else K - rank
    if rank == 0:
        errors.append("no site is coupled to a reservoir")

    if reservoirs.is_infinite_cutoff and reservoirs.L > 1 and not errors:
        # the infinite-cutoff current sums need M^-1 not to connect different contacts
        inv_m = network.inverse_mass()
        for a in range(reservoirs.L):
            for b in range(a + 1, reservoirs.L):
                cross = np.trace(np.diag(weights[a]) @ inv_m @ np.diag(weights[b]) @ inv_m)
                if abs(cross) > tol * np.abs(inv_m).max() ** 2:
                    warnings.append(f"M^-1 couples contacts {a} and {b}; infinite-cutoff currents are unreliable")

    report = ValidationReport(
        K=K,
        rank_total_projector=rank,
        lambda_pole_multiplicity=multiplicity,
        min_potential_eigenvalue=min_eig,
        errors=errors,
        warnings=warnings,
    )
    logger.debug("validation: %s", report.summary().replace("\n", "; "))
    return report


def load_matrix(path: str) -> np.ndarray:
    """Read a dense matrix file: first line K, then K rows of K numbers."""
    lines = [ln for ln in Path(path).read_text().splitlines() if ln.strip()]
    if not lines:
        raise HeatflowError(ErrorCode.INVALID_INPUT, "empty matrix file", path=str(path))
    try:
        K = int(lines[0].split()[0])
        rows = [[float(x) for x in ln.split()] for ln in lines[1:]]
    except ValueError as e:
        raise HeatflowError(ErrorCode.INVALID_INPUT, f"malformed matrix file: {e}", path=str(path))
    if K < 1 or len(rows) != K or any(len(r) != K for r in rows):
        raise HeatflowError(ErrorCode.INVALID_INPUT, f"expected {K} rows of {K} numbers", path=str(path))
    return np.array(rows)


def save_matrix(path: str, matrix: np.ndarray) -> None:
    matrix = np.atleast_2d(np.asarray(matrix, dtype=float))
    with open(path, "w") as f:
        f.write(f"{matrix.shape[0]}\n")
        np.savetxt(f, matrix, fmt="%.17g")


def random_network(
    rng: np.random.Generator,
    K: int,
    n_reservoirs: int = 2,
) -> Tuple[HarmonicNetwork, List[List[int]]]:
    """Random stable network with diagonal masses and disjoint random contacts."""
    if not 1 <= n_reservoirs <= K:
        raise HeatflowError(ErrorCode.INVALID_INPUT, "need 1 <= n_reservoirs <= K", K=K, L=n_reservoirs)
    masses = rng.uniform(0.5, 2.0, size=K)
    coupling = rng.normal(size=(K, K)) / math.sqrt(K)
    potential = coupling @ coupling.T + np.diag(rng.uniform(0.5, 2.0, size=K))

    sites = rng.permutation(K)
    # each reservoir gets at least one site; some sites stay uncontacted
    sizes = np.ones(n_reservoirs, dtype=int)
    for _ in range(int(rng.integers(0, K - n_reservoirs + 1))):
        sizes[rng.integers(n_reservoirs)] += 1
    contacts, start = [], 0
    for size in sizes:
        contacts.append(sorted(int(i) for i in sites[start : start + size]))
        start += size
    return HarmonicNetwork(np.diag(masses), potential), contacts
