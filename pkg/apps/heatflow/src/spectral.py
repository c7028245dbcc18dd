"""Matrix pencils for the damped network and their eigen-decomposition.

Finite cutoff: the cubic polynomial
    g(s) = s^3 M + s^2 Λ M + s (V + ΔV) + Λ (V - ΔV),   ΔV = γ0 Λ P_T,  V = V_R + ΔV
with Ĝ(s) = (s + Λ) g(s)^-1. Infinite cutoff: Ĝ(s) = (s^2 M + V_R + 2 s γ0 P_T)^-1.
Both are linearized to ``s B - A`` and
    g(s)^-1 = sum_a r_a l_a^† / (s - s_a)            (cubic)
    Ĝ(s)    = sum_a s_a r_a r_a^T / (s - s_a)        (quadratic)
"""

import logging
from dataclasses import dataclass
from enum import Enum
from typing import List, Optional, Tuple

import numpy as np
import scipy.linalg

from .errors import ErrorCode, HeatflowError
from .network import HarmonicNetwork, ReservoirSet

logger = logging.getLogger(__name__)


class PencilKind(str, Enum):
    CUBIC = "CUBIC"
    QUADRATIC = "QUADRATIC"


@dataclass(frozen=True)
class SolverTolerances:
    """All relative to the spectral radius unless noted."""

    stability: float = 1e-10
    degeneracy: float = 1e-9
    pairing: float = 1e-8
    lambda_pole: float = 1e-8  # relative to Λ
    bilinear: float = 1e-12


DEFAULT_TOLERANCES = SolverTolerances()


@dataclass(frozen=True)
class LinearPencil:
    A: np.ndarray
    B: np.ndarray
    kind: PencilKind
    K: int
    # coefficients of the matrix polynomial in ascending powers of s
    coefficients: Tuple[np.ndarray, ...]
    cutoff: float

    @property
    def n(self) -> int:
        return self.A.shape[0]

    def polynomial(self, s: complex) -> np.ndarray:
        """g(s) for CUBIC, Ĝ(s)^-1 for QUADRATIC."""
        result = np.zeros((self.K, self.K), dtype=complex)
        for power, coefficient in enumerate(self.coefficients):
            result = result + (s**power) * coefficient
        return result


def assemble_cubic(network: HarmonicNetwork, reservoirs: ReservoirSet) -> LinearPencil:
    if reservoirs.is_infinite_cutoff:
        raise HeatflowError(ErrorCode.INVALID_INPUT, "cubic pencil needs a finite cutoff")
    K = network.K
    M, V_R = network.mass, network.potential
    lam = reservoirs.cutoff
    shift = reservoirs.gamma0 * lam * reservoirs.total_projector(K)
    v_plus = V_R + 2 * shift
    v_minus = V_R

    eye, zero = np.eye(K), np.zeros((K, K))
    A = np.block(
        [
            [zero, eye, zero],
            [zero, zero, eye],
            [-lam * v_minus, -v_plus, -lam * M],
        ]
    )
    B = np.block(
        [
            [eye, zero, zero],
            [zero, eye, zero],
            [zero, zero, M],
        ]
    )
    coefficients = (lam * v_minus, v_plus, lam * M, M)
    return LinearPencil(A, B, PencilKind.CUBIC, K, coefficients, lam)


def assemble_quadratic(network: HarmonicNetwork, reservoirs: ReservoirSet) -> LinearPencil:
    if not reservoirs.is_infinite_cutoff:
        raise HeatflowError(ErrorCode.INVALID_INPUT, "quadratic pencil needs an infinite cutoff")
    K = network.K
    M, V_R = network.mass, network.potential
    damping = 2 * reservoirs.gamma0 * reservoirs.total_projector(K)

    zero = np.zeros((K, K))
    A = np.block([[zero, -V_R], [-V_R, -damping]])
    B = np.block([[-V_R, zero], [zero, M]])
    return LinearPencil(A, B, PencilKind.QUADRATIC, K, (V_R, damping, M), reservoirs.cutoff)


def assemble(network: HarmonicNetwork, reservoirs: ReservoirSet) -> LinearPencil:
    if reservoirs.is_infinite_cutoff:
        return assemble_quadratic(network, reservoirs)
    return assemble_cubic(network, reservoirs)


@dataclass(frozen=True)
class ModeSet:
    """Eigenvalues and mode vectors of a pencil.

    ``right[:, a]`` is r_a and ``left_h[a]`` is l_a^† (for QUADRATIC this is
    r_a^T, i.e. l_a = conj(r_a)).
    """

    pencil: LinearPencil
    eigenvalues: np.ndarray
    right: np.ndarray
    left_h: np.ndarray
    conjugate_index: np.ndarray
    lambda_pole_indices: Tuple[int, ...]

    @property
    def kind(self) -> PencilKind:
        return self.pencil.kind

    @property
    def poles(self) -> np.ndarray:
        """ω_a = -i s_a, all in the upper half plane."""
        return -1j * self.eigenvalues

    @property
    def spectral_radius(self) -> float:
        return float(np.abs(self.eigenvalues).max())

    def retained(self) -> np.ndarray:
        """Boolean mask of modes other than the s = -Λ poles."""
        mask = np.ones(len(self.eigenvalues), dtype=bool)
        mask[list(self.lambda_pole_indices)] = False
        return mask

    def dump(self) -> str:
        """One line per mode: Re s, Im s, then (Re, Im) pairs of r_a."""
        lines = []
        for a, s in enumerate(self.eigenvalues):
            parts = [f"{s.real:.17g}", f"{s.imag:.17g}"]
            for c in self.right[:, a]:
                parts += [f"{c.real:.17g}", f"{c.imag:.17g}"]
            lines.append(" ".join(parts))
        return "\n".join(lines) + "\n"


def value_clusters(values: np.ndarray, tol: float) -> List[np.ndarray]:
    """Connected groups of values closer than ``tol``."""
    n = len(values)
    close = np.abs(values[:, None] - values[None, :]) <= tol
    labels = -np.ones(n, dtype=int)
    current = 0
    for start in range(n):
        if labels[start] >= 0:
            continue
        stack = [start]
        labels[start] = current
        while stack:
            i = stack.pop()
            for j in np.flatnonzero(close[i] & (labels < 0)):
                labels[j] = current
                stack.append(j)
        current += 1
    return [np.flatnonzero(labels == c) for c in range(current)]


def _match_conjugates(eigenvalues: np.ndarray, tol: float) -> np.ndarray:
    n = len(eigenvalues)
    partner = -np.ones(n, dtype=int)
    for a in range(n):
        if partner[a] >= 0:
            continue
        free = np.flatnonzero(partner < 0)
        distance = np.abs(eigenvalues[free] - np.conj(eigenvalues[a]))
        b = free[int(np.argmin(distance))]
        if distance.min() > tol:
            raise HeatflowError(
                ErrorCode.NUMERICAL_DEGENERACY,
                "eigenvalue without a complex-conjugate partner",
                eigenvalue=complex(eigenvalues[a]),
                distance=float(distance.min()),
            )
        partner[a], partner[b] = b, a
    return partner


def _normalize_cubic(pencil: LinearPencil, tol: SolverTolerances) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
    standard = np.linalg.solve(pencil.B, pencil.A)
    eigenvalues, vl, vr = scipy.linalg.eig(standard, left=True, right=True)
    # left vectors of B^-1 A give pencil left vectors u^† = vl^† B^-1
    overlap = vl.conj().T @ vr
    if np.linalg.cond(overlap) > 1.0 / tol.bilinear:
        raise HeatflowError(
            ErrorCode.DEGENERATE_PENCIL,
            "left/right eigenvectors are not biorthogonalizable",
            condition=float(np.linalg.cond(overlap)),
        )
    pencil_left_h = np.linalg.solve(pencil.B, vl).conj().T
    normalized_left_h = np.linalg.solve(overlap, pencil_left_h)
    K = pencil.K
    return eigenvalues, vr[:K, :], normalized_left_h[:, 2 * K :]


def _normalize_quadratic(pencil: LinearPencil, tol: SolverTolerances) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
    standard = np.linalg.solve(pencil.B, pencil.A)
    eigenvalues, vr = scipy.linalg.eig(standard, right=True)
    radius = np.abs(eigenvalues).max()
    b_norm = np.abs(pencil.B).max()
    gram = vr.T @ pencil.B @ vr

    for cluster in value_clusters(eigenvalues, tol.degeneracy * radius):
        block = gram[np.ix_(cluster, cluster)]
        scale = tol.bilinear * b_norm * np.linalg.norm(vr[:, cluster], axis=0).max() ** 2
        if len(cluster) == 1:
            if abs(block[0, 0]) < scale:
                raise HeatflowError(
                    ErrorCode.DEGENERATE_PENCIL,
                    "vanishing bilinear norm r^T B r (nearly defective mode)",
                    eigenvalue=complex(eigenvalues[cluster[0]]),
                )
            vr[:, cluster] = vr[:, cluster] / np.sqrt(block[0, 0])
        else:
            if np.linalg.svd(block, compute_uv=False).min() < scale:
                raise HeatflowError(
                    ErrorCode.DEGENERATE_PENCIL,
                    "degenerate eigenvalue cluster is defective",
                    size=len(cluster),
                    eigenvalue=complex(eigenvalues[cluster[0]]),
                )
            # complex-symmetric inverse square root keeps X^T W X = 1
            vr[:, cluster] = vr[:, cluster] @ np.linalg.inv(scipy.linalg.sqrtm(block))
            logger.debug("normalized degenerate cluster of size %d at s=%s", len(cluster), eigenvalues[cluster[0]])
    right = vr[: pencil.K, :]
    return eigenvalues, right, right.T.copy()


def solve_modes(pencil: LinearPencil, tolerances: SolverTolerances = DEFAULT_TOLERANCES) -> ModeSet:
    logger.debug("solving %s pencil of size %d", pencil.kind.value, pencil.n)
    if pencil.kind is PencilKind.CUBIC:
        eigenvalues, right, left_h = _normalize_cubic(pencil, tolerances)
    else:
        eigenvalues, right, left_h = _normalize_quadratic(pencil, tolerances)

    radius = float(np.abs(eigenvalues).max())
    worst = float(eigenvalues.real.max())
    if worst >= -tolerances.stability * radius:
        raise HeatflowError(
            ErrorCode.UNDAMPED_MODE,
            "a normal mode is not damped; no stationary state exists",
            max_real_part=worst,
            spectral_radius=radius,
        )
    conjugate_index = _match_conjugates(eigenvalues, tolerances.pairing * radius)

    lambda_poles: Tuple[int, ...] = ()
    if pencil.kind is PencilKind.CUBIC:
        hits = np.abs(eigenvalues + pencil.cutoff) <= tolerances.lambda_pole * pencil.cutoff
        lambda_poles = tuple(int(a) for a in np.flatnonzero(hits))

    logger.debug(
        "solved %d modes (radius %.4g, slowest decay %.4g, %d poles at -Λ)",
        len(eigenvalues),
        radius,
        -worst,
        len(lambda_poles),
    )
    return ModeSet(pencil, eigenvalues, right, left_h, conjugate_index, lambda_poles)


def green_at(modes: ModeSet, s: complex, path: str = "spectral") -> np.ndarray:
    """Ĝ(s) from the pole expansion (``path="spectral"``) or by inversion (``"direct"``)."""
    distance = np.abs(modes.eigenvalues - s).min()
    if distance <= DEFAULT_TOLERANCES.degeneracy * modes.spectral_radius:
        raise HeatflowError(ErrorCode.POLE_EVALUATION, "Green's function evaluated at a pole", s=complex(s))
    pencil = modes.pencil
    if path == "direct":
        inverse = np.linalg.inv(pencil.polynomial(s))
        if pencil.kind is PencilKind.CUBIC:
            return (s + pencil.cutoff) * inverse
        return inverse
    weights = 1.0 / (s - modes.eigenvalues)
    if pencil.kind is PencilKind.CUBIC:
        return (s + pencil.cutoff) * (modes.right * weights) @ modes.left_h
    return (modes.right * (modes.eigenvalues * weights)) @ modes.left_h


def green_direct(network: HarmonicNetwork, reservoirs: ReservoirSet, s: complex) -> np.ndarray:
    """Ĝ(s) = (s^2 M + V_R + 2 s γ̂(s) P_T)^-1 with γ̂(s) = γ0 Λ/(s + Λ); no eigensolve."""
    K = network.K
    if reservoirs.is_infinite_cutoff:
        kernel = reservoirs.gamma0
    else:
        kernel = reservoirs.gamma0 * reservoirs.cutoff / (s + reservoirs.cutoff)
    inverse = s * s * network.mass + network.potential + 2 * s * kernel * reservoirs.total_projector(K)
    return np.linalg.inv(inverse)


def spectral_product(
    left: np.ndarray,
    middle: np.ndarray,
    right: np.ndarray,
    deterministic: bool = False,
) -> np.ndarray:
    """left @ middle @ right; the deterministic path avoids threaded BLAS reductions."""
    if deterministic:
        partial = np.einsum("ab,bj->aj", middle, right, optimize=False)
        return np.einsum("ia,aj->ij", left, partial, optimize=False)
    return left @ middle @ right


def moment_sums(modes: ModeSet, max_power: Optional[int] = None) -> List[np.ndarray]:
    """sum_a s_a^k r_a l_a^† for k = 0..max_power (quadratic: includes the extra s_a factor)."""
    if max_power is None:
        max_power = 2 if modes.kind is PencilKind.CUBIC else 1
    extra = 0 if modes.kind is PencilKind.CUBIC else 1
    return [
        (modes.right * modes.eigenvalues ** (k + extra)) @ modes.left_h
        for k in range(max_power + 1)
    ]
