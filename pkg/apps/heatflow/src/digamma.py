"""Complex digamma and the thermal weights built from it.

coth(ω/2T) = 2T/ω - ψ(1 - iω/2πT)/(iπ) + ψ(1 + iω/2πT)/(iπ); the ψ(1 - iω/2πT)
half is analytic in the upper half plane, which is what the pole sums need.
"""

import numpy as np
import scipy.special

from .errors import ErrorCode, HeatflowError


def complex_digamma(z):
    """ψ(z) for complex scalars or arrays."""
    z = np.asarray(z, dtype=complex)
    on_pole = (z.imag == 0) & (z.real <= 0) & (z.real == np.round(z.real))
    if np.any(on_pole):
        raise HeatflowError(ErrorCode.DIGAMMA_POLE, "digamma evaluated at a non-positive integer")
    result = scipy.special.digamma(z)
    return result if result.ndim else complex(result)


def thermal_digamma(omega, temperature: float):
    """ψ(1 - iω/2πT) for Im ω >= 0.

    At T = 0 the T-dependent constant -log(T) of the large-argument branch is
    dropped; it cancels in every quantity built from these weights.
    """
    omega = np.asarray(omega, dtype=complex)
    if temperature > 0:
        return complex_digamma(1 - 1j * omega / (2 * np.pi * temperature))
    if np.any(omega == 0):
        raise HeatflowError(ErrorCode.DIVERGENT_ARGUMENT, "zero frequency at zero temperature")
    result = np.log(-1j * omega / (2 * np.pi))
    return result if result.ndim else complex(result)


def coth_split_check(omega: float, temperature: float) -> float:
    """|coth(ω/2T) - split form|, a self-test of the digamma evaluation."""
    if omega == 0:
        raise HeatflowError(ErrorCode.DIVERGENT_ARGUMENT, "coth split is singular at ω = 0")
    x = omega / (2 * np.pi * temperature)
    split = (
        2 * temperature / omega
        - complex_digamma(1 - 1j * x) / (1j * np.pi)
        + complex_digamma(1 + 1j * x) / (1j * np.pi)
    )
    return float(abs(1.0 / np.tanh(omega / (2 * temperature)) - split))


def omega_coth(omega, temperature: float) -> np.ndarray:
    """ω coth(ω/2T) on real frequencies, with the ω -> 0 limit 2T (and |ω| at T = 0)."""
    omega = np.asarray(omega, dtype=float)
    if temperature == 0:
        return np.abs(omega)
    x = omega / (2 * temperature)
    small = np.abs(x) < 1e-8
    safe = np.where(small, 1.0, x)
    return np.where(small, 2 * temperature, omega / np.tanh(safe))
