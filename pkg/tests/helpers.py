"""Small networks shared by the test modules."""

import numpy as np

from apps.heatflow.src.network import HarmonicNetwork, ReservoirSet


def chain(K, k0=10.0, coupling=1.0, masses=None):
    """Pinned chain with fixed ends: diagonal k0 + 2 coupling, nearest neighbours -coupling."""
    potential = np.diag(np.full(K, k0 + 2 * coupling))
    potential -= coupling * (np.eye(K, k=1) + np.eye(K, k=-1))
    masses = np.ones(K) if masses is None else np.asarray(masses, dtype=float)
    return HarmonicNetwork(np.diag(masses), potential)


def single_oscillator(mass=1.0, stiffness=4.0):
    return HarmonicNetwork(np.array([[mass]]), np.array([[stiffness]]))


def end_baths(K, temperatures=(2.0, 1.0), gamma0=0.1, cutoff=np.inf):
    return ReservoirSet(((0,), (K - 1,)), tuple(temperatures), gamma0, cutoff)


def relative_error(a, b):
    a, b = np.asarray(a), np.asarray(b)
    return float(np.abs(a - b).max() / np.abs(b).max())
