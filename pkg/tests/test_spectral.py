"""Tests for the pencil linearizations and their mode sets"""

import numpy as np
import pytest

from apps.heatflow.src.errors import ErrorCode, HeatflowError
from apps.heatflow.src.network import HarmonicNetwork, ReservoirSet
from apps.heatflow.src.spectral import (
    PencilKind,
    assemble,
    assemble_cubic,
    assemble_quadratic,
    green_at,
    green_direct,
    moment_sums,
    solve_modes,
    spectral_product,
    value_clusters,
)
from tests.helpers import end_baths


@pytest.fixture
def finite_modes(chain3):
    reservoirs = end_baths(3, gamma0=0.2, cutoff=40.0)
    return solve_modes(assemble_cubic(chain3, reservoirs))


@pytest.fixture
def infinite_modes(chain3):
    return solve_modes(assemble_quadratic(chain3, end_baths(3, gamma0=0.2)))


def test_assemble_dispatches_on_cutoff(chain3):
    assert assemble(chain3, end_baths(3, cutoff=10.0)).kind is PencilKind.CUBIC
    assert assemble(chain3, end_baths(3)).kind is PencilKind.QUADRATIC
    with pytest.raises(HeatflowError):
        assemble_cubic(chain3, end_baths(3))
    with pytest.raises(HeatflowError):
        assemble_quadratic(chain3, end_baths(3, cutoff=10.0))


def test_mode_counts_and_stability(finite_modes, infinite_modes):
    assert len(finite_modes.eigenvalues) == 9
    assert len(infinite_modes.eigenvalues) == 6
    for modes in (finite_modes, infinite_modes):
        assert np.all(modes.eigenvalues.real < 0)
        assert np.all(modes.poles.imag > 0)


def test_conjugate_pairs_close(finite_modes, infinite_modes):
    for modes in (finite_modes, infinite_modes):
        partner = modes.eigenvalues[modes.conjugate_index]
        np.testing.assert_allclose(partner, np.conj(modes.eigenvalues), atol=1e-9 * modes.spectral_radius)
        np.testing.assert_array_equal(modes.conjugate_index[modes.conjugate_index], np.arange(len(partner)))


def test_eigenvalue_traces(chain3, finite_modes, infinite_modes):
    """Sum of eigenvalues: -KΛ (cubic) and -2γ0 Tr(M^-1 P_T) (quadratic)"""
    assert abs(finite_modes.eigenvalues.sum() + 3 * 40.0) < 1e-9 * 120
    reservoirs = end_baths(3, gamma0=0.2)
    expected = -2 * 0.2 * np.trace(chain3.inverse_mass() @ reservoirs.total_projector(3))
    assert abs(infinite_modes.eigenvalues.sum() - expected) < 1e-9


def test_lambda_poles(finite_modes):
    """K - rank(P_T) eigenvalues sit exactly at s = -Λ"""
    assert len(finite_modes.lambda_pole_indices) == 1
    s = finite_modes.eigenvalues[finite_modes.lambda_pole_indices[0]]
    assert abs(s + 40.0) < 1e-8 * 40.0
    assert finite_modes.retained().sum() == 8


def test_moment_sum_rules(chain3, finite_modes, infinite_modes):
    inv_m = chain3.inverse_mass()
    cubic = moment_sums(finite_modes)
    scale = finite_modes.spectral_radius**2
    np.testing.assert_allclose(cubic[0], 0, atol=1e-8)
    np.testing.assert_allclose(cubic[1], 0, atol=1e-8 * finite_modes.spectral_radius)
    np.testing.assert_allclose(cubic[2], inv_m, atol=1e-8 * scale)

    quadratic = moment_sums(infinite_modes)
    np.testing.assert_allclose(quadratic[0], 0, atol=1e-8)
    np.testing.assert_allclose(quadratic[1], inv_m, atol=1e-8 * infinite_modes.spectral_radius**2)


def test_characteristic_polynomials(rng, chain3, finite_modes, infinite_modes):
    for _ in range(5):
        s = complex(rng.normal(), rng.normal())
        cubic = finite_modes.pencil
        lhs = np.linalg.det(s * cubic.B - cubic.A)
        assert abs(lhs - np.linalg.det(cubic.polynomial(s))) <= 1e-9 * abs(lhs)

        quad = infinite_modes.pencil
        lhs = np.linalg.det(s * quad.B - quad.A)
        rhs = (-1) ** 3 * np.linalg.det(chain3.potential) * np.linalg.det(quad.polynomial(s))
        assert abs(lhs - rhs) <= 1e-9 * abs(lhs)


@pytest.mark.parametrize("s", [0.3 + 1.7j, -0.1 + 0.2j, 2.0 - 5.0j])
def test_green_function_paths_agree(chain3, finite_modes, infinite_modes, s):
    for modes, cutoff in ((finite_modes, 40.0), (infinite_modes, np.inf)):
        spectral = green_at(modes, s)
        direct = green_at(modes, s, path="direct")
        np.testing.assert_allclose(spectral, direct, rtol=1e-8, atol=1e-10)
        brute = green_direct(chain3, end_baths(3, gamma0=0.2, cutoff=cutoff), s)
        np.testing.assert_allclose(brute, direct, rtol=1e-10, atol=1e-12)


def test_green_at_pole_raises(infinite_modes):
    with pytest.raises(HeatflowError) as err:
        green_at(infinite_modes, infinite_modes.eigenvalues[0])
    assert err.value.code is ErrorCode.POLE_EVALUATION


def test_undamped_mode_is_detected():
    """A site without any path to a reservoir keeps an undamped mode"""
    network = HarmonicNetwork(np.eye(2), np.diag([2.0, 3.0]))
    reservoirs = ReservoirSet(((0,),), (1.0,), 0.1)
    with pytest.raises(HeatflowError) as err:
        solve_modes(assemble_quadratic(network, reservoirs))
    assert err.value.code is ErrorCode.UNDAMPED_MODE


def test_degenerate_quadratic_cluster_is_normalized():
    """Two identical uncoupled damped oscillators share every eigenvalue"""
    network = HarmonicNetwork(np.eye(2), np.diag([4.0, 4.0]))
    reservoirs = ReservoirSet(((0,), (1,)), (1.0, 2.0), 0.1)
    modes = solve_modes(assemble_quadratic(network, reservoirs))
    np.testing.assert_allclose(moment_sums(modes)[1], np.eye(2), atol=1e-8)
    np.testing.assert_allclose(green_at(modes, 1.0j), green_at(modes, 1.0j, path="direct"), rtol=1e-8)


def test_dump_lists_every_mode(infinite_modes):
    lines = infinite_modes.dump().splitlines()
    assert len(lines) == 6
    assert len(lines[0].split()) == 2 + 2 * 3


def test_spectral_product_paths_agree(rng):
    left = rng.normal(size=(4, 6)) + 1j * rng.normal(size=(4, 6))
    middle = rng.normal(size=(6, 6))
    right = rng.normal(size=(6, 4))
    np.testing.assert_allclose(
        spectral_product(left, middle, right, deterministic=True), left @ middle @ right, rtol=1e-12, atol=1e-12
    )


def test_value_clusters():
    clusters = value_clusters(np.array([1.0, 2.0, 1.0 + 1e-12, 3.0]), 1e-9)
    assert sorted(sorted(c.tolist()) for c in clusters) == [[0, 2], [1], [3]]
