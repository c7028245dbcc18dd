"""Tests for stationary heat currents and transmission spectra"""

import numpy as np
import pytest

from apps.heatflow.src.digamma import omega_coth
from apps.heatflow.src.errors import ErrorCode, HeatflowError
from apps.heatflow.src.heat import (
    conduction_weights,
    delta_ll,
    heat_finite_cutoff,
    heat_from_covariance,
    heat_infinite_cutoff,
    heat_symmetric_estimate,
    heat_weak_coupling,
    transmission,
    transmission_spectrum,
)
from apps.heatflow.src.lattice import LatticeSpec, build_lattice, lattice_reservoirs, slab_reversal
from apps.heatflow.src.network import HarmonicNetwork, ReservoirSet
from apps.heatflow.src.normal_modes import closed_modes
from apps.heatflow.src.spectral import assemble_cubic, assemble_quadratic, solve_modes
from apps.heatflow.src.stationary import covariance_finite_cutoff, covariance_infinite_cutoff
from tests.helpers import chain, end_baths, relative_error


def infinite_heat(network, reservoirs, classical=False):
    return heat_infinite_cutoff(solve_modes(assemble_quadratic(network, reservoirs)), reservoirs, classical)


def finite_heat(network, reservoirs, classical=False):
    return heat_finite_cutoff(solve_modes(assemble_cubic(network, reservoirs)), reservoirs, classical)


def test_delta_properties():
    omega = np.array([0.5 + 0.1j, 2.0 + 0.3j])
    np.testing.assert_array_equal(delta_ll(omega, 1.0, 1.0), 0)
    np.testing.assert_allclose(delta_ll(omega, 2.0, 1.0), -delta_ll(omega, 1.0, 2.0))
    np.testing.assert_allclose(delta_ll(omega, 3.0, 1.0, classical=True), 4j / omega)
    with pytest.raises(HeatflowError) as err:
        delta_ll(0.0, 2.0, 1.0)
    assert err.value.code is ErrorCode.DIVERGENT_ARGUMENT


def test_delta_reduces_to_thermal_energies_on_the_real_axis():
    """Re(-iωΔ) = ω coth(ω/2T_l) - ω coth(ω/2T_l')"""
    omega = np.array([0.3, 1.0, 4.0, 25.0])
    value = (-1j * omega * delta_ll(omega, 1.7, 0.4)).real
    np.testing.assert_allclose(value, omega_coth(omega, 1.7) - omega_coth(omega, 0.4), rtol=1e-10)


@pytest.mark.parametrize("cutoff", [25.0, np.inf])
def test_currents_flow_from_hot_to_cold(chain3, cutoff):
    reservoirs = end_baths(3, temperatures=(2.0, 1.0), gamma0=0.2, cutoff=cutoff)
    currents = finite_heat(chain3, reservoirs) if cutoff < np.inf else infinite_heat(chain3, reservoirs)
    assert currents.pairwise[0, 1] > 0
    assert currents.pairwise[1, 0] < 0
    assert currents.conservation_residual() < 1e-8
    assert currents.imag_residual < 1e-9
    np.testing.assert_array_equal(np.diag(currents.pairwise), 0)


def test_equal_temperatures_carry_no_current(chain3):
    currents = infinite_heat(chain3, end_baths(3, temperatures=(1.3, 1.3)))
    np.testing.assert_array_equal(currents.pairwise, 0)


def test_swapping_temperatures_reverses_currents(chain3):
    forward = infinite_heat(chain3, end_baths(3, temperatures=(2.0, 0.5)))
    backward = infinite_heat(chain3, end_baths(3, temperatures=(0.5, 2.0)))
    np.testing.assert_allclose(forward.pairwise, -backward.pairwise, rtol=1e-9)


def test_three_reservoirs_conserve_energy():
    network = chain(5, masses=[1.0, 0.8, 1.2, 0.9, 1.1])
    reservoirs = ReservoirSet(((0,), (2,), (4,)), (3.0, 1.0, 2.0), 0.15, 30.0)
    currents = finite_heat(network, reservoirs)
    assert currents.L == 3
    assert currents.conservation_residual() < 1e-8
    assert currents.totals[0] > 0
    assert currents.totals[1] < 0


def test_finite_cutoff_approaches_infinite_cutoff():
    network = chain(3, masses=[1.0, 1.5, 0.8])
    reservoirs = end_baths(3, temperatures=(3.0, 1.0))
    max_freq = np.sqrt(np.linalg.eigvalsh(network.potential).max() / 0.8)
    wide = finite_heat(network, reservoirs.with_coupling(cutoff=1e3 * max_freq), classical=True)
    memoryless = infinite_heat(network, reservoirs, classical=True)
    assert relative_error(wide.pairwise, memoryless.pairwise) < 1e-2


@pytest.mark.parametrize("cutoff", [20.0, np.inf])
def test_heat_from_covariance_matches_pole_sums(chain3, cutoff):
    reservoirs = end_baths(3, temperatures=(2.5, 1.0), gamma0=0.2, cutoff=cutoff)
    if cutoff < np.inf:
        modes = solve_modes(assemble_cubic(chain3, reservoirs))
        cov = covariance_finite_cutoff(modes, reservoirs, chain3, classical=True)
        currents = heat_finite_cutoff(modes, reservoirs, classical=True)
    else:
        modes = solve_modes(assemble_quadratic(chain3, reservoirs))
        cov = covariance_infinite_cutoff(modes, reservoirs, chain3, classical=True)
        currents = heat_infinite_cutoff(modes, reservoirs, classical=True)
    np.testing.assert_allclose(heat_from_covariance(cov, chain3, reservoirs), currents.totals, rtol=1e-6)


def test_weak_coupling_matches_memoryless_damping():
    network = chain(4, masses=[1.0, 1.2, 0.9, 1.1])
    reservoirs = end_baths(4, temperatures=(2.0, 1.0), gamma0=1e-4)
    weak = heat_weak_coupling(closed_modes(network), reservoirs, classical=True)
    exact = infinite_heat(network, reservoirs, classical=True)
    assert weak.per_mode.shape == (4, 2, 2)
    assert abs(weak.pairwise[0, 1] / exact.pairwise[0, 1] - 1) < 1e-2


def test_conduction_weights_sum_rule():
    """In a mirror-symmetric network sum_a 2 I_a = Tr(M^-1 P_A)"""
    network = chain(6)
    weights = conduction_weights(closed_modes(network), end_baths(6))
    assert weights.shape == (6,)
    assert np.all(weights >= 0)
    assert abs(2 * weights.sum() - 1.0) < 1e-10


def test_symmetric_estimate_for_uniform_chain():
    network = chain(5)
    reservoirs = end_baths(5, temperatures=(2.0, 1.0), gamma0=0.1)
    estimate = heat_symmetric_estimate(network, reservoirs)
    assert abs(estimate.current - 0.1) < 1e-14
    assert estimate.contact_size == 1

    weak = heat_weak_coupling(closed_modes(network), reservoirs, classical=True)
    assert abs(weak.pairwise[0, 1] - estimate.current) < 1e-12


def test_symmetric_estimate_refusals():
    lopsided = chain(4, masses=[1.0, 2.0, 1.0, 1.0])
    with pytest.raises(HeatflowError) as err:
        heat_symmetric_estimate(lopsided, end_baths(4))
    assert err.value.code is ErrorCode.NOT_SYMMETRIC

    # mirror symmetric, but <1/m> is undefined without a diagonal M
    coupled_mass = HarmonicNetwork(np.eye(4) + 0.1 * (np.eye(4, k=1) + np.eye(4, k=-1)), chain(4).potential)
    with pytest.raises(HeatflowError) as err:
        heat_symmetric_estimate(coupled_mass, end_baths(4))
    assert err.value.code is ErrorCode.INVALID_INPUT

    three = ReservoirSet(((0,), (1,), (3,)), (1.0, 2.0, 3.0), 0.1)
    with pytest.raises(HeatflowError) as err:
        heat_symmetric_estimate(chain(4), three)
    assert err.value.code is ErrorCode.INVALID_INPUT


def test_ordered_cube_weak_current_matches_symmetric_estimate():
    spec = LatticeSpec(dim=3, N=4)
    network, _ = build_lattice(spec)
    reservoirs = lattice_reservoirs(spec, (1.05, 0.95), 1e-4)
    weak = heat_weak_coupling(closed_modes(network), reservoirs, classical=True)
    estimate = heat_symmetric_estimate(network, reservoirs, permutation=slab_reversal(spec))
    assert estimate.contact_size == 16
    assert abs(weak.pairwise[0, 1] / estimate.current - 1) < 1e-6


class TestTransmission:
    @pytest.fixture
    def spectrum(self, chain3):
        frequencies = np.linspace(0.05, 8.0, 400)
        return transmission_spectrum(chain3, end_baths(3, gamma0=0.2, cutoff=15.0), frequencies)

    def test_shape_and_symmetry(self, spectrum):
        assert spectrum.values.shape == (2, 2, 400)
        np.testing.assert_allclose(spectrum.values[0, 1], spectrum.values[1, 0], rtol=1e-12)
        assert np.all(spectrum.values[0, 1] <= 0)

    def test_columns_sum_to_zero(self, spectrum):
        scale = np.abs(spectrum.values).max()
        np.testing.assert_allclose(spectrum.values.sum(axis=0), 0, atol=1e-10 * scale)

    def test_same_reservoir_is_rejected(self, chain3):
        with pytest.raises(HeatflowError) as err:
            transmission(chain3, end_baths(3), 1, 1, [1.0])
        assert err.value.code is ErrorCode.INVALID_INPUT

    def test_integrated_spectrum_reproduces_the_current(self, chain3):
        reservoirs = end_baths(3, temperatures=(2.0, 1.0), gamma0=0.1)
        grid = np.concatenate([np.linspace(1e-4, 6.0, 12001), np.geomspace(6.0005, 1e4, 4000)])
        spectrum = transmission_spectrum(chain3, reservoirs, grid)
        exact = infinite_heat(chain3, reservoirs)
        estimate = spectrum.current(0, 1, reservoirs.temperatures)
        assert abs(estimate / exact.pairwise[0, 1] - 1) < 2e-3
