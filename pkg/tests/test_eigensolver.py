import numpy as np
import pytest

from spinbus.eigensolver import (
    connected_correlator,
    diagonalize,
    hellmann_feynman_current,
    site_polarization,
    solve_chain,
    track_levels,
)
from spinbus.exceptions.errors import DegenerateStateError, DimensionError, SpecError
from spinbus.fixtures import two_site_trivial
from spinbus.spin_model import ChainSpec, Coupling, CouplingGraph, SpinSite, build_hamiltonian


def test_two_site_trivial_spectrum():
    """Two spins with J = 1 and no fields: {-1, -1, 1, 1}"""
    result = solve_chain(two_site_trivial())
    assert np.allclose(result.energies, [-1, -1, 1, 1])
    assert result.ground_degenerate
    with pytest.raises(DegenerateStateError):
        result.require_unique_ground()


def test_single_site_closed_form():
    eps, delta = 0.8, 1.5
    result = solve_chain(ChainSpec((SpinSite(eps, delta),)))
    half = 0.5 * np.hypot(eps, delta)
    assert np.allclose(result.energies, [-half, half])
    assert result.gap == pytest.approx(2 * half)


def test_random_chains_match_numpy():
    rng = np.random.default_rng(7)
    for _ in range(20):
        n = int(rng.integers(1, 6))
        sites = tuple(SpinSite(rng.uniform(-2, 2), rng.uniform(0, 3)) for _ in range(n))
        edges = tuple(Coupling(i, i + 1, rng.uniform(-1, 1)) for i in range(n - 1))
        spec = ChainSpec(sites, CouplingGraph(edges))
        reference = np.linalg.eigvalsh(np.array(build_hamiltonian(spec)))
        result = solve_chain(spec)
        scale = max(1.0, np.max(np.abs(reference)))
        assert np.allclose(result.energies, reference, atol=1e-9 * scale, rtol=0)


def test_states_are_orthonormal_with_fixed_signs():
    spec = ChainSpec.homogeneous_chain(4, 2.0, 0.7, epsilon_c=0.1)
    states = solve_chain(spec).states
    assert np.allclose(states.T @ states, np.eye(16), atol=1e-12)
    for column in states.T:
        assert column[np.argmax(np.abs(column))] > 0


def test_lanczos_matches_dense():
    spec = ChainSpec.homogeneous_chain(8, 5.0, 1.5, epsilon_c=0.2)
    dense = solve_chain(spec, k=4)
    sparse = solve_chain(spec, k=4, method="lanczos")
    assert np.allclose(dense.energies, sparse.energies, atol=1e-9)


def test_partial_spectrum():
    result = solve_chain(ChainSpec.homogeneous_chain(4, 5.0, 0.5), k=3)
    assert result.n_levels == 3
    assert result.dimension == 16


class TestDiagonalizeValidation:
    """Input checks of diagonalize"""

    def test_non_square(self):
        with pytest.raises(DimensionError):
            diagonalize(np.zeros((2, 3)))

    def test_asymmetric(self):
        with pytest.raises(SpecError):
            diagonalize(np.array([[0.0, 1.0], [0.0, 0.0]]))

    def test_bad_k(self):
        with pytest.raises(DimensionError):
            diagonalize(np.eye(4), k=5)

    def test_unknown_method(self):
        with pytest.raises(SpecError):
            diagonalize(np.eye(2), method="qr")


class TestObservables:
    """Polarization, correlators and Hellmann-Feynman derivatives"""

    def test_single_site_polarization(self):
        eps, delta = 1.0, 2.0
        result = solve_chain(ChainSpec((SpinSite(eps, delta),)))
        assert site_polarization(result, 0) == pytest.approx(-eps / np.hypot(eps, delta))

    def test_symmetric_chain_is_unpolarized(self):
        result = solve_chain(ChainSpec.homogeneous_chain(5, 5.0, 1.0))
        for i in range(5):
            assert abs(site_polarization(result, i)) < 1e-10

    def test_uncoupled_sites_have_no_correlation(self):
        spec = ChainSpec.homogeneous_chain(3, 5.0, 0.0, epsilon_c=0.5)
        assert abs(connected_correlator(solve_chain(spec), 0, 2)) < 1e-12

    def test_antiferromagnetic_neighbours(self):
        result = solve_chain(ChainSpec.homogeneous_chain(2, 5.0, 1.0))
        # <sz sz> < 0 for J > 0, so the connected part is positive
        assert connected_correlator(result, 0, 1) > 0

    def test_hellmann_feynman_matches_finite_difference(self):
        spec = ChainSpec.homogeneous_chain(4, 3.0, 0.8, epsilon_c=0.2)
        h = 1e-6
        for parameter in ("epsilon", "delta"):
            value = getattr(spec.sites[2], parameter)
            up = solve_chain(spec.with_site(2, **{parameter: value + h}), k=1).ground_energy
            down = solve_chain(spec.with_site(2, **{parameter: value - h}), k=1).ground_energy
            derivative = hellmann_feynman_current(spec, 2, parameter)
            assert derivative == pytest.approx((up - down) / (2 * h), abs=1e-8)

    def test_hellmann_feynman_needs_gap(self):
        with pytest.raises(DegenerateStateError):
            hellmann_feynman_current(two_site_trivial(), 0)

    def test_track_levels_identity(self):
        states = solve_chain(ChainSpec.homogeneous_chain(3, 2.0, 0.5, epsilon_c=0.3)).states
        picks, best = track_levels(states[:, :4], states)
        assert picks == [0, 1, 2, 3]
        assert np.allclose(best, 1.0)
