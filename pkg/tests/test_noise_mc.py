import numpy as np
import pytest

from spinbus import noise_mc, units
from spinbus.exceptions.errors import LevelIdentificationError, SpecError
from spinbus.fixtures import paper_chain_homogeneous
from spinbus.noise_mc import (
    NoiseSpec,
    noisy_spectrum_ensemble,
    perturbed_spec,
    rms_flux_offset,
    sample_offsets,
)
from spinbus.spin_model import ChainSpec, SpinSite


class TestNoiseSpec:
    """Validation of the noise model"""

    @pytest.mark.parametrize("kwargs", [
        {"amplitude": -1.0},
        {"alpha": 0.0},
        {"alpha": 2.0},
        {"f_low": 10.0, "f_high": 1.0},
        {"geometry_z": (1.0, -0.5)},
    ])
    def test_invalid(self, kwargs):
        with pytest.raises(SpecError):
            NoiseSpec(**kwargs)

    def test_scaled(self):
        noise = NoiseSpec(amplitude=4.0, alpha=1.1)
        half = noise.scaled(0.5)
        assert half.amplitude == 2.0
        assert half.alpha == 1.1


class TestOffsets:
    """Band-integrated rms and Gaussian draws"""

    def test_log_form_at_alpha_one(self):
        noise = NoiseSpec(amplitude=5.0, alpha=1.0, f_low=1e-3, f_high=1e6)
        assert rms_flux_offset(noise) == pytest.approx(5.0 * np.sqrt(np.log(1e9)), rel=1e-10)

    def test_power_form(self):
        noise = NoiseSpec(amplitude=3.0, alpha=0.9, f_low=1e-3, f_high=1e6)
        expected = 3.0 * np.sqrt((1e6 ** 0.1 - 1e-3 ** 0.1) / 0.1)
        assert rms_flux_offset(noise) == pytest.approx(expected, rel=1e-10)
        assert rms_flux_offset(noise) == pytest.approx(17.7, abs=0.1)

    def test_continuous_through_alpha_one(self):
        near = rms_flux_offset(NoiseSpec(amplitude=1.0, alpha=1.0 + 1e-9))
        exact = rms_flux_offset(NoiseSpec(amplitude=1.0, alpha=1.0))
        assert near == pytest.approx(exact, rel=1e-6)

    def test_zero_amplitude(self):
        noise = NoiseSpec(amplitude=0.0)
        assert rms_flux_offset(noise) == 0.0
        assert np.array_equal(sample_offsets(noise, 5, seed=3), np.zeros(5))

    def test_sample_spread(self):
        noise = NoiseSpec(amplitude=3.0, alpha=0.9)
        draws = sample_offsets(noise, 100_000, seed=11)
        assert np.std(draws) == pytest.approx(rms_flux_offset(noise), rel=0.01)
        assert abs(np.mean(draws)) < 0.05 * rms_flux_offset(noise)

    def test_seeded(self):
        noise = NoiseSpec()
        assert np.array_equal(sample_offsets(noise, 9, seed=5), sample_offsets(noise, 9, seed=5))

    def test_geometry_scales_each_loop(self):
        noise = NoiseSpec(geometry_z=(1.0, 0.0, 2.0))
        plain = sample_offsets(NoiseSpec(), 3, seed=2)
        scaled = sample_offsets(noise, 3, seed=2)
        assert scaled == pytest.approx([plain[0], 0.0, 2 * plain[2]])

    def test_geometry_length(self):
        with pytest.raises(SpecError):
            sample_offsets(NoiseSpec(geometry_z=(1.0, 1.0)), 3)

    def test_perturbed_spec(self):
        spec = ChainSpec.homogeneous_chain(2, 5.0, 0.5)
        noisy = perturbed_spec(spec, np.array([10.0, -10.0]), np.array([100.0, 200.0]))
        slope = units.flux_energy_slope(np.array([100.0, 200.0]))
        assert noisy.epsilons == pytest.approx(slope * np.array([10.0, -10.0]) * 1e-6)
        assert np.array_equal(noisy.deltas, spec.deltas)


class TestEnsemble:
    """Level statistics under frozen offsets"""

    def test_zero_amplitude_has_no_spread(self):
        spec = ChainSpec.qubit_bus(2, 5.0, 0.5, 2.0, 0.25)
        stats = noisy_spectrum_ensemble(spec, NoiseSpec(amplitude=0.0), n_runs=3, n_levels=4)
        assert np.array_equal(stats.std_energies, np.zeros(4))
        assert np.array_equal(stats.std_transitions, np.zeros(4))
        assert stats.mean_energies == pytest.approx(stats.noiseless_energies, abs=1e-12)

    def test_seeded_ensemble(self):
        spec = ChainSpec.homogeneous_chain(3, 5.0, 1.0)
        first = noisy_spectrum_ensemble(spec, NoiseSpec(), n_runs=5, seed=9)
        second = noisy_spectrum_ensemble(spec, NoiseSpec(), n_runs=5, seed=9, threads=2)
        assert np.array_equal(first.mean_energies, second.mean_energies)
        assert np.array_equal(first.std_transitions, second.std_transitions)

    def test_linewidth_linear_in_amplitude(self):
        spec = ChainSpec((SpinSite(1.0, 1.0),))
        full = noisy_spectrum_ensemble(spec, NoiseSpec(amplitude=4.0), n_runs=20, seed=1)
        half = noisy_spectrum_ensemble(spec, NoiseSpec(amplitude=2.0), n_runs=20, seed=1)
        assert full.std_transitions[1] / half.std_transitions[1] == pytest.approx(2.0, rel=0.2)

    def test_qubit_level_identified(self):
        stats = noisy_spectrum_ensemble(paper_chain_homogeneous(ratio=0.2, n_couplers=3),
                                        NoiseSpec(), n_runs=4, n_levels=4)
        assert stats.qubit_level == 1
        assert stats.qubit_linewidth >= 0.0
        assert stats.qubit_identified
        assert stats.unidentified_runs == 0

    def test_unidentified_doublet_is_flagged(self, monkeypatch):
        def dressed(*args, **kwargs):
            raise LevelIdentificationError("overlaps below threshold")

        monkeypatch.setattr(noise_mc, "identify_qubit_doublet", dressed)
        stats = noisy_spectrum_ensemble(paper_chain_homogeneous(ratio=0.2, n_couplers=3),
                                        NoiseSpec(), n_runs=4, n_levels=4)
        assert stats.qubit_level == 1
        assert not stats.qubit_identified
        assert stats.unidentified_runs == 4

    def test_runs_losing_the_doublet_are_counted(self, monkeypatch):
        real = noise_mc.identify_qubit_doublet
        calls = []

        def first_only(*args, **kwargs):
            calls.append(1)
            if len(calls) > 1:
                raise LevelIdentificationError("overlaps below threshold")
            return real(*args, **kwargs)

        monkeypatch.setattr(noise_mc, "identify_qubit_doublet", first_only)
        stats = noisy_spectrum_ensemble(paper_chain_homogeneous(ratio=0.2, n_couplers=3),
                                        NoiseSpec(), n_runs=3, n_levels=4)
        assert stats.qubit_identified
        assert stats.unidentified_runs == 3

    def test_no_qubits(self):
        stats = noisy_spectrum_ensemble(ChainSpec.homogeneous_chain(2, 5.0, 0.5), NoiseSpec(),
                                        n_runs=3)
        assert stats.qubit_level is None
        with pytest.raises(SpecError):
            stats.qubit_linewidth

    def test_ordered_chain_broadens_qubits(self):
        weak = noisy_spectrum_ensemble(paper_chain_homogeneous(ratio=0.2), NoiseSpec(),
                                       n_runs=50, n_levels=4)
        strong = noisy_spectrum_ensemble(paper_chain_homogeneous(ratio=2.0), NoiseSpec(),
                                         n_runs=50, n_levels=4)
        assert strong.qubit_linewidth >= 3 * weak.qubit_linewidth

    def test_x_noise_needs_sensitivity(self):
        spec = ChainSpec.homogeneous_chain(2, 5.0, 0.5)
        with pytest.raises(SpecError):
            noisy_spectrum_ensemble(spec, NoiseSpec(include_x=True), n_runs=2)

    def test_too_few_runs(self):
        with pytest.raises(SpecError):
            noisy_spectrum_ensemble(ChainSpec.homogeneous_chain(2, 5.0, 0.5), NoiseSpec(), n_runs=1)
