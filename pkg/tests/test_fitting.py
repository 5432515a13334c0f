import numpy as np
import pytest

from spinbus.exceptions.errors import FitError
from spinbus.fitting import fit_sigmoid, initial_guess, resample_slopes, sigmoid

XS = np.linspace(-0.2, 0.2, 41)


class TestFitSigmoid:
    """Four-parameter sigmoid fits"""

    def test_recovers_exact_parameters(self):
        fit = fit_sigmoid(XS, sigmoid(XS, 0.0, 1.0, 0.0, 0.05))
        assert fit.converged
        assert [fit.a, fit.b, fit.x0, fit.w] == pytest.approx([0.0, 1.0, 0.0, 0.05], abs=1e-6)
        assert fit.midpoint_slope == pytest.approx(5.0, rel=1e-6)

    def test_decreasing_curve(self):
        fit = fit_sigmoid(XS, sigmoid(XS, 0.3, -0.6, 0.02, 0.04))
        assert fit.converged
        assert fit.w > 0
        assert fit.midpoint_slope == pytest.approx(-0.6 / 0.16, rel=1e-6)

    def test_unsorted_input(self):
        order = np.random.default_rng(2).permutation(len(XS))
        fit = fit_sigmoid(XS[order], sigmoid(XS, 0.0, 1.0, 0.0, 0.05)[order])
        assert fit.midpoint_slope == pytest.approx(5.0, rel=1e-6)

    def test_flat_curve_has_zero_slope(self):
        fit = fit_sigmoid(XS, np.full_like(XS, 0.7))
        assert fit.midpoint_slope == 0.0
        assert fit.status == "flat"
        assert np.allclose(fit.evaluate(XS), 0.7)

    def test_linear_data_not_confident(self):
        fit = fit_sigmoid(XS, 0.5 * XS)
        assert not fit.converged

    def test_too_few_points(self):
        with pytest.raises(FitError):
            fit_sigmoid([0, 1, 2, 3], [0, 0, 1, 1])

    def test_non_finite_data(self):
        ys = sigmoid(XS, 0.0, 1.0, 0.0, 0.05)
        ys[3] = np.nan
        with pytest.raises(FitError):
            fit_sigmoid(XS, ys)

    def test_initial_guess_mirrors_for_decreasing_data(self):
        ys = sigmoid(XS, 0.0, -1.0, 0.0, 0.05)
        a, b, _, w = initial_guess(XS, ys)
        assert a == pytest.approx(np.max(ys))
        assert b == pytest.approx(-np.ptp(ys))
        assert w == pytest.approx(0.04)


class TestResampledSlopes:
    """Slope spread under jittered refits"""

    def setup_method(self):
        self.ys = sigmoid(XS, 0.0, 0.02, 0.0, 0.03)

    def test_zero_jitter(self):
        spread = resample_slopes(XS, self.ys, 0.0, 20, seed=1)
        assert spread.std == pytest.approx(0.0, abs=1e-12)
        assert spread.n_failed == 0
        assert spread.converged

    def test_zero_jitter_keeps_unconverged_status(self):
        spread = resample_slopes(XS, 0.5 * XS, 0.0, 20)
        assert spread.std == 0.0
        assert spread.n_failed == 0
        assert not spread.converged

    def test_seeded(self):
        first = resample_slopes(XS, self.ys, 1.2e-3, 50, seed=4)
        second = resample_slopes(XS, self.ys, 1.2e-3, 50, seed=4)
        assert first == second

    def test_true_slope_within_spread(self):
        spread = resample_slopes(XS, self.ys, 1.2e-3, 200, seed=0)
        true_slope = 0.02 / (4 * 0.03)
        assert abs(spread.mean - true_slope) < 3 * spread.std + 1e-3

    def test_doubling_jitter_doubles_spread(self):
        small = resample_slopes(XS, self.ys, 2e-4, 200, seed=0)
        large = resample_slopes(XS, self.ys, 4e-4, 200, seed=0)
        assert large.std / small.std == pytest.approx(2.0, rel=0.2)

    def test_negative_jitter(self):
        with pytest.raises(FitError):
            resample_slopes(XS, self.ys, -1.0)
