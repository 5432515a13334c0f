"""
Sigmoid fits of response curves and their resampled slope uncertainty.

S(x) = a + b / (1 + exp(-(x - x0) / w)), midpoint slope b / (4 w).
"""

from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np
from scipy.optimize import least_squares
from scipy.special import expit

from . import settings
from .exceptions.errors import FitError


@dataclass(frozen=True)
class SigmoidFit:
    a: float
    b: float
    x0: float
    w: float
    residual_rms: float
    converged: bool
    status: str = ""

    @property
    def midpoint_slope(self) -> float:
        if self.b == 0.0:
            return 0.0
        return self.b / (4.0 * self.w)

    def evaluate(self, xs):
        xs = np.asarray(xs, dtype=float)
        if self.b == 0.0:
            return np.full_like(xs, self.a)
        return sigmoid(xs, self.a, self.b, self.x0, self.w)


@dataclass(frozen=True)
class SlopeSpread:
    """Spread of midpoint slopes over jittered refits."""

    std: float
    mean: float
    n_resamples: int
    n_failed: int
    converged: bool = True


def sigmoid(xs, a, b, x0, w):
    return a + b * expit((np.asarray(xs) - x0) / w)


def _residuals(p, xs, ys):
    return sigmoid(xs, *p) - ys


def _jacobian(p, xs, ys):
    a, b, x0, w = p
    s = expit((xs - x0) / w)
    ds = s * (1.0 - s)
    J = np.empty((len(xs), 4))
    J[:, 0] = 1.0
    J[:, 1] = s
    J[:, 2] = -b * ds / w
    J[:, 3] = -b * ds * (xs - x0) / w ** 2
    return J


def initial_guess(xs, ys):
    """a = min, b = range, x0 at the mid-range crossing, w = span/10; mirrored for decreasing data."""
    lo, hi = float(np.min(ys)), float(np.max(ys))
    span = float(xs[-1] - xs[0])
    half = 0.5 * (lo + hi)
    idx = int(np.argmin(np.abs(ys - half)))
    increasing = ys[-1] >= ys[0]
    if increasing:
        return np.array([lo, hi - lo, xs[idx], span / 10.0])
    return np.array([hi, lo - hi, xs[idx], span / 10.0])


def fit_sigmoid(xs: Sequence[float], ys: Sequence[float],
                xtol: float = settings.FIT_XTOL,
                max_iter: int = settings.FIT_MAX_ITER) -> SigmoidFit:
    """
    Levenberg-Marquardt fit of a four-parameter sigmoid.

    Flat data returns b = 0 (slope 0). Data that is fitted only by a sigmoid
    wider than the sampled span, or with a midpoint outside it, is flagged
    converged=False rather than reported with a confident slope.

    Raises:
        FitError: fewer than 5 points, non-finite data or a singular problem
    """
    xs = np.asarray(xs, dtype=float)
    ys = np.asarray(ys, dtype=float)
    if xs.shape != ys.shape or xs.ndim != 1:
        raise FitError("xs and ys must be 1-D and of equal length")
    if len(xs) < 5:
        raise FitError(f"Sigmoid fit needs at least 5 points, got {len(xs)}")
    if not (np.all(np.isfinite(xs)) and np.all(np.isfinite(ys))):
        raise FitError("Sigmoid fit data must be finite")
    order = np.argsort(xs)
    xs, ys = xs[order], ys[order]
    span = float(xs[-1] - xs[0])
    if span <= 0:
        raise FitError("Sigmoid fit needs distinct x values")

    y_range = float(np.ptp(ys))
    scale = max(float(np.max(np.abs(ys))), 1.0)
    if y_range <= 1e-12 * scale:
        return SigmoidFit(a=float(np.mean(ys)), b=0.0, x0=float(np.mean(xs)), w=span,
                          residual_rms=float(np.sqrt(np.mean((ys - np.mean(ys)) ** 2))),
                          converged=True, status="flat")

    try:
        result = least_squares(
            _residuals, initial_guess(xs, ys), jac=_jacobian, args=(xs, ys),
            method="lm", xtol=xtol, ftol=xtol, gtol=1e-15, max_nfev=max_iter,
        )
    except (ValueError, np.linalg.LinAlgError) as e:
        raise FitError(f"Sigmoid fit failed: {e}") from e

    a, b, x0, w = (float(v) for v in result.x)
    if w < 0:
        a, b, w = a + b, -b, -w
    residual_rms = float(np.sqrt(np.mean(result.fun ** 2)))
    converged = bool(result.success) and bool(np.all(np.isfinite(result.x)))
    status = result.message
    if w > span:
        converged, status = False, f"width {w:.3g} exceeds sampled span {span:.3g}"
    elif w < 1e-9 * span:
        converged, status = False, "width collapsed to a step"
    elif not xs[0] <= x0 <= xs[-1]:
        converged, status = False, f"midpoint {x0:.4g} outside sampled range"
    return SigmoidFit(a=a, b=b, x0=x0, w=w, residual_rms=residual_rms,
                      converged=converged, status=status)


def resample_slopes(xs: Sequence[float], ys: Sequence[float],
                    jitter_sigma: float = settings.SLOPE_JITTER,
                    n_resamples: int = settings.SLOPE_RESAMPLES,
                    seed: Optional[int] = 0) -> SlopeSpread:
    """
    Refit with Gaussian offsets of width jitter_sigma added to ys.

    Non-converged refits are counted and left out of the spread. With no
    jitter every refit equals the original fit, so it is fitted once: the
    spread is 0 and converged carries that fit's status.

    Raises:
        FitError: every refit failed
    """
    if jitter_sigma < 0:
        raise FitError("jitter_sigma must be >= 0")
    if n_resamples < 2:
        raise FitError("n_resamples must be >= 2")
    xs = np.asarray(xs, dtype=float)
    ys = np.asarray(ys, dtype=float)
    if jitter_sigma == 0:
        fit = fit_sigmoid(xs, ys)
        return SlopeSpread(std=0.0, mean=fit.midpoint_slope, n_resamples=n_resamples,
                           n_failed=0, converged=fit.converged)
    rng = np.random.default_rng(seed)

    slopes, failed = [], 0
    for _ in range(n_resamples):
        noisy = ys + rng.normal(0.0, jitter_sigma, size=ys.shape)
        try:
            fit = fit_sigmoid(xs, noisy)
        except FitError:
            failed += 1
            continue
        if not fit.converged:
            failed += 1
            continue
        slopes.append(fit.midpoint_slope)

    if not slopes:
        raise FitError(f"All {n_resamples} resampled fits failed")
    slopes = np.asarray(slopes)
    return SlopeSpread(std=float(np.std(slopes)), mean=float(np.mean(slopes)),
                       n_resamples=n_resamples, n_failed=failed)
