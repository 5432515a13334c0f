"""
Virtual flux experiments on a spin chain.

Every unit is read out through the zero crossing of its ground-state
polarization: the effective symmetry point is the epsilon (or flux) at which
<sigma^z> of that unit vanishes with everything else held fixed. Sources are
moved by changing their own epsilon, so they stay inside the diagonalized
system.
"""

from dataclasses import dataclass
from typing import Optional, Sequence, Tuple, Union

import numpy as np
from scipy.optimize import brentq

from . import settings, units
from .circuit_map import epsilon_to_flux
from .eigensolver import (
    SpectrumResult,
    level_overlaps,
    site_polarization,
    solve_chain,
)
from .exceptions.errors import (
    ConvergenceError,
    DegenerateStateError,
    FitError,
    LevelIdentificationError,
    SpecError,
    SymmetryPointError,
)
from .fitting import SigmoidFit, SlopeSpread, fit_sigmoid, resample_slopes
from .hierarchy import GroupingPlan, hierarchical_eigenstates
from .spin_model import ChainSpec
from .utils.helpers import parallel_map
from .utils.logger import default_logger

__all__ = [
    "ResponseCurve",
    "FluxSignal",
    "QubitDoublet",
    "effective_symmetry_point",
    "symmetry_point_flux",
    "tune_symmetry_points",
    "flux_propagation",
    "susceptibility_curve",
    "fit_sigmoid",
    "slope_uncertainty",
    "j_eff_from_susceptibility",
    "two_level_response",
    "qubit_reference_states",
    "identify_qubit_doublet",
    "spectral_splitting",
    "hierarchical_splitting",
]

Currents = Union[None, float, Sequence[float]]


@dataclass(frozen=True)
class ResponseCurve:
    """
    Target symmetry point versus source bias, both as offsets from nominal.

    unit is "Phi0" for flux offsets or "GHz" for epsilon.
    """

    source_site: int
    target_site: int
    source_bias: Tuple[float, ...]
    target_symmetry_point: Tuple[float, ...]
    fit: SigmoidFit
    unit: str = "Phi0"

    def __post_init__(self):
        if len(self.source_bias) != len(self.target_symmetry_point):
            raise SpecError("source_bias and target_symmetry_point differ in length")
        if len(self.source_bias) < 7:
            raise SpecError(f"A response curve needs at least 7 points, got {len(self.source_bias)}")

    @property
    def midpoint_slope(self) -> float:
        return self.fit.midpoint_slope

    @property
    def converged(self) -> bool:
        return self.fit.converged

    @property
    def confident_slope(self) -> float:
        """Midpoint slope of a converged fit; FitError otherwise."""
        if not self.fit.converged:
            raise FitError(
                f"Sigmoid fit for source {self.source_site} -> target {self.target_site} "
                f"not converged ({self.fit.status}); no slope reported"
            )
        return self.fit.midpoint_slope

    @property
    def fit_residual(self) -> float:
        return self.fit.residual_rms

    @property
    def sigmoid_params(self) -> Tuple[float, float, float, float]:
        return (self.fit.a, self.fit.b, self.fit.x0, self.fit.w)


@dataclass(frozen=True)
class FluxSignal:
    """
    Shift of each target's symmetry point between the two source placements.

    magnitudes in mPhi0, epsilon_plus/epsilon_minus are the target symmetry
    points (GHz) with the source above and below its own symmetry point.
    """

    source_site: int
    source_offset: float
    targets: Tuple[int, ...]
    magnitudes: Tuple[float, ...]
    epsilon_plus: Tuple[float, ...]
    epsilon_minus: Tuple[float, ...]

    def magnitude_at(self, site: int) -> float:
        try:
            return self.magnitudes[self.targets.index(site)]
        except ValueError:
            raise SpecError(f"Site {site} is not a target of this signal")


@dataclass(frozen=True)
class QubitDoublet:
    """Two levels with largest weight on the decoupled one-excitation qubit states."""

    lower: int
    upper: int
    weights: Tuple[float, float]
    energies: Tuple[float, float]

    @property
    def splitting(self) -> float:
        return abs(self.energies[1] - self.energies[0])


def _resolve_currents(spec: ChainSpec, currents: Currents) -> np.ndarray:
    if currents is None:
        return np.full(spec.n_sites, settings.DEFAULT_PERSISTENT_CURRENT)
    if np.isscalar(currents):
        return np.full(spec.n_sites, float(currents))
    currents = np.asarray(currents, dtype=float)
    if currents.shape != (spec.n_sites,):
        raise SpecError(f"Expected {spec.n_sites} persistent currents, got {currents.shape}")
    if np.any(currents <= 0):
        raise SpecError("Persistent currents must be positive")
    return currents


# ----------- Symmetry points ------------

def _polarization(spec: ChainSpec, index: int, epsilon: float) -> Tuple[float, SpectrumResult]:
    trial = spec.with_site(index, epsilon=epsilon)
    spectrum = solve_chain(trial, k=min(2, trial.dimension))
    return site_polarization(spectrum, index), spectrum


def default_search_interval(spec: ChainSpec, site) -> Tuple[float, float]:
    """Symmetric interval wide enough to hold any mean-field shift of the site."""
    index = spec.resolve_site(site)
    reach = 2.0 * sum(abs(j) for _, j in spec.couplings.neighbors(index))
    half = reach + spec.sites[index].delta + 1.0
    return -half, half


def _scan_for_bracket(f, lo: float, hi: float, points: int = 201) -> Tuple[float, float]:
    center = 0.5 * (lo + hi)
    half = 2.0 * (hi - lo)
    grid = np.linspace(center - half, center + half, points)
    values = [f(x) for x in grid]
    for x0, x1, v0, v1 in zip(grid[:-1], grid[1:], values[:-1], values[1:]):
        if v0 == 0.0:
            return x0, x0
        if v0 * v1 < 0:
            return x0, x1
    raise SymmetryPointError(
        f"<sigma^z> keeps one sign on [{grid[0]:.4g}, {grid[-1]:.4g}] GHz"
    )


def effective_symmetry_point(spec: ChainSpec, target_site,
                             search_interval: Optional[Tuple[float, float]] = None,
                             tol: float = settings.SYMMETRY_POINT_TOL) -> float:
    """
    Epsilon of the target (GHz) where its ground-state <sigma^z> vanishes.

    Brent's bracketing root search to tol in epsilon. When the interval
    does not bracket a sign change, a 201-point scan over a four times wider
    interval looks for one.

    Raises:
        SymmetryPointError: no sign change found
        DegenerateStateError: ground state degenerate at the root
    """
    index = spec.resolve_site(target_site)
    lo, hi = search_interval or default_search_interval(spec, index)
    if not lo < hi:
        raise SpecError(f"Search interval must be increasing, got ({lo}, {hi})")

    def f(epsilon):
        return _polarization(spec, index, epsilon)[0]

    f_lo, f_hi = f(lo), f(hi)
    if f_lo == 0.0:
        root = lo
    elif f_hi == 0.0:
        root = hi
    else:
        if f_lo * f_hi > 0:
            lo, hi = _scan_for_bracket(f, lo, hi)
        root = lo if lo == hi else brentq(f, lo, hi, xtol=tol)

    _, spectrum = _polarization(spec, index, root)
    if spectrum.n_levels >= 2 and spectrum.gap <= settings.DEGENERACY_TOL:
        raise DegenerateStateError(
            f"Ground state of site {index} is degenerate at its symmetry point {root:.6g} GHz"
        )
    return float(root)


def symmetry_point_flux(spec: ChainSpec, target_site, persistent_current: float,
                        search_interval: Optional[Tuple[float, float]] = None,
                        tol: float = settings.SYMMETRY_POINT_TOL) -> float:
    """effective_symmetry_point as a flux offset (Phi0) from the nominal half-flux point."""
    epsilon = effective_symmetry_point(spec, target_site, search_interval, tol)
    return epsilon_to_flux(persistent_current, epsilon)


def tune_symmetry_points(spec: ChainSpec, sites: Optional[Sequence] = None,
                         tol: float = settings.SYMMETRY_POINT_TOL, max_sweeps: int = 50,
                         logger=None) -> Tuple[ChainSpec, np.ndarray]:
    """
    Move each listed unit onto its effective symmetry point, repeatedly.

    Sites are updated one after another with the latest values of the
    others; sweeps stop once no epsilon moves by more than 10 * tol.

    Returns:
        (tuned spec, epsilons of the tuned sites)
    """
    logger = logger or default_logger
    indices = [spec.resolve_site(s) for s in (sites if sites is not None else range(spec.n_sites))]
    current = spec
    for sweep in range(1, max_sweeps + 1):
        moved = 0.0
        for index in indices:
            epsilon = effective_symmetry_point(current, index, tol=tol * 1e-3)
            moved = max(moved, abs(epsilon - current.sites[index].epsilon))
            current = current.with_site(index, epsilon=epsilon)
        logger.debug(f"Symmetry tuning sweep {sweep}: largest move {moved:.3e} GHz")
        if moved <= 10 * tol:
            return current, current.epsilons[indices]
    raise ConvergenceError(f"Symmetry points still moving after {max_sweeps} sweeps")


# ----------- Flux response ------------

def flux_propagation(spec: ChainSpec, source_site, currents: Currents = None,
                     source_offset: float = settings.SOURCE_OFFSET,
                     targets: Optional[Sequence] = None,
                     tol: float = settings.SYMMETRY_POINT_TOL,
                     threads: int = 1) -> FluxSignal:
    """
    Symmetry-point shift of each target with the source at +-source_offset (Phi0).

    Args:
        spec: chain with the source at its own symmetry point
        source_site: index or label of the swept unit
        currents: persistent currents (nA) per site, a scalar for all sites,
            or None for settings.DEFAULT_PERSISTENT_CURRENT

    Returns:
        FluxSignal with magnitudes in mPhi0
    """
    source = spec.resolve_site(source_site)
    i_p = _resolve_currents(spec, currents)
    target_indices = tuple(
        spec.resolve_site(t) for t in (targets if targets is not None else range(spec.n_sites))
        if spec.resolve_site(t) != source
    )
    step = units.flux_energy_slope(i_p[source]) * source_offset
    base = spec.sites[source].epsilon
    plus = spec.with_site(source, epsilon=base + step)
    minus = spec.with_site(source, epsilon=base - step)

    def shifts(target):
        return (effective_symmetry_point(plus, target, tol=tol),
                effective_symmetry_point(minus, target, tol=tol))

    pairs = parallel_map(shifts, target_indices, threads)
    magnitudes = tuple(
        1e3 * abs(epsilon_to_flux(i_p[t], e_plus - e_minus))
        for t, (e_plus, e_minus) in zip(target_indices, pairs)
    )
    return FluxSignal(
        source_site=source,
        source_offset=float(source_offset),
        targets=target_indices,
        magnitudes=magnitudes,
        epsilon_plus=tuple(p for p, _ in pairs),
        epsilon_minus=tuple(m for _, m in pairs),
    )


def default_source_grid(points: int = settings.SWEEP_POINTS,
                        half_width: float = settings.SOURCE_OFFSET) -> np.ndarray:
    return np.linspace(-half_width, half_width, points)


def susceptibility_curve(spec: ChainSpec, source_site, target_site,
                         grid: Optional[Sequence[float]] = None, currents: Currents = None,
                         tol: float = 1e-9, threads: int = 1, logger=None) -> ResponseCurve:
    """
    Target symmetry flux versus source flux, with its sigmoid fit.

    grid holds source offsets in Phi0 from the source's current bias
    (default 41 points over +-20 mPhi0). The midpoint slope is the
    dimensionless flux transfer ratio df_target / df_source.
    A fit that did not converge is returned with converged=False and a
    warning; its confident_slope raises FitError.
    """
    logger = logger or default_logger
    source = spec.resolve_site(source_site)
    target = spec.resolve_site(target_site)
    if source == target:
        raise SpecError("Source and target must differ")
    grid = np.asarray(default_source_grid() if grid is None else grid, dtype=float)
    if len(grid) < 21:
        raise SpecError(f"Susceptibility grid needs at least 21 points, got {len(grid)}")
    i_p = _resolve_currents(spec, currents)
    slope_s = units.flux_energy_slope(i_p[source])
    base = spec.sites[source].epsilon

    def respond(offset):
        shifted = spec.with_site(source, epsilon=base + slope_s * offset)
        return epsilon_to_flux(i_p[target], effective_symmetry_point(shifted, target, tol=tol))

    ys = np.asarray(parallel_map(respond, grid, threads))
    fit = fit_sigmoid(grid, ys)
    if not fit.converged:
        logger.warn(
            f"Sigmoid fit for source {source} -> target {target} not converged "
            f"({fit.status}); residual {fit.residual_rms:.3e} Phi0"
        )
    return ResponseCurve(
        source_site=source,
        target_site=target,
        source_bias=tuple(float(x) for x in grid),
        target_symmetry_point=tuple(float(y) for y in ys),
        fit=fit,
    )


def slope_uncertainty(curve: ResponseCurve, jitter_sigma: float = settings.SLOPE_JITTER,
                      n_resamples: int = settings.SLOPE_RESAMPLES, seed: Optional[int] = 0,
                      logger=None) -> SlopeSpread:
    """Spread of the midpoint slope when the curve's symmetry points are jittered."""
    spread = resample_slopes(curve.source_bias, curve.target_symmetry_point,
                             jitter_sigma, n_resamples, seed)
    if spread.n_failed:
        (logger or default_logger).warn(
            f"{spread.n_failed} of {n_resamples} resampled fits failed for "
            f"source {curve.source_site} -> target {curve.target_site}"
        )
    return spread


def j_eff_from_susceptibility(slope: float, d_iz_d_fz: float, i_p_q1: float, i_p_q2: float,
                              m_q1c1: float, m_q2c7: float) -> float:
    """
    Qubit-qubit coupling (GHz) from the flux transfer ratio.

    chi = d<I_c1>/df_c1 * df_c1/df_c7 and J_eff = chi (M_q1c1 I_q1)(M_q2c7 I_q2),
    with d_iz_d_fz in nA/Phi0, currents in nA and mutual inductances in pH.
    """
    chi = d_iz_d_fz * units.NANO * slope / units.PHI0
    flux_q1 = m_q1c1 * units.PICO * i_p_q1 * units.NANO
    flux_q2 = m_q2c7 * units.PICO * i_p_q2 * units.NANO
    return float(units.joule_to_ghz(chi * flux_q1 * flux_q2))


def two_level_response(persistent_current: float, delta: float) -> float:
    """d<I_z>/df_z (nA/Phi0) of an isolated two-level unit at its symmetry point."""
    if delta <= 0:
        raise SpecError("Two-level response needs a positive gap")
    return float(persistent_current * units.flux_energy_slope(persistent_current) / delta)


# ----------- Spectroscopy ------------

def qubit_reference_states(spec: ChainSpec, q1=0, q2=-1) -> np.ndarray:
    """Columns |eg>|chain 0> and |ge>|chain 0> of a bus with unbiased end qubits."""
    q1 = spec.resolve_site(q1)
    q2 = spec.resolve_site(q2)
    if q1 != 0 or q2 != spec.n_sites - 1:
        raise SpecError("Qubits must sit at both ends of the chain")
    for q in (q1, q2):
        if spec.sites[q].epsilon != 0.0:
            raise SpecError(f"Qubit at site {q} must have epsilon = 0 for the splitting measurement")
    inner = spec.subchain(list(range(1, spec.n_sites - 1)))
    chain_ground = solve_chain(inner, k=min(2, inner.dimension))
    chain_ground.require_unique_ground()
    g = np.array([1.0, -1.0]) / np.sqrt(2.0)
    e = np.array([1.0, 1.0]) / np.sqrt(2.0)
    psi_c = chain_ground.ground_state
    eg = np.kron(np.kron(e, psi_c), g)
    ge = np.kron(np.kron(g, psi_c), e)
    return np.column_stack([eg, ge])


def identify_qubit_doublet(spec: ChainSpec, spectrum: Optional[SpectrumResult] = None,
                           q1=0, q2=-1, threshold: float = 0.5,
                           reference: Optional[np.ndarray] = None) -> QubitDoublet:
    """
    Locate the one-excitation qubit doublet by overlap with |eg>|chain 0> and |ge>|chain 0>.

    Raises:
        LevelIdentificationError: a doublet level carries weight below threshold
    """
    q1 = spec.resolve_site(q1)
    q2 = spec.resolve_site(q2)
    if reference is None:
        reference = qubit_reference_states(spec, q1, q2)
    if spectrum is None:
        spectrum = solve_chain(spec, k=None if spec.n_sites <= 10 else 32)
    weights = level_overlaps(reference, spectrum.states).sum(axis=0)
    top = np.argsort(weights)[::-1][:2]
    lower, upper = sorted(int(i) for i in top)
    pair = (float(weights[lower]), float(weights[upper]))
    if min(pair) < threshold:
        raise LevelIdentificationError(
            f"Qubit-like levels not identifiable: overlaps {pair[0]:.3f}, {pair[1]:.3f} "
            f"below {threshold}; the qubits are dressed by the chain"
        )
    return QubitDoublet(
        lower=lower,
        upper=upper,
        weights=pair,
        energies=(float(spectrum.energies[lower]), float(spectrum.energies[upper])),
    )


def spectral_splitting(full_spec: ChainSpec, q1=0, q2=-1, threshold: float = 0.5) -> float:
    """
    Splitting (GHz) of the initially degenerate |eg>, |ge> qubit states.

    Both qubits need epsilon = 0 and the same transverse field; the result
    equals 2 |J_eff| at weak coupling.
    """
    a = full_spec.resolve_site(q1)
    b = full_spec.resolve_site(q2)
    d_a, d_b = full_spec.sites[a].delta, full_spec.sites[b].delta
    if not np.isclose(d_a, d_b, rtol=1e-12, atol=0.0):
        raise SpecError(f"Qubit transverse fields differ: {d_a} vs {d_b} GHz")
    return identify_qubit_doublet(full_spec, q1=a, q2=b, threshold=threshold).splitting


def hierarchical_splitting(full_spec: ChainSpec, plan: GroupingPlan, q1=0, q2=-1,
                           threshold: float = 0.5, threads: int = 1) -> float:
    """
    spectral_splitting evaluated on the grouped truncation of the chain.

    The composite eigenvectors are lifted back to the site basis so the qubit
    doublet is picked by the same overlap rule as in the exact spectrum.
    """
    a = full_spec.resolve_site(q1)
    b = full_spec.resolve_site(q2)
    d_a, d_b = full_spec.sites[a].delta, full_spec.sites[b].delta
    if not np.isclose(d_a, d_b, rtol=1e-12, atol=0.0):
        raise SpecError(f"Qubit transverse fields differ: {d_a} vs {d_b} GHz")
    spectrum = hierarchical_eigenstates(full_spec, plan, threads=threads)
    return identify_qubit_doublet(full_spec, spectrum, q1=a, q2=b, threshold=threshold).splitting
