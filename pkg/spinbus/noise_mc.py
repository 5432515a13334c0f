"""
Quasistatic 1/f^alpha flux noise.

Each run freezes one Gaussian flux offset per loop, re-diagonalizes the
chain and tracks the levels back to the noiseless ones. The spread of a
level over runs is its inhomogeneous linewidth.
"""

from dataclasses import dataclass
from typing import Optional, Sequence, Tuple, Union

import numpy as np

from . import settings, units
from .eigensolver import solve_chain, track_levels
from .exceptions.errors import DegenerateStateError, LevelIdentificationError, SpecError
from .experiments import identify_qubit_doublet, qubit_reference_states
from .spin_model import ChainSpec
from .utils.helpers import parallel_map
from .utils.logger import default_logger

MICRO = 1e-6

Geometry = Union[float, Sequence[float]]


@dataclass(frozen=True)
class NoiseSpec:
    """
    One-sided flux noise PSD S(f) = A^2 (f / 1 Hz)^-alpha.

    amplitude in uPhi0/sqrt(Hz) at 1 Hz, band edges in Hz. geometry_z and
    geometry_x scale the offset of each z- and x-loop (scalar or per site).
    x-loop noise is only applied when include_x is set.
    """

    amplitude: float = 3.0
    alpha: float = 0.9
    f_low: float = 1e-3
    f_high: float = 1e6
    geometry_z: Geometry = 1.0
    geometry_x: Geometry = 1.0
    include_x: bool = False

    def __post_init__(self):
        if not self.amplitude >= 0:
            raise SpecError(f"Noise amplitude must be >= 0, got {self.amplitude}")
        if not 0 < self.alpha < 2:
            raise SpecError(f"alpha must be in (0, 2), got {self.alpha}")
        if not 0 < self.f_low < self.f_high:
            raise SpecError(f"Invalid noise band [{self.f_low}, {self.f_high}] Hz")
        for name in ("geometry_z", "geometry_x"):
            value = getattr(self, name)
            if not np.isscalar(value):
                object.__setattr__(self, name, tuple(float(g) for g in value))
            if np.any(np.asarray(getattr(self, name)) < 0):
                raise SpecError(f"{name} factors must be >= 0")

    def scaled(self, factor: float) -> "NoiseSpec":
        return NoiseSpec(self.amplitude * factor, self.alpha, self.f_low, self.f_high,
                         self.geometry_z, self.geometry_x, self.include_x)


@dataclass(frozen=True)
class NoiseEnsembleStats:
    """
    Per-level statistics over the ensemble (GHz).

    std_transitions[qubit_level] is the linewidth of the lower qubit-like
    level when the chain carries qubits. qubit_identified is False when the
    noiseless doublet could not be found and qubit_level fell back to 1;
    unidentified_runs counts noisy runs whose doublet could not be found.
    """

    noiseless_energies: np.ndarray
    mean_energies: np.ndarray
    std_energies: np.ndarray
    mean_transitions: np.ndarray
    std_transitions: np.ndarray
    n_samples: int
    seed: Optional[int]
    rms_offset: float
    ambiguous_levels: Tuple[int, ...] = ()
    qubit_level: Optional[int] = None
    qubit_identified: bool = False
    unidentified_runs: int = 0

    @property
    def n_levels(self) -> int:
        return len(self.mean_energies)

    @property
    def qubit_linewidth(self) -> float:
        if self.qubit_level is None:
            raise SpecError("No qubit-like level in this ensemble")
        return float(self.std_transitions[self.qubit_level])


def rms_flux_offset(noise: NoiseSpec) -> float:
    """
    sigma (uPhi0) with sigma^2 = A^2 * integral of f^-alpha over the band.

    alpha = 1 uses the log form; otherwise the closed form is evaluated with
    expm1 so it stays accurate close to alpha = 1.
    """
    if noise.amplitude == 0:
        return 0.0
    log_ratio = np.log(noise.f_high / noise.f_low)
    if noise.alpha == 1.0:
        integral = log_ratio
    else:
        p = 1.0 - noise.alpha
        integral = noise.f_low ** p * np.expm1(p * log_ratio) / p
    return float(noise.amplitude * np.sqrt(integral))


def _geometry(factors: Geometry, n_loops: int) -> np.ndarray:
    if np.isscalar(factors):
        return np.full(n_loops, float(factors))
    factors = np.asarray(factors, dtype=float)
    if factors.shape != (n_loops,):
        raise SpecError(f"Expected {n_loops} geometry factors, got {len(factors)}")
    return factors


def sample_offsets(noise: NoiseSpec, n_loops: int, seed=None,
                   geometry: Optional[Geometry] = None) -> np.ndarray:
    """
    Independent zero-mean Gaussian offsets (uPhi0), one per loop.

    seed may be an int, a SeedSequence or a Generator.
    """
    if n_loops < 0:
        raise SpecError("n_loops must be >= 0")
    sigma = rms_flux_offset(noise) * _geometry(noise.geometry_z if geometry is None else geometry, n_loops)
    if not np.any(sigma):
        return np.zeros(n_loops)
    rng = seed if isinstance(seed, np.random.Generator) else np.random.default_rng(seed)
    return rng.normal(0.0, 1.0, size=n_loops) * sigma


def _per_site(values, n_sites: int, default: float, name: str) -> np.ndarray:
    if values is None:
        return np.full(n_sites, default)
    if np.isscalar(values):
        return np.full(n_sites, float(values))
    values = np.asarray(values, dtype=float)
    if values.shape != (n_sites,):
        raise SpecError(f"Expected {n_sites} values for {name}, got {values.shape}")
    return values


def perturbed_spec(spec: ChainSpec, offsets_z: np.ndarray, currents: np.ndarray,
                   offsets_x: Optional[np.ndarray] = None,
                   delta_sensitivity: Optional[np.ndarray] = None) -> ChainSpec:
    """Chain with z-offsets (uPhi0) added to epsilon and x-offsets to delta."""
    epsilons = spec.epsilons + units.flux_energy_slope(currents) * offsets_z * MICRO
    noisy = spec.with_epsilons(epsilons)
    if offsets_x is not None and delta_sensitivity is not None:
        deltas = np.clip(spec.deltas + delta_sensitivity * offsets_x * MICRO, 0.0, None)
        noisy = noisy.with_deltas(deltas)
    return noisy


def _std(values: np.ndarray) -> np.ndarray:
    spread = np.std(values, axis=0, ddof=1)
    return np.where(np.ptp(values, axis=0) == 0, 0.0, spread)


def noisy_spectrum_ensemble(base_spec: ChainSpec, noise: NoiseSpec, n_runs: int = 10,
                            seed: Optional[int] = 0, currents=None,
                            delta_sensitivity=None, n_levels: Optional[int] = None,
                            threads: int = 1, logger=None) -> NoiseEnsembleStats:
    """
    Level statistics of base_spec under frozen flux offsets.

    Args:
        base_spec: noiseless chain
        noise: noise model
        n_runs: ensemble size (>= 2)
        seed: master seed; run i draws from the i-th spawned substream
        currents: persistent current per site (nA) for the flux to epsilon map
        delta_sensitivity: dDelta/df_x per site (GHz/Phi0), used with include_x
        n_levels: levels reported (default min(dimension, 16))

    Returns:
        NoiseEnsembleStats
    """
    logger = logger or default_logger
    if n_runs < 2:
        raise SpecError(f"n_runs must be >= 2, got {n_runs}")
    n = base_spec.n_sites
    i_p = _per_site(currents, n, settings.DEFAULT_PERSISTENT_CURRENT, "currents")
    sens = None
    if noise.include_x:
        if delta_sensitivity is None:
            raise SpecError("x-loop noise needs delta_sensitivity per site")
        sens = _per_site(delta_sensitivity, n, 0.0, "delta_sensitivity")
    n_levels = n_levels or min(base_spec.dimension, 16)

    full = base_spec.dimension <= 1024
    reference = solve_chain(base_spec, k=None if full else min(base_spec.dimension, 2 * n_levels))
    if reference.n_levels < n_levels:
        raise SpecError(f"Only {reference.n_levels} levels available, {n_levels} requested")

    qubit_level, qubit_states, identified = None, None, False
    if len(base_spec.qubit_indices()) == 2:
        try:
            qubit_states = qubit_reference_states(base_spec)
            qubit_level = identify_qubit_doublet(base_spec, reference, reference=qubit_states).lower
            identified = True
        except (LevelIdentificationError, DegenerateStateError, SpecError) as e:
            logger.warn(f"Qubit doublet not identified ({e}); reporting level 1, flagged")
            qubit_level = 1

    def doublet_found(noisy, spectrum):
        if not identified:
            return False
        try:
            identify_qubit_doublet(noisy, spectrum, reference=qubit_states)
        except LevelIdentificationError:
            return False
        return True

    children = np.random.SeedSequence(seed).spawn(n_runs)

    def run(child):
        rng = np.random.default_rng(child)
        offsets_z = sample_offsets(noise, n, rng)
        offsets_x = sample_offsets(noise, n, rng, noise.geometry_x) if sens is not None else None
        noisy = perturbed_spec(base_spec, offsets_z, i_p, offsets_x, sens)
        spectrum = solve_chain(noisy, k=reference.n_levels)
        picks, best = track_levels(reference.states[:, :n_levels], spectrum.states)
        ambiguous = sum(1 for b in best if b < 0.5)
        found = qubit_level is None or doublet_found(noisy, spectrum)
        return spectrum.energies[picks], ambiguous, found

    results = parallel_map(run, children, threads)
    energies = np.array([r[0] for r in results])
    ambiguous = tuple(int(r[1]) for r in results)
    if any(ambiguous):
        logger.warn(
            f"Level tracking ambiguous (overlap < 0.5) in {sum(1 for a in ambiguous if a)} "
            f"of {n_runs} runs"
        )
    unidentified = sum(1 for r in results if not r[2])
    if unidentified:
        logger.warn(f"Qubit doublet not identified in {unidentified} of {n_runs} runs")
    transitions = energies - energies[:, :1]

    return NoiseEnsembleStats(
        noiseless_energies=reference.energies[:n_levels].copy(),
        mean_energies=energies.mean(axis=0),
        std_energies=_std(energies),
        mean_transitions=transitions.mean(axis=0),
        std_transitions=_std(transitions),
        n_samples=n_runs,
        seed=seed,
        rms_offset=rms_flux_offset(noise),
        ambiguous_levels=ambiguous,
        qubit_level=qubit_level,
        qubit_identified=identified,
        unidentified_runs=unidentified,
    )
