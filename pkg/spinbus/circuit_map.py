"""
Single-mode quantization of a tunable rf-SQUID and its spin-model character.

The z-loop phase phi is expanded in a fixed harmonic-oscillator basis of the
bare LC mode centred at the nominal symmetry flux (phi_c = pi):

    H = 4 E_C n^2 + E_L (phi - 2 pi f_z)^2 / 2 - E_J(f_x) cos(phi - theta(f_x))

with the split x-loop junction E_J1 cos(phi - pi f_x) + E_J2 cos(phi + pi f_x),
E_J1,2 = E_J0 (1 +- d). The basis does not move with f_z, so the loop current
operator (Phi - Phi_ext) / L_z is exactly dH/dPhi_ext in the truncated space.
"""

from dataclasses import asdict, dataclass
from typing import Optional, Sequence, Tuple

import numpy as np
import scipy.linalg as la
from scipy.optimize import brentq

from . import settings, units
from .eigensolver import SpectrumResult, diagonalize, expectation
from .exceptions.errors import ConvergenceError, SpecError, SymmetryPointError
from .spin_model import ChainSpec
from .utils.logger import default_logger

NOMINAL_FZ = 0.5


@dataclass(frozen=True)
class CircuitUnitParams:
    """
    Lumped description of one tunable unit.

    L_z in pH, C_eff in fF, I_c per x-loop junction in nA, d the x-loop
    junction asymmetry (E_J1 - E_J2) / (E_J1 + E_J2).
    """

    L_z: float
    C_eff: float
    I_c: float
    d: float = 0.0
    n_junctions_x: int = 2
    name: str = "unit"

    def __post_init__(self):
        for attr in ("L_z", "C_eff", "I_c"):
            value = getattr(self, attr)
            if not np.isfinite(value) or value <= 0:
                raise SpecError(f"{attr} must be positive, got {value}")
        if not abs(self.d) < 1:
            raise SpecError(f"|d| must be < 1, got {self.d}")
        if self.n_junctions_x not in (1, 2):
            raise SpecError(f"n_junctions_x must be 1 or 2, got {self.n_junctions_x}")

    @property
    def charging_energy(self) -> float:
        return units.charging_energy_ghz(self.C_eff)

    @property
    def inductive_energy(self) -> float:
        return units.inductive_energy_ghz(self.L_z)

    @property
    def josephson_energy(self) -> float:
        return units.josephson_energy_ghz(self.I_c)

    @property
    def plasma_frequency(self) -> float:
        """Bare LC frequency sqrt(8 E_C E_L) = 1 / (2 pi sqrt(L C)) in GHz."""
        return float(np.sqrt(8.0 * self.charging_energy * self.inductive_energy))

    @property
    def phase_zpf(self) -> float:
        return float((2.0 * self.charging_energy / self.inductive_energy) ** 0.25)

    def to_dict(self):
        return asdict(self)


@dataclass(frozen=True)
class FluxBias:
    """External fluxes in Phi0, reduced modulo 1 with the integer branch kept."""

    f_z: float = NOMINAL_FZ
    f_x: float = 0.0
    branch_z: int = 0
    branch_x: int = 0

    def __post_init__(self):
        for attr, branch in (("f_z", "branch_z"), ("f_x", "branch_x")):
            value = float(getattr(self, attr))
            if not np.isfinite(value):
                raise SpecError(f"{attr} must be finite")
            whole = int(np.floor(value))
            object.__setattr__(self, attr, value - whole)
            object.__setattr__(self, branch, getattr(self, branch) + whole)

    @property
    def total_z(self) -> float:
        return self.f_z + self.branch_z

    @property
    def total_x(self) -> float:
        return self.f_x + self.branch_x


@dataclass(frozen=True)
class UnitCharacter:
    """
    Spin-model quantities of one unit at a fixed x-loop bias.

    delta in GHz, persistent_current in nA, iz_ground_curve in nA sampled on
    f_z_grid (Phi0), d_iz_d_fz and chi_local in nA/Phi0.
    """

    f_x: float
    delta: float
    persistent_current: float
    symmetry_point: float
    f_z_grid: Tuple[float, ...]
    iz_ground_curve: Tuple[float, ...]
    beta_c: float
    d_iz_d_fz: float
    chi_local: float
    basis_size: int = settings.BASIS_SIZE
    sigmoid_converged: bool = True


# ----------- Junction algebra ------------

def effective_josephson(params: CircuitUnitParams, f_x: float) -> Tuple[float, float]:
    """
    Combined x-loop junction as E_J cos(phi - theta).

    Returns:
        (E_J in GHz, theta in rad); E_J = 2 E_J0 |cos pi f_x| sqrt(1 + d^2 tan^2 pi f_x)
    """
    ej0 = params.josephson_energy
    if params.n_junctions_x == 1:
        return ej0, 0.0
    c = np.cos(np.pi * f_x)
    s = np.sin(np.pi * f_x)
    return float(2.0 * ej0 * np.hypot(c, params.d * s)), float(np.arctan2(params.d * s, c))


def beta_c(params: CircuitUnitParams, f_x: float) -> float:
    """2 pi L_z I_c_eff(f_x) / Phi0, i.e. E_J(f_x) / E_L."""
    e_j, _ = effective_josephson(params, f_x)
    return float(e_j / params.inductive_energy)


def reduce_coupler_capacitance(c_gr: float, c_gl: float, c_gz: float, c_rl: float,
                               c_rz: float, c_lz: float, c_junction: float = 4.4,
                               n_junctions: int = 2) -> float:
    """
    Effective z-mode capacitance (fF) of the three-island coupler.

    The z-mode swings island z against the r/l pair: the direct r-z and l-z
    capacitances add in parallel with the ground path C_gz in series with
    C_gr + C_gl. C_rl sits across the x-loop and does not load the z-mode.
    Junction capacitances are added in parallel.
    """
    ground_path = c_gz * (c_gr + c_gl) / (c_gz + c_gr + c_gl)
    return float(c_rz + c_lz + ground_path + n_junctions * c_junction)


# ----------- Quantization ------------

def _position_operator(basis_size: int):
    off = np.sqrt(np.arange(1, basis_size))
    nodes, vectors = la.eigh_tridiagonal(np.zeros(basis_size), off)
    return off, nodes, vectors


def unit_hamiltonian(params: CircuitUnitParams, bias: FluxBias,
                     basis_size: int = settings.BASIS_SIZE) -> np.ndarray:
    """Dense Hamiltonian (GHz) in the fixed oscillator basis."""
    if basis_size < 20:
        raise SpecError(f"basis_size must be >= 20, got {basis_size}")
    zpf = params.phase_zpf
    off, nodes, vectors = _position_operator(basis_size)
    shift = 2.0 * np.pi * (bias.total_z - NOMINAL_FZ)
    e_l = params.inductive_energy

    H = np.diag(params.plasma_frequency * (np.arange(basis_size) + 0.5))
    H[np.arange(basis_size - 1), np.arange(1, basis_size)] -= e_l * shift * zpf * off
    H[np.arange(1, basis_size), np.arange(basis_size - 1)] -= e_l * shift * zpf * off
    H[np.diag_indices(basis_size)] += 0.5 * e_l * shift ** 2

    phase = np.pi + zpf * nodes
    e_j, theta = effective_josephson(params, bias.total_x)
    if e_j:
        potential = -e_j * np.cos(phase - theta)
        H += (vectors * potential) @ vectors.T
    return 0.5 * (H + H.T)


def current_operator(params: CircuitUnitParams, bias: FluxBias,
                     basis_size: int = settings.BASIS_SIZE) -> np.ndarray:
    """Loop current (Phi - Phi_ext) / L_z in nA, same basis as unit_hamiltonian."""
    zpf = params.phase_zpf
    off = np.sqrt(np.arange(1, basis_size))
    shift = 2.0 * np.pi * (bias.total_z - NOMINAL_FZ)
    X = np.diag(off, 1) + np.diag(off, -1)
    return units.current_scale_na(params.L_z) * (zpf * X - shift * np.eye(basis_size))


def _solve(params, bias, basis_size, n_levels):
    return diagonalize(unit_hamiltonian(params, bias, basis_size), k=n_levels)


def converged_basis_size(params: CircuitUnitParams, bias: FluxBias,
                         basis_size: int = settings.BASIS_SIZE,
                         rel_tol: float = settings.BASIS_REL_TOL,
                         cap: int = settings.BASIS_CAP) -> int:
    """
    Smallest size in the doubling ladder whose gap agrees with the next rung.

    Returns the larger rung of the agreeing pair. Gaps below DEGENERACY_TOL
    (deep double wells) count as converged once both rungs resolve them as zero.
    """
    size = basis_size
    gap = _solve(params, bias, size, 2).gap
    while 2 * size <= cap:
        next_gap = _solve(params, bias, 2 * size, 2).gap
        if abs(next_gap - gap) <= rel_tol * abs(next_gap) + settings.DEGENERACY_TOL:
            return 2 * size
        size, gap = 2 * size, next_gap
    raise ConvergenceError(
        f"Gap of '{params.name}' not converged to {rel_tol:.0e} at basis size {size} (cap {cap})"
    )


def quantize_unit(params: CircuitUnitParams, bias: FluxBias,
                  basis_size: int = settings.BASIS_SIZE, n_levels: int = 6,
                  check_convergence: bool = True) -> SpectrumResult:
    """
    Lowest n_levels of the unit.

    With check_convergence the basis is doubled from basis_size until the
    gap changes by less than BASIS_REL_TOL; the spectrum returned is from the
    larger basis of the agreeing pair.
    """
    if check_convergence:
        basis_size = converged_basis_size(params, bias, basis_size)
    return _solve(params, bias, basis_size, min(n_levels, basis_size))


def ground_current(params: CircuitUnitParams, bias: FluxBias, basis_size: int) -> float:
    spectrum = _solve(params, bias, basis_size, 2)
    return expectation(spectrum.ground_state, current_operator(params, bias, basis_size))


def energy_slope_to_current(slope_ghz_per_phi0: float) -> float:
    """Convert dE0/df_z (GHz per Phi0) to the ground-state loop current (nA)."""
    return float(-slope_ghz_per_phi0 * units.H_PLANCK * units.GIGA / units.PHI0 / units.NANO)


# ----------- Character extraction ------------

def default_fz_grid(center: float = NOMINAL_FZ, half_width: float = 0.01,
                    points: int = settings.SWEEP_POINTS) -> np.ndarray:
    return center + np.linspace(-half_width, half_width, points)


def find_symmetry_point(params: CircuitUnitParams, f_x: float, f_z_grid: Sequence[float],
                        curve: Sequence[float], basis_size: int) -> float:
    """f_z where the ground-state current vanishes, bracketed on the grid."""
    curve = np.asarray(curve)
    if np.max(np.abs(curve)) <= 1e-9:
        return NOMINAL_FZ
    signs = np.sign(curve)
    crossings = np.nonzero(signs[:-1] * signs[1:] <= 0)[0]
    if len(crossings) == 0:
        raise SymmetryPointError(
            f"f_z grid [{f_z_grid[0]:.4f}, {f_z_grid[-1]:.4f}] does not bracket the symmetry point"
        )
    i = int(crossings[len(crossings) // 2])
    lo, hi = float(f_z_grid[i]), float(f_z_grid[i + 1])
    if curve[i] == 0.0:
        return lo
    if curve[i + 1] == 0.0:
        return hi
    return float(brentq(
        lambda fz: ground_current(params, FluxBias(fz, f_x), basis_size), lo, hi, xtol=1e-12
    ))


def extract_character(params: CircuitUnitParams, f_x: float,
                      f_z_grid: Optional[Sequence[float]] = None,
                      basis_size: int = settings.BASIS_SIZE,
                      cache=None, logger=None) -> UnitCharacter:
    """
    Gap, persistent current and flux response of one unit at x-loop bias f_x.

    Args:
        params: unit parameters
        f_x: x-loop flux (Phi0)
        f_z_grid: z-loop biases straddling 0.5 (default 41 points over +-10 mPhi0)
        basis_size: starting oscillator basis size for the convergence ladder
        cache: optional CharacterCache

    Returns:
        UnitCharacter
    """
    from .fitting import fit_sigmoid

    logger = logger or default_logger
    grid = np.asarray(default_fz_grid() if f_z_grid is None else f_z_grid, dtype=float)
    if len(grid) < 5 or not grid[0] < NOMINAL_FZ < grid[-1]:
        raise SpecError("f_z grid must have at least 5 points and straddle 0.5 Phi0")

    if cache is not None:
        hit = cache.lookup(params, f_x, grid, basis_size)
        if hit is not None:
            return hit

    size = converged_basis_size(params, FluxBias(NOMINAL_FZ, f_x), basis_size)
    curve = np.array([ground_current(params, FluxBias(fz, f_x), size) for fz in grid])
    f_star = find_symmetry_point(params, f_x, grid, curve, size)

    bias = FluxBias(f_star, f_x)
    spectrum = _solve(params, bias, size, 2)
    dipole = spectrum.states[:, 0] @ current_operator(params, bias, size) @ spectrum.states[:, 1]

    step = 1e-5
    chi = (ground_current(params, FluxBias(f_star + step, f_x), size)
           - ground_current(params, FluxBias(f_star - step, f_x), size)) / (2 * step)

    fit = fit_sigmoid(grid, curve)
    slope = fit.midpoint_slope
    if not fit.converged:
        logger.warn(
            f"Sigmoid fit of <I_z>(f_z) for '{params.name}' at f_x={f_x:.4f} did not converge; "
            "using the local derivative"
        )
        slope = chi

    character = UnitCharacter(
        f_x=float(f_x),
        delta=spectrum.gap,
        persistent_current=float(abs(dipole)),
        symmetry_point=f_star,
        f_z_grid=tuple(float(v) for v in grid),
        iz_ground_curve=tuple(float(v) for v in curve),
        beta_c=beta_c(params, f_x),
        d_iz_d_fz=float(slope),
        chi_local=float(chi),
        basis_size=size,
        sigmoid_converged=fit.converged,
    )
    if cache is not None:
        cache.store(params, f_x, grid, basis_size, character)
    return character


def gap_at(params: CircuitUnitParams, f_x: float, basis_size: int = settings.BASIS_SIZE) -> float:
    """Gap at the nominal symmetry flux f_z = 0.5."""
    return quantize_unit(params, FluxBias(NOMINAL_FZ, f_x), basis_size, n_levels=2).gap


def delta_sensitivity(params: CircuitUnitParams, f_x: float, step: float = 1e-4,
                      basis_size: int = settings.BASIS_SIZE) -> float:
    """dDelta/df_x (GHz/Phi0) by central difference, for x-loop noise."""
    return (gap_at(params, f_x + step, basis_size) - gap_at(params, f_x - step, basis_size)) / (2 * step)


def calibrate_fx_for_delta(params: CircuitUnitParams, target_delta: float,
                           bracket: Tuple[float, float] = (0.0, 0.45),
                           basis_size: int = settings.BASIS_SIZE) -> float:
    """x-loop bias where the gap at f_z = 0.5 equals target_delta (GHz)."""
    lo, hi = bracket
    g_lo = gap_at(params, lo, basis_size) - target_delta
    g_hi = gap_at(params, hi, basis_size) - target_delta
    if g_lo * g_hi > 0:
        raise SpecError(
            f"Gap {target_delta} GHz is not reachable for '{params.name}' on f_x in [{lo}, {hi}]"
        )
    return float(brentq(lambda fx: gap_at(params, fx, basis_size) - target_delta, lo, hi, xtol=1e-9))


# ----------- Spin parameters ------------

def spin_parameters_from_circuit(char_i: UnitCharacter, char_j: UnitCharacter, M: float) -> float:
    """Inductive coupling M I_p,i I_p,j / h in GHz (M in pH)."""
    return float(units.joule_to_ghz(
        M * units.PICO * char_i.persistent_current * units.NANO * char_j.persistent_current * units.NANO
    ))


def flux_to_epsilon(i_p: float, delta_f_z: float, logger=None) -> float:
    """epsilon = 2 I_p Phi0 delta_f_z / h in GHz (I_p in nA, delta_f_z in Phi0)."""
    if abs(delta_f_z) > settings.LINEAR_FLUX_RANGE:
        (logger or default_logger).warn(
            f"Flux detuning {delta_f_z:.4f} Phi0 is outside the linear range "
            f"+-{settings.LINEAR_FLUX_RANGE} Phi0"
        )
    return float(units.flux_energy_slope(i_p) * delta_f_z)


def epsilon_to_flux(i_p: float, epsilon: float) -> float:
    """Inverse of flux_to_epsilon, in Phi0."""
    slope = units.flux_energy_slope(i_p)
    if slope == 0.0:
        raise SpecError("Persistent current must be nonzero to convert energy to flux")
    return float(epsilon / slope)


def chain_from_circuit(coupler: UnitCharacter, qubit: UnitCharacter, M_cc: float, M_qc: float,
                       n_couplers: int = 7, qubit2: Optional[UnitCharacter] = None) -> ChainSpec:
    """Homogeneous q1 - c1..cN - q2 chain at the units' symmetry points."""
    qubit2 = qubit2 or qubit
    return ChainSpec.qubit_bus(
        n_couplers=n_couplers,
        delta_c=coupler.delta,
        j_cc=spin_parameters_from_circuit(coupler, coupler, M_cc),
        delta_q=qubit.delta,
        j_qc=spin_parameters_from_circuit(qubit, coupler, M_qc),
        delta_q2=qubit2.delta,
        j_qc2=spin_parameters_from_circuit(qubit2, coupler, M_qc),
    )


def mutual_for_coupling(j: float, i_p_a: float, i_p_b: float) -> float:
    """Mutual inductance (pH) that gives coupling j (GHz) between currents i_p_a, i_p_b (nA)."""
    return float(units.ghz_to_joule(j) / (i_p_a * units.NANO * i_p_b * units.NANO) / units.PICO)
