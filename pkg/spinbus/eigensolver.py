"""
Diagonalization and ground-state observables.
"""

from dataclasses import dataclass, field
from typing import List, Optional, Tuple

import numpy as np
import scipy.linalg as la
import scipy.sparse as sp
from scipy.sparse.linalg import ArpackNoConvergence, eigsh
from scipy.sparse.linalg import norm as sparse_norm

from . import settings
from .exceptions.errors import (
    ConvergenceError,
    DegenerateStateError,
    DimensionError,
    SpecError,
)
from .spin_model import ChainSpec, build_hamiltonian, build_sparse_hamiltonian, pauli_z_diagonal


@dataclass(frozen=True)
class SpectrumResult:
    """
    Ascending energies (GHz) and matching orthonormal eigenvectors (columns).

    Attributes:
        energies: kept eigenvalues, nondecreasing
        states: eigenvectors as columns, sign fixed so the largest-magnitude
            component of each vector is positive
        residuals: ||H v - E v|| per kept pair
        dimension: Hilbert space dimension
        degenerate_blocks: index groups of levels within DEGENERACY_TOL
    """

    energies: np.ndarray
    states: np.ndarray
    residuals: np.ndarray
    dimension: int
    degenerate_blocks: Tuple[Tuple[int, ...], ...] = field(default=())

    def __post_init__(self):
        for name in ("energies", "states", "residuals"):
            getattr(self, name).flags.writeable = False

    @property
    def n_levels(self) -> int:
        return len(self.energies)

    @property
    def ground_energy(self) -> float:
        return float(self.energies[0])

    @property
    def ground_state(self) -> np.ndarray:
        return self.states[:, 0]

    @property
    def gap(self) -> float:
        if self.n_levels < 2:
            raise SpecError("Gap needs at least two kept levels")
        return float(self.energies[1] - self.energies[0])

    @property
    def ground_degenerate(self) -> bool:
        return bool(self.degenerate_blocks) and self.degenerate_blocks[0][0] == 0

    def require_unique_ground(self, tol: float = settings.DEGENERACY_TOL):
        if self.n_levels >= 2 and self.gap <= tol:
            raise DegenerateStateError(
                f"Ground state is degenerate (gap {self.gap:.3e} GHz <= {tol:.1e} GHz)"
            )

    def transition_energies(self) -> np.ndarray:
        return self.energies - self.energies[0]


def _fix_signs(states: np.ndarray) -> np.ndarray:
    states = np.array(states, copy=True)
    pivots = np.argmax(np.abs(states), axis=0)
    signs = np.sign(states[pivots, np.arange(states.shape[1])])
    signs[signs == 0] = 1.0
    return states * signs


def _degenerate_blocks(energies: np.ndarray, tol: float) -> Tuple[Tuple[int, ...], ...]:
    blocks = []
    current = [0]
    for i in range(1, len(energies)):
        if energies[i] - energies[i - 1] <= tol:
            current.append(i)
        else:
            if len(current) > 1:
                blocks.append(tuple(current))
            current = [i]
    if len(current) > 1:
        blocks.append(tuple(current))
    return tuple(blocks)


def _matrix_norm(H) -> float:
    if sp.issparse(H):
        return float(sparse_norm(H, 1)) or 1.0
    return float(np.linalg.norm(H, 1)) or 1.0


def diagonalize(H, k: Optional[int] = None, method: str = "dense",
                degeneracy_tol: float = settings.DEGENERACY_TOL) -> SpectrumResult:
    """
    Eigen-decomposition of a real symmetric matrix.

    Args:
        H: dense ndarray or scipy sparse matrix
        k: number of lowest levels to keep (None keeps all; dense path only)
        method: "dense" (scipy.linalg.eigh) or "lanczos" (scipy eigsh, which="SA")

    Returns:
        SpectrumResult
    """
    if H.ndim != 2 or H.shape[0] != H.shape[1]:
        raise DimensionError(f"Hamiltonian must be square, got shape {H.shape}")
    dim = H.shape[0]
    scale = _matrix_norm(H)
    asym = abs(H - H.T)
    asym = asym.max() if sp.issparse(asym) else np.max(asym)
    if asym > 1e-12 * max(1.0, scale):
        raise SpecError(f"Hamiltonian is not symmetric (max asymmetry {asym:.3e})")
    if k is not None and not 1 <= k <= dim:
        raise DimensionError(f"k must be in 1..{dim}, got {k}")

    if method == "dense":
        dense = H.toarray() if sp.issparse(H) else np.asarray(H)
        try:
            if k is None or k == dim:
                energies, states = la.eigh(dense)
            else:
                energies, states = la.eigh(dense, subset_by_index=[0, k - 1])
        except la.LinAlgError as e:
            raise ConvergenceError(f"Dense eigensolver failed: {e}") from e
    elif method == "lanczos":
        n_eig = k or min(6, dim - 1)
        if n_eig >= dim - 1:
            return diagonalize(H, k, "dense", degeneracy_tol)
        try:
            energies, states = eigsh(sp.csr_matrix(H), k=n_eig, which="SA", tol=1e-12)
        except ArpackNoConvergence as e:
            raise ConvergenceError(f"Lanczos did not converge: {e}") from e
        order = np.argsort(energies)
        energies, states = energies[order], states[:, order]
    else:
        raise SpecError(f"Unknown diagonalization method '{method}'")

    states = _fix_signs(states)
    residuals = np.linalg.norm(H @ states - states * energies, axis=0)
    worst = float(np.max(residuals)) if len(residuals) else 0.0
    if worst > settings.RESIDUAL_TOL * scale:
        raise ConvergenceError(
            f"Eigenpair residual {worst:.3e} exceeds {settings.RESIDUAL_TOL:.0e} * ||H||"
        )
    return SpectrumResult(
        energies=np.asarray(energies, dtype=float),
        states=np.asarray(states, dtype=float),
        residuals=residuals,
        dimension=dim,
        degenerate_blocks=_degenerate_blocks(energies, degeneracy_tol),
    )


def solve_chain(spec: ChainSpec, k: Optional[int] = None, method: str = "dense") -> SpectrumResult:
    """Build and diagonalize a chain; the lanczos path uses the sparse builder."""
    if method == "lanczos":
        return diagonalize(build_sparse_hamiltonian(spec), k, method)
    return diagonalize(build_hamiltonian(spec), k, method)


# ----------- Observables ------------

def _n_sites_for(dimension: int) -> int:
    n = int(round(np.log2(dimension)))
    if 2 ** n != dimension:
        raise DimensionError(f"Dimension {dimension} is not a power of two")
    return n


def expectation(state: np.ndarray, operator) -> float:
    """<state|operator|state>; a 1-D operator is taken as a diagonal."""
    state = np.asarray(state)
    if operator.ndim == 1:
        if operator.shape[0] != state.shape[0]:
            raise DimensionError(f"Operator length {operator.shape[0]} != state length {state.shape[0]}")
        return float(np.real(np.vdot(state, operator * state)))
    if operator.shape != (state.shape[0], state.shape[0]):
        raise DimensionError(f"Operator shape {operator.shape} does not match state length {state.shape[0]}")
    return float(np.real(np.vdot(state, operator @ state)))


def site_polarization(spectrum: SpectrumResult, site: int, level: int = 0) -> float:
    """<sigma^z_site> in the given eigenstate."""
    n = _n_sites_for(spectrum.dimension)
    return expectation(spectrum.states[:, level], pauli_z_diagonal(site, n))


def connected_correlator(spectrum: SpectrumResult, site_a: int, site_b: int) -> float:
    """<sz_a><sz_b> - <sz_a sz_b> in the ground state."""
    n = _n_sites_for(spectrum.dimension)
    za = pauli_z_diagonal(site_a, n)
    zb = pauli_z_diagonal(site_b, n)
    psi = spectrum.ground_state
    return float(expectation(psi, za) * expectation(psi, zb) - expectation(psi, za * zb))


def hellmann_feynman_current(spec: ChainSpec, site, bias_parameter: str = "epsilon",
                             spectrum: Optional[SpectrumResult] = None) -> float:
    """
    dE0/d(bias) from the ground-state expectation of dH/d(bias).

    bias_parameter "epsilon" gives <sz_i>/2, "delta" gives <sx_i>/2.
    """
    index = spec.resolve_site(site)
    if spectrum is None:
        spectrum = solve_chain(spec, k=min(2, spec.dimension))
    if spectrum.n_levels >= 2 and spectrum.gap <= settings.HF_GAP_TOL:
        raise DegenerateStateError(
            f"Hellmann-Feynman derivative needs a gap above {settings.HF_GAP_TOL:.0e} GHz, "
            f"got {spectrum.gap:.3e}"
        )
    psi = spectrum.ground_state
    n = spec.n_sites
    if bias_parameter == "epsilon":
        return 0.5 * expectation(psi, pauli_z_diagonal(index, n))
    if bias_parameter == "delta":
        flipped = np.arange(spec.dimension) ^ (1 << (n - 1 - index))
        return 0.5 * float(np.dot(psi, psi[flipped]))
    raise SpecError(f"bias_parameter must be 'epsilon' or 'delta', got '{bias_parameter}'")


def level_overlaps(reference: np.ndarray, states: np.ndarray) -> np.ndarray:
    """|<ref_i|state_j>|^2 for reference columns vs state columns."""
    return np.abs(reference.conj().T @ states) ** 2


def track_levels(reference: np.ndarray, states: np.ndarray) -> Tuple[List[int], List[float]]:
    """For each reference column, the index and overlap of its best match in states."""
    overlaps = level_overlaps(reference, states)
    picks = [int(i) for i in np.argmax(overlaps, axis=1)]
    best = [float(overlaps[r, c]) for r, c in enumerate(picks)]
    return picks, best
