"""
Grouped truncation of a chain.

Contiguous groups are diagonalized on their own, the lowest k levels of each
are kept, and the groups are coupled through their boundary sigma^z
operators projected into the kept bases. The composite lives in the product
of the kept bases, dimension prod(k_g).
"""

from dataclasses import dataclass
from functools import reduce
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np

from .eigensolver import SpectrumResult, diagonalize, solve_chain
from .exceptions.errors import DimensionError, SpecError
from .spin_model import ChainSpec, Coupling, pauli_z_diagonal
from .utils.helpers import parallel_map


@dataclass(frozen=True)
class GroupingPlan:
    """Partition of the sites into contiguous groups with kept levels per group."""

    groups: Tuple[Tuple[int, ...], ...]
    kept_levels: Tuple[int, ...]

    def __post_init__(self):
        groups = tuple(tuple(int(i) for i in g) for g in self.groups)
        kept = tuple(int(k) for k in self.kept_levels)
        if len(groups) != len(kept):
            raise SpecError(f"{len(groups)} groups but {len(kept)} kept-level counts")
        for g, k in zip(groups, kept):
            if not g:
                raise SpecError("Empty group in plan")
            if not 1 <= k <= 2 ** len(g):
                raise SpecError(f"Group {g} keeps {k} levels; allowed 1..{2 ** len(g)}")
        object.__setattr__(self, "groups", groups)
        object.__setattr__(self, "kept_levels", kept)

    @classmethod
    def from_sizes(cls, sizes: Sequence[int], kept_levels) -> "GroupingPlan":
        """Consecutive groups of the given sizes; kept_levels is one k or one per group."""
        groups, start = [], 0
        for size in sizes:
            groups.append(tuple(range(start, start + size)))
            start += size
        if np.isscalar(kept_levels):
            kept_levels = [min(int(kept_levels), 2 ** s) for s in sizes]
        return cls(tuple(groups), tuple(kept_levels))

    @property
    def composite_dimension(self) -> int:
        return int(np.prod(self.kept_levels))

    def with_kept(self, k: int) -> "GroupingPlan":
        """Same partition keeping min(k, group dimension) levels everywhere."""
        return GroupingPlan(self.groups, tuple(min(k, 2 ** len(g)) for g in self.groups))

    def validate_for(self, spec: ChainSpec):
        flat = [i for g in self.groups for i in g]
        if sorted(flat) != list(range(spec.n_sites)):
            raise SpecError(f"Groups must cover sites 0..{spec.n_sites - 1} exactly once")
        previous = -1
        for g in self.groups:
            ordered = sorted(g)
            if ordered != list(range(ordered[0], ordered[-1] + 1)) or ordered[0] != previous + 1:
                raise SpecError(f"Group {g} is not a contiguous segment following the previous group")
            previous = ordered[-1]

    def group_of(self) -> Dict[int, int]:
        return {site: gi for gi, g in enumerate(self.groups) for site in g}


@dataclass(frozen=True)
class GroupReduction:
    """
    Kept eigenpairs of one group and its projected boundary operators.

    boundary_ops maps a global site index to <m|sigma^z|n> over the kept
    levels (k x k).
    """

    sites: Tuple[int, ...]
    energies: np.ndarray
    states: np.ndarray
    boundary_ops: Dict[int, np.ndarray]

    @property
    def kept(self) -> int:
        return len(self.energies)


def nine_site_plan(spec: ChainSpec, coupler_k: int = 8, qubit_k: int = 2) -> GroupingPlan:
    """q1 | c1 c2 | c3 c4 c5 | c6 c7 | q2 for the nine-site bus."""
    if spec.n_sites != 9:
        raise SpecError("The five-group plan needs the nine-site qubit bus")
    return GroupingPlan(
        ((0,), (1, 2), (3, 4, 5), (6, 7), (8,)),
        (qubit_k, min(coupler_k, 4), coupler_k, min(coupler_k, 4), qubit_k),
    )


def inter_group_edges(spec: ChainSpec, plan: GroupingPlan) -> List[Coupling]:
    owner = plan.group_of()
    return [e for e in spec.couplings if owner[e.site_a] != owner[e.site_b]]


def group_reduce(spec: ChainSpec, plan: GroupingPlan, threads: int = 1) -> List[GroupReduction]:
    """
    Diagonalize each group with its internal edges only.

    Raises:
        SpecError: plan does not fit the chain or k exceeds a group dimension
    """
    plan.validate_for(spec)
    boundary = {s for e in inter_group_edges(spec, plan) for s in (e.site_a, e.site_b)}

    def reduce_group(item):
        group, k = item
        sub = spec.subchain(group)
        spectrum = solve_chain(sub, k=k)
        ops = {}
        for local, site in enumerate(group):
            if site in boundary:
                z = pauli_z_diagonal(local, sub.n_sites)
                ops[site] = spectrum.states.T @ (z[:, None] * spectrum.states)
        return GroupReduction(tuple(group), spectrum.energies.copy(), spectrum.states.copy(), ops)

    return parallel_map(reduce_group, list(zip(plan.groups, plan.kept_levels)), threads)


def _embed(factors: Dict[int, np.ndarray], dims: Sequence[int]) -> np.ndarray:
    return reduce(np.kron, [factors.get(g, np.eye(d)) for g, d in enumerate(dims)])


def assemble_composite(groups: Sequence[GroupReduction], edges: Sequence[Coupling]) -> np.ndarray:
    """
    H = sum_g diag(E_g) + sum_edges J (Z_a (x) Z_b) in the product of kept bases.

    Raises:
        SpecError: an edge touches a site without a projected operator, or
            joins two sites of the same group
    """
    dims = [g.kept for g in groups]
    owner = {site: gi for gi, g in enumerate(groups) for site in g.sites}
    H = np.zeros((int(np.prod(dims)),) * 2)
    for gi, g in enumerate(groups):
        H += _embed({gi: np.diag(g.energies)}, dims)
    for e in edges:
        ga, gb = owner.get(e.site_a), owner.get(e.site_b)
        if ga is None or gb is None:
            raise SpecError(f"Edge ({e.site_a}, {e.site_b}) references a site outside the groups")
        if ga == gb:
            raise SpecError(f"Edge ({e.site_a}, {e.site_b}) is internal to group {ga}")
        try:
            za = groups[ga].boundary_ops[e.site_a]
            zb = groups[gb].boundary_ops[e.site_b]
        except KeyError as missing:
            raise SpecError(f"No projected boundary operator for site {missing}") from None
        H += e.j * _embed({ga: za, gb: zb}, dims)
    return 0.5 * (H + H.T)


def hierarchical_spectrum(spec: ChainSpec, plan: GroupingPlan, k: Optional[int] = None,
                          threads: int = 1) -> SpectrumResult:
    """Spectrum of the composite Hamiltonian (lowest k levels, or all)."""
    groups = group_reduce(spec, plan, threads)
    H = assemble_composite(groups, inter_group_edges(spec, plan))
    if k is not None:
        k = min(k, H.shape[0])
    return diagonalize(H, k=k)


def lift_states(groups: Sequence[GroupReduction], composite_states: np.ndarray) -> np.ndarray:
    """
    Composite eigenvectors written in the full 2^N site basis.

    Raises:
        SpecError: a group's sites are not in ascending order
    """
    for g in groups:
        if list(g.sites) != sorted(g.sites):
            raise SpecError(f"Group {g.sites} must list its sites in ascending order")
    basis = reduce(np.kron, [g.states for g in groups])
    return basis @ composite_states


def hierarchical_eigenstates(spec: ChainSpec, plan: GroupingPlan, k: Optional[int] = None,
                             threads: int = 1) -> SpectrumResult:
    """Like hierarchical_spectrum, with the states lifted back to the site basis."""
    groups = group_reduce(spec, plan, threads)
    H = assemble_composite(groups, inter_group_edges(spec, plan))
    if k is not None:
        k = min(k, H.shape[0])
    composite = diagonalize(H, k=k)
    return SpectrumResult(
        energies=composite.energies.copy(),
        states=lift_states(groups, composite.states),
        residuals=composite.residuals.copy(),
        dimension=spec.dimension,
        degenerate_blocks=composite.degenerate_blocks,
    )


@dataclass(frozen=True)
class ConvergenceRow:
    kept: int
    composite_dimension: int
    max_error: float
    ground_error: float


@dataclass(frozen=True)
class ConvergenceTable:
    rows: Tuple[ConvergenceRow, ...]
    n_levels: int
    exact_energies: np.ndarray

    def smallest_k(self, tol: float) -> Optional[int]:
        """Smallest kept count whose max error over the compared levels is within tol."""
        for row in self.rows:
            if row.max_error <= tol:
                return row.kept
        return None


def convergence_sweep(spec: ChainSpec, plan: GroupingPlan, k_ladder: Sequence[int],
                      n_levels: int = 4, threads: int = 1) -> ConvergenceTable:
    """
    Error of the lowest n_levels versus the uniform kept count k.

    Each k is applied to every group (capped at the group dimension). The
    exact reference comes from direct diagonalization.
    """
    if spec.n_sites > 14:
        raise DimensionError("Exact reference needs N <= 14")
    exact = solve_chain(spec, k=min(n_levels, spec.dimension)).energies
    rows = []
    for k in sorted(set(int(k) for k in k_ladder)):
        trial = plan.with_kept(k)
        m = min(n_levels, trial.composite_dimension)
        approx = hierarchical_spectrum(spec, trial, k=m, threads=threads).energies
        errors = np.abs(approx - exact[:m])
        max_error = float(np.max(errors)) if m == len(exact) else float("inf")
        rows.append(ConvergenceRow(
            kept=k,
            composite_dimension=trial.composite_dimension,
            max_error=max_error,
            ground_error=float(approx[0] - exact[0]),
        ))
    return ConvergenceTable(tuple(rows), n_levels, exact.copy())
