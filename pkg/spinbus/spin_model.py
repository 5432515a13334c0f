"""
Transverse-field Ising spin bus: site/coupling types and Hamiltonian builders.

Basis: computational sigma^z product basis with site 0 as the most
significant bit of the basis index; bit value 0 is sigma^z = +1.
Energies in GHz with h = 1:

    H = sum_i (eps_i/2 sz_i + delta_i/2 sx_i) + sum_edges J sz_a sz_b
"""

from dataclasses import dataclass, field, replace
from typing import Dict, Iterable, List, Optional, Sequence, Tuple

import numpy as np
import scipy.sparse as sp

from . import settings
from .exceptions.errors import DimensionError, SpecError

ROLES = ("qubit", "coupler")

_PAULI = {
    "x": np.array([[0.0, 1.0], [1.0, 0.0]]),
    "y": np.array([[0.0, -1.0j], [1.0j, 0.0]]),
    "z": np.array([[1.0, 0.0], [0.0, -1.0]]),
}


@dataclass(frozen=True)
class SpinSite:
    """One spin: longitudinal field epsilon and transverse field delta (GHz)."""

    epsilon: float = 0.0
    delta: float = 0.0
    role: str = "coupler"
    index: int = 0

    def __post_init__(self):
        if self.role not in ROLES:
            raise SpecError(f"Unknown site role '{self.role}', expected one of {ROLES}")
        if not np.isfinite(self.epsilon):
            raise SpecError(f"epsilon must be finite, got {self.epsilon}")
        if not np.isfinite(self.delta):
            raise SpecError(f"delta must be finite, got {self.delta}")
        if self.delta < 0:
            raise SpecError(f"delta must be >= 0, got {self.delta}")
        object.__setattr__(self, "epsilon", float(self.epsilon))
        object.__setattr__(self, "delta", float(self.delta))

    @property
    def label(self) -> str:
        return f"{'q' if self.role == 'qubit' else 'c'}{self.index}"


@dataclass(frozen=True)
class Coupling:
    site_a: int
    site_b: int
    j: float


@dataclass(frozen=True)
class CouplingGraph:
    """Undirected sigma^z sigma^z couplings; at most one edge per pair."""

    edges: Tuple[Coupling, ...] = ()

    def __post_init__(self):
        edges = tuple(
            e if isinstance(e, Coupling) else Coupling(int(e[0]), int(e[1]), float(e[2]))
            for e in self.edges
        )
        seen = set()
        for e in edges:
            if e.site_a == e.site_b:
                raise SpecError(f"Self-edge on site {e.site_a}")
            if not np.isfinite(e.j):
                raise SpecError(f"Coupling ({e.site_a}, {e.site_b}) is not finite")
            pair = frozenset((e.site_a, e.site_b))
            if pair in seen:
                raise SpecError(f"Duplicate edge between sites {e.site_a} and {e.site_b}")
            seen.add(pair)
        object.__setattr__(self, "edges", edges)

    def __len__(self):
        return len(self.edges)

    def __iter__(self):
        return iter(self.edges)

    def validate_for(self, n_sites: int):
        for e in self.edges:
            for s in (e.site_a, e.site_b):
                if not 0 <= s < n_sites:
                    raise SpecError(f"Edge references site {s} outside 0..{n_sites - 1}")

    def coupling(self, a: int, b: int) -> float:
        for e in self.edges:
            if {e.site_a, e.site_b} == {a, b}:
                return e.j
        return 0.0

    def neighbors(self, site: int) -> List[Tuple[int, float]]:
        out = []
        for e in self.edges:
            if e.site_a == site:
                out.append((e.site_b, e.j))
            elif e.site_b == site:
                out.append((e.site_a, e.j))
        return out


@dataclass(frozen=True)
class ChainSpec:
    """Ordered sites plus coupling graph; Hilbert dimension 2**n_sites."""

    sites: Tuple[SpinSite, ...]
    couplings: CouplingGraph = field(default_factory=CouplingGraph)

    def __post_init__(self):
        sites = tuple(self.sites)
        if not sites:
            raise SpecError("A chain needs at least one site")
        couplings = self.couplings
        if not isinstance(couplings, CouplingGraph):
            couplings = CouplingGraph(tuple(couplings))
        couplings.validate_for(len(sites))
        object.__setattr__(self, "sites", sites)
        object.__setattr__(self, "couplings", couplings)

    @property
    def n_sites(self) -> int:
        return len(self.sites)

    @property
    def dimension(self) -> int:
        return 2 ** self.n_sites

    @property
    def epsilons(self) -> np.ndarray:
        return np.array([s.epsilon for s in self.sites])

    @property
    def deltas(self) -> np.ndarray:
        return np.array([s.delta for s in self.sites])

    def labels(self) -> List[str]:
        return [s.label for s in self.sites]

    def site_index(self, label: str) -> int:
        for i, s in enumerate(self.sites):
            if s.label == label:
                return i
        raise SpecError(f"No site labelled '{label}'")

    def resolve_site(self, site) -> int:
        """Accept an index (negative allowed) or a label such as 'c7'."""
        if isinstance(site, str):
            return self.site_index(site)
        index = int(site)
        if index < 0:
            index += self.n_sites
        if not 0 <= index < self.n_sites:
            raise DimensionError(f"Site {site} out of range for {self.n_sites} sites")
        return index

    def qubit_indices(self) -> List[int]:
        return [i for i, s in enumerate(self.sites) if s.role == "qubit"]

    def coupler_indices(self) -> List[int]:
        return [i for i, s in enumerate(self.sites) if s.role == "coupler"]

    def with_site(self, site, **changes) -> "ChainSpec":
        index = self.resolve_site(site)
        sites = list(self.sites)
        sites[index] = replace(sites[index], **changes)
        return ChainSpec(tuple(sites), self.couplings)

    def with_epsilons(self, epsilons: Sequence[float]) -> "ChainSpec":
        if len(epsilons) != self.n_sites:
            raise DimensionError(f"Expected {self.n_sites} epsilons, got {len(epsilons)}")
        sites = tuple(replace(s, epsilon=float(e)) for s, e in zip(self.sites, epsilons))
        return ChainSpec(sites, self.couplings)

    def with_deltas(self, deltas: Sequence[float]) -> "ChainSpec":
        if len(deltas) != self.n_sites:
            raise DimensionError(f"Expected {self.n_sites} deltas, got {len(deltas)}")
        sites = tuple(replace(s, delta=float(d)) for s, d in zip(self.sites, deltas))
        return ChainSpec(sites, self.couplings)

    def with_couplings(self, edges: Iterable) -> "ChainSpec":
        return ChainSpec(self.sites, CouplingGraph(tuple(edges)))

    def subchain(self, indices: Sequence[int]) -> "ChainSpec":
        """Sites in the given order, renumbered, keeping only internal edges."""
        indices = [self.resolve_site(i) for i in indices]
        position = {old: new for new, old in enumerate(indices)}
        edges = [
            Coupling(position[e.site_a], position[e.site_b], e.j)
            for e in self.couplings
            if e.site_a in position and e.site_b in position
        ]
        return ChainSpec(tuple(self.sites[i] for i in indices), CouplingGraph(tuple(edges)))

    def couplers_only(self) -> "ChainSpec":
        return self.subchain(self.coupler_indices())

    def mirrored(self) -> "ChainSpec":
        return self.subchain(list(range(self.n_sites - 1, -1, -1)))

    # ----------- Constructors ------------

    @classmethod
    def homogeneous_chain(cls, n_couplers: int, delta_c: float, j_cc: float,
                          epsilon_c: float = 0.0) -> "ChainSpec":
        """Open chain of identical couplers c1..cN with nearest-neighbour J_cc."""
        if n_couplers < 1:
            raise SpecError("n_couplers must be >= 1")
        sites = tuple(SpinSite(epsilon_c, delta_c, "coupler", i + 1) for i in range(n_couplers))
        edges = tuple(Coupling(i, i + 1, j_cc) for i in range(n_couplers - 1))
        return cls(sites, CouplingGraph(edges))

    @classmethod
    def qubit_bus(cls, n_couplers: int, delta_c: float, j_cc: float, delta_q: float,
                  j_qc: float, epsilon_c: float = 0.0, epsilon_q: float = 0.0,
                  delta_q2: Optional[float] = None, j_qc2: Optional[float] = None,
                  epsilon_q2: Optional[float] = None) -> "ChainSpec":
        """q1 - c1 - ... - cN - q2 linear topology with N + 1 edges."""
        chain = cls.homogeneous_chain(n_couplers, delta_c, j_cc, epsilon_c)
        q1 = SpinSite(epsilon_q, delta_q, "qubit", 1)
        q2 = SpinSite(epsilon_q if epsilon_q2 is None else epsilon_q2,
                      delta_q if delta_q2 is None else delta_q2, "qubit", 2)
        sites = (q1,) + chain.sites + (q2,)
        edges = [Coupling(0, 1, j_qc)]
        edges += [Coupling(e.site_a + 1, e.site_b + 1, e.j) for e in chain.couplings]
        edges.append(Coupling(n_couplers, n_couplers + 1, j_qc if j_qc2 is None else j_qc2))
        return cls(sites, CouplingGraph(tuple(edges)))

    # ----------- Serialization ------------

    def to_dict(self) -> Dict:
        return {
            "sites": [
                {"epsilon": s.epsilon, "delta": s.delta, "role": s.role, "index": s.index}
                for s in self.sites
            ],
            "couplings": [[e.site_a, e.site_b, e.j] for e in self.couplings],
        }

    @classmethod
    def from_dict(cls, data: Dict) -> "ChainSpec":
        try:
            sites = tuple(SpinSite(**site) for site in data["sites"])
            edges = tuple(tuple(e) for e in data.get("couplings", []))
        except (KeyError, TypeError) as e:
            raise SpecError(f"Malformed chain description: {e}") from e
        return cls(sites, CouplingGraph(edges))


# ----------- Operators ------------

def _check_site(site_index: int, n_sites: int):
    if n_sites < 1:
        raise DimensionError("n_sites must be >= 1")
    if not 0 <= site_index < n_sites:
        raise DimensionError(f"Site {site_index} out of range for {n_sites} sites")


def embed_pauli(site_index: int, axis: str, n_sites: int, sparse: bool = False):
    """Pauli matrix on one site, identity elsewhere (site 0 leftmost factor)."""
    _check_site(site_index, n_sites)
    if axis not in _PAULI:
        raise SpecError(f"axis must be one of x, y, z, got '{axis}'")
    left = sp.identity(2 ** site_index, format="csr")
    right = sp.identity(2 ** (n_sites - site_index - 1), format="csr")
    op = sp.kron(sp.kron(left, sp.csr_matrix(_PAULI[axis])), right, format="csr")
    return op if sparse else op.toarray()


def pauli_z_diagonal(site_index: int, n_sites: int) -> np.ndarray:
    """Diagonal of sigma^z on one site as a +-1 vector."""
    _check_site(site_index, n_sites)
    bits = (np.arange(2 ** n_sites) >> (n_sites - 1 - site_index)) & 1
    return 1.0 - 2.0 * bits


def _diagonal(spec: ChainSpec) -> np.ndarray:
    n = spec.n_sites
    diag = np.zeros(2 ** n)
    z = [pauli_z_diagonal(i, n) for i in range(n)]
    for i, site in enumerate(spec.sites):
        if site.epsilon != 0.0:
            diag += 0.5 * site.epsilon * z[i]
    for e in spec.couplings:
        if e.j != 0.0:
            diag += e.j * z[e.site_a] * z[e.site_b]
    return diag


def _flip_pairs(spec: ChainSpec):
    n = spec.n_sites
    rows = np.arange(2 ** n)
    for i, site in enumerate(spec.sites):
        if site.delta != 0.0:
            yield rows, rows ^ (1 << (n - 1 - i)), 0.5 * site.delta


def build_sparse_hamiltonian(spec: ChainSpec) -> sp.csr_matrix:
    """CSR Hamiltonian; no dimension cap."""
    dim = spec.dimension
    rows, cols, data = [np.arange(dim)], [np.arange(dim)], [_diagonal(spec)]
    for r, c, value in _flip_pairs(spec):
        rows.append(r)
        cols.append(c)
        data.append(np.full(dim, value))
    return sp.csr_matrix(
        (np.concatenate(data), (np.concatenate(rows), np.concatenate(cols))),
        shape=(dim, dim),
    )


def build_hamiltonian(spec: ChainSpec, max_sites: int = settings.DIMENSION_CAP) -> np.ndarray:
    """Dense, exactly symmetric Hamiltonian. The returned array is read-only."""
    if spec.n_sites > max_sites:
        raise DimensionError(
            f"{spec.n_sites} sites exceeds the dense cap of {max_sites}; "
            "use build_sparse_hamiltonian"
        )
    dim = spec.dimension
    H = np.zeros((dim, dim))
    H[np.arange(dim), np.arange(dim)] = _diagonal(spec)
    for r, c, value in _flip_pairs(spec):
        H[r, c] += value
    H.flags.writeable = False
    return H


def parity_operator(n_sites: int) -> np.ndarray:
    """Global sigma^x parity, prod_i sx_i (maps index s to s XOR all-ones)."""
    dim = 2 ** n_sites
    P = np.zeros((dim, dim))
    rows = np.arange(dim)
    P[rows, rows ^ (dim - 1)] = 1.0
    return P
