"""
Perturbative qubit-qubit coupling mediated by a coupler chain.

The two qubits attach to sites a and b of a couplers-only chain through
J1 sz_q1 sz_a and J2 sz_q2 sz_b. Second order in J1, J2 gives the
coefficient of sz_q1 sz_q2:

    J_eff = -J1 J2 sum_n P_n [1/(w_n - dq) + 1/(w_n + dq)],
    P_n = <0|sz_a|n><n|sz_b|0>,  w_n = E_n - E_0

Both orderings of the virtual excitation are included, so the static limit
(dq = 0) is -2 J1 J2 sum_n P_n / w_n and the exact two-qubit splitting is
2|J_eff|. The gap approximation replaces every w_n by the chain gap, which
turns sum_n P_n into the connected correlator.

The factor 2 against the single-ordering form -J1 J2 sum_n P_n / w_n comes
from the full sz sz coupling term; one coupler between the qubits therefore
gives -2 J^2 / Delta_c, not -J^2 / Delta_c. For an unbiased homogeneous chain
of N couplers the static sum has the closed form
-(2 J1 J2 / Delta_c) (-2 J_cc / Delta_c)^(N-1).
"""

from dataclasses import dataclass
from typing import Optional

import numpy as np

from . import settings
from .eigensolver import SpectrumResult, connected_correlator, site_polarization, solve_chain
from .exceptions.errors import PerturbationBreakdownError, SpecError
from .spin_model import ChainSpec, pauli_z_diagonal

_ELEMENT_TOL = 1e-14


@dataclass(frozen=True)
class EffectiveCoupling:
    """Both estimators from one chain spectrum (GHz)."""

    j_eff_exact_sum: float
    j_eff_gap_approx: float
    omega_c: float
    correlator_part: float

    @property
    def ratio(self) -> float:
        """Gap approximation over exact sum; nan when the exact sum vanishes."""
        if self.j_eff_exact_sum == 0.0:
            return float("nan")
        return self.j_eff_gap_approx / self.j_eff_exact_sum


def _chain_spectrum(chain_spec: ChainSpec, spectrum: Optional[SpectrumResult]) -> SpectrumResult:
    if chain_spec.qubit_indices():
        raise SpecError("Mediated coupling expects a couplers-only chain; use ChainSpec.couplers_only()")
    if spectrum is None:
        spectrum = solve_chain(chain_spec)
    if spectrum.n_levels != spectrum.dimension:
        raise SpecError("The second-order sum needs every chain level")
    spectrum.require_unique_ground()
    return spectrum


def _element_products(spectrum: SpectrumResult, site_a: int, site_b: int, n_sites: int):
    psi0 = spectrum.ground_state
    m_a = spectrum.states.T @ (pauli_z_diagonal(site_a, n_sites) * psi0)
    m_b = spectrum.states.T @ (pauli_z_diagonal(site_b, n_sites) * psi0)
    products = m_a[1:] * m_b[1:]
    omegas = spectrum.energies[1:] - spectrum.energies[0]
    return products, omegas


def first_order_shift(coupler_spectrum: SpectrumResult, j_qc: float, epsilon_q: float = 0.0,
                      adjacent_site: int = 0) -> float:
    """
    Qubit longitudinal field dressed by the static chain polarization.

    The mean-field term J <sz_adj> sz_q adds 2 J <sz_adj> to epsilon_q,
    since epsilon enters the Hamiltonian as epsilon / 2 sz.
    """
    coupler_spectrum.require_unique_ground()
    if j_qc == 0.0:
        return float(epsilon_q)
    return float(epsilon_q + 2.0 * j_qc * site_polarization(coupler_spectrum, adjacent_site))


def j_eff_second_order_sum(chain_spec: ChainSpec, j_q1c1: float, j_q2c7: float,
                           site_a=0, site_b=-1, qubit_delta: float = 0.0,
                           spectrum: Optional[SpectrumResult] = None) -> float:
    """
    Full second-order mediated coupling over every excited chain level.

    Both orderings are summed: the static limit is -2 J1 J2 sum_n P_n / w_n.

    Args:
        chain_spec: couplers-only chain
        j_q1c1, j_q2c7: qubit-coupler couplings at the two attachment sites (GHz)
        site_a, site_b: attachment sites (default first and last coupler)
        qubit_delta: common qubit transverse field; 0 gives the static limit

    Returns:
        float: J_eff in GHz
    """
    if j_q1c1 == 0.0 or j_q2c7 == 0.0:
        return 0.0
    a = chain_spec.resolve_site(site_a)
    b = chain_spec.resolve_site(site_b)
    spectrum = _chain_spectrum(chain_spec, spectrum)
    products, omegas = _element_products(spectrum, a, b, chain_spec.n_sites)

    active = np.abs(products) > _ELEMENT_TOL
    tol = settings.DEGENERACY_TOL
    near = omegas < tol
    if qubit_delta:
        near |= np.abs(omegas - abs(qubit_delta)) < tol
    if np.any(active & near):
        raise PerturbationBreakdownError(
            "Chain level resonant with the ground state or the qubits carries a nonzero matrix element"
        )
    if qubit_delta:
        weights = 1.0 / (omegas - qubit_delta) + 1.0 / (omegas + qubit_delta)
    else:
        weights = 2.0 / omegas
    return float(-j_q1c1 * j_q2c7 * np.sum(products[active] * weights[active]))


def effective_coupling(chain_spec: ChainSpec, j_q1c1: float, j_q2c7: float,
                       site_a=0, site_b=-1,
                       spectrum: Optional[SpectrumResult] = None) -> EffectiveCoupling:
    """Static exact sum and gap approximation from the same chain spectrum."""
    a = chain_spec.resolve_site(site_a)
    b = chain_spec.resolve_site(site_b)
    spectrum = _chain_spectrum(chain_spec, spectrum)
    omega_c = spectrum.gap if spectrum.n_levels > 1 else float("inf")
    correlator = connected_correlator(spectrum, a, b)
    exact = j_eff_second_order_sum(chain_spec, j_q1c1, j_q2c7, a, b, spectrum=spectrum)
    approx = 2.0 * j_q1c1 * j_q2c7 * correlator / omega_c
    return EffectiveCoupling(
        j_eff_exact_sum=exact,
        j_eff_gap_approx=float(approx),
        omega_c=float(omega_c),
        correlator_part=float(correlator),
    )


def j_eff_gap_approx(chain_spec: ChainSpec, j_q1c1: float, j_q2c7: float,
                     site_a=0, site_b=-1,
                     spectrum: Optional[SpectrumResult] = None) -> EffectiveCoupling:
    """
    Gap approximation (2 J1 J2 / Omega_c) * connected correlator.

    Returned as an EffectiveCoupling so the ratio to the exact sum, computed
    from the same ground state, travels with the value.
    """
    return effective_coupling(chain_spec, j_q1c1, j_q2c7, site_a, site_b, spectrum)
