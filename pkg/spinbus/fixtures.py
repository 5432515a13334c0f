"""
Built-in parameter sets
"""

from .circuit_map import CircuitUnitParams, reduce_coupler_capacitance
from .exceptions.errors import ConfigError
from .spin_model import ChainSpec, Coupling, CouplingGraph, SpinSite

# Coupler island network (fF) and loop inductances (pH).
COUPLER_ISLANDS = {
    "c_gr": 32.7, "c_gl": 25.8, "c_gz": 49.5,
    "c_rl": 6.54, "c_rz": 7.22, "c_lz": 7.19,
}
COUPLER_JUNCTION_CAPACITANCE = 4.4
COUPLER_L_Z = 756.0            # L_i + L_o
COUPLER_L_X = 31.4
M_CC = 64.2
M_QC = 62.6

QUBIT_L_Z = 690.0
QUBIT_C_EFF = 100.0
QUBIT_I_C = 420.0
QUBIT_DELTAS = (2.3, 0.01)     # GHz, q1 and q2 operating points


def sm_table_1_coupler() -> dict:
    c_eff = reduce_coupler_capacitance(c_junction=COUPLER_JUNCTION_CAPACITANCE, **COUPLER_ISLANDS)
    return {
        "params": CircuitUnitParams(L_z=COUPLER_L_Z, C_eff=c_eff, I_c=240.0, name="coupler"),
        "M_cc": M_CC,
        "M_qc": M_QC,
        "L_x": COUPLER_L_X,
    }


def sm_table_1_qubit() -> dict:
    return {
        "params": CircuitUnitParams(L_z=QUBIT_L_Z, C_eff=QUBIT_C_EFF, I_c=QUBIT_I_C, name="qubit"),
        "target_deltas": QUBIT_DELTAS,
        "M_qc": M_QC,
    }


def paper_chain_homogeneous(ratio: float = 0.1, delta_c: float = 5.0, j_qc: float = 0.25,
                            delta_q: float = 2.0, n_couplers: int = 7) -> ChainSpec:
    """q1 - c1..c7 - q2 with J_cc = ratio * delta_c / 2 (ratio 0.1 gives J_cc = 0.25 GHz)."""
    return ChainSpec.qubit_bus(n_couplers, delta_c, ratio * delta_c / 2.0, delta_q, j_qc)


def two_site_trivial() -> ChainSpec:
    """Two bare spins with J = 1 GHz; spectrum {-1, -1, 1, 1}."""
    sites = (SpinSite(0.0, 0.0, "coupler", 1), SpinSite(0.0, 0.0, "coupler", 2))
    return ChainSpec(sites, CouplingGraph((Coupling(0, 1, 1.0),)))


CHAIN_FIXTURES = {
    "paper-chain-homogeneous": paper_chain_homogeneous,
    "two-site-trivial": two_site_trivial,
}

CIRCUIT_FIXTURES = {
    "sm-table-1-coupler": sm_table_1_coupler,
    "sm-table-1-qubit": sm_table_1_qubit,
}


def chain_fixture(name: str) -> ChainSpec:
    try:
        return CHAIN_FIXTURES[name]()
    except KeyError:
        raise ConfigError(
            f"Unknown chain fixture '{name}', expected one of {sorted(CHAIN_FIXTURES)}"
        ) from None


def circuit_fixture(name: str) -> dict:
    try:
        return CIRCUIT_FIXTURES[name]()
    except KeyError:
        raise ConfigError(
            f"Unknown circuit fixture '{name}', expected one of {sorted(CIRCUIT_FIXTURES)}"
        ) from None
