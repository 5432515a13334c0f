"""
spinbus: transverse-field Ising spin-bus simulator
"""

__version__ = "0.1.0"

from .eigensolver import SpectrumResult, diagonalize, solve_chain
from .spin_model import ChainSpec, Coupling, CouplingGraph, SpinSite, build_hamiltonian

__all__ = [
    "__version__",
    "ChainSpec",
    "Coupling",
    "CouplingGraph",
    "SpinSite",
    "SpectrumResult",
    "build_hamiltonian",
    "diagonalize",
    "solve_chain",
]
