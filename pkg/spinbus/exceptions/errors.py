"""
Exceptions Errors
"""

class SpinBusError(Exception):
    """Base class for all spinbus errors"""
    pass

class ConfigError(SpinBusError):
    """Raised when a run config does not match the schema"""
    pass

class SpecError(SpinBusError, ValueError):
    """Raised for malformed chain, circuit or grid inputs"""
    pass

class DimensionError(SpecError):
    """Raised when a site index or matrix shape is out of range"""
    pass

class NumericalError(SpinBusError):
    """Base class for numerical failures"""
    pass

class DegenerateStateError(NumericalError):
    """Raised when a unique ground state is required but the lowest level is degenerate"""
    pass

class ConvergenceError(NumericalError):
    """Raised when a solver or basis truncation does not converge"""
    pass

class PerturbationBreakdownError(NumericalError):
    """Raised when an energy denominator vanishes with a nonzero numerator"""
    pass

class SymmetryPointError(NumericalError):
    """Raised when no sign change of the target polarization is found"""
    pass

class FitError(NumericalError):
    """Raised for singular or underdetermined sigmoid fits"""
    pass

class LevelIdentificationError(NumericalError):
    """Raised when qubit-like levels cannot be identified by overlap"""
    pass

class StorageError(SpinBusError):
    """Raised for file read/write problems"""
    pass
