from .errors import (
    SpinBusError,
    ConfigError,
    SpecError,
    DimensionError,
    NumericalError,
    DegenerateStateError,
    ConvergenceError,
    PerturbationBreakdownError,
    SymmetryPointError,
    FitError,
    LevelIdentificationError,
    StorageError,
)
