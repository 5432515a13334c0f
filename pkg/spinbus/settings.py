"""
Global settings
"""

# Largest chain built densely; 2**14 x 2**14 doubles is about 2 GB.
DIMENSION_CAP = 14

# Levels closer than this (GHz) form one degenerate block.
DEGENERACY_TOL = 1e-9

# Relative residual ||Hv - Ev|| / ||H|| accepted from the eigensolver.
RESIDUAL_TOL = 1e-9

# Minimum gap (GHz) for Hellmann-Feynman derivatives.
HF_GAP_TOL = 1e-6

# Bisection tolerance on epsilon (GHz).
SYMMETRY_POINT_TOL = 1e-6

# Source offset for flux propagation (Phi0) and default sweep grid.
SOURCE_OFFSET = 0.020
SWEEP_POINTS = 41

# Sigmoid fit controls.
FIT_XTOL = 1e-8
FIT_MAX_ITER = 500
SLOPE_JITTER = 1.2e-3
SLOPE_RESAMPLES = 200

# Harmonic basis defaults for circuit quantization.
BASIS_SIZE = 60
BASIS_CAP = 960
BASIS_REL_TOL = 1e-6

# Flux linearization range for flux_to_epsilon (Phi0).
LINEAR_FLUX_RANGE = 0.05

# Output formatting.
SCHEMA_VERSION = 1

THREADS_ENV = "SPINBUS_THREADS"

# Persistent current (nA) assumed for spin-only chains when none is given.
DEFAULT_PERSISTENT_CURRENT = 100.0
