import os

# Project root directory
ROOT_DIR = os.path.dirname(os.path.dirname(os.path.abspath(__file__)))

# Data directory
DATA_DIR = os.path.join(ROOT_DIR, 'data')

# Run configurations directory
CONFIGS_DIR = os.path.join(DATA_DIR, 'configs')

# Default run configuration
DEFAULT_CONFIG_FILE = os.path.join(CONFIGS_DIR, 'manufactured_solve.json')

# Output directory when --out is not given
RESULTS_DIR = os.path.join(ROOT_DIR, 'results')

# Solver
DEFAULT_TOLERANCE = 1e-10
DEFAULT_MAX_ITER = 10_000
DEFAULT_RESTART = 30
DEFAULT_GRADING = 2.0

# Refinement ladder (cells per direction)
DEFAULT_LADDER = (32, 64, 128, 256)

# Estimate checks
MONOTONICITY_BAND = 0.05
STABILIZATION_BAND = (0.5, 2.0)
# manufactured sweeps: observed order of the weighted L2 error, and the
# relative error below which a level counts as exact
MIN_CONSISTENCY_ORDER = 1.0
EXACT_ERROR_FLOOR = 1e-8
DEFAULT_ALPHA = 0.5
ALPHA_SWEEP = (0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9)

# Hölder pair enumeration
EXACT_PAIR_LIMIT = 65 * 65
SUBSAMPLED_PAIRS = 1_000_000
PAIR_CHUNK = 2_000_000

# Continuity of y D^2 D^k u at y = 0, relative
EXTENSION_TOL = 0.1
