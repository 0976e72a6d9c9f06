"""Constants and configuration for the GN laboratory."""

import os

# Paths
BASE_DIR = os.path.dirname(os.path.dirname(os.path.abspath(__file__)))
OUTPUT_DIR = os.environ.get('GN_LAB_OUTPUT_ROOT', os.path.join(BASE_DIR, 'output'))
LOG_DIR = os.environ.get('GN_LAB_LOG_DIR', os.path.join(BASE_DIR, 'logs'))

# Kernel tail sums
DEFAULT_TAIL_RTOL = 1e-9
MAX_TAIL_TERMS = 10_000_000

# Discrete sampler switches from prefix scan to sum-tree above this size
SUM_TREE_THRESHOLD = 1024

# Explosion estimates
DEFAULT_N_TRUNC = 10_000
DEFAULT_CONFIDENCE = 0.99
DEFAULT_NEAR_EXPLOSION_DELTA = 1e-4
SCREEN_TERMS = 32

# Full tree invariant check after every mutation (slow; set GN_LAB_DEBUG=1)
DEBUG_CHECKS = os.environ.get('GN_LAB_DEBUG', '') not in ('', '0')

# Every stop rule is capped so explosive runs terminate
DEFAULT_MAX_BIRTHS = 10_000_000

# Clock blocks for lazily realized X(a, j)
CLOCK_BLOCK = 8

# Statistics
CHI_SQUARE_MIN_EXPECTED = 5
BIAS_FLAG_FRACTION = 0.1
MC_CHUNK_ELEMENTS = 4_000_000

# Run modes
MODE_DISCRETE = 'discrete'
MODE_EMBEDDED = 'embedded'
MODES = (MODE_DISCRETE, MODE_EMBEDDED)
