"""Application constants"""

APP_VERSION = "1.0.0"

# Program files
PROGRAM_FILE_EXTENSION = ".cpl"
MAX_PROGRAM_FILE_SIZE_BYTES = 1024 * 1024
CATALOGUE_FILE = "catalogue.yaml"
STDLIB_MODULE = "stdlib"

# CLI exit codes
EXIT_OK = 0
EXIT_VIOLATED = 1
EXIT_USAGE = 2
EXIT_GUARD = 3
EXIT_INCONCLUSIVE = 4

# Engine defaults
DEFAULT_MEMO_LIMIT = 10_000_000
DEFAULT_START_HORIZON = 16
DEFAULT_MAX_HORIZON = 1024
# Horizon value selecting the limit analysis over the reduced configuration graph
UNBOUNDED = "unbounded"
DEFAULT_SETTLE_LIMIT = 10_000
DEFAULT_POLICY_ITERATIONS = 1_000

# Monte Carlo defaults
DEFAULT_TRIALS = 10_000
DEFAULT_SEED = 0
DEFAULT_MAX_STEPS = 10_000
DEFAULT_CONFIDENCE = 0.99
DEFAULT_MC_WORKERS = 1
DEFAULT_TRIAL_BLOCK = 1_000
DEFAULT_TRANSITION_CACHE = 500_000

# Analytics
DEFAULT_ENUMERATION_LIMIT = 10_000_000
DEFAULT_DECIMAL_PLACES = 12

# Scheduler policy names accepted by the CLI and the API
SCHEDULER_KINDS = ["round_robin", "uniform_random", "scripted"]

FULL_VIEW_NOTE = (
    "adversary is full-view (it observes tape contents); the value upper-bounds "
    "every tape-censored scheduler at this horizon"
)

UNBOUNDED_NOTE = (
    "horizon is unbounded: the value is the limit over all horizons, solved on the graph "
    "with thread-local steps taken eagerly; the witness lists the remaining scheduling decisions"
)
