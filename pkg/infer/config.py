import os
from dotenv import load_dotenv

from .errors import ConfigError

load_dotenv()


def _get(name: str, default, cast=str):
    v = os.getenv(name)
    if v is None or v == "":
        return default
    try:
        return cast(v)
    except ValueError:
        raise ConfigError(f"Invalid value for env {name}: {v!r}")


# Model defaults; not overridable from the environment.
DEFAULT_K = 5
DEFAULT_ITERATIONS = 3000
DEFAULT_BURN_IN = 500
DEFAULT_DELTA = 1e-10
DEFAULT_WINDOW = 3

KDE_GRID_SIZE = 512
KDE_BANDWIDTH_FLOOR = 1e-12
# Values above a cutoff must sit this many times above the median of those below it.
KDE_SEPARATION = 10.0

JITTER_SCALE = 1e-10
JITTER_DOUBLINGS = 3

SCALE_FLOOR = 1e-12
SCALE_CEIL = 1e12

# Fixed Gaussian prior variance of the V1 baseline column (the starting level of every source).
BASELINE_PRIOR_VARIANCE = 1e6

# Operational knobs
PROGRESS_EVERY = _get("ABACUS_PROGRESS_EVERY", 100, int)
MAX_WORKERS = _get("ABACUS_MAX_WORKERS", 4, int)
LOG_LEVEL = _get("ABACUS_LOG_LEVEL", "INFO")
DEFAULT_OUTPUT_ROOT = _get("ABACUS_OUTPUT_ROOT", "output")
