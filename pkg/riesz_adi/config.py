# Configuration settings for the Riesz ADI solver
import os

from dotenv import load_dotenv

load_dotenv()


def _env_bool(name: str, default: bool) -> bool:
    value = os.getenv(name)
    if value is None or value == "":
        return default
    return value.strip().lower() in ("1", "true", "yes", "on")


# Environment settings
ENV = os.getenv("ENV", "prod")
PROJECT = "riesz-adi"

# Set PROJECT_ROOT to the parent directory of the current file's directory
PROJECT_ROOT = os.path.abspath(os.path.join(os.path.dirname(__file__), ".."))

# Output settings. RIESZ_ADI_OUTPUT_DIR is the one documented override.
OUTPUT_DIR = os.getenv("RIESZ_ADI_OUTPUT_DIR") or os.path.join(PROJECT_ROOT, "output")

# Logging settings
LOG_LEVEL = os.getenv("RIESZ_ADI_LOG_LEVEL", "INFO").upper()
LOG_FILE = os.getenv("RIESZ_ADI_LOG_FILE") or None

# Solver settings
ORACLE_MAX_UNKNOWNS = int(os.getenv("RIESZ_ADI_ORACLE_MAX_UNKNOWNS", "4096"))
STUDY_WORKERS = int(os.getenv("RIESZ_ADI_STUDY_WORKERS", "1"))
FIT_TIME_STEP = _env_bool("RIESZ_ADI_FIT_TIME_STEP", True)

# Numerical tolerances
SYMMETRY_RTOL = 1e-10
STEP_COUNT_RTOL = 1e-9
TIME_STUDY_FIXED_FRACTION = 0.02

# cspell: ignore dotenv
