"""
Configuration settings for the recovery library and CLI
"""

import logging
import os
from pathlib import Path
from typing import Optional

# Base paths
BASE_DIR = Path(__file__).resolve().parent.parent
DATA_DIR = BASE_DIR / "data"
PROCESSED_DIR = DATA_DIR / "processed"
LOGS_DIR = DATA_DIR / "logs"

# File paths
LOG_PATH = LOGS_DIR / "noisypop.log"
DEFAULT_REPORT_PATH = PROCESSED_DIR / "report.json"
DEFAULT_BENCH_PATH = PROCESSED_DIR / "bench.csv"


def _env_int(name: str, default: int) -> int:
    value = os.getenv(name, "")
    return int(value) if value.strip() else default


def _env_float(name: str, default: float) -> float:
    value = os.getenv(name, "")
    return float(value) if value.strip() else default


def _env_optional_int(name: str) -> Optional[int]:
    value = os.getenv(name, "")
    return int(value) if value.strip() else None


# Run defaults
DEFAULT_SEED = _env_int("NOISYPOP_SEED", 0)
DEFAULT_WORKERS = _env_int("NOISYPOP_WORKERS", 1)
DEFAULT_MAX_R = _env_int("NOISYPOP_MAX_R", 12)
SAMPLE_CAP = _env_optional_int("NOISYPOP_SAMPLE_CAP")
# budgets above this are refused instead of drawn
MAX_SAMPLES = _env_int("NOISYPOP_MAX_SAMPLES", 50_000_000)

# Far-set threshold s = max(1, ceil((FAR_CONSTANT / mu^2) * ln(2k)))
FAR_CONSTANT = _env_float("NOISYPOP_FAR_CONSTANT", 2.0)

# Size guards
KERNEL_SUBSET_CAP = _env_int("NOISYPOP_KERNEL_SUBSET_CAP", 24)
ORACLE_MAX_N = _env_int("NOISYPOP_ORACLE_MAX_N", 20)
VERIFY_MAX_N = _env_int("NOISYPOP_VERIFY_MAX_N", 14)

# Simplex numerics
PIVOT_TOL = _env_float("NOISYPOP_PIVOT_TOL", 1e-10)
DUAL_TOL = _env_float("NOISYPOP_DUAL_TOL", 1e-8)
MAX_PIVOTS = _env_int("NOISYPOP_MAX_PIVOTS", 50000)

# Tolerances shared by the invariant checks
WEIGHT_SUM_TOL = 1e-12
ZEROTH_TOL = 1e-9
ETA_SLACK = 1e-6
UPSILON_FLOOR = 0.25

LOG_LEVEL = os.getenv("NOISYPOP_LOG_LEVEL", "INFO")
LOG_FORMAT = "%(asctime)s %(levelname)s %(name)s %(message)s"


def setup_logging(level: str = LOG_LEVEL, log_path: Optional[Path] = None) -> None:
    """
    Install console (and optional file) handlers on the package logger

    Args:
        level: Logging level name
        log_path: Optional file to append log lines to
    """
    logger = logging.getLogger("noisypop")
    logger.setLevel(level.upper())
    logger.handlers.clear()

    formatter = logging.Formatter(LOG_FORMAT)
    console = logging.StreamHandler()
    console.setFormatter(formatter)
    logger.addHandler(console)

    if log_path is not None:
        log_path.parent.mkdir(parents=True, exist_ok=True)
        file_handler = logging.FileHandler(log_path, encoding="utf-8")
        file_handler.setFormatter(formatter)
        logger.addHandler(file_handler)
