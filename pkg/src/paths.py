"""Environment-driven defaults."""

import logging
import os
from pathlib import Path

logger = logging.getLogger(__name__)

OUTPUT_DIR_ENV = "ASAPPP_OUTPUT_DIR"
WORKERS_ENV = "ASAPPP_WORKERS"


def get_output_dir() -> Path:
    """Default directory for figure data files."""
    configured = os.getenv(OUTPUT_DIR_ENV)
    if configured:
        return Path(configured)
    return Path("./output")


def default_workers() -> int:
    """Worker count from the environment, 1 when unset or invalid."""
    configured = os.getenv(WORKERS_ENV)
    if not configured:
        return 1
    try:
        workers = int(configured)
    except ValueError:
        logger.warning(f"Ignoring non-integer {WORKERS_ENV}={configured!r}")
        return 1
    if workers < 1:
        logger.warning(f"Ignoring non-positive {WORKERS_ENV}={workers}")
        return 1
    return workers
