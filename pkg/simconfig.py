#!/usr/bin/env python3
"""
RUNTIME ENVIRONMENT SETTINGS
============================

Process-level knobs that are not part of an experiment's identity. Everything
here only changes how a run executes or where it logs, never what it computes,
so none of it is written into the metrics stream.

    ADABFL_LOG_LEVEL   logging level name (default INFO)
    ADABFL_LOG_DIR     directory for the rotating run log (default: the --out dir)
    ADABFL_WORKERS     client-training worker count when --workers is not given

Values are read from the process environment after loading an optional .env file.
"""
import logging
import os
from pathlib import Path
from typing import Optional

import psutil
from dotenv import load_dotenv

from errors import ConfigError

load_dotenv()

logger = logging.getLogger(__name__)

DEFAULT_LOG_LEVEL = "INFO"


def log_level() -> int:
    name = os.getenv("ADABFL_LOG_LEVEL", DEFAULT_LOG_LEVEL).upper()
    level = logging.getLevelName(name)
    if not isinstance(level, int):
        raise ConfigError(f"ADABFL_LOG_LEVEL '{name}' is not a logging level")
    return level


def log_dir(out_dir: Path) -> Path:
    configured = os.getenv("ADABFL_LOG_DIR")
    return Path(configured) if configured else Path(out_dir)


def available_cores() -> int:
    return psutil.cpu_count(logical=True) or 1


def resolve_workers(requested: Optional[int] = None) -> int:
    """Worker count from the flag, else ADABFL_WORKERS, else 1; capped at the logical core count"""
    if requested is None:
        raw = os.getenv("ADABFL_WORKERS")
        if raw:
            try:
                requested = int(raw)
            except ValueError as e:
                raise ConfigError(f"ADABFL_WORKERS must be an integer, got '{raw}'") from e
        else:
            requested = 1
    if requested < 1:
        raise ConfigError(f"worker count must be >= 1, got {requested}")
    cores = available_cores()
    if requested > cores:
        logger.warning(f"Requested {requested} workers but only {cores} logical cores; using {cores}")
        return cores
    return requested


def resident_memory_mb() -> float:
    return psutil.Process().memory_info().rss / (1024 * 1024)
