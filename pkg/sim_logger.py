"""
Logger factory and run banners.

Message-only lines, like every stage log in this repo; wall-clock time appears
only inside the start/end banners so two identical runs differ only there.
"""
import logging
import logging.handlers
from datetime import datetime
from pathlib import Path
from typing import Iterable, Optional

import pytz

TZ = pytz.timezone("America/New_York")
BANNER_WIDTH = 80
LOG_FILE_NAME = "adabfl_sim.log"


def ny_now() -> str:
    return datetime.now(TZ).strftime("%m/%d/%Y %I:%M:%S %p %Z")


def setup_logger(log_dir: Optional[Path] = None, level: int = logging.INFO) -> logging.Logger:
    """Configure the root logger: console always, midnight-rotated file when log_dir is given"""
    root = logging.getLogger()
    root.setLevel(level)
    for handler in list(root.handlers):
        root.removeHandler(handler)
        handler.close()

    fmt = logging.Formatter("%(message)s")

    console = logging.StreamHandler()
    console.setFormatter(fmt)
    root.addHandler(console)

    if log_dir is not None:
        log_dir = Path(log_dir)
        log_dir.mkdir(parents=True, exist_ok=True)
        file_handler = logging.handlers.TimedRotatingFileHandler(
            log_dir / LOG_FILE_NAME, when="midnight", backupCount=7, encoding="utf-8"
        )
        file_handler.setFormatter(fmt)
        root.addHandler(file_handler)

    return root


def write_banner(logger: logging.Logger, title: str, details: Iterable[str] = ()) -> None:
    logger.info("=" * BANNER_WIDTH)
    logger.info(f"{title} - {ny_now()}".center(BANNER_WIDTH))
    logger.info("=" * BANNER_WIDTH)
    for line in details:
        logger.info(line)
