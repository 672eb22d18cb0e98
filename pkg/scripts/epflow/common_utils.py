#!/usr/bin/env python3
"""
Common Utility Functions for epflow

This module provides shared functionality used across the epflow scripts:
- Logging configuration
- Bit-stable number formatting for CSV/JSON output
- Atomic file writes (write-temp-then-rename)
- Grid fingerprints for report provenance

Usage:
    from common_utils import setup_logging, format_number, atomic_write_text
"""

import hashlib
import logging
import math
import os
import tempfile
from pathlib import Path
from typing import Optional, Union

import numpy as np

logger = logging.getLogger(__name__)

DEFAULT_LOG_FORMAT = "%(asctime)s - %(levelname)s - %(message)s"
DEFAULT_DATE_FORMAT = "%Y-%m-%d %H:%M:%S"
NUMBER_FORMAT = ".17g"


def setup_logging(
    level: int = logging.INFO, format_string: Optional[str] = None
) -> None:
    """
    Configure logging with standardized format.

    Args:
        level: Logging level (default: logging.INFO)
        format_string: Custom format string (optional)
    """
    if format_string is None:
        format_string = DEFAULT_LOG_FORMAT

    logging.basicConfig(level=level, format=format_string, datefmt=DEFAULT_DATE_FORMAT)


def format_number(value: Union[float, int, bool, None]) -> str:
    """
    Format a scalar with 17 significant digits and '.' as decimal separator.

    Booleans become 0/1, None becomes an empty cell.
    """
    if value is None:
        return ""
    if isinstance(value, (bool, np.bool_)):
        return "1" if value else "0"
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    value = float(value)
    if math.isnan(value):
        return "nan"
    if math.isinf(value):
        return "inf" if value > 0 else "-inf"
    return format(value, NUMBER_FORMAT)


def atomic_write_text(path: Path, text: str) -> None:
    """
    Write text to path atomically.

    The content goes to a temporary file in the target directory which is
    then renamed over the destination, so readers never see partial files.

    Args:
        path: Destination file
        text: Content, written with '\\n' line endings
    """
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp_name = tempfile.mkstemp(prefix=f".{path.name}.", dir=path.parent)
    try:
        with os.fdopen(fd, "w", encoding="utf-8", newline="\n") as handle:
            handle.write(text)
        os.replace(tmp_name, path)
    except Exception:
        if os.path.exists(tmp_name):
            os.unlink(tmp_name)
        raise
    logger.debug(f"Wrote {path}")


def grid_hash(d: int, n: int, r_max: float, nodes: np.ndarray) -> str:
    """Return a sha256 fingerprint of a radial grid."""
    digest = hashlib.sha256()
    digest.update(f"d={d};n={n};r_max={r_max!r};".encode("ascii"))
    digest.update(np.ascontiguousarray(nodes, dtype="<f8").tobytes())
    return digest.hexdigest()


def banner(title: str, width: int = 60) -> None:
    """Log a title between two separator lines."""
    logger.info("=" * width)
    logger.info(title)
    logger.info("=" * width)
