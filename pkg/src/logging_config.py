"""
DLA-1D Logging Configuration

Centralized logging setup for the simulator and its command line.
"""

import logging
import logging.handlers
import os
import sys
from pathlib import Path
from typing import Optional

from pythonjsonlogger import jsonlogger

LOGGER_NAME = "dla1d"
DEFAULT_FORMAT = "%(asctime)s - %(name)s - %(levelname)s - %(message)s"


def _build_formatter(json_format: bool) -> logging.Formatter:
    if json_format:
        return jsonlogger.JsonFormatter(
            "%(asctime)s %(name)s %(levelname)s %(message)s",
            datefmt="%Y-%m-%d %H:%M:%S"
        )
    return logging.Formatter(DEFAULT_FORMAT, datefmt="%Y-%m-%d %H:%M:%S")


def setup_logging(
    log_level: Optional[str] = None,
    log_file: Optional[Path] = None,
    json_format: bool = False
) -> logging.Logger:
    """
    Set up logging configuration for DLA-1D

    Args:
        log_level: Logging level (DEBUG, INFO, WARNING, ERROR, CRITICAL);
            falls back to DLA1D_LOG_LEVEL, then INFO
        log_file: Optional log file path, defaults to logs/dla1d.log under the
            working directory; the command line passes one under output_dir
        json_format: Emit one JSON object per record instead of plain text

    Returns:
        Configured logger instance
    """
    if log_level is None:
        log_level = os.getenv("DLA1D_LOG_LEVEL", "INFO")
    level = getattr(logging, log_level.upper(), logging.INFO)

    logger = logging.getLogger(LOGGER_NAME)
    logger.setLevel(level)
    for handler in list(logger.handlers):
        handler.close()
        logger.removeHandler(handler)

    formatter = _build_formatter(json_format)

    console_handler = logging.StreamHandler(sys.stdout)
    console_handler.setLevel(level)
    console_handler.setFormatter(formatter)
    logger.addHandler(console_handler)

    if log_file is None:
        log_file = Path("logs") / "dla1d.log"

    try:
        log_file.parent.mkdir(parents=True, exist_ok=True)
        file_handler = logging.handlers.RotatingFileHandler(
            log_file,
            maxBytes=10 * 1024 * 1024,  # 10MB
            backupCount=5
        )
        file_handler.setLevel(level)
        file_handler.setFormatter(formatter)
        logger.addHandler(file_handler)
    except OSError as error:
        logger.warning(f"[WARNING] Could not open log file {log_file}: {error}")

    logger.propagate = False

    return logger


def get_logger(name: str = LOGGER_NAME) -> logging.Logger:
    """
    Get a logger instance for a specific component

    Args:
        name: Component name (rng, field, dla, ...)

    Returns:
        Logger instance
    """
    if name == LOGGER_NAME:
        return logging.getLogger(LOGGER_NAME)
    return logging.getLogger(f"{LOGGER_NAME}.{name}")
