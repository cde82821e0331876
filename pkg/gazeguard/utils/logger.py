"""
Centralized logging configuration
"""
import logging
import os
import sys
from typing import Optional
from pythonjsonlogger import jsonlogger


def setup_logging(level: Optional[str] = None, log_file: Optional[str] = None) -> None:
    """
    Configure application-wide logging

    Args:
        level: Log level name; falls back to LOG_LEVEL
        log_file: JSON log destination; falls back to LOG_FILE (empty disables it)
    """
    log_level = (level or os.getenv('LOG_LEVEL', 'INFO')).upper()
    if log_file is None:
        log_file = os.getenv('LOG_FILE', '')

    if log_file and os.path.dirname(log_file):
        os.makedirs(os.path.dirname(log_file), exist_ok=True)

    root_logger = logging.getLogger()
    root_logger.setLevel(getattr(logging, log_level, logging.INFO))

    # Remove existing handlers to avoid duplication
    root_logger.handlers = []

    # 1. Console handler. stderr, so command output on stdout stays clean
    console_handler = logging.StreamHandler(sys.stderr)
    console_handler.setLevel(getattr(logging, log_level, logging.INFO))
    console_format = logging.Formatter(
        '%(asctime)s - %(name)s - %(levelname)s - %(message)s',
        datefmt='%Y-%m-%d %H:%M:%S'
    )
    console_handler.setFormatter(console_format)
    root_logger.addHandler(console_handler)

    # 2. File handler (JSON for parsing)
    if log_file:
        file_handler = logging.FileHandler(log_file)
        file_handler.setLevel(logging.DEBUG)
        json_format = jsonlogger.JsonFormatter(
            '%(timestamp)s %(level)s %(name)s %(message)s %(exc_info)s'
        )
        file_handler.setFormatter(json_format)
        root_logger.addHandler(file_handler)

    # numpy/matplotlib chatter
    logging.getLogger('matplotlib').setLevel(logging.WARNING)

    root_logger.debug(f"Logging initialized at {log_level} level")
