"""
Logging configuration for bicwave.
"""

import logging
import os
from logging.handlers import RotatingFileHandler
from typing import List

from bicwave.core.config import Config

PACKAGE_LOGGER = "bicwave"


def setup_logging(config: Config) -> logging.Logger:
    """
    Configure the package logger.

    Args:
        config: Configuration class

    Returns:
        The configured package logger
    """
    if config.LOG_FORMAT == "json":
        from pythonjsonlogger import jsonlogger

        formatter = jsonlogger.JsonFormatter(
            "%(asctime)s %(name)s %(levelname)s %(message)s"
        )
    else:
        formatter = logging.Formatter(
            "[%(asctime)s] %(levelname)s in %(module)s: %(message)s"
        )

    handlers: List[logging.Handler] = [logging.StreamHandler()]

    if config.LOG_FILE:
        log_dir = os.path.dirname(config.LOG_FILE)
        if log_dir and not os.path.exists(log_dir):
            os.makedirs(log_dir)
        handlers.append(
            RotatingFileHandler(
                config.LOG_FILE,
                maxBytes=config.LOG_MAX_BYTES,
                backupCount=config.LOG_BACKUP_COUNT,
            )
        )

    log_level = getattr(logging, config.LOG_LEVEL.upper(), logging.INFO)
    logger = logging.getLogger(PACKAGE_LOGGER)

    # Re-running setup (one CLI invocation per test) must not stack handlers
    for handler in list(logger.handlers):
        if not isinstance(handler, WarningCollector):
            logger.removeHandler(handler)

    for handler in handlers:
        handler.setFormatter(formatter)
        handler.setLevel(log_level)
        logger.addHandler(handler)

    logger.setLevel(log_level)
    return logger


def get_logger(name: str) -> logging.Logger:
    """Get a logger instance for a specific module."""
    return logging.getLogger(name)


class WarningCollector(logging.Handler):
    """Keeps WARNING-and-above messages so they can go into run metadata."""

    def __init__(self):
        super().__init__(level=logging.WARNING)
        self.messages: List[str] = []

    def emit(self, record: logging.LogRecord) -> None:
        self.messages.append(f"{record.name}: {record.getMessage()}")

    def __enter__(self) -> "WarningCollector":
        logging.getLogger(PACKAGE_LOGGER).addHandler(self)
        return self

    def __exit__(self, *exc) -> None:
        logging.getLogger(PACKAGE_LOGGER).removeHandler(self)
