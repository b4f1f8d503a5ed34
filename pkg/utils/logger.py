import logging
import os
import sys

LOG_LEVEL_ENV = "FI_LOG_LEVEL"
_FORMAT = '%(asctime)s [%(levelname)s] %(name)s: %(message)s'


def _default_level() -> int:
    level = logging.getLevelName(os.environ.get(LOG_LEVEL_ENV, "INFO").upper())
    return level if isinstance(level, int) else logging.INFO


def setup_logger(name: str, level: int | None = None) -> logging.Logger:
    logger = logging.getLogger(name)
    logger.setLevel(level if level is not None else _default_level())

    if not logger.handlers:
        # stdout is reserved for JSON reports
        handler = logging.StreamHandler(sys.stderr)
        handler.setFormatter(logging.Formatter(_FORMAT))
        logger.addHandler(handler)
        logger.propagate = False

    return logger


def set_log_level(level: int) -> None:
    """Apply `level` to every logger created through setup_logger."""
    for logger in logging.Logger.manager.loggerDict.values():
        if isinstance(logger, logging.Logger) and logger.handlers and not logger.propagate:
            logger.setLevel(level)
