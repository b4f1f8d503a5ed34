"""Retry utilities for numerical routines.

The decorator here is instance-aware (it logs through `self.logger` when the
wrapped callable is a method). Instead of waiting between attempts it relaxes a
numeric keyword argument, so an ill-conditioned solve is repeated with a looser
pivot tolerance. MaxRetriesExceeded is raised once every attempt has failed.
"""
from __future__ import annotations

import logging
from functools import wraps
from typing import Any, Callable, Tuple, Type

from .exceptions import MaxRetriesExceeded


def _logger_for(func: Callable, args: tuple) -> logging.Logger:
    instance_logger = getattr(args[0], "logger", None) if args else None
    return instance_logger or logging.getLogger(func.__module__)


def retry_on_exception(
    max_retries: int = 3,
    backoff_factor: float = 10.0,
    exceptions: Tuple[Type[BaseException], ...] = (ArithmeticError,),
    relax: str = "pivot_tol",
    initial: float = 1e-11,
) -> Callable[[Callable[..., Any]], Callable[..., Any]]:
    """Decorator to retry a function on specified exceptions.

    Args:
        max_retries: number of retries after the initial attempt.
        backoff_factor: multiplier applied to the relaxed argument. The value
            used for attempt n is start * (backoff_factor ** (n - 1)).
        exceptions: tuple of exception classes to catch and retry on.
        relax: name of the keyword argument that is relaxed between attempts.
        initial: start value of `relax` when the caller does not pass one.

    Any other exception propagates on the first attempt.
    """

    def decorator(func: Callable[..., Any]) -> Callable[..., Any]:
        @wraps(func)
        def wrapper(*args, **kwargs):
            logger = _logger_for(func, args)
            value = kwargs.pop(relax, initial)
            last_error = None
            for attempt in range(1, max_retries + 2):
                try:
                    return func(*args, **{**kwargs, relax: value})
                except exceptions as exc:
                    last_error = exc
                    if attempt > max_retries:
                        break
                    value *= backoff_factor
                    logger.warning(
                        f"[RETRY] {func.__name__} raised {exc}. "
                        f"Retrying with {relax}={value:.1e} (attempt {attempt}/{max_retries})"
                    )

            logger.error(f"{func.__name__} failed after {max_retries + 1} attempts: {last_error}")
            raise MaxRetriesExceeded(
                f"{func.__name__} failed after {max_retries} retries: {last_error}"
            ) from last_error

        return wrapper

    return decorator
