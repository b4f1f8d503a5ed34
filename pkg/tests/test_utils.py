import logging
import sys

from dataclasses import dataclass
from enum import Enum

import numpy as np
import pytest

from utils.exceptions import MaxRetriesExceeded
from utils.helpers import dumps_report, parallel_computation, to_jsonable
from utils.logger import set_log_level, setup_logger
from utils.retry import retry_on_exception


class Flaky:
    """Fails until the relaxed tolerance reaches 1e-9."""

    def __init__(self):
        self.logger = logging.getLogger("tests.flaky")
        self.seen = []

    @retry_on_exception(max_retries=3, backoff_factor=10.0, exceptions=(ArithmeticError,), relax="tol", initial=1e-11)
    def solve(self, tol=None):
        self.seen.append(tol)
        if tol < 0.99e-9:
            raise ZeroDivisionError("pivot too small")
        return tol


def test_retry_relaxes_the_keyword(caplog):
    flaky = Flaky()
    with caplog.at_level(logging.WARNING, logger="tests.flaky"):
        assert flaky.solve() == pytest.approx(1e-9)
    assert flaky.seen == pytest.approx([1e-11, 1e-10, 1e-9])
    assert sum("[RETRY]" in r.getMessage() for r in caplog.records) == 2


def test_retry_starts_from_the_callers_value():
    flaky = Flaky()
    assert flaky.solve(tol=1e-6) == 1e-6
    assert flaky.seen == [1e-6]


def test_retry_gives_up():
    @retry_on_exception(max_retries=2, exceptions=(ArithmeticError,))
    def always(pivot_tol=None):
        raise FloatingPointError("stall")

    with pytest.raises(MaxRetriesExceeded):
        always()


def test_retry_ignores_other_exceptions():
    calls = []

    @retry_on_exception(max_retries=5, exceptions=(ArithmeticError,))
    def broken(pivot_tol=None):
        calls.append(pivot_tol)
        raise KeyError("not numeric")

    with pytest.raises(KeyError):
        broken()
    assert len(calls) == 1


class Color(Enum):
    RED = "red"


@dataclass
class Row:
    name: str
    weight: float


def test_to_jsonable_converts_numpy_and_reports():
    doc = to_jsonable({
        "array": np.arange(3),
        "flag": np.bool_(True),
        "scalar": np.float64(0.1),
        "inf": -np.inf,
        "color": Color.RED,
        "row": Row("a", np.float32(0.5)),
        1: (1, 2),
    })
    assert doc == {
        "array": [0, 1, 2],
        "flag": True,
        "scalar": 0.1,
        "inf": "-inf",
        "color": "red",
        "row": {"name": "a", "weight": 0.5},
        "1": [1, 2],
    }


def test_dumps_report_sorts_keys():
    assert dumps_report({"b": 1, "a": float("nan")}) == '{\n  "a": "nan",\n  "b": 1\n}'


@pytest.mark.parametrize("n_jobs", [1, 2, -1])
def test_parallel_computation_keeps_order(n_jobs):
    assert parallel_computation(lambda x: x * x, range(20), n_jobs=n_jobs) == [x * x for x in range(20)]


def test_setup_logger_is_idempotent():
    first = setup_logger("tests.idempotent")
    again = setup_logger("tests.idempotent")
    assert first is again
    assert len(again.handlers) == 1
    assert again.handlers[0].stream is sys.stderr
    assert not again.propagate


def test_log_level_from_environment(monkeypatch):
    monkeypatch.setenv("FI_LOG_LEVEL", "warning")
    assert setup_logger("tests.env_level").level == logging.WARNING
    monkeypatch.setenv("FI_LOG_LEVEL", "nonsense")
    assert setup_logger("tests.env_fallback").level == logging.INFO


def test_set_log_level_reaches_existing_loggers():
    logger = setup_logger("tests.set_level", logging.INFO)
    set_log_level(logging.DEBUG)
    try:
        assert logger.level == logging.DEBUG
    finally:
        set_log_level(logging.INFO)
