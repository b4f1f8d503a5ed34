import json
import string

import numpy as np
import pytest

from src.kernel_core import Kernel, PointSet


@pytest.fixture
def make_kernel():
    """Kernel over labels a, b, c, ... from a nested list of values."""
    def _make(values, labels=None):
        values = np.asarray(values, dtype=float)
        labels = tuple(labels) if labels is not None else tuple(string.ascii_lowercase[:values.shape[0]])
        return Kernel(PointSet(labels), values)
    return _make


@pytest.fixture
def write_json(tmp_path):
    """Dump a JSON document under tmp_path and return its path as a string."""
    def _write(name, doc):
        path = tmp_path / name
        path.write_text(json.dumps(doc), encoding='utf-8')
        return str(path)
    return _write


@pytest.fixture
def triangle_violator(make_kernel):
    # H(a,c) = 5 exceeds H(a,b) + H(b,c) = 2 by 3
    return make_kernel([[0, 1, 5], [1, 0, 1], [5, 1, 0]])


@pytest.fixture
def negative_two_cycle(make_kernel):
    return make_kernel([[0, -1], [-1, 0]])
