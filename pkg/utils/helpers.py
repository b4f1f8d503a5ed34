import json
import math
import dataclasses

from enum import Enum
from typing import Any, Callable, Iterable, List

import numpy as np
from joblib import Parallel, delayed
from joblib.parallel import cpu_count


def to_jsonable(obj: Any) -> Any:
    """
    Convert reports, numpy values and enums to plain JSON types.
    Floats keep their shortest round-trip representation; non-finite
    floats are written as strings so the output stays strict JSON.
    """
    if hasattr(obj, "to_dict"):
        return to_jsonable(obj.to_dict())
    if dataclasses.is_dataclass(obj) and not isinstance(obj, type):
        return {f.name: to_jsonable(getattr(obj, f.name)) for f in dataclasses.fields(obj)}
    if isinstance(obj, Enum):
        return obj.value
    if isinstance(obj, dict):
        return {str(k): to_jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [to_jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return to_jsonable(obj.tolist())
    if isinstance(obj, (bool, np.bool_)):
        return bool(obj)
    if isinstance(obj, (int, np.integer)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        value = float(obj)
        return value if math.isfinite(value) else repr(value)
    return obj


def dumps_report(report: Any) -> str:
    return json.dumps(to_jsonable(report), sort_keys=True, indent=2, allow_nan=False)


def parallel_computation(function: Callable, inputs: Iterable, n_jobs: int = 1) -> List:
    """Map `function` over `inputs`, in order, optionally through joblib workers."""
    if n_jobs == 1:
        return [function(inp) for inp in inputs]
    n_jobs = cpu_count() if n_jobs < 1 else min(cpu_count(), n_jobs)
    return Parallel(n_jobs=n_jobs, backend="threading")(
        delayed(function)(inp) for inp in inputs
    )
