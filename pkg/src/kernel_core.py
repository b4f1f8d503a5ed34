"""Finite point sets, two-argument kernels and defect scans over ordered triples.

A kernel K over a point set X = (x_0, ..., x_{n-1}) is stored as a dense
n x n float array with values[i, j] = K(x_i, x_j). Every scan ranges over all
n**3 ordered triples (f, g, h), repeated points included; the triple indices
are (i, j, k) = (f, g, h).
"""
from __future__ import annotations

from dataclasses import dataclass
from enum import Enum
from typing import Callable, Dict, Sequence, Tuple

import numpy as np

# Internal libraries
from utils.exceptions import DomainError, PointSetMismatch
from utils.helpers import parallel_computation
from utils.logger import setup_logger

logger = setup_logger(__name__)

DEFAULT_TOLERANCE = 1e-9
# upper bound on floats materialised per scan block
_BLOCK_ELEMENTS = 1 << 22


class DefectKind(str, Enum):
    SINCOV = "sincov"
    ADDITIVE = "additive"
    TRIANGLE = "triangle"
    SUBMULTIPLICATIVE = "submultiplicative"
    MAIN = "main"
    ADD = "add"

    @property
    def arity(self) -> int:
        return 2 if self in (DefectKind.MAIN, DefectKind.ADD) else 1


@dataclass(frozen=True)
class PointSet:
    labels: Tuple[str, ...]

    def __post_init__(self):
        labels = tuple(str(label) for label in self.labels)
        if not labels:
            raise DomainError("a point set needs at least one label")
        seen = set()
        for label in labels:
            if label in seen:
                raise DomainError(f"duplicate label {label!r}")
            seen.add(label)
        object.__setattr__(self, "labels", labels)

    @classmethod
    def of_size(cls, n: int, prefix: str = "x") -> "PointSet":
        return cls(tuple(f"{prefix}{i}" for i in range(n)))

    def __len__(self) -> int:
        return len(self.labels)

    def __iter__(self):
        return iter(self.labels)

    def index(self, label: str) -> int:
        try:
            return self.labels.index(label)
        except ValueError:
            raise DomainError(f"unknown label {label!r}") from None

    def labels_at(self, indices: Sequence[int]) -> Tuple[str, ...]:
        return tuple(self.labels[i] for i in indices)

    def permuted(self, order: Sequence[int]) -> "PointSet":
        return PointSet(self.labels_at(order))


def _frozen_array(values, shape: Tuple[int, ...], what: str) -> np.ndarray:
    array = np.array(values, dtype=float)
    if array.shape != shape:
        raise DomainError(f"{what} has shape {array.shape}, expected {shape}")
    if not np.all(np.isfinite(array)):
        bad = tuple(int(i) for i in np.argwhere(~np.isfinite(array))[0])
        raise DomainError(f"{what} has a non-finite entry at {bad}")
    array.setflags(write=False)
    return array


@dataclass(frozen=True, eq=False)
class Kernel:
    """Dense real kernel K: X x X -> R; immutable once built."""
    points: PointSet
    values: np.ndarray

    def __post_init__(self):
        n = len(self.points)
        object.__setattr__(self, "values", _frozen_array(self.values, (n, n), "kernel"))

    @classmethod
    def constant(cls, points: PointSet, value: float) -> "Kernel":
        return cls(points, np.full((len(points), len(points)), float(value)))

    @classmethod
    def zeros(cls, points: PointSet) -> "Kernel":
        return cls.constant(points, 0.0)

    @classmethod
    def from_function(cls, points: PointSet, func: Callable[[str, str], float]) -> "Kernel":
        return cls(points, [[func(f, g) for g in points] for f in points])

    @property
    def n(self) -> int:
        return len(self.points)

    def __call__(self, f: str, g: str) -> float:
        return float(self.values[self.points.index(f), self.points.index(g)])

    def with_values(self, values) -> "Kernel":
        return Kernel(self.points, values)

    def relabeled(self, order: Sequence[int]) -> "Kernel":
        """Kernel over points[order] with the same underlying function."""
        order = list(order)
        return Kernel(self.points.permuted(order), self.values[np.ix_(order, order)])

    def same_as(self, other: "Kernel", atol: float = 0.0) -> bool:
        if self.points != other.points:
            return False
        if atol == 0.0:
            return bool(np.array_equal(self.values, other.values))
        return bool(np.max(np.abs(self.values - other.values)) <= atol)

    def max_abs_difference(self, other: "Kernel") -> float:
        ensure_shared_points(self, other)
        return float(np.max(np.abs(self.values - other.values)))

    def _combine(self, other, op) -> "Kernel":
        if isinstance(other, Kernel):
            ensure_shared_points(self, other)
            return Kernel(self.points, op(self.values, other.values))
        return Kernel(self.points, op(self.values, float(other)))

    def __add__(self, other):
        return self._combine(other, np.add)

    def __sub__(self, other):
        return self._combine(other, np.subtract)

    def __mul__(self, other):
        return self._combine(other, np.multiply)

    __rmul__ = __mul__

    def __neg__(self):
        return Kernel(self.points, -self.values)

    def to_dict(self) -> Dict:
        return {"points": list(self.points.labels), "values": self.values.tolist()}


@dataclass(frozen=True, eq=False)
class Potential:
    """Real function on a point set (phi, psi or Phi)."""
    points: PointSet
    values: np.ndarray

    def __post_init__(self):
        n = len(self.points)
        object.__setattr__(self, "values", _frozen_array(self.values, (n,), "potential"))

    def __call__(self, f: str) -> float:
        return float(self.values[self.points.index(f)])

    def to_dict(self) -> Dict:
        return {"points": list(self.points.labels), "values": self.values.tolist()}


@dataclass(frozen=True)
class DefectReport:
    kind: DefectKind
    max_defect: float
    argmax: Tuple[str, str, str]
    violations: int
    tolerance: float

    @property
    def holds(self) -> bool:
        return self.violations == 0

    def to_dict(self) -> Dict:
        return {
            "kind": self.kind.value,
            "max_defect": self.max_defect,
            "argmax": list(self.argmax),
            "violations": self.violations,
            "tolerance": self.tolerance,
        }


def ensure_shared_points(*items) -> PointSet:
    points = items[0].points
    for item in items[1:]:
        if item.points != points:
            raise PointSetMismatch(
                f"point sets differ: {list(points.labels)} vs {list(item.points.labels)}"
            )
    return points


def complex_values(real: Kernel, imaginary: Kernel | None) -> np.ndarray:
    """Values of T = real + i*imaginary; real-valued when no imaginary part is given."""
    if imaginary is None:
        return real.values
    ensure_shared_points(real, imaginary)
    return real.values + 1j * imaginary.values


# Residual of each kind on the block of triples with f in rows; arrays are
# indexed [f, g, h] so K(f,h) -> A[rows, None, :], K(f,g) -> A[rows, :, None],
# K(g,h) -> A[None, :, :].
def _residual_block(kind: DefectKind, arrays: Tuple[np.ndarray, ...], rows: slice) -> np.ndarray:
    a = arrays[0]
    fh, fg, gh = a[rows, None, :], a[rows, :, None], a[None, :, :]
    if kind is DefectKind.SINCOV:
        return np.abs(fh - fg * gh)
    if kind is DefectKind.ADDITIVE:
        return np.abs(fh - fg - gh)
    if kind is DefectKind.TRIANGLE:
        return np.maximum(fh - fg - gh, 0.0)
    if kind is DefectKind.SUBMULTIPLICATIVE:
        return np.maximum(fh - fg * gh, 0.0)
    b = arrays[1]
    bfh, bfg, bgh = b[rows, None, :], b[rows, :, None], b[None, :, :]
    with np.errstate(over="ignore", invalid="ignore"):
        if kind is DefectKind.MAIN:
            residual = np.abs(fh - fg * gh) - (bfg * bgh - bfh)
        else:
            residual = np.abs(fh - fg - gh) - (bfg + bgh - bfh)
    # both sides overflowed (inf - inf); such a triple cannot be certified
    residual[np.isnan(residual)] = np.inf
    return residual


def residual_tensor(kind: DefectKind, *kernels: Kernel, imaginary: Kernel | None = None) -> np.ndarray:
    """Full n x n x n residual array of `kind`; meant for small n."""
    arrays = _scan_arrays(kind, kernels, imaginary)
    return _residual_block(kind, arrays, slice(None))


def _scan_arrays(kind: DefectKind, kernels: Sequence[Kernel], imaginary: Kernel | None):
    if len(kernels) != kind.arity:
        raise DomainError(f"defect kind {kind.value!r} takes {kind.arity} kernel(s), got {len(kernels)}")
    ensure_shared_points(*kernels)
    if imaginary is not None and kind not in (DefectKind.SINCOV, DefectKind.MAIN):
        raise DomainError(f"defect kind {kind.value!r} does not accept a complex kernel")
    first = complex_values(kernels[0], imaginary)
    return (first,) + tuple(k.values for k in kernels[1:])


def defect_scan(
    kind: DefectKind | str,
    *kernels: Kernel,
    tolerance: float = DEFAULT_TOLERANCE,
    imaginary: Kernel | None = None,
    n_jobs: int = 1,
) -> DefectReport:
    """
    Scan every ordered triple for the defect of `kind`.
    Args:
        kind: one of DefectKind; main and add take (T, F) / (S, G).
        kernels: one or two kernels over the same points.
        tolerance: triples with defect above it count as violations.
        imaginary: imaginary part of the first kernel (sincov and main only).
        n_jobs: joblib workers for the outer index blocks.
    Returns:
        DefectReport with the maximum, its lexicographically first argmax and
        the violation count.
    """
    kind = DefectKind(kind)
    arrays = _scan_arrays(kind, kernels, imaginary)
    points = kernels[0].points
    n = len(points)
    rows_per_block = max(1, _BLOCK_ELEMENTS // (n * n))
    blocks = [slice(start, min(n, start + rows_per_block)) for start in range(0, n, rows_per_block)]

    def _scan(rows: slice):
        block = _residual_block(kind, arrays, rows)
        flat = int(np.argmax(block))
        return float(block.flat[flat]), rows.start + flat // (n * n), flat % (n * n), int(np.count_nonzero(block > tolerance))

    best, best_index, violations = -np.inf, 0, 0
    for value, row, rest, count in parallel_computation(_scan, blocks, n_jobs=n_jobs):
        violations += count
        # strict comparison keeps the first maximum in lexicographic order
        if value > best:
            best, best_index = value, row * n * n + rest
    i, j, k = np.unravel_index(best_index, (n, n, n))
    report = DefectReport(kind, best, points.labels_at((i, j, k)), violations, tolerance)
    if best == np.inf:
        logger.warning(f"{kind.value} scan: residual overflows at {report.argmax}; counted as a violation")
    logger.debug(f"{kind.value} scan over {n ** 3} triples: max {best!r} at {report.argmax}, {violations} violations")
    return report
