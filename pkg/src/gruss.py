"""
Grüss-type numerics.

Functions on [a, b] are represented by samples on the uniform grid
x_i = a + i(b-a)/N. A discontinuity must sit on a grid node: `values[i]` holds
the left limit there and `jumps[i]` the right limit, and quadrature runs on
each smooth piece separately. Integral means use composite Simpson on pieces
with an even number of intervals and the trapezoid rule otherwise.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Dict, List, Mapping, Sequence, Tuple

import numpy as np
from scipy.integrate import simpson, trapezoid
from tqdm import tqdm

# Internal libraries
from src.kernel_core import DEFAULT_TOLERANCE, Kernel, PointSet
from utils.exceptions import DomainError
from utils.helpers import parallel_computation
from utils.logger import setup_logger

logger = setup_logger(__name__)

DEFAULT_GRID = 256
RICHARD_CHUNK = 10_000
MIN_NORM = 1e-6


@dataclass(frozen=True, eq=False)
class FunctionSample:
    a: float
    b: float
    values: np.ndarray
    bounds: Tuple[float, float] | None = None
    jumps: Mapping[int, float] = field(default_factory=dict)

    def __post_init__(self):
        if not self.a < self.b:
            raise DomainError(f"interval needs a < b, got [{self.a!r}, {self.b!r}]")
        values = np.array(self.values, dtype=float)
        if values.ndim != 1 or values.size < 3:
            raise DomainError("a sample needs N >= 2 intervals")
        if not np.all(np.isfinite(values)):
            raise DomainError("samples must be finite")
        values.setflags(write=False)
        object.__setattr__(self, "values", values)
        n = values.size - 1
        jumps = {int(i): float(v) for i, v in dict(self.jumps).items()}
        for i in jumps:
            if not 0 < i < n:
                raise DomainError(f"jump at node {i} is not an interior node of 0..{n}")
        object.__setattr__(self, "jumps", jumps)
        if self.bounds is not None:
            lo, hi = float(self.bounds[0]), float(self.bounds[1])
            if lo > self.sample_min() or hi < self.sample_max():
                raise DomainError(f"samples leave the declared bounds [{lo!r}, {hi!r}]")
            object.__setattr__(self, "bounds", (lo, hi))

    @classmethod
    def from_function(cls, func: Callable[[np.ndarray], np.ndarray], a: float, b: float,
                      n: int = DEFAULT_GRID, breaks: Sequence[float] = (),
                      bounds: Tuple[float, float] | None = None) -> "FunctionSample":
        """
        Sample a vectorised `func` on the grid. Each break point must be a grid node;
        the node stores the left limit and the value func(x) becomes the right limit.
        """
        x = np.linspace(a, b, n + 1)
        values = np.array(func(x), dtype=float) * np.ones_like(x)
        jumps = {}
        h = (b - a) / n
        for point in breaks:
            position = (point - a) / h
            i = int(round(position))
            if abs(position - i) > 1e-9 or not 0 < i < n:
                raise DomainError(f"break {point!r} is not an interior grid node")
            jumps[i] = float(values[i])
            values[i] = float(np.asarray(func(np.array([np.nextafter(x[i], -np.inf)]))).reshape(-1)[0])
        return cls(a, b, values, bounds, jumps)

    @property
    def n(self) -> int:
        return self.values.size - 1

    @property
    def step(self) -> float:
        return (self.b - self.a) / self.n

    def _all_values(self) -> np.ndarray:
        return np.concatenate([self.values, np.fromiter(self.jumps.values(), float, len(self.jumps))])

    def sample_min(self) -> float:
        return float(self._all_values().min())

    def sample_max(self) -> float:
        return float(self._all_values().max())

    def effective_bounds(self) -> Tuple[Tuple[float, float], str]:
        if self.bounds is not None:
            return self.bounds, "declared"
        return (self.sample_min(), self.sample_max()), "sampled"

    def pieces(self) -> List[np.ndarray]:
        """Samples of each smooth piece, right limits substituted at the left ends."""
        cuts = [0] + sorted(self.jumps) + [self.n]
        pieces = []
        for start, end in zip(cuts[:-1], cuts[1:]):
            piece = self.values[start:end + 1].copy()
            if start in self.jumps:
                piece[0] = self.jumps[start]
            pieces.append(piece)
        return pieces

    def same_grid(self, other: "FunctionSample") -> bool:
        return self.a == other.a and self.b == other.b and self.n == other.n

    def right_limit(self, i: int) -> float:
        return self.jumps.get(i, float(self.values[i]))

    def split_at(self, nodes) -> "FunctionSample":
        """Same function with extra piece boundaries at `nodes` (continuous there)."""
        jumps = dict(self.jumps)
        for i in nodes:
            jumps.setdefault(int(i), float(self.values[i]))
        return FunctionSample(self.a, self.b, self.values, self.bounds, jumps)

    def product(self, other: "FunctionSample") -> "FunctionSample":
        if not self.same_grid(other):
            raise DomainError("samples live on different grids")
        nodes = set(self.jumps) | set(other.jumps)
        jumps = {i: self.right_limit(i) * other.right_limit(i) for i in nodes}
        return FunctionSample(self.a, self.b, self.values * other.values, None, jumps)

    def affine(self, alpha: float, c: float = 0.0) -> "FunctionSample":
        """alpha * f + c, carrying declared bounds along."""
        bounds = None
        if self.bounds is not None:
            ends = sorted((alpha * self.bounds[0] + c, alpha * self.bounds[1] + c))
            bounds = (ends[0], ends[1])
        jumps = {i: alpha * v + c for i, v in self.jumps.items()}
        return FunctionSample(self.a, self.b, alpha * self.values + c, bounds, jumps)

    def to_dict(self) -> Dict:
        doc = {"a": self.a, "b": self.b, "values": self.values.tolist()}
        if self.bounds is not None:
            doc["bounds"] = list(self.bounds)
        if self.jumps:
            doc["jumps"] = {str(i): v for i, v in sorted(self.jumps.items())}
        return doc


@dataclass(frozen=True)
class MeanEstimate:
    value: float
    rules: Tuple[str, ...]
    n: int


def estimate_mean(f: FunctionSample) -> MeanEstimate:
    """I(f) = (1/(b-a)) * integral of f, piecewise Simpson with trapezoid fallback."""
    total = 0.0
    rules = []
    for piece in f.pieces():
        intervals = piece.size - 1
        if intervals >= 2 and intervals % 2 == 0:
            total += float(simpson(piece, dx=f.step))
            rules.append("simpson")
        else:
            total += float(trapezoid(piece, dx=f.step))
            rules.append("trapezoid")
    if "trapezoid" in rules:
        logger.debug(f"trapezoid fallback on {rules.count('trapezoid')} piece(s) with an odd interval count")
    return MeanEstimate(total / (f.b - f.a), tuple(rules), f.n)


def integral_mean(f: FunctionSample) -> float:
    return estimate_mean(f).value


@dataclass(frozen=True)
class GrussReport:
    lhs: float
    rhs: float
    slack: float
    holds: bool
    bounds_f: Tuple[float, float]
    bounds_g: Tuple[float, float]
    bounds_source: Dict[str, str]
    rules: Tuple[str, ...]
    n: int
    tolerance: float


def gruss_check(f: FunctionSample, g: FunctionSample, tolerance: float = DEFAULT_TOLERANCE) -> GrussReport:
    """|I(fg) - I(f)I(g)| <= (M_f - m_f)(M_g - m_g)/4, reported with its slack."""
    if not f.same_grid(g):
        raise DomainError("gruss_check needs samples on the same grid")
    (mf, Mf), source_f = f.effective_bounds()
    (mg, Mg), source_g = g.effective_bounds()
    # I(f), I(g) and I(fg) integrate over the same pieces
    nodes = set(f.jumps) | set(g.jumps)
    f, g = f.split_at(nodes), g.split_at(nodes)
    fg = estimate_mean(f.product(g))
    mean_f, mean_g = estimate_mean(f), estimate_mean(g)
    lhs = abs(fg.value - mean_f.value * mean_g.value)
    rhs = 0.25 * (Mf - mf) * (Mg - mg)
    slack = rhs - lhs
    return GrussReport(
        lhs=lhs,
        rhs=rhs,
        slack=slack,
        holds=slack >= -tolerance,
        bounds_f=(mf, Mf),
        bounds_g=(mg, Mg),
        bounds_source={"f": source_f, "g": source_g},
        rules=fg.rules,
        n=f.n,
        tolerance=tolerance,
    )


def _clamped(c: np.ndarray) -> Tuple[np.ndarray, int]:
    clamps = int(np.count_nonzero(np.abs(c) > 1.0))
    return np.clip(c, -1.0, 1.0), clamps


def _cosines(u: np.ndarray, v: np.ndarray) -> Tuple[np.ndarray, int]:
    """Row-wise cosines of two (m, d) arrays, clamped to [-1, 1]."""
    dots = np.einsum("ij,ij->i", u, v)
    return _clamped(dots / (np.linalg.norm(u, axis=1) * np.linalg.norm(v, axis=1)))


def cosine_functional(u: Sequence[float], v: Sequence[float]) -> float:
    """T(u,v) = <u,v> / (|u| |v|), clamped to [-1, 1]."""
    u, v = np.asarray(u, dtype=float), np.asarray(v, dtype=float)
    nu, nv = np.linalg.norm(u), np.linalg.norm(v)
    if nu == 0.0 or nv == 0.0:
        raise DomainError("cosine of a zero vector")
    value = float(np.dot(u, v) / (nu * nv))
    if abs(value) > 1.0:
        logger.debug(f"cosine {value!r} clamped to [-1, 1]")
        value = max(-1.0, min(1.0, value))
    return value


def cosine_kernel(vectors: Sequence[Sequence[float]], labels: Sequence[str] | None = None) -> Kernel:
    """Kernel of pairwise cosines of nonzero vectors."""
    points = PointSet(tuple(labels)) if labels is not None else PointSet.of_size(len(vectors), prefix="v")
    return Kernel.from_function(points, lambda f, g: cosine_functional(vectors[points.index(f)], vectors[points.index(g)]))


@dataclass(frozen=True, eq=False)
class VectorTriple:
    f: np.ndarray
    g: np.ndarray
    h: np.ndarray

    def __post_init__(self):
        arrays = [np.asarray(x, dtype=float).reshape(-1) for x in (self.f, self.g, self.h)]
        if len({a.size for a in arrays}) != 1 or arrays[0].size < 1:
            raise DomainError("vector triple needs three vectors of one dimension >= 1")
        if any(np.linalg.norm(a) == 0.0 for a in arrays):
            raise DomainError("vector triple members must be nonzero")
        for name, a in zip("fgh", arrays):
            object.__setattr__(self, name, a)


def gruss_expression(t: VectorTriple, normalize_g: bool = False) -> float:
    """
    |<f,h> - <f,g><g,h>| when normalize_g (which requires |g| = 1), otherwise the
    scaled form |<f,h> - <f,g><g,h>/|g|^2|.
    """
    fh, fg, gh = float(t.f @ t.h), float(t.f @ t.g), float(t.g @ t.h)
    norm_sq = float(t.g @ t.g)
    if normalize_g:
        if abs(np.sqrt(norm_sq) - 1.0) > 1e-9:
            raise DomainError(f"normalize_g requires |g| = 1, got {np.sqrt(norm_sq)!r}")
        return abs(fh - fg * gh)
    return abs(fh - fg * gh / norm_sq)


@dataclass(frozen=True)
class RichardReport:
    dim: int
    trials: int
    seed: int
    max_defect: float
    argmax_trial: int
    attaining_triple: Tuple[List[float], List[float], List[float]]
    max_excess: float
    bound_holds: bool
    clamp_events: int
    planted_defect: float
    planted_bound: float
    tolerance: float

    @property
    def holds(self) -> bool:
        return self.bound_holds and self.max_defect <= 1.0 + self.tolerance


def _triple_stats(V: np.ndarray) -> Tuple[np.ndarray, np.ndarray, int]:
    """Defect |T(f,h) - T(f,g)T(g,h)| and excess over sin(fg) sin(gh) for stacked (m, 3, d) triples."""
    f, g, h = V[:, 0], V[:, 1], V[:, 2]
    c_fg, k1 = _cosines(f, g)
    c_gh, k2 = _cosines(g, h)
    c_fh, k3 = _cosines(f, h)
    defect = np.abs(c_fh - c_fg * c_gh)
    sines = np.sqrt(1.0 - c_fg ** 2) * np.sqrt(1.0 - c_gh ** 2)
    return defect, defect - sines, k1 + k2 + k3


def _richard_chunk(job: Tuple[int, int, int, np.random.SeedSequence]) -> Tuple:
    offset, size, dim, seed_seq = job
    rng = np.random.default_rng(seed_seq)
    V = rng.standard_normal((size, 3, dim))
    while True:
        small = np.linalg.norm(V, axis=2).min(axis=1) < MIN_NORM
        if not np.any(small):
            break
        V[small] = rng.standard_normal((int(small.sum()), 3, dim))
    defect, excess, clamps = _triple_stats(V)
    i = int(np.argmax(defect))
    return float(defect[i]), offset + i, V[i].tolist(), float(excess.max()), clamps


def planted_triple(dim: int) -> np.ndarray:
    """e1, e1 + e2, e2: the cosine defect there equals sin * sin = 1/2."""
    V = np.zeros((1, 3, dim))
    V[0, 0, 0] = 1.0
    V[0, 1, :2] = 1.0
    V[0, 2, 1] = 1.0
    return V


def richard_scan(dim: int, trials: int, seed: int, tolerance: float = DEFAULT_TOLERANCE,
                 n_jobs: int = 1, progress: bool = False) -> RichardReport:
    """
    Sample `trials` triples of standard normal vectors in R^dim and measure the
    cosine Sincov defect and its excess over sin(theta_fg) sin(theta_gh).
    Trials are cut into fixed chunks with spawned seed substreams, so the result
    depends on `seed` only, not on `n_jobs`.
    """
    if dim < 2 or trials < 1:
        raise DomainError(f"richard_scan needs dim >= 2 and trials >= 1, got dim={dim}, trials={trials}")
    planted = planted_triple(dim)
    planted_defect, planted_excess, planted_clamps = _triple_stats(planted)

    sizes = [min(RICHARD_CHUNK, trials - start) for start in range(0, trials, RICHARD_CHUNK)]
    children = np.random.SeedSequence(seed).spawn(len(sizes))
    jobs = [(i * RICHARD_CHUNK, size, dim, child) for i, (size, child) in enumerate(zip(sizes, children))]
    results = parallel_computation(_richard_chunk, tqdm(jobs, desc="richard", disable=not progress), n_jobs=n_jobs)

    best, best_trial, best_triple = float(planted_defect[0]), -1, planted[0].tolist()
    max_excess = float(planted_excess[0])
    clamps = planted_clamps
    for defect, trial, triple, excess, chunk_clamps in results:
        if defect > best:
            best, best_trial, best_triple = defect, trial, triple
        max_excess = max(max_excess, excess)
        clamps += chunk_clamps
    logger.info(f"richard scan dim={dim} trials={trials}: max defect {best:.6f}, max excess {max_excess:.3e}")
    return RichardReport(
        dim=dim,
        trials=trials,
        seed=seed,
        max_defect=best,
        argmax_trial=best_trial,
        attaining_triple=tuple(best_triple),
        max_excess=max_excess,
        bound_holds=max_excess <= tolerance,
        clamp_events=clamps,
        planted_defect=float(planted_defect[0]),
        planted_bound=float(planted_defect[0] - planted_excess[0]),
        tolerance=tolerance,
    )
