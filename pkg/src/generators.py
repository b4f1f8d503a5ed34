"""
Seeded random instances that solve their defining equation or inequality by
construction. Weights are quantised to multiples of DYADIC_QUANTUM, so sums
and differences of generated kernels are exact in binary floating point.
"""
from __future__ import annotations

from dataclasses import dataclass
from enum import Enum
from typing import Dict, Tuple

import numpy as np

# Internal libraries
from src.delta_additive import compose_p3
from src.delta_multiplicative import check_main
from src.kernel_core import DEFAULT_TOLERANCE, DefectKind, DefectReport, Kernel, PointSet, Potential, defect_scan
from src.sincov import quotient_kernel
from src.subadditive import coboundary_kernel, triangle_closure
from utils.exceptions import DomainError
from utils.logger import setup_logger

logger = setup_logger(__name__)

DYADIC_QUANTUM = 2.0 ** -12
MAX_HALVINGS = 60


class GeneratorKind(str, Enum):
    SINCOV = "sincov"
    COBOUNDARY = "coboundary"
    SUBADDITIVE = "subadditive"
    SUBMULTIPLICATIVE = "submultiplicative"
    ADD_PAIR = "add-pair"
    MAIN_PAIR = "main-pair"


OUTPUT_NAMES: Dict[GeneratorKind, Tuple[str, ...]] = {
    GeneratorKind.SINCOV: ("T",),
    GeneratorKind.COBOUNDARY: ("S",),
    GeneratorKind.SUBADDITIVE: ("H",),
    GeneratorKind.SUBMULTIPLICATIVE: ("F",),
    GeneratorKind.ADD_PAIR: ("S", "G"),
    GeneratorKind.MAIN_PAIR: ("T", "F"),
}

_DEFINING_CHECK = {
    GeneratorKind.SINCOV: DefectKind.SINCOV,
    GeneratorKind.COBOUNDARY: DefectKind.ADDITIVE,
    GeneratorKind.SUBADDITIVE: DefectKind.TRIANGLE,
    GeneratorKind.SUBMULTIPLICATIVE: DefectKind.SUBMULTIPLICATIVE,
    GeneratorKind.ADD_PAIR: DefectKind.ADD,
    GeneratorKind.MAIN_PAIR: DefectKind.MAIN,
}


@dataclass(frozen=True)
class GeneratorSpec:
    kind: GeneratorKind
    n: int
    seed: int
    scale: float = 1.0

    def __post_init__(self):
        object.__setattr__(self, "kind", GeneratorKind(self.kind))
        if self.n < 1:
            raise DomainError(f"generator needs n >= 1, got {self.n}")
        if not self.scale > 0.0:
            raise DomainError(f"generator scale must be positive, got {self.scale!r}")

    def to_dict(self) -> Dict:
        return {"kind": self.kind.value, "n": self.n, "seed": self.seed, "scale": self.scale}


def quantize(x: np.ndarray) -> np.ndarray:
    return np.round(np.asarray(x, dtype=float) / DYADIC_QUANTUM) * DYADIC_QUANTUM


def _positive_factor(rng: np.random.Generator, n: int) -> np.ndarray:
    # kept away from zero so quotients stay well scaled
    return quantize(rng.uniform(0.5, 2.0, n))


def _sincov(rng: np.random.Generator, points: PointSet, scale: float) -> Kernel:
    signs = rng.choice([-1.0, 1.0], size=len(points))
    return quotient_kernel(Potential(points, signs * scale * _positive_factor(rng, len(points))))


def _coboundary(rng: np.random.Generator, points: PointSet, scale: float) -> Kernel:
    return coboundary_kernel(Potential(points, quantize(scale * rng.uniform(-1.0, 1.0, len(points)))))


def _subadditive(rng: np.random.Generator, points: PointSet, scale: float) -> Kernel:
    n = len(points)
    weights = quantize(scale * rng.uniform(0.0, 1.0, (n, n)))
    np.fill_diagonal(weights, 0.0)
    return triangle_closure(Kernel(points, weights))


def _main_pair(rng: np.random.Generator, points: PointSet, scale: float) -> Tuple[Kernel, Kernel]:
    """
    F = exp(H + c) with H subadditive and c > 0 leaves slack F(f,g)F(g,h) - F(f,h)
    >= F(f,h)(e^c - 1) on every triple, which absorbs a perturbation of the
    positive Sincov kernel T0 = Phi(f)/Phi(g).
    """
    n = len(points)
    t0 = quotient_kernel(Potential(points, _positive_factor(rng, n)))
    offset = quantize(rng.uniform(0.125, 0.5))
    F = Kernel(points, np.exp(_subadditive(rng, points, scale).values + offset))
    delta = quantize(scale * rng.uniform(-1.0, 1.0, (n, n)))

    t = 1.0
    for _ in range(MAX_HALVINGS):
        T = Kernel(points, t0.values + t * delta)
        if np.min(T.values) >= 0.0 and check_main(T, F, tolerance=0.0).holds:
            return T, F
        t *= 0.5
    logger.warning("main-pair perturbation found no admissible step; returning the unperturbed Sincov kernel")
    return t0, F


def generate(spec: GeneratorSpec) -> Tuple[Kernel, ...]:
    """
    Build the kernels of `spec.kind`, deterministic in `spec.seed`.
    Returns:
        (T,) for sincov, (S,) for coboundary, (H,) for subadditive,
        (F,) for submultiplicative, (S, G) for add-pair and (T, F) for main-pair.
    """
    points = PointSet.of_size(spec.n)
    seed_seq = np.random.SeedSequence(spec.seed)
    rng = np.random.default_rng(seed_seq)
    kind = spec.kind
    if kind is GeneratorKind.SINCOV:
        return (_sincov(rng, points, spec.scale),)
    if kind is GeneratorKind.COBOUNDARY:
        return (_coboundary(rng, points, spec.scale),)
    if kind is GeneratorKind.SUBADDITIVE:
        return (_subadditive(rng, points, spec.scale),)
    if kind is GeneratorKind.SUBMULTIPLICATIVE:
        return (Kernel(points, np.exp(_subadditive(rng, points, spec.scale).values)),)
    if kind is GeneratorKind.ADD_PAIR:
        first, second = [np.random.default_rng(child) for child in seed_seq.spawn(2)]
        pair = compose_p3(_subadditive(first, points, spec.scale), _subadditive(second, points, spec.scale))
        return pair.s, pair.g
    return _main_pair(rng, points, spec.scale)


def certify(kind: GeneratorKind | str, kernels: Tuple[Kernel, ...], tolerance: float = DEFAULT_TOLERANCE) -> DefectReport:
    """Defining check of a generated instance."""
    return defect_scan(_DEFINING_CHECK[GeneratorKind(kind)], *kernels, tolerance=tolerance)
