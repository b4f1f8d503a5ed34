"""The delta-multiplicative inequality

    |T(f,h) - T(f,g)T(g,h)| <= F(f,g)F(g,h) - F(f,h)      (main)

and the inequalities it implies for positive F:

    F(f,h) <= F(f,g)F(g,h)                                  (F)
    F(f,g)F(g,h) - F(f,h) <= Gamma(f,g)F(f,h)               (gamma)
    |T(f,h)T(h,k) - T(f,g)T(g,k)| <= [Gamma(f,g) + Gamma(f,h)]F(f,k)

with Gamma(f,g) = F(f,g)F(g,f) - 1. T may be complex, given as a pair of
real kernels; only moduli enter the inequalities.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Dict, List, Tuple

import numpy as np

# Internal libraries
from src.kernel_core import (
    DEFAULT_TOLERANCE,
    DefectKind,
    DefectReport,
    Kernel,
    complex_values,
    defect_scan,
    ensure_shared_points,
)
from utils.exceptions import DomainError
from utils.logger import setup_logger

logger = setup_logger(__name__)

POSITIVITY_FLOOR = 1e-12


def check_main(T: Kernel, F: Kernel, tolerance: float = DEFAULT_TOLERANCE,
               imaginary: Kernel | None = None) -> DefectReport:
    """Signed residual |T(f,h)-T(f,g)T(g,h)| - (F(f,g)F(g,h)-F(f,h)) over all triples."""
    return defect_scan(DefectKind.MAIN, T, F, tolerance=tolerance, imaginary=imaginary)


def _require_positive(F: Kernel) -> None:
    if np.min(F.values) <= POSITIVITY_FLOOR:
        i, j = np.unravel_index(int(np.argmin(F.values)), F.values.shape)
        raise DomainError(
            f"F must be positive: F({F.points.labels[i]},{F.points.labels[j]}) = {F.values[i, j]!r}"
        )


def gamma(F: Kernel) -> Kernel:
    """Gamma(f,g) = F(f,g)F(g,f) - 1; symmetric by construction."""
    _require_positive(F)
    return Kernel(F.points, F.values * F.values.T - 1.0)


@dataclass
class P1Composition:
    h: Kernel
    submultiplicative: DefectReport
    cross_terms_ok: bool
    warnings: List[str]

    @property
    def holds(self) -> bool:
        return self.submultiplicative.holds

    def to_dict(self) -> Dict:
        return {
            "h": self.h.to_dict(),
            "submultiplicative": self.submultiplicative.to_dict(),
            "cross_terms_ok": self.cross_terms_ok,
            "warnings": self.warnings,
        }


def compose_p1(T: Kernel, F: Kernel, tolerance: float = DEFAULT_TOLERANCE) -> P1Composition:
    """
    H = T + F. For nonnegative T, F solving (main), H is submultiplicative because
    H(f,g)H(g,h) - H(f,h) >= T(f,g)F(g,h) + F(f,g)T(g,h) >= 0.
    """
    ensure_shared_points(T, F)
    warnings = []
    if np.min(T.values) < 0.0:
        warnings.append("T has negative entries")
    if np.min(F.values) < 0.0:
        warnings.append("F has negative entries")
    hypothesis = check_main(T, F, tolerance)
    if not hypothesis.holds:
        warnings.append(f"(T, F) violates the delta-multiplicative inequality at {hypothesis.argmax}")
    for msg in warnings:
        logger.warning(msg)

    t, f = T.values, F.values
    cross = t[:, :, None] * f[None, :, :] + f[:, :, None] * t[None, :, :]
    h = T + F
    return P1Composition(
        h=h,
        submultiplicative=defect_scan(DefectKind.SUBMULTIPLICATIVE, h, tolerance=tolerance),
        cross_terms_ok=bool(np.all(cross >= 0.0)),
        warnings=warnings,
    )


@dataclass
class ZeroPropagationReport:
    has_zero: bool
    zero_entry: Tuple[str, str] | None
    max_f: float
    derived_bound: float | None
    implication_holds: bool
    submultiplicative: DefectReport
    witness: Tuple[str, str, str] | None
    tolerance: float

    @property
    def holds(self) -> bool:
        return self.implication_holds

    def to_dict(self) -> Dict:
        return {
            "has_zero": self.has_zero,
            "zero_entry": list(self.zero_entry) if self.zero_entry else None,
            "max_f": self.max_f,
            "derived_bound": self.derived_bound,
            "implication_holds": self.implication_holds,
            "submultiplicative": self.submultiplicative.to_dict(),
            "witness": list(self.witness) if self.witness else None,
            "tolerance": self.tolerance,
        }


def zero_propagation_check(F: Kernel, tolerance: float = DEFAULT_TOLERANCE) -> ZeroPropagationReport:
    """
    A nonnegative F satisfying (F) with a zero vanishes everywhere: with F(a,b) = 0,
    F(f,h) <= F(f,a)F(a,b)F(b,h). The check evaluates that chain bound at the smallest
    entry and, when F exceeds it, names a violated (F)-triple instead of passing.
    """
    if np.min(F.values) < 0.0:
        raise DomainError("zero propagation needs a nonnegative F")
    points = F.points
    scan = defect_scan(DefectKind.SUBMULTIPLICATIVE, F, tolerance=tolerance)
    f = F.values
    a, b = np.unravel_index(int(np.argmin(f)), f.shape)
    max_f = float(np.max(f))

    if f[a, b] > tolerance:
        return ZeroPropagationReport(False, None, max_f, None, True, scan, None, tolerance)

    # chain bound through the zero entry, allowing one tolerance per application of (F)
    chain = f[:, a][:, None] * f[a, b] * f[b, :][None, :]
    bound = chain + tolerance * (1.0 + f[:, a][:, None])
    excess = f - bound
    implication = bool(np.all(excess <= 0.0))
    witness = None
    if not implication:
        fi, hi = np.unravel_index(int(np.argmax(excess)), excess.shape)
        # one of the two applications of (F) in the chain must fail
        if f[fi, hi] > f[fi, a] * f[a, hi] + tolerance:
            witness = points.labels_at((fi, a, hi))
        else:
            witness = points.labels_at((a, b, hi))
        logger.warning(f"F has a zero at {points.labels_at((a, b))} but F{points.labels_at((fi, hi))} = {f[fi, hi]!r}")
    return ZeroPropagationReport(
        has_zero=True,
        zero_entry=points.labels_at((a, b)),
        max_f=max_f,
        derived_bound=float(np.max(bound)),
        implication_holds=implication,
        submultiplicative=scan,
        witness=witness,
        tolerance=tolerance,
    )


@dataclass
class ProbeReport:
    ratio_sup: np.ndarray
    gamma_range: Tuple[float, float]
    sincov_defect: float
    bound_F_ok: bool
    bound_gamma_ok: bool
    bound_1_ok: bool
    diagonal_ok: bool
    min_diagonal_F: float
    ratio_transport_ok: bool
    bound_final_ok: bool
    slacks: Dict[str, float]
    main: DefectReport
    tolerance: float

    @property
    def holds(self) -> bool:
        return self.bound_F_ok and self.bound_gamma_ok and self.bound_1_ok

    def to_dict(self) -> Dict:
        return {
            "ratio_sup": self.ratio_sup.tolist(),
            "gamma_range": {"min": self.gamma_range[0], "max": self.gamma_range[1]},
            "sincov_defect": self.sincov_defect,
            "bound_F_ok": self.bound_F_ok,
            "bound_gamma_ok": self.bound_gamma_ok,
            "bound_1_ok": self.bound_1_ok,
            "diagonal_ok": self.diagonal_ok,
            "min_diagonal_F": self.min_diagonal_F,
            "ratio_transport_ok": self.ratio_transport_ok,
            "bound_final_ok": self.bound_final_ok,
            "slacks": self.slacks,
            "main": self.main.to_dict(),
            "tolerance": self.tolerance,
        }


def _quadruple_excess(t: np.ndarray, f: np.ndarray, gam: np.ndarray) -> float:
    """max over (f,g,h,k) of |T(f,h)T(h,k) - T(f,g)T(g,k)| - [Gamma(f,g)+Gamma(f,h)]F(f,k)."""
    worst = -np.inf
    for i in range(t.shape[0]):
        # axes (g, h, k)
        lhs = np.abs(t[i, None, :, None] * t[None, :, :] - t[i, :, None, None] * t[:, None, :])
        rhs = (gam[i, :, None, None] + gam[i, None, :, None]) * f[i, None, None, :]
        worst = max(worst, float(np.max(lhs - rhs)))
    return worst


def theorem_probe(T: Kernel, F: Kernel, tolerance: float = DEFAULT_TOLERANCE,
                  imaginary: Kernel | None = None) -> ProbeReport:
    """
    Finite-domain statistics around the unboundedness theorem: the ratio map
    k -> |T(g,k)|/F(f,k), the Gamma range, the Sincov defect of T, and checks of
    every inequality that follows from (main). Derived inequalities are
    consequences of (main); a failure points at tolerance or input problems.
    """
    ensure_shared_points(T, F)
    _require_positive(F)
    main = check_main(T, F, tolerance, imaginary)
    if not main.holds:
        logger.warning(f"(main) fails at {main.argmax}; derived bounds need not hold")

    t = complex_values(T, imaginary)
    at = np.abs(t)
    f = F.values
    gam = gamma(F).values
    n = T.n

    # ratio_sup[f, g] = max_k |T(g,k)| / F(f,k)
    ratio_sup = np.max(at[None, :, :] / f[:, None, :], axis=2)

    excess_F = float(np.max(f[:, None, :] - f[:, :, None] * f[None, :, :]))
    excess_gamma = float(np.max((f[:, :, None] * f[None, :, :] - f[:, None, :]) - gam[:, :, None] * f[:, None, :]))
    excess_1 = _quadruple_excess(t, f, gam)

    diag_t, diag_f = np.diag(t), np.diag(f)
    excess_diag = float(np.max(np.abs(diag_t - diag_t ** 2) - (diag_f ** 2 - diag_f)))

    # ratio_sup(f,g) <= F(h,f) ratio_sup(h,g)  ->  axes (f, g, h)
    excess_transport = float(np.max(ratio_sup[:, :, None] - f.T[:, None, :] * ratio_sup.T[None, :, :]))

    sincov = np.abs(t[:, None, :] - t[:, :, None] * t[None, :, :])
    # last step of the proof: for every k with T(h,k) != 0,
    # |T(f,h)-T(f,g)T(g,h)| <= ([G(f,g)+G(f,h)]F(f,k) + |T(f,g)|G(g,h)F(g,k)) / |T(h,k)|
    final_excess = -np.inf
    for i in range(n):
        # axes (g, h, k)
        numerator = ((gam[i, :, None, None] + gam[i, None, :, None]) * f[i, None, None, :]
                     + at[i, :, None, None] * gam[:, :, None] * f[:, None, :])
        denominator = np.broadcast_to(at[None, :, :], numerator.shape)
        bound = np.full(numerator.shape, np.inf)
        np.divide(numerator, denominator, out=bound, where=denominator > 0.0)
        final_excess = max(final_excess, float(np.max(sincov[i] - bound.min(axis=2))))
    final_ok = final_excess <= tolerance

    report = ProbeReport(
        ratio_sup=ratio_sup,
        gamma_range=(float(gam.min()), float(gam.max())),
        sincov_defect=float(sincov.max()),
        bound_F_ok=excess_F <= tolerance,
        bound_gamma_ok=excess_gamma <= tolerance,
        bound_1_ok=excess_1 <= tolerance,
        diagonal_ok=excess_diag <= tolerance,
        min_diagonal_F=float(diag_f.min()),
        ratio_transport_ok=excess_transport <= tolerance,
        bound_final_ok=final_ok,
        slacks={
            "F": -excess_F,
            "gamma": -excess_gamma,
            "1": -excess_1,
            "diagonal": -excess_diag,
            "ratio_transport": -excess_transport,
            "final": -final_excess if np.isfinite(final_excess) else None,
        },
        main=main,
        tolerance=tolerance,
    )
    if main.holds and not report.holds:
        logger.warning("derived inequalities fail although (main) holds; tolerance too tight for the data")
    return report
