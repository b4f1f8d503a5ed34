"""The delta-additive inequality

    |S(f,h) - S(f,g) - S(g,h)| <= G(f,g) + G(g,h) - G(f,h)      (add)

with its decomposition into two subadditive kernels, the converse composition,
least-cost synthesis of G by linear programming and the two-family
sup-representation of solutions.
"""
from __future__ import annotations

import itertools

from dataclasses import dataclass, field
from enum import Enum
from typing import Dict, List, Tuple

import numpy as np

# Internal libraries
from src.kernel_core import (
    DEFAULT_TOLERANCE,
    DefectKind,
    DefectReport,
    Kernel,
    defect_scan,
    ensure_shared_points,
)
from src.lp_solver import DenseSimplex, SimplexStatus
from src.subadditive import (
    PotentialFamily,
    canonical_potentials,
    membership_defect,
    sup_representation,
)
from utils.exceptions import DomainError, EmptyFamilyError, MaxRetriesExceeded, NegativeCycleError
from utils.logger import setup_logger

logger = setup_logger(__name__)

LP_SCALE_CAP = 20
CONSTRAINT_TOLERANCE = 1e-7
PRINTED_P3_NOTE = (
    "The printed assignment S = H1 + H2, G = H1 - H2 fails "
    "already for H1 = H2 = a metric; the composition implemented here is S = H1 - H2, "
    "G = H1 + H2, the inverse of the decomposition up to a factor 2."
)


class LPObjective(str, Enum):
    SUM = "sum"
    MAX = "max"


class LPStatus(str, Enum):
    OPTIMAL = "optimal"
    INFEASIBLE_GUARD = "infeasible-guard"
    NUMERICAL_FAILURE = "numerical-failure"


@dataclass
class LPOutcome:
    status: LPStatus
    objective: LPObjective
    g: Kernel | None = None
    value: float | None = None
    max_constraint_violation: float | None = None
    iterations: int = 0
    diagnostics: Dict = field(default_factory=dict)

    @property
    def holds(self) -> bool:
        return self.status is LPStatus.OPTIMAL

    def to_dict(self) -> Dict:
        return {
            "status": self.status.value,
            "objective": self.objective.value,
            "g": self.g.to_dict() if self.g is not None else None,
            "value": self.value,
            "max_constraint_violation": self.max_constraint_violation,
            "iterations": self.iterations,
            "diagnostics": self.diagnostics,
        }


def check_add(S: Kernel, G: Kernel, tolerance: float = DEFAULT_TOLERANCE) -> DefectReport:
    """Signed residual |S(f,h)-S(f,g)-S(g,h)| - (G(f,g)+G(g,h)-G(f,h)) over all triples."""
    return defect_scan(DefectKind.ADD, S, G, tolerance=tolerance)


@dataclass
class Decomposition:
    h1: Kernel
    h2: Kernel
    h1_triangle: DefectReport
    h2_triangle: DefectReport
    inverse_exact: bool
    warnings: List[str]

    @property
    def holds(self) -> bool:
        return self.h1_triangle.holds and self.h2_triangle.holds

    def to_dict(self) -> Dict:
        return {
            "h1": self.h1.to_dict(),
            "h2": self.h2.to_dict(),
            "h1_triangle": self.h1_triangle.to_dict(),
            "h2_triangle": self.h2_triangle.to_dict(),
            "inverse_exact": self.inverse_exact,
            "warnings": self.warnings,
        }


def decompose_p2(S: Kernel, G: Kernel, tolerance: float = DEFAULT_TOLERANCE) -> Decomposition:
    """
    H1 = G + S and H2 = G - S. When (S, G) solves (add) both are subadditive and
    S = H1/2 - H2/2, G = H1/2 + H2/2.
    """
    ensure_shared_points(S, G)
    warnings = []
    hypothesis = check_add(S, G, tolerance)
    if not hypothesis.holds:
        msg = f"(S, G) violates the delta-additive inequality: residual {hypothesis.max_defect!r} at {hypothesis.argmax}"
        logger.warning(msg)
        warnings.append(msg)

    h1, h2 = G + S, G - S
    inverse_exact = (0.5 * h1 - 0.5 * h2).same_as(S) and (0.5 * h1 + 0.5 * h2).same_as(G)
    return Decomposition(
        h1=h1,
        h2=h2,
        h1_triangle=defect_scan(DefectKind.TRIANGLE, h1, tolerance=tolerance),
        h2_triangle=defect_scan(DefectKind.TRIANGLE, h2, tolerance=tolerance),
        inverse_exact=inverse_exact,
        warnings=warnings,
    )


@dataclass
class Composition:
    s: Kernel
    g: Kernel
    check: DefectReport
    note: str
    warnings: List[str]

    @property
    def holds(self) -> bool:
        return self.check.holds

    def to_dict(self) -> Dict:
        return {
            "s": self.s.to_dict(),
            "g": self.g.to_dict(),
            "check": self.check.to_dict(),
            "note": self.note,
            "warnings": self.warnings,
        }


def _subadditive_warnings(tolerance: float, **kernels: Kernel) -> List[str]:
    warnings = []
    for name, kernel in kernels.items():
        report = defect_scan(DefectKind.TRIANGLE, kernel, tolerance=tolerance)
        if not report.holds:
            msg = f"{name} is not subadditive: defect {report.max_defect!r} at {report.argmax}"
            logger.warning(msg)
            warnings.append(msg)
    return warnings


def compose_p3(H1: Kernel, H2: Kernel, tolerance: float = DEFAULT_TOLERANCE) -> Composition:
    """S = H1 - H2, G = H1 + H2; solves (add) whenever H1 and H2 are subadditive."""
    ensure_shared_points(H1, H2)
    warnings = _subadditive_warnings(tolerance, H1=H1, H2=H2)
    s, g = H1 - H2, H1 + H2
    return Composition(s, g, check_add(s, g, tolerance), PRINTED_P3_NOTE, warnings)


def compose_p3_as_printed(H1: Kernel, H2: Kernel, tolerance: float = DEFAULT_TOLERANCE) -> Composition:
    """The printed assignment S = H1 + H2, G = H1 - H2, kept to exhibit its failure."""
    ensure_shared_points(H1, H2)
    warnings = _subadditive_warnings(tolerance, H1=H1, H2=H2)
    s, g = H1 + H2, H1 - H2
    return Composition(s, g, check_add(s, g, tolerance), PRINTED_P3_NOTE, warnings)


def additive_defects(S: Kernel) -> np.ndarray:
    """D(f,g,h) = |S(f,h) - S(f,g) - S(g,h)| flattened in (f, g, h) order."""
    s = S.values
    return np.abs(s[:, None, :] - s[:, :, None] - s[None, :, :]).reshape(-1)


def triple_constraint_matrix(n: int) -> np.ndarray:
    """Row (f,g,h) holds the coefficients of G(f,g) + G(g,h) - G(f,h) on the flattened G."""
    A = np.zeros((n ** 3, n * n))
    for row, (i, j, k) in enumerate(itertools.product(range(n), repeat=3)):
        A[row, i * n + j] += 1.0
        A[row, j * n + k] += 1.0
        A[row, i * n + k] -= 1.0
    return A


def _parametrization(n: int, symmetric: bool, zero_diagonal: bool) -> np.ndarray:
    """Matrix P with G.flat = P @ z for the free entries z allowed by the flags."""
    columns = []
    for i in range(n):
        for j in range(i if symmetric else 0, n):
            if zero_diagonal and i == j:
                continue
            column = np.zeros(n * n)
            column[i * n + j] = 1.0
            if symmetric:
                column[j * n + i] = 1.0
            columns.append(column)
    return np.stack(columns, axis=1) if columns else np.zeros((n * n, 0))


def synthesize_min_g(
    S: Kernel,
    objective: LPObjective | str = LPObjective.SUM,
    symmetric: bool = False,
    zero_diagonal: bool = False,
) -> LPOutcome:
    """
    Cheapest G for which (S, G) solves (add): minimise sum(G) or max(G) subject to
    G(f,g) + G(g,h) - G(f,h) >= D(f,g,h) on every triple.

    The primal has free variables, so it is solved through its standard-form dual
    (one nonnegative column per constraint, one equality row per variable); G is
    read off the simplex multipliers of the optimal dual basis.
    """
    objective = LPObjective(objective)
    n = S.n
    if n > LP_SCALE_CAP:
        raise DomainError(f"G synthesis is capped at n <= {LP_SCALE_CAP}, got n = {n}")

    A_full = triple_constraint_matrix(n)
    d = additive_defects(S)
    P = _parametrization(n, symmetric, zero_diagonal)
    p = P.shape[1]

    # primal: minimise cost @ x subject to A @ x >= rhs, x free
    A = A_full @ P
    rhs = d
    if objective is LPObjective.SUM:
        cost = P.sum(axis=0)
    else:
        # x = (z, t) with t >= every entry of G
        A = np.vstack([
            np.hstack([A, np.zeros((A.shape[0], 1))]),
            np.hstack([-P, np.ones((n * n, 1))]),
        ])
        rhs = np.concatenate([d, np.zeros(n * n)])
        cost = np.concatenate([np.zeros(p), [1.0]])

    dual_value = 0.0
    if A.shape[1] == 0:
        x = np.zeros(0)
        iterations = 0
    else:
        solver = DenseSimplex(A.T, cost, -rhs)
        try:
            result = solver.solve()
        except MaxRetriesExceeded as e:
            logger.error(f"G synthesis stalled: {e}")
            return LPOutcome(LPStatus.NUMERICAL_FAILURE, objective, iterations=solver.iterations,
                             diagnostics={"error": str(e), "rows": A.shape[1], "columns": A.shape[0]})
        if result.status is SimplexStatus.UNBOUNDED:
            # dual unbounded means an infeasible primal, which the feasibility argument rules out
            logger.error("G synthesis reported an infeasible constraint set")
            return LPOutcome(LPStatus.INFEASIBLE_GUARD, objective, iterations=result.iterations)
        if result.status is SimplexStatus.INFEASIBLE:
            logger.error("G synthesis reported an unbounded objective")
            return LPOutcome(LPStatus.NUMERICAL_FAILURE, objective, iterations=result.iterations,
                             diagnostics={"error": "dual infeasible", "pivot_tol": result.pivot_tol})
        x = -result.multipliers
        iterations = result.iterations
        dual_value = -result.objective

    g_flat = P @ x[:p]
    g = Kernel(S.points, g_flat.reshape(n, n))
    violation = float(max(0.0, np.max(d - A_full @ g_flat)))
    value = float(g.values.sum()) if objective is LPObjective.SUM else float(g.values.max())
    status = LPStatus.OPTIMAL
    if violation > CONSTRAINT_TOLERANCE:
        logger.error(f"G synthesis certificate violates a constraint by {violation:.3e}")
        status = LPStatus.NUMERICAL_FAILURE
    return LPOutcome(status, objective, g, value, violation, iterations,
                     diagnostics={"symmetric": symmetric, "zero_diagonal": zero_diagonal,
                                  "variables": p, "dual_value": dual_value})


@dataclass
class TwoFamilyConstruction:
    s: Kernel
    g: Kernel
    check: DefectReport
    s_zero_diagonal: bool
    g_zero_diagonal: bool
    family1_membership: float
    family2_membership: float
    tolerance: float

    @property
    def holds(self) -> bool:
        return (
            self.check.holds
            and self.s_zero_diagonal
            and self.g_zero_diagonal
            and self.family1_membership <= self.tolerance
            and self.family2_membership <= self.tolerance
        )

    def to_dict(self) -> Dict:
        return {
            "s": self.s.to_dict(),
            "g": self.g.to_dict(),
            "check": self.check.to_dict(),
            "s_zero_diagonal": self.s_zero_diagonal,
            "g_zero_diagonal": self.g_zero_diagonal,
            "family1_membership": self.family1_membership,
            "family2_membership": self.family2_membership,
            "tolerance": self.tolerance,
            "holds": self.holds,
        }


def build_ch(F1: PotentialFamily, F2: PotentialFamily, tolerance: float = DEFAULT_TOLERANCE) -> TwoFamilyConstruction:
    """
    S = sup1 - sup2 and G = sup1 + sup2 with sup_i(f,g) = max over F_i of phi(f) - phi(g).
    Checks (add), zero diagonals, F1 inside H((G+S)/2) and F2 inside H((G-S)/2).
    """
    if len(F1) == 0 or len(F2) == 0:
        raise EmptyFamilyError("both families need at least one potential")
    ensure_shared_points(F1, F2)
    sup1, sup2 = sup_representation(F1), sup_representation(F2)
    s, g = sup1 - sup2, sup1 + sup2
    return TwoFamilyConstruction(
        s=s,
        g=g,
        check=check_add(s, g, tolerance),
        s_zero_diagonal=bool(np.all(np.diag(s.values) == 0.0)),
        g_zero_diagonal=bool(np.all(np.diag(g.values) == 0.0)),
        family1_membership=membership_defect(F1, 0.5 * (g + s)),
        family2_membership=membership_defect(F2, 0.5 * (g - s)),
        tolerance=tolerance,
    )


@dataclass
class TwoFamilyRepresentation:
    hypothesis: DefectReport
    g_zero_diagonal: bool
    family1: PotentialFamily | None
    family2: PotentialFamily | None
    s_error: float | None
    g_error: float | None
    tolerance: float
    negative_cycle: List[str] | None = None

    @property
    def holds(self) -> bool:
        return (
            self.s_error is not None
            and self.s_error <= self.tolerance
            and self.g_error <= self.tolerance
        )

    def to_dict(self) -> Dict:
        return {
            "hypothesis": self.hypothesis.to_dict(),
            "g_zero_diagonal": self.g_zero_diagonal,
            "family1": self.family1.to_dict() if self.family1 is not None else None,
            "family2": self.family2.to_dict() if self.family2 is not None else None,
            "s_error": self.s_error,
            "g_error": self.g_error,
            "tolerance": self.tolerance,
            "negative_cycle": self.negative_cycle,
            "holds": self.holds,
        }


def represent_ch(S: Kernel, G: Kernel, tolerance: float = DEFAULT_TOLERANCE) -> TwoFamilyRepresentation:
    """
    Write a solution of (add) with G = 0 on the diagonal as S = sup1 - sup2, G = sup1 + sup2,
    the sups taken over the canonical potentials of (G+S)/2 and (G-S)/2.
    """
    ensure_shared_points(S, G)
    hypothesis = check_add(S, G, tolerance)
    g_zero_diagonal = bool(np.all(np.abs(np.diag(G.values)) <= tolerance))
    if not (hypothesis.holds and g_zero_diagonal):
        logger.warning("two-family representation requested outside its hypotheses")
    try:
        family1 = canonical_potentials(0.5 * (G + S))
        family2 = canonical_potentials(0.5 * (G - S))
    except NegativeCycleError as e:
        return TwoFamilyRepresentation(hypothesis, g_zero_diagonal, None, None, None, None, tolerance, list(e.cycle))
    sup1, sup2 = sup_representation(family1), sup_representation(family2)
    return TwoFamilyRepresentation(
        hypothesis=hypothesis,
        g_zero_diagonal=g_zero_diagonal,
        family1=family1,
        family2=family2,
        s_error=(sup1 - sup2).max_abs_difference(S),
        g_error=(sup1 + sup2).max_abs_difference(G),
        tolerance=tolerance,
    )
