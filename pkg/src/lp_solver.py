"""Dense two-phase tableau simplex for standard-form linear programs.

    minimize c @ x  subject to  A @ x == b,  x >= 0

Entering and leaving variables follow Bland's rule, so the method terminates
on degenerate problems. Besides the primal solution the solver returns the
simplex multipliers of the optimal basis, which are the optimal dual values.
"""
from __future__ import annotations

from dataclasses import dataclass
from enum import Enum
from typing import List

import numpy as np

# Internal libraries
from utils.logger import setup_logger
from utils.retry import retry_on_exception


class SimplexStatus(str, Enum):
    OPTIMAL = "optimal"
    INFEASIBLE = "infeasible"
    UNBOUNDED = "unbounded"


class SingularBasis(ArithmeticError):
    """Raised when the final basis cannot be refactorized."""
    pass


class SimplexStall(ArithmeticError):
    """Raised when a phase exceeds its iteration budget."""
    pass


@dataclass
class SimplexResult:
    status: SimplexStatus
    x: np.ndarray | None
    multipliers: np.ndarray | None
    objective: float | None
    basis: List[int]
    iterations: int
    pivot_tol: float


class DenseSimplex:
    def __init__(self, A: np.ndarray, b: np.ndarray, c: np.ndarray, max_iterations: int | None = None):
        """
        Args:
            A: (m, N) equality constraint matrix.
            b: (m,) right-hand side.
            c: (N,) cost vector.
            max_iterations: pivot budget per phase; defaults to 50 * (m + N).
        """
        self.logger = setup_logger(__name__)
        self.A = np.asarray(A, dtype=float)
        self.b = np.asarray(b, dtype=float).reshape(-1)
        self.c = np.asarray(c, dtype=float).reshape(-1)
        self.m, self.N = self.A.shape
        self.max_iterations = max_iterations or 50 * (self.m + self.N)
        self.iterations = 0

    def _pivot(self, T: np.ndarray, basis: List[int], row: int, col: int) -> None:
        pivot_row = T[row] / T[row, col]
        T -= np.outer(T[:, col], pivot_row)
        T[row] = pivot_row
        T[:, col] = 0.0
        T[row, col] = 1.0
        basis[row] = col

    def _iterate(self, T: np.ndarray, basis: List[int], n_allowed: int, tol: float) -> SimplexStatus:
        m = self.m
        for _ in range(self.max_iterations):
            reduced = T[m, :n_allowed]
            entering = np.flatnonzero(reduced < -tol)
            if entering.size == 0:
                return SimplexStatus.OPTIMAL
            col = int(entering[0])
            column = T[:m, col]
            rows = np.flatnonzero(column > tol)
            if rows.size == 0:
                return SimplexStatus.UNBOUNDED
            ratios = T[rows, -1] / column[rows]
            best = ratios.min()
            tied = rows[ratios <= best + tol * max(1.0, abs(best))]
            row = int(min(tied, key=lambda r: basis[r]))
            self._pivot(T, basis, row, col)
            self.iterations += 1
        raise SimplexStall(f"no optimum after {self.max_iterations} pivots")

    @retry_on_exception(max_retries=3, backoff_factor=10.0, exceptions=(ArithmeticError,), relax="pivot_tol", initial=1e-11)
    def solve(self, pivot_tol: float = 1e-11) -> SimplexResult:
        m, N = self.m, self.N
        self.iterations = 0
        sign = np.where(self.b < 0, -1.0, 1.0)

        T = np.zeros((m + 1, N + m + 1))
        T[:m, :N] = sign[:, None] * self.A
        T[:m, N:N + m] = np.eye(m)
        T[:m, -1] = sign * self.b
        basis = list(range(N, N + m))

        # phase 1: minimise the sum of artificials
        T[m, :N] = -T[:m, :N].sum(axis=0)
        T[m, -1] = -T[:m, -1].sum()
        self._iterate(T, basis, N, pivot_tol)
        infeasibility = -T[m, -1]
        if infeasibility > 1e-9 * max(1.0, float(np.abs(self.b).max(initial=0.0))):
            self.logger.debug(f"Phase 1 ended with infeasibility {infeasibility:.3e}")
            return SimplexResult(SimplexStatus.INFEASIBLE, None, None, None, basis, self.iterations, pivot_tol)

        for row in range(m):
            if basis[row] >= N:
                candidates = np.flatnonzero(np.abs(T[row, :N]) > pivot_tol)
                # no candidate: the row is redundant and its artificial stays basic at zero
                if candidates.size:
                    self._pivot(T, basis, row, int(candidates[0]))

        # phase 2: original costs, artificials barred from entering
        cost = np.concatenate([self.c, np.zeros(m)])
        T[m, :] = 0.0
        T[m, :N] = self.c
        for row in range(m):
            T[m, :] -= cost[basis[row]] * T[row, :]
        status = self._iterate(T, basis, N, pivot_tol)
        if status is SimplexStatus.UNBOUNDED:
            return SimplexResult(status, None, None, None, basis, self.iterations, pivot_tol)

        # refactorize the optimal basis for accurate primal and dual values
        B = np.hstack([sign[:, None] * self.A, np.eye(m)])[:, basis]
        try:
            x_basic = np.linalg.solve(B, sign * self.b)
            multipliers = np.linalg.solve(B.T, cost[basis]) * sign
        except np.linalg.LinAlgError as e:
            raise SingularBasis(str(e)) from e

        x = np.zeros(N + m)
        x[basis] = x_basic
        x = x[:N]
        self.logger.debug(f"Simplex optimal after {self.iterations} pivots (pivot_tol={pivot_tol:.1e})")
        return SimplexResult(SimplexStatus.OPTIMAL, x, multipliers, float(self.c @ x), basis, self.iterations, pivot_tol)
