"""Triangle-inequality machinery on finite point sets.

For H: X x X -> R the potential family

    H(H) = {phi : phi(f) - phi(g) <= H(f,g) for all f, g}

is the feasible set of a difference-constraint system. By LP duality
sup{phi(f) - phi(g) : phi in H(H)} is the shortest-path closure of H, which
is how the sup-representation of a subadditive kernel is realised here.
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
    PointSet,
    Potential,
    defect_scan,
    ensure_shared_points,
)
from utils.exceptions import DomainError, EmptyFamilyError, NegativeCycleError
from utils.logger import setup_logger

logger = setup_logger(__name__)

NEGATIVE_CYCLE_THRESHOLD = 1e-12


@dataclass(frozen=True, eq=False)
class PotentialFamily:
    points: PointSet
    members: np.ndarray

    def __post_init__(self):
        members = np.array(self.members, dtype=float).reshape(-1, len(self.points))
        if not np.all(np.isfinite(members)):
            raise DomainError("potential family has non-finite values")
        members.setflags(write=False)
        object.__setattr__(self, "members", members)

    @classmethod
    def of(cls, *potentials: Potential) -> "PotentialFamily":
        if not potentials:
            raise EmptyFamilyError("a family needs at least one potential")
        points = ensure_shared_points(*potentials)
        return cls(points, np.stack([p.values for p in potentials]))

    def __len__(self) -> int:
        return self.members.shape[0]

    def __iter__(self):
        return (Potential(self.points, row) for row in self.members)

    def to_dict(self) -> Dict:
        return {"points": list(self.points.labels), "members": self.members.tolist()}


def coboundary_kernel(phi: Potential) -> Kernel:
    """S(f,g) = phi(f) - phi(g), an exact additive Sincov solution."""
    return Kernel(phi.points, phi.values[:, None] - phi.values[None, :])


def find_negative_cycle(H: Kernel, threshold: float = NEGATIVE_CYCLE_THRESHOLD) -> Tuple[List[int], float] | None:
    """
    Bellman-Ford from a virtual source joined to every point with weight 0.
    Returns (cycle indices, cycle weight) for a cycle of weight < -threshold, or None.
    Self-loops count, so a negative diagonal entry is a cycle of length 1.
    """
    w = H.values
    n = H.n
    dist = np.zeros(n)
    pred = np.full(n, -1)
    updated = -1
    for _ in range(n + 1):
        updated = -1
        for u in range(n):
            for v in range(n):
                if dist[u] + w[u, v] < dist[v] - threshold:
                    dist[v] = dist[u] + w[u, v]
                    pred[v] = u
                    updated = v
        if updated < 0:
            return None
    # walk back n steps to land on the cycle
    v = updated
    for _ in range(n):
        v = pred[v]
        if v < 0:
            return None
    cycle = [v]
    u = pred[v]
    while u != v:
        if u < 0 or len(cycle) > n:
            return None
        cycle.append(u)
        u = pred[u]
    cycle.reverse()
    weight = float(sum(w[cycle[i], cycle[(i + 1) % len(cycle)]] for i in range(len(cycle))))
    if weight >= -threshold:
        return None
    return cycle, weight


def triangle_closure(H: Kernel, threshold: float = NEGATIVE_CYCLE_THRESHOLD) -> Kernel:
    """
    Shortest-path closure H*(f,g) = min over paths f -> ... -> g of length >= 1
    of the summed H-weights, so H*(f,f) is the lightest cycle through f.
    Raises NegativeCycleError when some cycle weighs less than -threshold,
    in which case the potential family of H is empty.
    """
    dist = np.array(H.values, dtype=float)
    for k in range(H.n):
        np.minimum(dist, dist[:, k:k + 1] + dist[k:k + 1, :], out=dist)
    if np.any(np.diag(dist) < -threshold):
        found = find_negative_cycle(H, threshold)
        if found is None:
            # relaxation from the diagonal always exposes a cycle; report the self-loop
            i = int(np.argmin(np.diag(dist)))
            found = [i], float(dist[i, i])
        cycle, weight = found
        raise NegativeCycleError(H.points.labels_at(cycle), weight)
    return Kernel(H.points, dist)


def product_closure(F: Kernel, threshold: float = NEGATIVE_CYCLE_THRESHOLD) -> Kernel:
    """
    Min-product path closure F*(f,h) = inf over paths of length >= 1 of the product
    of F-weights; zero entries are absorbing. The multiplicative counterpart of
    triangle_closure for submultiplicative kernels.

    A cycle whose product is below 1 - threshold plays the part of a negative
    cycle: going round it drives every path through it to 0, and every pair can
    route through it, so the closure is then identically 0.
    """
    if np.any(F.values < 0.0):
        raise DomainError("product closure needs a nonnegative kernel")
    prod = np.array(F.values, dtype=float)
    for k in range(F.n):
        np.minimum(prod, prod[:, k:k + 1] * prod[k:k + 1, :], out=prod)
    diagonal = np.diag(prod)
    if np.any(diagonal < 1.0 - threshold):
        i = int(np.argmin(diagonal))
        logger.info(f"cycle through {F.points.labels[i]!r} has product {diagonal[i]!r} < 1; closure is 0")
        return Kernel.zeros(F.points)
    return Kernel(F.points, prod)


def canonical_potentials(H: Kernel) -> PotentialFamily:
    """The family {phi_g : g in X}, phi_g(x) = H*(x, g) read off the closure's columns."""
    closure = triangle_closure(H)
    return PotentialFamily(H.points, closure.values.T)


def sup_representation(family: PotentialFamily) -> Kernel:
    """K(f,g) = max over members phi of phi(f) - phi(g)."""
    if len(family) == 0:
        raise EmptyFamilyError("sup representation of an empty family")
    phi = family.members
    diffs = phi[:, :, None] - phi[:, None, :]
    return Kernel(family.points, np.max(diffs, axis=0))


def membership_defect(family: PotentialFamily, H: Kernel) -> float:
    """max over members and pairs of phi(f) - phi(g) - H(f,g); <= 0 iff family is inside H(H)."""
    ensure_shared_points(family, H)
    phi = family.members
    return float(np.max(phi[:, :, None] - phi[:, None, :] - H.values[None, :, :]))


@dataclass(frozen=True)
class CorollaryReport:
    triangle: DefectReport
    zero_diagonal: bool
    negative_cycle: List[str] | None
    hypotheses_hold: bool
    representation_matches: bool
    representation_error: float | None
    biconditional_holds: bool
    tolerance: float

    @property
    def holds(self) -> bool:
        return self.hypotheses_hold and self.representation_matches

    def to_dict(self) -> Dict:
        return {
            "triangle": self.triangle.to_dict(),
            "zero_diagonal": self.zero_diagonal,
            "negative_cycle": self.negative_cycle,
            "hypotheses_hold": self.hypotheses_hold,
            "representation_matches": self.representation_matches,
            "representation_error": self.representation_error,
            "biconditional_holds": self.biconditional_holds,
            "tolerance": self.tolerance,
            "diagonal_convention": "zero diagonal required; closure paths have length >= 1",
        }


def verify_corollary_ct(H: Kernel, tolerance: float = DEFAULT_TOLERANCE) -> CorollaryReport:
    """
    Check on a finite discrete space that H satisfies the triangle inequality with
    zero diagonal exactly when the sup over its canonical potentials gives H back.
    """
    triangle = defect_scan(DefectKind.TRIANGLE, H, tolerance=tolerance)
    zero_diagonal = bool(np.all(np.abs(np.diag(H.values)) <= tolerance))
    hypotheses = triangle.holds and zero_diagonal

    negative_cycle = None
    error = None
    try:
        represented = sup_representation(canonical_potentials(H))
        error = represented.max_abs_difference(H)
        matches = error <= tolerance
    except NegativeCycleError as e:
        negative_cycle = list(e.cycle)
        matches = False

    biconditional = hypotheses == matches
    if not biconditional:
        logger.warning(f"representation check: hypotheses {hypotheses} but representation match {matches}")
    return CorollaryReport(
        triangle=triangle,
        zero_diagonal=zero_diagonal,
        negative_cycle=negative_cycle,
        hypotheses_hold=hypotheses,
        representation_matches=matches,
        representation_error=error,
        biconditional_holds=biconditional,
        tolerance=tolerance,
    )
