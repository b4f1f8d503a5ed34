"""Sincov-equation machinery.

Multiplicative Sincov solutions T(f,h) = T(f,g)T(g,h) factor as
T(f,g) = Phi(f)/Phi(g) with Phi never vanishing. This module recovers Phi,
measures the least constant c with |T(f,h) - T(f,g)T(g,h)| <= c and maps c
to the constant F for which the delta-multiplicative inequality reduces to
that bound.
"""
from __future__ import annotations

import math

from dataclasses import dataclass
from typing import Dict

import numpy as np

# Internal libraries
from src.kernel_core import (
    DEFAULT_TOLERANCE,
    DefectKind,
    DefectReport,
    Kernel,
    Potential,
    defect_scan,
)
from utils.exceptions import DomainError, NotSincovError, VanishingFactorError
from utils.logger import setup_logger

logger = setup_logger(__name__)


@dataclass(frozen=True)
class Factorization:
    potential: Potential
    base: str
    base_diagonal: float
    base_diagonal_ok: bool
    sincov_defect: float
    error_bound: float
    max_error: float

    def to_dict(self) -> Dict:
        return {
            "potential": self.potential.to_dict(),
            "base": self.base,
            "base_diagonal": self.base_diagonal,
            "base_diagonal_ok": self.base_diagonal_ok,
            "sincov_defect": self.sincov_defect,
            "error_bound": self.error_bound,
            "max_error": self.max_error,
        }


def quotient_kernel(phi: Potential) -> Kernel:
    """K(f,g) = Phi(f)/Phi(g) for a never-vanishing Phi."""
    if np.any(phi.values == 0.0):
        label = phi.points.labels[int(np.argmax(phi.values == 0.0))]
        raise VanishingFactorError(label)
    return Kernel(phi.points, phi.values[:, None] / phi.values[None, :])


def gronau_factorize(T: Kernel, base: str | None = None, tolerance: float = DEFAULT_TOLERANCE) -> Factorization:
    """
    Recover Phi with T(f,g) = Phi(f)/Phi(g), gauge Phi(f) = T(f, base).
    Args:
        T: kernel expected to solve the Sincov equation within `tolerance`.
        base: base label; defaults to the first label.
        tolerance: absolute tolerance on the Sincov defect and on T(base, base) = 1.
    Returns:
        Factorization with the potential, the derived bound
        max|T(f,g) - Phi(f)/Phi(g)| <= defect / min|Phi| and the observed error.
    """
    base = T.points.labels[0] if base is None else base
    b = T.points.index(base)

    report = defect_scan(DefectKind.SINCOV, T, tolerance=tolerance)
    if not report.holds:
        raise NotSincovError(report.argmax, report.max_defect, tolerance)

    phi = T.values[:, b].copy()
    zeros = np.flatnonzero(phi == 0.0)
    if zeros.size:
        raise VanishingFactorError(T.points.labels[int(zeros[0])])

    base_diagonal = float(T.values[b, b])
    base_diagonal_ok = abs(base_diagonal - 1.0) <= tolerance
    if not base_diagonal_ok:
        logger.warning(f"T({base},{base}) = {base_diagonal!r} differs from 1 by more than {tolerance!r}")

    potential = Potential(T.points, phi)
    reconstruction = quotient_kernel(potential)
    return Factorization(
        potential=potential,
        base=base,
        base_diagonal=base_diagonal,
        base_diagonal_ok=base_diagonal_ok,
        sincov_defect=report.max_defect,
        error_bound=report.max_defect / float(np.min(np.abs(phi))),
        max_error=reconstruction.max_abs_difference(T),
    )


def pams_scan(T: Kernel, imaginary: Kernel | None = None) -> DefectReport:
    return defect_scan(DefectKind.SINCOV, T, tolerance=0.0, imaginary=imaginary)


def pams_constant(T: Kernel, imaginary: Kernel | None = None) -> float:
    """Least c >= 0 with |T(f,h) - T(f,g)T(g,h)| <= c on every triple."""
    return pams_scan(T, imaginary).max_defect


def constant_f_from_c(c: float) -> float:
    """lambda = (1 + sqrt(1 + 4c)) / 2, the root >= 1 of lambda**2 - lambda = c."""
    if not c >= 0.0:
        raise DomainError(f"c must be nonnegative, got {c!r}")
    return 0.5 * (1.0 + math.sqrt(1.0 + 4.0 * c))
