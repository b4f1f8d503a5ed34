"""Custom exceptions for the project.

Each exception carries the exit code the command-line frontend reports for it:
0 holds / succeeded, 1 inequality violated, 2 structural infeasibility,
3 I/O or argument error.
"""
from __future__ import annotations

from typing import Sequence

EXIT_OK = 0
EXIT_VIOLATED = 1
EXIT_INFEASIBLE = 2
EXIT_USAGE = 3


class ToolkitError(Exception):
    """Root of every error raised by the toolkit."""
    exit_code = EXIT_USAGE

    def details(self) -> dict:
        return {}


class KernelFormatError(ToolkitError):
    """Raised when a kernel, potential or sample file is malformed."""

    def __init__(self, location: str, message: str):
        super().__init__(f"{location}: {message}")
        self.location = location
        self.message = message

    def details(self) -> dict:
        return {"location": self.location, "message": self.message}


class PointSetMismatch(ToolkitError):
    """Raised when kernels or potentials over different point sets are combined."""
    pass


class DomainError(ToolkitError):
    """Raised when an argument lies outside the domain of an operation."""
    pass


class EmptyFamilyError(ToolkitError):
    """Raised when a potential family has no members."""
    pass


class NotSincovError(ToolkitError):
    """Raised when a kernel does not solve the Sincov equation within tolerance."""
    exit_code = EXIT_VIOLATED

    def __init__(self, witness: Sequence[str], defect: float, tolerance: float):
        super().__init__(
            f"kernel is not a Sincov solution: defect {defect!r} > {tolerance!r} at {tuple(witness)}"
        )
        self.witness = tuple(witness)
        self.defect = defect
        self.tolerance = tolerance

    def details(self) -> dict:
        return {"witness": list(self.witness), "defect": self.defect, "tolerance": self.tolerance}


class NegativeCycleError(ToolkitError):
    """Raised when a kernel has a cycle of negative total weight, so no potential fits below it."""
    exit_code = EXIT_INFEASIBLE

    def __init__(self, cycle: Sequence[str], weight: float):
        path = " -> ".join(list(cycle) + [cycle[0]])
        super().__init__(f"negative cycle {path} with weight {weight!r}")
        self.cycle = tuple(cycle)
        self.weight = weight

    def details(self) -> dict:
        return {"cycle": list(self.cycle), "weight": self.weight}


class VanishingFactorError(ToolkitError):
    """Raised when a Sincov factorization would need a zero factor."""
    exit_code = EXIT_INFEASIBLE

    def __init__(self, label: str):
        super().__init__(f"vanishing factor at {label!r}")
        self.label = label

    def details(self) -> dict:
        return {"label": self.label}


class MaxRetriesExceeded(ToolkitError):
    """Raised when a retry loop exceeded the allowed number of attempts."""
    pass
