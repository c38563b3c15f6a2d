"""Shared exception types.

Assumption tags refer to the model assumptions documented in the
README: A1 priors form a polytope of probability vectors, A2 utility
regularity and Inada conditions, A3 existence of an equivalent
martingale measure with finite divergence, A4 integrability (automatic
on finite spaces).
"""

from __future__ import annotations

__all__ = ["AssumptionError", "SolverError"]


class AssumptionError(ValueError):
    """A documented model assumption fails for the given inputs."""

    def __init__(self, assumption: str, message: str):
        self.assumption = assumption
        super().__init__(f"assumption {assumption} violated: {message}")


class SolverError(RuntimeError):
    """Internal solver failure that is not a model property."""
