"""Exceptions raised by the numerical core."""

from typing import Optional

import numpy as np


class DimensionMismatchError(ValueError):
    pass


class NonHermitianError(ValueError):
    pass


class UnsupportedDimensionError(ValueError):
    pass


class UnbalancedDimensionsError(ValueError):
    """Raised by criteria that need d_A == d_B."""


class DegenerateParametersError(ValueError):
    pass


class NotUnitaryError(ValueError):
    pass


class ConvergenceError(RuntimeError):
    """A decomposition or an optimization did not converge.

    Args:
        message: Human readable description
        best_value: Best objective reached before giving up, if any
        best_vectors: Iterate that reached best_value, if any
    """

    def __init__(
        self,
        message: str,
        best_value: Optional[float] = None,
        best_vectors: Optional[np.ndarray] = None,
    ):
        super().__init__(message)
        self.best_value = best_value
        self.best_vectors = best_vectors


class InvariantViolation(RuntimeError):
    """A certified object failed one of its invariants.

    Args:
        invariant: Name of the violated invariant
        detail: Residual or description of the violation
    """

    def __init__(self, invariant: str, detail: str = ""):
        super().__init__(f"{invariant}: {detail}" if detail else invariant)
        self.invariant = invariant
        self.detail = detail
