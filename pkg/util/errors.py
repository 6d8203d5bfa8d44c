"""Exception hierarchy shared by every package in the toolkit."""

from typing import List, Optional

import numpy as np


class TensorCSError(Exception):
    pass


class InvalidArgument(TensorCSError, ValueError):
    """Bad shape, mode, range or configuration value."""
    pass


class NumericalFailure(TensorCSError, ArithmeticError):
    """A kernel failed to converge or produced non-finite values."""
    pass


class StepSizeFailure(NumericalFailure):
    """
    Gradient descent diverged. The last finite iterate and the objective trace up to the failure are kept so that
    callers can inspect or restart from them.
    """

    def __init__(self, message: str, last_phis: Optional[List[np.ndarray]] = None,
                 objective_trace: Optional[List[float]] = None):
        super().__init__(message)
        self.last_phis = last_phis
        self.objective_trace = objective_trace if objective_trace is not None else []


class ResourceLimit(TensorCSError):
    """An exact enumeration would exceed its configured cap."""
    pass


def require(condition: bool, message: str) -> None:
    """
    Raises InvalidArgument with message if condition does not hold.

    :param condition: Precondition to check
    :param message: Error message
    """
    if not condition:
        raise InvalidArgument(message)
