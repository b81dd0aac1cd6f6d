"""Exception types shared across the package."""

import numpy as np


class WeightRangeError(ValueError):
    """A matrix handed to a tile exceeds the device weight bound."""


class InvalidStateError(RuntimeError):
    """An operation referenced tile state that no longer exists."""


class SingularSystemError(np.linalg.LinAlgError):
    """A least-squares system is rank deficient.

    Attributes:
        rank: numerical rank that was detected.
    """

    def __init__(self, message, rank):
        super().__init__(message)
        self.rank = rank
