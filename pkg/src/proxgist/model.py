"""Linear model container shared by the solver, classification and unmixing."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np


@dataclass
class Model:
    """Dense coefficient vector plus an optional (unregularized) bias.

    The bias is excluded from sparsity counting but included in reported
    coefficient totals.
    """

    coefficients: np.ndarray
    bias: float | None = None

    def __post_init__(self):
        self.coefficients = np.asarray(self.coefficients, dtype=np.float64)
        if self.coefficients.ndim != 1:
            raise ValueError("Model coefficients must be a 1-D vector")
        if not np.all(np.isfinite(self.coefficients)):
            raise ValueError("Model coefficients must be finite")
        if self.bias is not None and not np.isfinite(self.bias):
            raise ValueError("Model bias must be finite")

    @property
    def active_count(self) -> int:
        """Number of exactly nonzero coefficients (bias excluded)."""
        return int(np.count_nonzero(self.coefficients))

    @property
    def total_active(self) -> int:
        """Active coefficients plus the bias slot, when present."""
        return self.active_count + (0 if self.bias is None else 1)

    def copy(self) -> "Model":
        return Model(self.coefficients.copy(), self.bias)


def zero_model(d: int, with_bias: bool) -> Model:
    return Model(np.zeros(d), 0.0 if with_bias else None)
