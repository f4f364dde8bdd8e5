"""Single-pass accumulators for means, projected variances and sums of squares.

All three use Welford-type recurrences so that long streams do not lose
precision the way naive ``sum(x**2)`` accumulation does.  They are plain
mutable values; ``update`` returns the accumulator so calls can be chained.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .exceptions import DimensionError


def _as_vector(x, dim: int) -> np.ndarray:
    x = np.asarray(x, dtype=np.float64)
    if x.ndim != 1 or x.shape[0] != dim:
        raise DimensionError(f"expected a vector of length {dim}, got shape {x.shape}")
    return x


@dataclass
class MeanAccumulator:
    """Running mean of d-dimensional observations."""

    dim: int
    count: int = 0
    mean: np.ndarray = field(default=None)

    def __post_init__(self):
        if self.mean is None:
            self.mean = np.zeros(self.dim)
        else:
            self.mean = _as_vector(self.mean, self.dim).copy()

    def update(self, x) -> "MeanAccumulator":
        x = _as_vector(x, self.dim)
        self.count += 1
        self.mean = self.mean + (x - self.mean) / self.count
        return self


@dataclass
class ScalarMoments:
    """Welford mean and sum of squared deviations of a scalar stream."""

    count: int = 0
    mean: float = 0.0
    m2: float = 0.0

    def update(self, p: float) -> "ScalarMoments":
        p = float(p)
        self.count += 1
        delta = p - self.mean
        self.mean += delta / self.count
        self.m2 += delta * (p - self.mean)
        return self

    @property
    def variance(self) -> float:
        """Population variance ``m2 / count``; 0 for an empty accumulator."""
        return self.m2 / self.count if self.count > 0 else 0.0

    @property
    def std(self) -> float:
        """Standard deviation, or 0.0 as a sentinel while ``count < 2``.

        The bandwidth floor in the optimizer turns the sentinel into a
        usable scale.
        """
        if self.count < 2:
            return 0.0
        return math.sqrt(max(self.m2, 0.0) / self.count)


@dataclass
class SumSquaresAccumulator:
    """Within-set sum of squares about the running mean."""

    dim: int
    count: int = 0
    mean: np.ndarray = field(default=None)
    ss: float = 0.0

    def __post_init__(self):
        if self.mean is None:
            self.mean = np.zeros(self.dim)
        else:
            self.mean = _as_vector(self.mean, self.dim).copy()

    def update(self, x) -> "SumSquaresAccumulator":
        x = _as_vector(x, self.dim)
        delta = x - self.mean
        self.ss += self.count / (self.count + 1) * float(delta @ delta)
        self.count += 1
        self.mean = self.mean + delta / self.count
        return self
