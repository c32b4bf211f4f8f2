from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

__all__ = ["EstimateWithCI", "Z95", "mean_with_ci", "combined_half_width"]

Z95 = 1.959963984540054


@dataclass(frozen=True)
class EstimateWithCI:
    """A point estimate with a 95% normal-approximation half-width."""

    value: float
    half_width: float = 0.0
    samples: int = 0

    def __post_init__(self):
        if not self.half_width >= 0:
            raise ValueError(f"half_width must be non-negative, got {self.half_width}")

    def overlaps(self, other: "EstimateWithCI", k: float = 1.0) -> bool:
        """True when the two intervals, widened by ``k``, intersect."""
        return abs(self.value - other.value) <= k * (self.half_width + other.half_width)

    def to_dict(self) -> dict:
        return {"value": self.value, "half_width": self.half_width, "samples": self.samples}


def mean_with_ci(values) -> EstimateWithCI:
    v = np.asarray(values, dtype=float).ravel()
    if v.size == 0:
        raise ValueError("no values")
    hw = Z95 * float(np.std(v, ddof=1)) / math.sqrt(v.size) if v.size > 1 else 0.0
    return EstimateWithCI(float(np.mean(v)), hw, int(v.size))


def combined_half_width(*estimates: EstimateWithCI) -> float:
    """Root-sum-square of half-widths, the CI of a difference."""
    return math.sqrt(sum(e.half_width**2 for e in estimates))
