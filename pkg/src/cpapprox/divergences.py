"""Total variation and relative entropy between truncated pmfs."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .pmf import Pmf

# reference-zero entries below this are truncation noise, not a support violation
NOISE_FLOOR = 1e-15


@dataclass(frozen=True)
class DistanceResult:
    value: float
    error_budget: float = 0.0

    def __post_init__(self):
        if not (self.value >= 0.0):
            raise ValueError(f"distance must be nonnegative, got {self.value!r}")
        if not (self.error_budget >= 0.0):
            raise ValueError(f"error budget must be nonnegative, got {self.error_budget!r}")

    @property
    def lower(self) -> float:
        return max(0.0, self.value - self.error_budget)


def _aligned(a: Pmf, b: Pmf) -> tuple[np.ndarray, np.ndarray]:
    length = max(len(a), len(b))
    return a.padded(length), b.padded(length)


def total_variation(a: Pmf, b: Pmf) -> DistanceResult:
    """Half the L1 distance over the union of stored ranges.

    The unassigned tails could sit anywhere, so they enter the error budget
    rather than the value.
    """
    x, y = _aligned(a, b)
    value = 0.5 * math.fsum(np.abs(x - y))
    return DistanceResult(value, 0.5 * (a.tail_mass + b.tail_mass))


def relative_entropy(p: Pmf, ref: Pmf) -> DistanceResult:
    """``D(p || ref)`` in nats, with ``0 log 0 = 0``.

    Infinite when ``p`` charges a point that ``ref`` does not. Mass of ``p``
    that is skipped (noise-level entries, its tail) goes to the error budget.
    """
    x, y = _aligned(p, ref)
    pos = x > 0
    bad = pos & (y <= 0)
    if np.any(x[bad] > NOISE_FLOOR):
        return DistanceResult(math.inf, 0.0)
    skipped = math.fsum(x[bad])
    use = pos & (y > 0)
    value = math.fsum(x[use] * np.log(x[use] / y[use]))
    # rounding can push a true zero slightly negative
    value = max(value, 0.0)
    return DistanceResult(value, skipped + p.tail_mass)


def pinsker_bound(d: float) -> float:
    """Total variation bound ``sqrt(d / 2)`` implied by a relative entropy ``d``."""
    if d < 0:
        raise ValueError(f"relative entropy must be nonnegative, got {d!r}")
    return math.sqrt(d / 2.0)
