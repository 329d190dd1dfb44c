"""Truncated probability mass functions on the nonnegative integers.

A :class:`Pmf` stores probabilities for ``k = 0..N`` densely, together with
the mass that was not assigned to any of those points (``tail_mass``).
Truncation never renormalises: mass that falls outside the stored range is
moved to the tail, so every distance computed downstream can carry an
explicit error budget.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

MASS_TOL = 1e-12


@dataclass(frozen=True)
class TruncationPolicy:
    """Tail-mass budget and support cap for constructed pmfs."""

    epsilon: float = 1e-12
    max_support: int = 4096

    def __post_init__(self):
        if not (0.0 < self.epsilon <= 1e-6):
            raise ValueError(f"epsilon must lie in (0, 1e-6], got {self.epsilon!r}")
        if int(self.max_support) < 1:
            raise ValueError(f"max_support must be >= 1, got {self.max_support!r}")


DEFAULT_POLICY = TruncationPolicy()


def _frozen_array(values) -> np.ndarray:
    arr = np.array(values, dtype=np.float64, copy=True).reshape(-1)
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True, eq=False)
class Pmf:
    """Probabilities on ``{0, ..., N}`` plus unassigned tail mass."""

    probs: np.ndarray
    tail_mass: float = 0.0

    def __post_init__(self):
        probs = _frozen_array(self.probs)
        if probs.size == 0:
            raise ValueError("a pmf needs at least the point 0")
        if not np.all(np.isfinite(probs)) or np.any(probs < 0):
            raise ValueError("pmf entries must be finite and nonnegative")
        tail = float(self.tail_mass)
        if not (tail >= 0.0):
            raise ValueError(f"tail_mass must be nonnegative, got {tail!r}")
        total = math.fsum(probs) + tail
        if abs(total - 1.0) > MASS_TOL:
            raise ValueError(f"pmf mass {total!r} is not 1 within {MASS_TOL}")
        object.__setattr__(self, "probs", probs)
        object.__setattr__(self, "tail_mass", tail)

    @property
    def support_max(self) -> int:
        """Largest stored index N."""
        return self.probs.size - 1

    def __len__(self) -> int:
        return self.probs.size

    def __getitem__(self, k: int) -> float:
        if 0 <= k < self.probs.size:
            return float(self.probs[k])
        return 0.0

    def padded(self, length: int) -> np.ndarray:
        """Copy of the probabilities, zero-padded or cut to ``length``."""
        out = np.zeros(length)
        m = min(length, self.probs.size)
        out[:m] = self.probs[:m]
        return out

    def __repr__(self) -> str:
        head = np.array2string(self.probs[:6], precision=6, separator=", ")
        more = ", ..." if self.probs.size > 6 else ""
        return f"{type(self).__name__}(N={self.support_max}, probs={head[:-1]}{more}], tail_mass={self.tail_mass:.3g})"


@dataclass(frozen=True, eq=False, repr=False)
class Severity(Pmf):
    """A distribution on the positive integers (no mass at 0).

    ``mean`` defaults to the truncated first moment; constructors that know a
    closed form (e.g. :func:`geometric`) pass it explicitly.
    """

    mean: float | None = field(default=None)

    def __post_init__(self):
        super().__post_init__()
        if self.probs[0] != 0.0:
            raise ValueError("a severity must put zero mass at 0")
        m = self.mean
        if m is None:
            m = float(np.dot(np.arange(self.probs.size), self.probs))
        if not (m > 0.0):
            raise ValueError("severity mean must be positive")
        object.__setattr__(self, "mean", float(m))

    @classmethod
    def from_pmf(cls, p: Pmf, mean: float | None = None) -> "Severity":
        return cls(p.probs, p.tail_mass, mean)


def point_mass(k: int) -> Pmf:
    if k < 0:
        raise ValueError("point mass location must be >= 0")
    probs = np.zeros(k + 1)
    probs[k] = 1.0
    return Pmf(probs)


def unit_severity() -> Severity:
    """The point mass at 1 as a severity; compounding with it changes nothing."""
    return Severity(np.array([0.0, 1.0]), 0.0, 1.0)


def severity_point_mass(k: int) -> Severity:
    if k < 1:
        raise ValueError("severity point mass needs k >= 1")
    probs = np.zeros(k + 1)
    probs[k] = 1.0
    return Severity(probs, 0.0, float(k))


def geometric(alpha: float, policy: TruncationPolicy = DEFAULT_POLICY) -> Severity:
    """Geometric severity ``Q(j) = (1 - alpha) alpha**(j - 1)`` for ``j >= 1``.

    Stored up to the first N with ``alpha**N <= epsilon`` (capped by the
    policy); the remaining ``alpha**N`` is the tail mass.
    """
    if not (0.0 < alpha < 1.0):
        raise ValueError(f"geometric parameter must lie in (0, 1), got {alpha!r}")
    n = max(1, math.ceil(math.log(policy.epsilon) / math.log(alpha)))
    while n > 1 and alpha ** (n - 1) <= policy.epsilon:
        n -= 1
    while alpha**n > policy.epsilon:
        n += 1
    n = min(n, policy.max_support)
    probs = np.zeros(n + 1)
    probs[1:] = (1.0 - alpha) * alpha ** np.arange(n)
    # closed form; 1 - sum(probs) would round to zero for tiny epsilon
    tail = alpha**n
    return Severity(probs, tail, 1.0 / (1.0 - alpha))


def _cap(length: int, policy: TruncationPolicy | None) -> int:
    if policy is None:
        return length
    return min(length, policy.max_support + 1)


def convolve(a: Pmf, b: Pmf, policy: TruncationPolicy | None = DEFAULT_POLICY) -> Pmf:
    """Distribution of the sum of independent variables with laws ``a`` and ``b``.

    Entries beyond ``policy.max_support`` are moved to the tail, as is every
    event in which either operand falls in its own unassigned tail.
    """
    full = np.convolve(a.probs, b.probs)
    keep = _cap(full.size, policy)
    cut = math.fsum(full[keep:]) if keep < full.size else 0.0
    tail = a.tail_mass + b.tail_mass - a.tail_mass * b.tail_mass + cut
    return Pmf(full[:keep], tail)


def n_fold_convolve(q: Pmf, n: int, policy: TruncationPolicy | None = DEFAULT_POLICY) -> Pmf:
    """``q`` convolved with itself ``n`` times; ``n = 0`` gives the point mass at 0."""
    if n < 0:
        raise ValueError("n must be >= 0")
    result = point_mass(0)
    base = q
    # binary powering keeps the number of convolutions at O(log n)
    while n:
        if n & 1:
            result = convolve(result, base, policy)
        n >>= 1
        if n:
            base = convolve(base, base, policy)
    return result


def trim(p: Pmf, budget: float) -> Pmf:
    """Move the longest trailing block with total mass ``<= budget`` to the tail."""
    if budget <= 0 or p.probs.size <= 1:
        return p
    rev = np.cumsum(p.probs[::-1])
    drop = int(np.searchsorted(rev, budget, side="right"))
    drop = min(drop, p.probs.size - 1)
    if drop == 0:
        return p
    keep = p.probs.size - drop
    cut = math.fsum(p.probs[keep:])
    return Pmf(p.probs[:keep], p.tail_mass + cut)


def mean(p: Pmf) -> float:
    """First moment over the stored range.

    This is a lower bound on the true mean: the tail mass sits at indices
    above N and contributes at least ``tail_mass * (N + 1)``.
    """
    return float(np.dot(np.arange(p.probs.size), p.probs))


def variance(p: Pmf) -> float:
    k = np.arange(p.probs.size)
    mass = math.fsum(p.probs)
    mu = float(np.dot(k, p.probs)) / mass
    return float(np.dot((k - mu) ** 2, p.probs))


def size_bias(p: Pmf) -> Pmf:
    """Reduced size-biased law ``P#(y) = (y + 1) P(y + 1) / mean``."""
    lam = mean(p)
    if not lam > 0:
        raise ValueError("size-bias undefined for a zero-mean pmf")
    k = np.arange(1, p.probs.size)
    probs = k * p.probs[1:] / lam
    if probs.size == 0:
        probs = np.zeros(1)
    tail = max(0.0, 1.0 - math.fsum(probs))
    return Pmf(probs, tail)


def mixture(weights: Sequence[float], parts: Sequence[Severity]) -> Severity:
    """Convex combination of severities; the mean mixes accordingly."""
    w = np.asarray(weights, dtype=np.float64).reshape(-1)
    if w.size != len(parts):
        raise ValueError(f"got {w.size} weights for {len(parts)} parts")
    if w.size == 0:
        raise ValueError("mixture needs at least one part")
    if np.any(w < 0):
        raise ValueError("mixture weights must be nonnegative")
    if abs(math.fsum(w) - 1.0) > MASS_TOL:
        raise ValueError("mixture weights must sum to 1")
    length = max(len(q) for q in parts)
    probs = np.zeros(length)
    tail = 0.0
    for wi, q in zip(w, parts):
        probs[: len(q)] += wi * q.probs
        tail += wi * q.tail_mass
    m = math.fsum(wi * q.mean for wi, q in zip(w, parts))
    return Severity(probs, tail, m)


def same_distribution(a: Pmf, b: Pmf, tol: float = 1e-12) -> bool:
    """Pointwise equality on the union of the stored ranges."""
    length = max(len(a), len(b))
    return bool(np.max(np.abs(a.padded(length) - b.padded(length))) <= tol)


def is_jq_nonincreasing(q: Severity, rtol: float = 1e-12) -> bool:
    """Whether ``j Q(j)`` is non-increasing over the whole stored range."""
    jq = np.arange(q.probs.size) * q.probs
    jq = jq[1:]
    if jq.size < 2:
        return True
    return bool(np.all(jq[1:] <= jq[:-1] * (1.0 + rtol)))
