"""Compound distributions: compound Bernoulli summands, their sums, and CPo."""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import cached_property
from typing import Iterable, Sequence

import numpy as np

from .pmf import (
    DEFAULT_POLICY,
    Pmf,
    Severity,
    TruncationPolicy,
    convolve,
    mixture,
    point_mass,
    same_distribution,
    trim,
    unit_severity,
)


@dataclass(frozen=True)
class SummandSpec:
    """One summand ``Y = B X`` with ``B ~ Bern(p)`` and ``X ~ severity``."""

    p: float
    severity: Severity

    def __post_init__(self):
        # p = 1 is excluded: several bounds divide by 1 - p
        if not (0.0 < self.p < 1.0):
            raise ValueError(f"summand probability must lie in (0, 1), got {self.p!r}")


class SumSpec:
    """An ordered list of independent compound Bernoulli summands.

    Exposes the derived quantities shared by every bound: ``lam`` (sum of the
    ``p_i``), the mixture severity ``mixture_q`` with weights ``p_i / lam``,
    and its mean ``q``.
    """

    def __init__(self, summands: Iterable[SummandSpec]):
        self.summands: tuple[SummandSpec, ...] = tuple(summands)
        if not self.summands:
            raise ValueError("a sum needs at least one summand")

    @classmethod
    def equal(cls, n: int, p: float, severity: Severity) -> "SumSpec":
        return cls(SummandSpec(p, severity) for _ in range(n))

    def __len__(self) -> int:
        return len(self.summands)

    def __iter__(self):
        return iter(self.summands)

    def __repr__(self) -> str:
        return f"SumSpec(n={len(self)}, lam={self.lam:.6g}, q={self.q:.6g})"

    @cached_property
    def ps(self) -> np.ndarray:
        arr = np.array([s.p for s in self.summands])
        arr.setflags(write=False)
        return arr

    @cached_property
    def lam(self) -> float:
        return math.fsum(self.ps)

    @cached_property
    def mixture_q(self) -> Severity:
        weights = self.ps / self.lam
        # guard the exact-sum check in mixture() against rounding
        weights = weights / math.fsum(weights)
        return mixture(weights, [s.severity for s in self.summands])

    @property
    def q(self) -> float:
        return self.mixture_q.mean

    @cached_property
    def identical_severities(self) -> bool:
        first = self.summands[0].severity
        return all(same_distribution(first, s.severity) for s in self.summands[1:])


def compound(q: Severity, r: Pmf, policy: TruncationPolicy | None = DEFAULT_POLICY) -> Pmf:
    """Law of ``X_1 + ... + X_Y`` with ``Y ~ r`` and i.i.d. ``X_i ~ q``."""
    terms = []
    power = point_mass(0)
    for y, ry in enumerate(r.probs):
        if y:
            power = convolve(power, q, policy)
        if ry > 0:
            terms.append((ry, power))
    length = max(len(pw) for _, pw in terms) if terms else 1
    probs = np.zeros(length)
    tail = r.tail_mass
    for ry, pw in terms:
        probs[: len(pw)] += ry * pw.probs
        tail += ry * pw.tail_mass
    return Pmf(probs, tail)


def compound_bernoulli(p: float, q: Severity) -> Pmf:
    """``(1 - p) delta_0 + p Q``."""
    if not (0.0 < p < 1.0):
        raise ValueError(f"Bernoulli parameter must lie in (0, 1), got {p!r}")
    probs = p * np.asarray(q.probs)
    probs[0] = 1.0 - p
    return Pmf(probs, p * q.tail_mass)


def compound_poisson(
    lam: float,
    q: Severity,
    policy: TruncationPolicy = DEFAULT_POLICY,
    min_support: int = 0,
) -> Pmf:
    """CPo(lam, Q) by the Katti-Panjer recursion.

    ``k P(k) = lam * sum_j j Q(j) P(k - j)`` with ``P(0) = exp(-lam)``; every
    term is nonnegative so the recursion is forward stable. It stops once
    the assigned mass is within ``epsilon`` of what is reachable with the
    truncated severity, or at ``max_support``. ``min_support`` forces the
    pmf to extend at least that far (used to cover another pmf's range).
    """
    if not lam > 0:
        raise ValueError("compound Poisson rate must be positive")
    p0 = math.exp(-lam)
    if p0 == 0.0:
        raise ValueError(f"rate {lam} underflows exp(-lam); too large for double precision")
    jq = np.arange(len(q)) * np.asarray(q.probs)
    jq = jq[1:]
    nq = jq.size
    target = math.exp(-lam * q.tail_mass) - policy.epsilon
    cap = policy.max_support
    want = min(max(min_support - 1, 0), cap)
    out = np.zeros(cap + 1)
    out[0] = p0
    cum = p0
    k = 0
    while k < cap and (cum < target or k < want):
        k += 1
        m = min(k, nq)
        # pairs jQ(j) with P(k - j) for j = 1..m
        pk = lam * float(np.dot(jq[:m], out[k - m : k][::-1])) / k
        out[k] = pk
        cum += pk
    probs = out[: k + 1]
    tail = max(0.0, 1.0 - math.fsum(probs))
    return Pmf(probs, tail)


def poisson(lam: float, policy: TruncationPolicy = DEFAULT_POLICY, min_support: int = 0) -> Pmf:
    return compound_poisson(lam, unit_severity(), policy, min_support)


def _trim_budget(policy: TruncationPolicy, n: int) -> float:
    # spend at most 1e-3 of epsilon on support trimming across the whole sum
    return policy.epsilon * 1e-3 / max(n, 1)


def summand_pmfs(spec: SumSpec) -> list[Pmf]:
    return [compound_bernoulli(s.p, s.severity) for s in spec.summands]


def convolve_all(parts: Sequence[Pmf], policy: TruncationPolicy = DEFAULT_POLICY, budget: float = 0.0) -> Pmf:
    acc = point_mass(0)
    for part in parts:
        acc = trim(convolve(acc, part, policy), budget)
    return acc


def sum_distribution(spec: SumSpec, policy: TruncationPolicy = DEFAULT_POLICY, budget: float | None = None) -> Pmf:
    """Law of ``S_n``, the convolution of all compound Bernoulli summands.

    ``budget`` is the mass each step may trim off the far end; ``0`` keeps
    every point the policy allows.
    """
    if budget is None:
        budget = _trim_budget(policy, len(spec))
    return convolve_all(summand_pmfs(spec), policy, budget)


def leave_one_out(spec: SumSpec, i: int, policy: TruncationPolicy = DEFAULT_POLICY) -> Pmf:
    """Law of the sum with summand ``i`` omitted."""
    n = len(spec)
    if not (0 <= i < n):
        raise IndexError(f"summand index {i} out of range for {n} summands")
    parts = summand_pmfs(spec)
    return convolve_all(parts[:i] + parts[i + 1 :], policy, _trim_budget(policy, n))


def leave_one_out_all(
    spec: SumSpec, policy: TruncationPolicy = DEFAULT_POLICY, budget: float | None = None
) -> list[Pmf]:
    """Every leave-one-out law, via prefix/suffix products.

    Summands that are exactly equal share one computation, so sums of
    identical summands cost a single (n-1)-fold convolution.
    """
    parts = summand_pmfs(spec)
    n = len(parts)
    if budget is None:
        budget = _trim_budget(policy, n)
    if spec.identical_severities and np.all(spec.ps == spec.ps[0]):
        one = convolve_all(parts[1:], policy, budget)
        return [one] * n
    prefix = [point_mass(0)]
    for part in parts[:-1]:
        prefix.append(trim(convolve(prefix[-1], part, policy), budget))
    suffix = [point_mass(0)]
    for part in reversed(parts[1:]):
        suffix.append(trim(convolve(suffix[-1], part, policy), budget))
    suffix.reverse()
    return [trim(convolve(prefix[i], suffix[i], policy), budget) for i in range(n)]
