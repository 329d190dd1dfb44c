"""Score functions and information functionals for (compound) Poisson approximation.

Three scores are provided, each vanishing exactly at its target law:

* ``rho`` -- the scaled score of a single pmf, zero iff the pmf is Poisson;
* ``r1`` -- the size-biased score of a compound Bernoulli sum, built from
  its leave-one-out laws;
* ``r2`` -- the Katti-Panjer score of a pmf relative to a severity ``Q``,
  zero iff the pmf is CPo(lam, Q).

Their second moments give the scaled Fisher information, the size-biased
information ``J_{Q,1}`` and the Katti-Panjer information ``J_{Q,2}``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Literal

import numpy as np

from .compound import SumSpec, leave_one_out_all, sum_distribution, summand_pmfs
from .pmf import DEFAULT_POLICY, Pmf, Severity, TruncationPolicy, mean, unit_severity

# points with P(y) at or below this are left out of r2-type expectations
SUPPORT_FLOOR = 1e-12
# total L1 weight the excluded points may carry before support is declared deficient
EXCLUDED_L1_TOL = 1e-10


@dataclass(frozen=True, eq=False)
class ScoreVector:
    """Score values at ``points`` of the base pmf's support."""

    points: np.ndarray
    values: np.ndarray
    base: Pmf
    kind: Literal["rho", "r1", "r2"]
    support_full: bool = True

    def weights(self) -> np.ndarray:
        return self.base.probs[self.points]

    def expectation(self) -> float:
        return math.fsum(self.weights() * self.values)

    def second_moment(self) -> float:
        return math.fsum(self.weights() * self.values**2)

    def as_dense(self, fill: float = math.nan) -> np.ndarray:
        out = np.full(len(self.base), fill)
        out[self.points] = self.values
        return out


@dataclass(frozen=True)
class InfoResult:
    value: float
    support_full: bool = True

    def __post_init__(self):
        if not (self.value >= 0.0):
            raise ValueError(f"information must be nonnegative, got {self.value!r}")


def _require_positive_mean(p: Pmf) -> float:
    lam = mean(p)
    if not lam > 0:
        raise ValueError("score undefined for a zero-mean pmf")
    return lam


def scaled_score(p: Pmf) -> ScoreVector:
    """``rho(y) = (y + 1) P(y + 1) / (lam P(y)) - 1`` on the support of ``p``.

    When ``p`` has unassigned tail mass the last stored point is dropped,
    since ``P(N + 1)`` is unknown there.
    """
    lam = _require_positive_mean(p)
    probs = p.probs
    nxt = np.zeros(probs.size)
    nxt[:-1] = np.arange(1, probs.size) * probs[1:]
    last = probs.size - 1 if p.tail_mass > 0 else probs.size
    pts = np.flatnonzero(probs[:last] > 0)
    vals = nxt[pts] / (lam * probs[pts]) - 1.0
    return ScoreVector(pts, vals, p, "rho")


def scaled_fisher(p: Pmf) -> InfoResult:
    """``lam * E[rho(Y)^2]`` with ``lam`` the mean of ``p``."""
    score = scaled_score(p)
    return InfoResult(mean(p) * score.second_moment())


def score_r1(spec: SumSpec, policy: TruncationPolicy = DEFAULT_POLICY, budget: float | None = None) -> ScoreVector:
    """Size-biased score of a compound Bernoulli sum.

    For a Bernoulli mixing law the size-biased law is the point mass at 0,
    so the modified sum in summand ``i`` is just the leave-one-out sum ``F_i``
    and ``r1(s) = sum_i p_i F_i(s) / (lam P(s)) - 1``. ``budget`` is passed
    to the convolutions as their trimming allowance.
    """
    p = sum_distribution(spec, policy, budget)
    loo = leave_one_out_all(spec, policy, budget)
    length = len(p)
    num = np.zeros(length)
    for pi, f in zip(spec.ps, loo):
        num += pi * f.padded(length)
    pts = np.flatnonzero(p.probs > 0)
    vals = num[pts] / (spec.lam * p.probs[pts]) - 1.0
    return ScoreVector(pts, vals, p, "r1")


def j1_size_biased(spec: SumSpec, policy: TruncationPolicy = DEFAULT_POLICY) -> InfoResult:
    """``J_{Q,1}(S) = lam * E[r1(S)^2]``."""
    return InfoResult(spec.lam * score_r1(spec, policy).second_moment())


def _kp_numerator(probs: np.ndarray, q: Severity, lam: float, length: int) -> np.ndarray:
    """``lam * sum_j j Q(j) P(y - j)`` for ``y = 0..length-1``."""
    jq = np.arange(len(q)) * np.asarray(q.probs)
    full = np.convolve(probs, jq)
    out = np.zeros(length)
    m = min(length, full.size)
    out[:m] = full[:m]
    return lam * out


def _r2_parts(p: Pmf, q: Severity, lam: float):
    probs = p.probs
    length = probs.size
    if p.tail_mass == 0.0:
        # exact finite support: the points just past N still see leakage
        length += len(q) - 1
    num = _kp_numerator(probs, q, lam, length)
    dens = np.zeros(length)
    dens[: probs.size] = probs
    keep = dens > SUPPORT_FLOOR
    pts = np.flatnonzero(keep)
    vals = num[pts] / dens[pts] - pts
    y = np.arange(length)
    last = pts[-1] if pts.size else -1
    # gaps inside the bulk must carry no Katti-Panjer residual
    inner = ~keep & (y < last)
    gap = math.fsum(np.abs(num[inner] - y[inner] * dens[inner]))
    # past the bulk, tiny positive mass is truncation; an exact zero reached by the recursion is not
    outer = (y > last) & (dens == 0.0) & (num > 0.0)
    return pts, vals, gap <= EXCLUDED_L1_TOL and not outer.any()


def _default_lambda(p: Pmf, q: Severity, lam: float | None) -> float:
    if lam is None:
        lam = mean(p) / q.mean
    if not lam > 0:
        raise ValueError("Katti-Panjer score needs a positive rate")
    return lam


def score_r2(p: Pmf, q: Severity, lam: float | None = None) -> ScoreVector:
    """Katti-Panjer score ``r2(y) = lam * sum_j j Q(j) P(y - j) / P(y) - y``.

    Evaluated where ``P(y) > SUPPORT_FLOOR``. ``support_full`` is False when
    the law has a hole the recursion would fill: a gap inside the bulk with
    a non-negligible Katti-Panjer residual, or an exact zero past the last
    point (finite support). Tiny positive mass past the bulk is treated as
    truncation. When the flag is False the true functional is infinite.
    """
    lam = _default_lambda(p, q, lam)
    pts, vals, full = _r2_parts(p, q, lam)
    return ScoreVector(pts, vals, p, "r2", full)


def j2_katti_panjer(p: Pmf, q: Severity, lam: float | None = None) -> InfoResult:
    """``J_{Q,2}(Y) = E[r2(Y)^2]``; ``lam`` defaults to mean(Y) / mean(Q)."""
    score = score_r2(p, q, lam)
    return InfoResult(score.second_moment(), score.support_full)


def johnstone_macgibbon(p: Pmf) -> InfoResult:
    """``I(Y) = E[(P(Y - 1) / P(Y) - 1)^2]`` with ``P(-1) = 0``."""
    pts, _, full = _r2_parts(p, unit_severity(), 1.0)
    probs = p.probs
    prev = np.zeros(probs.size)
    prev[1:] = probs[:-1]
    vals = prev[pts] / probs[pts] - 1.0
    return InfoResult(math.fsum(probs[pts] * vals**2), full)


def _conditional_sum(loo: Pmf, weighted_score: np.ndarray, length: int) -> np.ndarray:
    """``sum_x F_i(s - x) P_i(x) score_i(x)`` for ``s < length``.

    ``weighted_score`` already holds the products ``P_i(x) score_i(x)``.
    """
    full = np.convolve(loo.probs, weighted_score)
    out = np.zeros(length)
    m = min(length, full.size)
    out[:m] = full[:m]
    return out


def projection_residual_r1(spec: SumSpec, policy: TruncationPolicy = DEFAULT_POLICY) -> float:
    """Max over ``s`` of ``|r1(s) - E[sum_i (p_i/lam) r1_i(Y_i) | S = s]|``.

    The conditional expectation is enumerated exactly over pairs
    (value of ``Y_i``, value of the leave-one-out sum).
    """
    if len(spec) == 1:
        return 0.0
    # untrimmed laws, so that P = F_i * P_i holds to rounding even far out
    score = score_r1(spec, policy, budget=0.0)
    p = score.base
    length = len(p)
    cond = np.zeros(length)
    for pi, part, f in zip(spec.ps, summand_pmfs(spec), leave_one_out_all(spec, policy, 0.0)):
        # single-summand score: p/(1-p) at 0, -1 elsewhere
        weighted = -np.asarray(part.probs)
        weighted[0] = pi
        cond += (pi / spec.lam) * _conditional_sum(f, weighted, length)
    pts = score.points
    return float(np.max(np.abs(score.values - cond[pts] / p.probs[pts])))


def projection_residual_r2(
    spec: SumSpec,
    policy: TruncationPolicy = DEFAULT_POLICY,
    bulk: float = 1e-10,
) -> tuple[float, bool]:
    """Max over the bulk ``{s : P(s) > bulk}`` of ``|r2(s) - E[sum_i r2_i(Y_i) | S = s]|``.

    Returns the residual and whether the sum and every summand law passed
    the full-support check.
    """
    if len(spec) == 1:
        return 0.0, score_r2(sum_distribution(spec, policy), spec.mixture_q, spec.lam).support_full
    p = sum_distribution(spec, policy, 0.0)
    score = score_r2(p, spec.mixture_q, spec.lam)
    length = len(p)
    cond = np.zeros(length)
    full = score.support_full
    for s_i, part, f in zip(spec.summands, summand_pmfs(spec), leave_one_out_all(spec, policy, 0.0)):
        full = full and score_r2(part, s_i.severity, s_i.p).support_full
        n_x = min(length, len(part) + len(s_i.severity) - 1)
        # P_i(x) r2_i(x) = p_i sum_j j Q_i(j) P_i(x - j) - x P_i(x), finite everywhere
        weighted = _kp_numerator(part.probs, s_i.severity, s_i.p, n_x)
        weighted -= np.arange(n_x) * part.padded(n_x)
        cond += _conditional_sum(f, weighted, length)
    probs = p.probs
    sel = score.points[probs[score.points] > bulk]
    resid = np.abs(score.as_dense()[sel] - cond[sel] / probs[sel])
    return (float(np.max(resid)) if resid.size else 0.0), full
