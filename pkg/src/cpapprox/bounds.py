"""Stein factors and total variation bounds for compound Poisson approximation.

Every bound takes a :class:`~cpapprox.compound.SumSpec` (or a pmf for the
Katti-Panjer route) and returns a number directly comparable with
``d_TV(P_{S_n}, CPo(lam, Q))``. A bound whose hypotheses fail raises
:class:`NotApplicable`; :func:`full_report` turns those into flags.
"""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass, field

import numpy as np

from .compound import SumSpec, compound_poisson, sum_distribution
from .divergences import DistanceResult, relative_entropy, total_variation
from .information import j1_size_biased, j2_katti_panjer
from .pmf import DEFAULT_POLICY, Pmf, Severity, TruncationPolicy, is_jq_nonincreasing
from .pmf import mean as pmf_mean

# clamp for the exponential Stein factor; anything above VACUOUS is useless as a TV bound
H_CLAMP = 1e300
VACUOUS = 1e6


class NotApplicable(ValueError):
    """A bound's hypotheses do not hold for the given input."""


@dataclass(frozen=True)
class SteinFactors:
    delta: float
    h0: float
    h: float
    g: float | None
    monotone_jq: bool

    @property
    def vacuous(self) -> bool:
        return self.h > VACUOUS


def _h0(delta: float) -> float:
    if delta >= 1.0:
        return 1.0
    r = math.sqrt(delta)
    return r * (2.0 - r)


def _g_factor(delta: float) -> float:
    if math.isinf(delta):
        return 1.0
    log_plus = max(math.log(2.0 / delta), 0.0)
    return min(1.0, delta * (delta / 4.0 + log_plus))


def stein_factors(lam: float, q: Severity) -> SteinFactors:
    """Stein factors ``H(lam, Q)`` (with ``H0``) and ``G(lam, Q)``.

    The monotone branch applies when ``j Q(j)`` is non-increasing over the
    whole stored range; otherwise ``H = e^lam min(1, 1/(lam Q(1)))`` and
    ``G`` is unavailable (``None``).
    """
    if not lam > 0:
        raise ValueError("Stein factor needs a positive rate")
    q1, q2 = q[1], q[2]
    gap = q1 - 2.0 * q2
    monotone = is_jq_nonincreasing(q)
    if monotone and gap < -1e-15:
        raise AssertionError("j Q(j) non-increasing but Q(1) < 2 Q(2)")
    delta = math.inf if gap <= 0 else 1.0 / (lam * gap)
    h0 = _h0(delta)
    if monotone:
        return SteinFactors(delta, h0, h0, _g_factor(delta), True)
    log_h = lam + (0.0 if lam * q1 <= 1.0 else -math.log(lam * q1))
    h = math.exp(min(log_h, math.log(H_CLAMP)))
    return SteinFactors(delta, h0, h, None, False)


def _p_cubed_sum(spec: SumSpec) -> float:
    ps = spec.ps
    return math.fsum(ps**3 / (1.0 - ps))


def _require_identical(spec: SumSpec, what: str) -> None:
    if not spec.identical_severities:
        raise NotApplicable(f"{what} needs identical severities")


def bound_thm1(spec: SumSpec) -> float:
    """Relative entropy bound ``(1/lam) sum p_i^3 / (1 - p_i)`` (i.i.d. severities)."""
    _require_identical(spec, "the relative entropy bound")
    return _p_cubed_sum(spec) / spec.lam


def bound_thm1_tv(spec: SumSpec) -> float:
    """The relative entropy bound pushed through Pinsker's inequality."""
    return math.sqrt(bound_thm1(spec) / 2.0)


def _severity_matrix(spec: SumSpec) -> np.ndarray:
    length = max(len(s.severity) for s in spec)
    return np.array([s.severity.padded(length) for s in spec])


def dissimilarity(spec: SumSpec) -> float:
    """``D(Q) = sum_j sum_i (j p_i / q) |Q_i(j) - Q(j)|``; zero for identical ``Q_i``."""
    mat = _severity_matrix(spec)
    mix = spec.mixture_q.padded(mat.shape[1])
    j = np.arange(mat.shape[1])
    per_summand = np.abs(mat - mix) @ j
    return math.fsum(spec.ps * per_summand) / spec.q


def bound_thm2(spec: SumSpec, use_j1: bool = False, policy: TruncationPolicy = DEFAULT_POLICY) -> float:
    """``H q {[sum p_i^3/(1-p_i)]^(1/2) + D(Q)}``.

    With ``use_j1`` the first term is replaced by ``sqrt(lam J_{Q,1}(S))``,
    computed exactly from the sum; this is never larger.
    """
    sf = stein_factors(spec.lam, spec.mixture_q)
    if use_j1:
        first = math.sqrt(spec.lam * j1_size_biased(spec, policy).value)
    else:
        first = math.sqrt(_p_cubed_sum(spec))
    return sf.h * spec.q * (first + dissimilarity(spec))


@dataclass(frozen=True)
class KValue:
    value: float
    tail_estimate: float


def severity_k_detail(q: Severity) -> KValue:
    """``K(Q) = sum_y Q(y) y^2 (Q*Q(y) / (2 Q(y)) - 1)^2`` over the stored range.

    Requires ``Q`` positive on all stored points with unassigned tail mass
    (a stand-in for full support on the positive integers). The tail
    estimate extrapolates the last two terms geometrically.
    """
    probs = np.asarray(q.probs)
    if q.tail_mass <= 0.0 or np.any(probs[1:] <= 0.0):
        raise NotApplicable("K(Q) needs a severity with full support")
    q2 = np.convolve(probs, probs)[: probs.size]
    y = np.arange(1, probs.size)
    terms = probs[1:] * y**2 * (q2[1:] / (2.0 * probs[1:]) - 1.0) ** 2
    value = math.fsum(terms)
    tail = math.inf
    if terms.size >= 2 and terms[-2] > 0:
        ratio = terms[-1] / terms[-2]
        if ratio < 1.0:
            tail = terms[-1] * ratio / (1.0 - ratio)
    return KValue(value, tail)


def severity_k(q: Severity) -> float:
    return severity_k_detail(q).value


def bound_thm3(spec: SumSpec) -> float:
    """``H {sum_i p_i^3 K(Q_i)}^(1/2)``; needs every ``Q_i`` with full support."""
    sf = stein_factors(spec.lam, spec.mixture_q)
    cache: dict[int, float] = {}
    total = []
    for s in spec:
        key = id(s.severity)
        if key not in cache:
            cache[key] = severity_k(s.severity)
        total.append(s.p**3 * cache[key])
    return sf.h * math.sqrt(math.fsum(total))


def bound_lecam(spec: SumSpec) -> float:
    return math.fsum(spec.ps**2)


def bound_barbour_hall(spec: SumSpec) -> float:
    """``min(1, 1/lam) sum p_i^2``; stated for identical severities."""
    _require_identical(spec, "the Barbour-Hall bound")
    return min(1.0, 1.0 / spec.lam) * bound_lecam(spec)


def bound_roos_equal(spec: SumSpec) -> float:
    """``(3/(4e) + 7 sqrt(t)(3 - 2 sqrt(t)) / (6 (1 - sqrt(t))^2)) t`` with ``t = sum p_i^2 / lam``."""
    _require_identical(spec, "Roos' equal-severity bound")
    theta = bound_lecam(spec) / spec.lam
    if theta >= 1.0:
        raise NotApplicable("Roos' bound needs theta < 1")
    r = math.sqrt(theta)
    return (3.0 / (4.0 * math.e) + 7.0 * r * (3.0 - 2.0 * r) / (6.0 * (1.0 - r) ** 2)) * theta


def roos_g(z: float) -> float:
    """``2 z^-2 e^z (e^-z - 1 + z)``; tends to 1 as z -> 0.

    The closed form loses digits to cancellation for small ``z``, so there the
    series ``2 sum_{k>=2} (k - 1) z^(k-2) / k!`` is summed instead.
    """
    if z < 0.5:
        total = 0.0
        power_over_fact = 0.5  # z^(k-2) / k! at k = 2
        for k in range(2, 40):
            if k > 2:
                power_over_fact *= z / k
            term = (k - 1) * power_over_fact
            total += term
            if term < 1e-17 * total:
                break
        return 2.0 * total
    # e^z (e^-z - 1 + z) = z e^z - (e^z - 1)
    return 2.0 * (z * math.exp(z) - math.expm1(z)) / (z * z)


def bound_roos_general(spec: SumSpec) -> float:
    """Simplified form of Roos' bound, ``a2 / (1 - 2 e a2)_+`` (``inf`` when vacuous).

    ``a2 = sum_i g(2 p_i) p_i^2 min(q_i^2/(e lam), nu_i/(2^1.5 lam), 1)`` with
    ``nu_i = sum_y Q_i(y)^2 / Q(y)``. Needs ``j Q(j)`` non-increasing.
    """
    mix = spec.mixture_q
    if not is_jq_nonincreasing(mix):
        raise NotApplicable("Roos' simplified bound needs j Q(j) non-increasing")
    lam = spec.lam
    mat = _severity_matrix(spec)
    mixv = mix.padded(mat.shape[1])
    pos = mixv > 0
    if np.any(mat[:, ~pos] > 1e-15):
        nu = np.full(len(spec), math.inf)
        ok = ~np.any(mat[:, ~pos] > 1e-15, axis=1)
        nu[ok] = (mat[ok][:, pos] ** 2 / mixv[pos]).sum(axis=1)
    else:
        nu = (mat[:, pos] ** 2 / mixv[pos]).sum(axis=1)
    terms = []
    for s, nu_i in zip(spec, nu):
        choice = min(s.severity.mean**2 / (math.e * lam), nu_i / (2.0**1.5 * lam), 1.0)
        terms.append(roos_g(2.0 * s.p) * s.p**2 * choice)
    a2 = math.fsum(terms)
    denom = 1.0 - 2.0 * math.e * a2
    if denom <= 0:
        return math.inf
    return a2 / denom


def bound_bcl_stein(spec: SumSpec) -> float:
    """Stein's method bound ``G(lam, Q) sum q_i^2 p_i^2`` (``j Q(j)`` non-increasing)."""
    sf = stein_factors(spec.lam, spec.mixture_q)
    if sf.g is None:
        raise NotApplicable("G(lam, Q) needs j Q(j) non-increasing")
    return sf.g * math.fsum(s.severity.mean**2 * s.p**2 for s in spec)


def bound_from_j2(p: Pmf, q: Severity, lam: float | None = None) -> float:
    """``H(lam, Q) sqrt(J_{Q,2}(Y))`` for an arbitrary pmf ``p``."""
    info = j2_katti_panjer(p, q, lam)
    if not info.support_full:
        raise NotApplicable("Katti-Panjer information is infinite without full support")
    if lam is None:
        lam = pmf_mean(p) / q.mean
    return stein_factors(lam, q).h * math.sqrt(info.value)


BOUND_NAMES = (
    "thm1_kl",
    "thm1_tv",
    "thm2_tv",
    "thm3_tv",
    "lecam",
    "barbour_hall",
    "roos_equal",
    "roos_general",
    "bcl_stein",
)

TV_BOUNDS = tuple(name for name in BOUND_NAMES if name != "thm1_kl")


@dataclass
class BoundReport:
    """All bounds for one configuration, with exact distances when computed."""

    n: int
    lam: float
    q: float
    thm1_kl: float | None = None
    thm1_tv: float | None = None
    thm2_tv: float | None = None
    thm2_j1_tv: float | None = None
    thm3_tv: float | None = None
    lecam: float | None = None
    barbour_hall: float | None = None
    roos_equal: float | None = None
    roos_general: float | None = None
    bcl_stein: float | None = None
    exact_tv: DistanceResult | None = None
    exact_kl: DistanceResult | None = None
    stein: SteinFactors | None = None
    flags: dict[str, str] = field(default_factory=dict)
    notes: dict[str, str] = field(
        default_factory=lambda: {"roos_general": "simplified general-severity form, not the detailed one"}
    )

    def applicable_tv_bounds(self) -> dict[str, float]:
        out = {name: getattr(self, name) for name in TV_BOUNDS}
        if self.thm2_j1_tv is not None:
            out["thm2_j1_tv"] = self.thm2_j1_tv
        return {k: v for k, v in out.items() if v is not None}

    def violations(self) -> list[str]:
        """Names of bounds that fall below the exact distance (minus its budget)."""
        bad = []
        if self.exact_tv is not None:
            floor = self.exact_tv.value - self.exact_tv.error_budget
            bad += [k for k, v in self.applicable_tv_bounds().items() if v < floor]
        if self.exact_kl is not None and self.thm1_kl is not None:
            if self.thm1_kl < self.exact_kl.value - self.exact_kl.error_budget:
                bad.append("thm1_kl")
        return bad

    def to_dict(self) -> dict:
        return asdict(self)


_BOUND_FUNCS = {
    "thm1_kl": bound_thm1,
    "thm1_tv": bound_thm1_tv,
    "thm2_tv": bound_thm2,
    "thm3_tv": bound_thm3,
    "lecam": bound_lecam,
    "barbour_hall": bound_barbour_hall,
    "roos_equal": bound_roos_equal,
    "roos_general": bound_roos_general,
    "bcl_stein": bound_bcl_stein,
}

# cap on leave-one-out work for the J_{Q,1} variant of the second bound
J1_MAX_DISTINCT = 64


def _distinct_summands(spec: SumSpec) -> int:
    return len({(s.p, id(s.severity)) for s in spec})


def full_report(
    spec: SumSpec,
    policy: TruncationPolicy = DEFAULT_POLICY,
    exact: bool = True,
    with_j1: bool = True,
) -> BoundReport:
    """Every applicable bound for ``spec``, plus exact TV and KL when ``exact``."""
    report = BoundReport(n=len(spec), lam=spec.lam, q=spec.q)
    report.stein = stein_factors(spec.lam, spec.mixture_q)
    if report.stein.vacuous:
        report.flags["stein"] = "vacuous Stein factor (j Q(j) not monotone)"
    for name, func in _BOUND_FUNCS.items():
        try:
            setattr(report, name, func(spec))
        except NotApplicable as exc:
            report.flags[name] = f"n/a: {exc}"
    if report.roos_general is not None and math.isinf(report.roos_general):
        report.flags["roos_general"] = "vacuous: 1 - 2e a2 <= 0"
    if with_j1 and (spec.identical_severities or _distinct_summands(spec) <= J1_MAX_DISTINCT):
        report.thm2_j1_tv = bound_thm2(spec, use_j1=True, policy=policy)
    elif with_j1:
        report.flags["thm2_j1_tv"] = "skipped: too many distinct summands"
    if exact:
        p = sum_distribution(spec, policy)
        cpo = compound_poisson(spec.lam, spec.mixture_q, policy, min_support=len(p))
        report.exact_tv = total_variation(p, cpo)
        report.exact_kl = relative_entropy(p, cpo)
    return report
