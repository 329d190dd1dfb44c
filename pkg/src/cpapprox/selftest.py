"""Quick in-process invariant checks run by ``cpapprox selftest``."""

from __future__ import annotations

import math
from typing import Callable

import numpy as np

from .bounds import _h0, full_report
from .compound import SumSpec, SummandSpec, compound, compound_bernoulli, compound_poisson, poisson
from .divergences import relative_entropy, total_variation
from .experiments import run_proposition_checks
from .information import (
    j1_size_biased,
    j2_katti_panjer,
    johnstone_macgibbon,
    projection_residual_r1,
    projection_residual_r2,
)
from .pmf import Pmf, TruncationPolicy, geometric, mean, unit_severity, variance


def _panjer_vs_mixture() -> str | None:
    policy = TruncationPolicy(1e-14)
    q = geometric(0.3, policy)
    a = compound_poisson(2.0, q, policy)
    b = compound(q, poisson(2.0, policy), policy)
    n = min(len(a), len(b))
    err = float(np.max(np.abs(a.probs[:n] - b.probs[:n])))
    return None if err <= 1e-10 else f"sup difference {err:.3g}"


def _j1_single() -> str | None:
    for p in (0.1, 0.5, 0.9):
        got = j1_size_biased(SumSpec([SummandSpec(p, geometric(0.3))])).value
        if abs(got - p * p / (1 - p)) > 1e-10:
            return f"p={p}: {got!r}"
    return None


def _j2_zero_at_target() -> str | None:
    q = geometric(0.2)
    val = j2_katti_panjer(compound_poisson(2.0, q), q, 2.0).value
    return None if val <= 1e-8 else f"J2 = {val:.3g}"


def _jm_identity() -> str | None:
    # full-support test pmf: an even mixture of two Poisson laws
    a, b = poisson(1.0, min_support=80), poisson(4.0, min_support=80)
    y = Pmf(0.5 * a.padded(81) + 0.5 * b.padded(81), 0.5 * (a.tail_mass + b.tail_mass))
    lam = mean(y)
    lhs = j2_katti_panjer(y, unit_severity(), lam).value
    rhs = lam**2 * johnstone_macgibbon(y).value + variance(y) - 2 * lam
    return None if abs(lhs - rhs) <= 1e-8 else f"|diff| = {abs(lhs - rhs):.3g}"


def _projections() -> str | None:
    spec = SumSpec([SummandSpec(0.3, geometric(0.2)), SummandSpec(0.4, geometric(0.3))])
    r1 = projection_residual_r1(spec)
    r2, _ = projection_residual_r2(spec)
    if r1 > 1e-8 or r2 > 1e-6:
        return f"r1 residual {r1:.3g}, r2 residual {r2:.3g}"
    return None


def _validity() -> str | None:
    spec = SumSpec.equal(100, 0.05, geometric(0.2))
    bad = full_report(spec, with_j1=False).violations()
    return ", ".join(bad) or None


def _proposition() -> str | None:
    report = run_proposition_checks()
    bad = report.failures(1) + report.failures(3)
    return None if not bad else f"{len(bad)} grid points fail"


def _stein_continuity() -> str | None:
    worst = max(abs(_h0(1 + d) - 1) for d in (-1e-9, 1e-9))
    return None if worst <= 1e-4 else f"h0 jump {worst:.3g}"


def _pinsker_and_single_kl() -> str | None:
    for p in (0.1, 0.5, 0.9):
        q = geometric(0.3)
        y = compound_bernoulli(p, q)
        cpo = compound_poisson(p, q, min_support=len(y))
        kl = relative_entropy(y, cpo).value
        tv = total_variation(y, cpo).value
        if kl > p * p / (1 - p) + 1e-9:
            return f"p={p}: KL {kl!r} above p^2/(1-p)"
        if tv * tv > kl / 2 + 1e-9:
            return f"p={p}: Pinsker fails"
    return None


CHECKS: dict[str, Callable[[], str | None]] = {
    "panjer_vs_poisson_mixture": _panjer_vs_mixture,
    "j1_single_summand": _j1_single,
    "j2_zero_at_target": _j2_zero_at_target,
    "j2_jm_identity": _jm_identity,
    "projection_identities": _projections,
    "figure_2a_validity": _validity,
    "proposition_parts_1_3": _proposition,
    "stein_h0_continuity": _stein_continuity,
    "pinsker_and_single_kl": _pinsker_and_single_kl,
}


def run_selftest() -> list[tuple[str, bool, str]]:
    results = []
    for name, check in CHECKS.items():
        detail = check()
        results.append((name, detail is None, detail or ""))
    return results
