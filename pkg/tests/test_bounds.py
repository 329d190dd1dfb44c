import math

import mpmath
import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from cpapprox.bounds import (
    BOUND_NAMES,
    NotApplicable,
    _h0,
    bound_barbour_hall,
    bound_bcl_stein,
    bound_from_j2,
    bound_lecam,
    bound_roos_equal,
    bound_roos_general,
    bound_thm1,
    bound_thm1_tv,
    bound_thm2,
    bound_thm3,
    dissimilarity,
    full_report,
    roos_g,
    severity_k,
    severity_k_detail,
    stein_factors,
)
from cpapprox.compound import SumSpec, SummandSpec, compound_bernoulli, compound_poisson, sum_distribution
from cpapprox.pmf import Severity, TruncationPolicy, geometric, severity_point_mass, unit_severity


def test_stein_factors_geometric():
    sf = stein_factors(5.0, geometric(0.2))
    assert sf.monotone_jq
    assert sf.delta == pytest.approx(1 / 2.4, rel=1e-12)
    r = math.sqrt(1 / 2.4)
    assert sf.h0 == pytest.approx(r * (2 - r), rel=1e-12)
    # hand value 0.87434 is rounded; the exact product is 0.874328
    assert sf.h0 == pytest.approx(0.87434, abs=1e-4)
    assert sf.h == sf.h0
    assert 0 < sf.g <= 1


def test_stein_factors_unit_severity():
    sf = stein_factors(4.0, unit_severity())
    assert sf.monotone_jq
    assert sf.delta == pytest.approx(0.25)
    assert stein_factors(0.5, unit_severity()).h0 == 1.0


def test_stein_factors_infinite_delta():
    q = Severity([0.0, 2 / 3, 1 / 3])
    sf = stein_factors(3.0, q)
    assert math.isinf(sf.delta)
    assert sf.h0 == 1.0 and sf.g == 1.0


def test_stein_factors_non_monotone():
    q = geometric(0.7)
    sf = stein_factors(2.0, q)
    assert not sf.monotone_jq
    assert sf.g is None
    assert sf.h == pytest.approx(math.exp(2.0) * min(1.0, 1 / (2.0 * q[1])), rel=1e-12)
    huge = stein_factors(40.0, q)
    assert huge.vacuous and math.isfinite(huge.h)


def test_h0_continuous_at_one():
    for d in (1 - 1e-9, 1 + 1e-9):
        assert abs(_h0(d) - 1) <= 1e-4


def test_thm1_examples():
    spec = SumSpec.equal(10, 0.5, geometric(0.3))
    assert bound_thm1(spec) == pytest.approx(0.5, abs=1e-15)
    assert bound_thm1_tv(spec) == pytest.approx(0.5, abs=1e-15)
    mixed = SumSpec([SummandSpec(0.1, geometric(0.2)), SummandSpec(0.1, geometric(0.3))])
    with pytest.raises(NotApplicable):
        bound_thm1(mixed)


def test_thm1_dominates_exact_kl():
    report = full_report(SumSpec.equal(20, 0.1, geometric(0.3)), with_j1=False)
    assert report.thm1_kl >= report.exact_kl.value - report.exact_kl.error_budget


def test_dissimilarity_examples():
    assert dissimilarity(SumSpec.equal(4, 0.2, geometric(0.3))) == 0.0
    spec = SumSpec([SummandSpec(0.5, unit_severity()), SummandSpec(0.5, severity_point_mass(2))])
    assert dissimilarity(spec) == pytest.approx(1.0, abs=1e-15)


def test_thm2_identical_reduces():
    spec = SumSpec.equal(30, 0.1, geometric(0.25))
    sf = stein_factors(spec.lam, spec.mixture_q)
    want = sf.h * spec.q * math.sqrt(30 * 0.001 / 0.9)
    assert bound_thm2(spec) == pytest.approx(want, rel=1e-12)


@settings(max_examples=20, deadline=None)
@given(st.lists(st.tuples(st.floats(0.02, 0.6), st.floats(0.05, 0.45)), min_size=1, max_size=5))
def test_thm2_j1_variant_is_sharper(items):
    spec = SumSpec(SummandSpec(p, geometric(a)) for p, a in items)
    assert bound_thm2(spec, use_j1=True) <= bound_thm2(spec) + 1e-9


def test_severity_k_truncation_levels_agree():
    a = severity_k(geometric(0.2, TruncationPolicy(1e-14)))
    b = severity_k(geometric(0.2, TruncationPolicy(1e-16)))
    assert abs(a - b) <= 1e-8
    assert a >= 0
    detail = severity_k_detail(geometric(0.2))
    assert 0 <= detail.tail_estimate < 1e-5


def test_severity_k_needs_full_support():
    with pytest.raises(NotApplicable):
        severity_k(unit_severity())
    with pytest.raises(NotApplicable):
        bound_thm3(SumSpec.equal(3, 0.1, unit_severity()))


def test_thm3_identical_form():
    q = geometric(0.3)
    spec = SumSpec.equal(12, 0.15, q)
    sf = stein_factors(spec.lam, q)
    assert bound_thm3(spec) == pytest.approx(sf.h * math.sqrt(severity_k(q) * 12 * 0.15**3), rel=1e-12)


def test_classical_examples():
    assert bound_lecam(SumSpec.equal(10, 0.1, unit_severity())) == pytest.approx(0.1)
    spec = SumSpec.equal(100, 0.05, geometric(0.2))
    assert bound_barbour_hall(spec) == pytest.approx(0.05, abs=1e-15)
    small = SumSpec.equal(5, 0.1, geometric(0.2))
    assert bound_barbour_hall(small) == bound_lecam(small)
    mixed = SumSpec([SummandSpec(0.1, geometric(0.2)), SummandSpec(0.1, geometric(0.3))])
    with pytest.raises(NotApplicable):
        bound_barbour_hall(mixed)
    with pytest.raises(NotApplicable):
        bound_roos_equal(mixed)


def test_roos_equal_values():
    # equal p gives theta = p
    theta = 0.05
    r = math.sqrt(theta)
    want = (3 / (4 * math.e) + 7 * r * (3 - 2 * r) / (6 * (1 - r) ** 2)) * theta
    assert bound_roos_equal(SumSpec.equal(40, theta, geometric(0.2))) == pytest.approx(want, abs=1e-12)
    tiny = 1e-10
    got = bound_roos_equal(SumSpec.equal(3, tiny, unit_severity())) / tiny
    assert got == pytest.approx(3 / (4 * math.e), rel=1e-3)


@pytest.mark.parametrize("z", [1e-12, 1e-6, 1e-3, 0.1, 0.49, 0.5, 0.9, 1.5])
def test_roos_g_against_high_precision(z):
    mpmath.mp.dps = 50
    zz = mpmath.mpf(z)
    want = 2 * mpmath.exp(zz) * (mpmath.exp(-zz) - 1 + zz) / zz**2
    assert roos_g(z) == pytest.approx(float(want), rel=1e-14)


def test_roos_g_limit():
    assert roos_g(1e-9) == pytest.approx(1.0, abs=1e-8)


def test_roos_general_identical_nu():
    spec = SumSpec.equal(50, 0.1, geometric(0.2))
    lam = spec.lam
    q = geometric(0.2).mean
    a2 = 50 * roos_g(0.2) * 0.01 * min(q * q / (math.e * lam), 1 / (2**1.5 * lam), 1.0)
    assert bound_roos_general(spec) == pytest.approx(a2 / (1 - 2 * math.e * a2), rel=1e-12)


def test_roos_general_needs_monotone():
    with pytest.raises(NotApplicable):
        bound_roos_general(SumSpec.equal(5, 0.1, geometric(0.7)))
    with pytest.raises(NotApplicable):
        bound_bcl_stein(SumSpec.equal(5, 0.1, geometric(0.7)))


def test_roos_general_vacuous_is_inf():
    assert math.isinf(bound_roos_general(SumSpec.equal(4, 0.9, unit_severity())))


def test_roos_general_best_on_spread_geometrics():
    for n in (25, 100, 400):
        al = np.linspace(0.15, 0.25, n)
        spec = SumSpec(SummandSpec(5 / n, geometric(a)) for a in al)
        r = full_report(spec, exact=False, with_j1=False)
        others = [r.thm2_tv, r.thm3_tv, r.lecam, r.bcl_stein]
        assert math.isfinite(r.roos_general)
        assert r.roos_general <= min(others)


def test_bound_from_j2_examples():
    q = geometric(0.3)
    assert bound_from_j2(compound_poisson(2.0, q), q, 2.0) <= 1e-4
    y = compound_bernoulli(0.2, q)
    single = SumSpec([SummandSpec(0.2, q)])
    # the information sum skips points below the support floor; K(Q) keeps them
    assert bound_from_j2(y, q, 0.2) == pytest.approx(bound_thm3(single), rel=1e-6)
    with pytest.raises(NotApplicable):
        bound_from_j2(compound_bernoulli(0.2, unit_severity()), unit_severity(), 0.2)


def test_bound_from_j2_valid_for_geometric_sum():
    spec = SumSpec.equal(10, 0.2, geometric(0.3))
    p = sum_distribution(spec)
    r = full_report(spec, with_j1=False)
    assert bound_from_j2(p, spec.mixture_q, spec.lam) >= r.exact_tv.value - r.exact_tv.error_budget


def test_full_report_figure_point():
    r = full_report(SumSpec.equal(100, 0.05, geometric(0.2)))
    assert r.violations() == []
    assert set(r.applicable_tv_bounds()) >= set(BOUND_NAMES) - {"thm1_kl"}
    assert 0 <= r.exact_tv.value <= 1


def test_full_report_single_summand():
    p = 0.3
    r = full_report(SumSpec([SummandSpec(p, geometric(0.3))]))
    kl = r.exact_kl.value - r.exact_kl.error_budget
    assert r.thm1_kl >= kl
    assert p * p / (1 - p) >= kl


def test_full_report_flags_unequal():
    spec = SumSpec([SummandSpec(0.1, geometric(0.2)), SummandSpec(0.2, geometric(0.3))])
    r = full_report(spec)
    assert r.barbour_hall is None and "barbour_hall" in r.flags
    assert r.roos_equal is None and "roos_equal" in r.flags
    assert r.thm1_kl is None
    assert r.violations() == []
    assert "roos_general" in r.notes
