import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from cpapprox.compound import compound_poisson, poisson
from cpapprox.divergences import DistanceResult, pinsker_bound, relative_entropy, total_variation
from cpapprox.pmf import Pmf, point_mass, unit_severity


def random_pmf(rng, size):
    w = rng.uniform(0, 1, size)
    return Pmf(w / w.sum())


pmf_weights = st.lists(st.floats(1e-3, 1.0), min_size=1, max_size=30)


def as_pmf(w):
    return Pmf(np.array(w) / math.fsum(w))


def test_tv_examples():
    p = Pmf([0.2, 0.3, 0.5])
    assert total_variation(p, p).value == 0.0
    assert total_variation(point_mass(0), point_mass(1)).value == 1.0


def test_tv_bernoulli_against_poisson():
    b = Pmf([0.5, 0.5])
    po = compound_poisson(0.5, unit_severity(), min_support=2)
    e = math.exp(-0.5)
    expect = 0.5 * (abs(0.5 - e) + abs(0.5 - 0.5 * e) + (1 - 1.5 * e))
    got = total_variation(b, po)
    assert abs(got.value - expect) <= got.error_budget + 1e-15


def test_tv_matches_threshold_set():
    rng = np.random.default_rng(11)
    for _ in range(200):
        a = random_pmf(rng, rng.integers(1, 31))
        b = random_pmf(rng, rng.integers(1, 31))
        n = max(len(a), len(b))
        x, y = a.padded(n), b.padded(n)
        best = max(x[x > y].sum() - y[x > y].sum(), y[y > x].sum() - x[y > x].sum(), 0.0)
        assert total_variation(a, b).value == pytest.approx(best, abs=1e-12)


def test_kl_examples():
    p = Pmf([0.2, 0.3, 0.5])
    assert relative_entropy(p, p).value == 0.0
    assert math.isinf(relative_entropy(point_mass(1), point_mass(0)).value)
    b = Pmf([0.5, 0.5])
    kl = relative_entropy(b, poisson(0.5, min_support=2)).value
    # single summand entropy bound p^3/(1-p)/lam with p = lam = 0.5
    assert kl <= 0.25


def test_kl_noise_goes_to_budget():
    p = Pmf([1 - 1e-16, 1e-16])
    out = relative_entropy(p, point_mass(0))
    assert math.isfinite(out.value)
    assert out.error_budget >= 1e-16


def test_kl_is_asymmetric():
    a, b = Pmf([0.9, 0.1]), Pmf([0.5, 0.5])
    assert relative_entropy(a, b).value != pytest.approx(relative_entropy(b, a).value)


def test_pinsker_examples():
    assert pinsker_bound(0.0) == 0.0
    assert pinsker_bound(2.0) == 1.0
    assert pinsker_bound(0.25) == pytest.approx(0.35355339059327373)
    with pytest.raises(ValueError):
        pinsker_bound(-1.0)


def test_distance_result_validation():
    with pytest.raises(ValueError):
        DistanceResult(-0.1)
    assert DistanceResult(0.1, 0.3).lower == 0.0


@settings(max_examples=200, deadline=None)
@given(pmf_weights, pmf_weights)
def test_pinsker_inequality(wa, wb):
    a, b = as_pmf(wa), as_pmf(wb)
    kl = relative_entropy(a, b).value
    tv = total_variation(a, b).value
    if math.isfinite(kl):
        assert tv * tv <= 0.5 * kl + 1e-9


@settings(max_examples=100, deadline=None)
@given(pmf_weights, pmf_weights, pmf_weights)
def test_tv_symmetric_and_triangle(wa, wb, wc):
    a, b, c = as_pmf(wa), as_pmf(wb), as_pmf(wc)
    ab = total_variation(a, b).value
    assert ab == total_variation(b, a).value
    assert 0.0 <= ab <= 1.0 + 1e-15
    assert ab <= total_variation(a, c).value + total_variation(c, b).value + 1e-12
