import math

import mpmath
import numpy as np
import pytest
from hypothesis import given, strategies as st

from globalgames.dist import ErrorDistribution, integrate, normal_cdf, normal_pdf, normal_quantile
from globalgames.errors import ConfigError, DomainError, IntegrationError

mpmath.mp.dps = 40


def oracle_cdf(x):
    # independent high-precision erfc
    return float(mpmath.erfc(-mpmath.mpf(x) / mpmath.sqrt(2)) / 2)


def oracle_mass(lo, hi, s=1.0):
    # difference taken on the small tail so the oracle itself does not cancel
    lo, hi = mpmath.mpf(lo) * s, mpmath.mpf(hi) * s
    if lo + hi > 0:
        return mpmath.ncdf(-lo) - mpmath.ncdf(-hi)
    return mpmath.ncdf(hi) - mpmath.ncdf(lo)


def bisect_quantile(p, lo=-40.0, hi=40.0):
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        if oracle_cdf(mid) < p:
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)


DISTS = [
    ErrorDistribution.normal(1.0),
    ErrorDistribution.normal(16.0),
    ErrorDistribution.normal(1e4),
    ErrorDistribution.uniform(0.4),
    ErrorDistribution.tabulated([0.0, 0.5, 1.0, 1.5], [1.0, 0.8, 0.3, 0.0]),
]


# ---- normal_cdf / quantile -----------------------------------------------

def test_cdf_at_zero_is_half():
    assert normal_cdf(0.0) == 0.5


def test_cdf_reflection():
    assert normal_cdf(1.3) + normal_cdf(-1.3) == pytest.approx(1.0, abs=1e-15)


def test_cdf_at_1_6449_matches_oracle():
    assert oracle_cdf(1.6449) == pytest.approx(0.95, abs=1e-4)
    assert normal_cdf(1.6449) == pytest.approx(0.95, abs=1e-4)


@given(st.floats(-37.0, 37.0))
def test_cdf_matches_mpmath(x):
    assert abs(normal_cdf(x) - oracle_cdf(x)) <= 1e-12


def test_cdf_vectorised_matches_scalar():
    xs = np.linspace(-9, 9, 101)
    vec = normal_cdf(xs)
    assert np.allclose(vec, [normal_cdf(float(x)) for x in xs], rtol=0, atol=1e-15)


def test_cdf_monotone_dense():
    v = normal_cdf(np.linspace(-10, 10, 10_000))
    assert np.all(np.diff(v) >= 0)


def test_quantile_median_and_symmetry():
    assert normal_quantile(0.5) == 0.0
    assert normal_quantile(0.8) == pytest.approx(-normal_quantile(0.2), abs=1e-15)


def test_quantile_0_8_matches_bisection_oracle():
    q = bisect_quantile(0.8)
    assert q == pytest.approx(0.8416, abs=1e-4)
    assert normal_quantile(0.8) == pytest.approx(q, abs=1e-12)


@given(st.floats(1e-12, 1 - 1e-12))
def test_quantile_roundtrip(p):
    assert abs(normal_cdf(normal_quantile(p)) - p) <= 1e-10


@pytest.mark.parametrize("p", [0.0, 1.0, -0.1, 1.5, float("nan")])
def test_quantile_domain(p):
    with pytest.raises(DomainError):
        normal_quantile(p)


def test_pdf_value():
    assert normal_pdf(0.0) == pytest.approx(1 / math.sqrt(2 * math.pi), rel=1e-15)


# ---- integrate -------------------------------------------------------------

def test_integrate_constant():
    assert integrate(lambda x: 1.0, 0.0, 3.0) == pytest.approx(3.0, abs=1e-12)


def test_integrate_normal_pdf_mass():
    assert integrate(normal_pdf, -8.0, 8.0) == pytest.approx(1.0, abs=1e-10)


def test_integrate_partial_mass_against_cdf_oracle():
    expected = oracle_cdf(1.6449) - 0.5
    assert expected == pytest.approx(0.45, abs=1e-4)
    assert integrate(normal_pdf, 0.0, 1.6449) == pytest.approx(expected, abs=1e-10)


def test_integrate_infinite_limits_truncate():
    assert integrate(normal_pdf, -math.inf, math.inf) == pytest.approx(1.0, abs=1e-10)


def test_integrate_reversed_limits():
    assert integrate(math.sin, 1.0, 0.0) == pytest.approx(-(1 - math.cos(1.0)), abs=1e-10)


def test_integrate_deterministic():
    f = lambda x: math.exp(-x * x) * math.cos(3 * x)
    assert integrate(f, -3, 3) == integrate(f, -3, 3)


def test_integrate_failure_carries_estimate():
    with pytest.raises(IntegrationError) as err:
        integrate(lambda x: math.sin(1.0 / x) if x else 0.0, 1e-6, 1.0, tol=1e-14, max_evals=2000)
    assert err.value.estimate is not None and math.isfinite(err.value.estimate)


def test_integrate_nonfinite_integrand():
    with pytest.raises(IntegrationError):
        integrate(lambda x: math.inf if x == 0 else 1.0 / x, -1.0, 1.0)


# ---- ErrorDistribution -----------------------------------------------------

@pytest.mark.parametrize("d", DISTS, ids=lambda d: d.kind)
def test_density_integrates_to_one(d):
    lo, hi = d.support
    lo = max(lo, -12 * d.sd)
    hi = min(hi, 12 * d.sd)
    # split at the centre and at table nodes so kinks sit on panel ends
    cuts = sorted({lo, 0.0, hi, *([x for x in (d.table_x or ()) if lo < x < hi]), *([-x for x in (d.table_x or ()) if lo < -x < hi])})
    total = sum(integrate(d.pdf, a, b, 1e-12) for a, b in zip(cuts[:-1], cuts[1:]))
    assert total == pytest.approx(1.0, abs=1e-9)


@pytest.mark.parametrize("d", DISTS, ids=lambda d: d.kind)
def test_cdf_nondecreasing_on_dense_grid(d):
    x = np.linspace(-5 * d.sd - 1, 5 * d.sd + 1, 10_000)
    assert np.all(np.diff(d.cdf(x)) >= 0)


@pytest.mark.parametrize("d", DISTS, ids=lambda d: d.kind)
@given(x=st.floats(-3.0, 3.0))
def test_symmetry(d, x):
    assert d.pdf(-x) == pytest.approx(d.pdf(x), abs=1e-14)
    assert d.cdf(-x) == pytest.approx(1.0 - d.cdf(x), abs=1e-14)


@pytest.mark.parametrize("d", DISTS, ids=lambda d: d.kind)
@given(u=st.floats(0.001, 0.999))
def test_quantile_cdf_roundtrip_interior(d, u):
    x = d.ppf(u)
    assert d.cdf(x) == pytest.approx(u, abs=1e-10)


@pytest.mark.parametrize("d", DISTS, ids=lambda d: d.kind)
def test_cdf_is_integral_of_pdf(d):
    for x in (-0.3 * d.sd, 0.2 * d.sd, 1.1 * d.sd):
        lo = max(d.support[0], -12 * d.sd)
        cuts = sorted({lo, x, *([v for v in (d.table_x or ()) if lo < v < x]), *([-v for v in (d.table_x or ()) if lo < -v < x]), *([0.0] if lo < 0 < x else [])})
        mass = sum(integrate(d.pdf, a, b, 1e-13) for a, b in zip(cuts[:-1], cuts[1:]))
        assert mass == pytest.approx(d.cdf(x), abs=1e-9)


def test_uniform_cdf_exact():
    d = ErrorDistribution.uniform(0.4)
    assert d.cdf(-0.4) == 0.0 and d.cdf(-1.0) == 0.0
    assert d.cdf(0.4) == 1.0 and d.cdf(3.0) == 1.0
    for x in (-0.3, -0.1, 0.0, 0.25):
        assert d.cdf(x) == pytest.approx((x + 0.4) / 0.8, abs=1e-16)
    assert d.support == (-0.4, 0.4)


@given(lo=st.floats(-37, 37), width=st.floats(1e-3, 5))
def test_interval_mass_agrees_with_mpmath(lo, width):
    d = ErrorDistribution.normal(1.0)
    hi = lo + width
    expect = float(oracle_mass(lo, hi))
    got = d.interval_mass(lo, hi)
    assert got == pytest.approx(expect, rel=1e-9, abs=1e-300)


@given(lo=st.floats(-30, 30), width=st.floats(1e-3, 5))
def test_log_interval_mass_consistent(lo, width):
    d = ErrorDistribution.normal(4.0)
    hi = lo + width
    expect = mpmath.log(oracle_mass(lo, hi, 2))
    assert d.log_interval_mass(lo, hi) == pytest.approx(float(expect), rel=1e-8, abs=1e-10)


def test_logcdf_deep_tail_is_finite():
    d = ErrorDistribution.normal(1e4)
    v = d.logcdf(-0.5)
    assert math.isfinite(v)
    assert v == pytest.approx(float(mpmath.log(mpmath.ncdf(-50))), rel=1e-10)


def test_samples_have_right_moments(rng):
    for d in DISTS:
        s = d.sample(rng, 200_000)
        assert abs(s.mean()) < 6 * d.sd / math.sqrt(2e5)
        assert s.std() == pytest.approx(d.sd, rel=0.02)


def test_config_roundtrip_and_strictness():
    for d in DISTS:
        assert ErrorDistribution.from_config(d.to_config()) == d
    with pytest.raises(ConfigError) as err:
        ErrorDistribution.from_config({"kind": "normal", "precision": 1.0, "mean": 0.0})
    assert err.value.key == "mean"
    with pytest.raises(ConfigError):
        ErrorDistribution.from_config({"kind": "cauchy"})


@pytest.mark.parametrize("bad", [dict(kind="normal", precision=0.0), dict(kind="uniform", half_width=-1.0)])
def test_invalid_parameters(bad):
    with pytest.raises(DomainError):
        ErrorDistribution(**bad)
