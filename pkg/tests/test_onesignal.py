import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy.integrate import quad
from scipy.optimize import brentq
from scipy.special import ndtr

from globalgames import onesignal as os1
from globalgames.core import AttackFunction, step_grid
from globalgames.dist import ErrorDistribution as E
from globalgames.errors import ConvergenceError, DomainError, NumericalError


def params(G, c=0.5, delta=0.2, gamma=0.1):
    return os1.Prop5Params(delta, gamma, c, G)


def step_posterior(G, z, t, delta):
    """Closed form under the bounded step: the theta integral of g on each
    side of t is a single cdf value."""
    s = np.asarray(G.cdf(z - (1 - delta) + t))
    f = np.asarray(G.sf(z - delta + t))
    with np.errstate(invalid="ignore"):
        return s / (s + f)


# ---- sufficient conditions ----------------------------------------------------

def test_precise_normal_noise_satisfies_all_conditions():
    chk = os1.check_prop5_conditions(params(E.normal(1e4)))
    assert chk.satisfied
    assert chk.cond18_margin == pytest.approx(ndtr(10.0) - 0.8, abs=1e-15)
    # g(0.1) = 100 phi(10) is negligible
    assert chk.cond19_margin == pytest.approx(1.0, abs=1e-18)
    assert chk.cond17_margin > 0


def test_unit_precision_fails_cdf_condition():
    chk = os1.check_prop5_conditions(params(E.normal(1.0)))
    assert ndtr(0.1) == pytest.approx(0.54, abs=0.005)
    assert chk.cond18_margin == pytest.approx(ndtr(0.1) - 0.8, abs=1e-15)
    assert not chk.satisfied


def test_density_condition_fails_at_moderate_precision():
    chk = os1.check_prop5_conditions(params(E.normal(400.0)))
    g = 20.0 * math.exp(-2.0) / math.sqrt(2 * math.pi)
    assert chk.cond19_margin == pytest.approx(1.0 - g, abs=1e-14)
    assert chk.cond19_margin < 0 and not chk.satisfied


def test_narrow_uniform_noise_has_full_cdf():
    chk = os1.check_prop5_conditions(params(E.uniform(0.05)))
    assert chk.cond18_margin == pytest.approx(0.2, abs=1e-15)
    assert chk.cond19_margin == 1.0
    assert chk.satisfied


def test_xi_max_below_range_rejected():
    with pytest.raises(DomainError):
        os1.check_prop5_conditions(params(E.normal(1e4)), xi_max=0.6)


@pytest.mark.parametrize("delta,gamma,c", [(0.3, 0.25, 0.5), (0.0, 0.1, 0.5), (0.2, 0.1, 1.0)])
def test_parameter_validation(delta, gamma, c):
    with pytest.raises(DomainError):
        os1.Prop5Params(delta, gamma, c, E.normal(1e4))


def test_slope_bound_value():
    p = params(E.normal(900.0))
    g = 30.0 * math.exp(-0.5 * 9.0) / math.sqrt(2 * math.pi)
    assert p.slope_bound == pytest.approx(g / (1 - g), rel=1e-13)


# ---- posterior and cutoff -----------------------------------------------------

@settings(max_examples=40)
@given(
    alpha=st.floats(4.0, 1e4),
    t=st.floats(0.3, 0.7),
    z=st.floats(-0.6, 0.6),
)
def test_posterior_matches_step_closed_form(alpha, t, z):
    G = E.normal(alpha)
    p = params(G)
    a = os1.initial_attack_1s(t, p)
    got = os1.success_posterior_1s(a, G, z)[0]
    want = float(step_posterior(G, z, t, 0.2))
    assert got == pytest.approx(want, abs=1e-12)


def test_posterior_matches_quadrature_for_crossing_conjecture():
    # a ramp that crosses A = theta inside a segment
    th = np.linspace(-2.0, 3.0, 21)
    vals = np.clip(0.9 - 0.3 * (th - 0.2), 0.0, 1.0)
    a = AttackFunction(th, vals)
    G = E.normal(4.0)

    def g(u):
        return 2.0 * math.exp(-2.0 * u * u) / math.sqrt(2 * math.pi)

    def A(x):
        return float(np.interp(x, th, vals))

    root = brentq(lambda x: A(x) - x, -2.0, 3.0)
    for z in (-0.4, 0.0, 0.3):
        f = lambda x: g(z - A(x) + x)
        brk = list(th) + [root]
        succ = quad(f, -60, root, points=[b for b in brk if b < root], limit=400, epsabs=1e-14)[0]
        fail = quad(f, root, 60, points=[b for b in brk if b > root], limit=400, epsabs=1e-14)[0]
        want = succ / (succ + fail)
        assert os1.success_posterior_1s(a, G, z)[0] == pytest.approx(want, abs=1e-10)


def test_posterior_nan_on_impossible_signals():
    G = E.uniform(0.05)
    a = os1.initial_attack_1s(0.5, params(G))
    post = os1.success_posterior_1s(a, G, np.array([-0.5, 0.0, 0.5]))
    assert post[0] == 0.0 and post[2] == 1.0
    assert math.isnan(post[1])


@pytest.mark.parametrize("t", [0.3, 0.45, 0.5, 0.62])
def test_symmetric_cutoff(t):
    p = params(E.normal(100.0))
    cut = os1.attack_cutoff(os1.initial_attack_1s(t, p), p)
    assert cut.z == pytest.approx(0.5 - t, abs=1e-10)
    assert cut.in_narrow_band and cut.in_bound_band
    assert cut.bound_offset == pytest.approx(cut.z - (0.8 - t))


@pytest.mark.parametrize("c", [0.2, 0.35, 0.7, 0.9])
def test_cutoff_matches_closed_form_root(c):
    G = E.normal(100.0)
    p = params(G, c=c)
    t = 0.5
    cut = os1.attack_cutoff(os1.initial_attack_1s(t, p), p)
    root = brentq(lambda z: float(step_posterior(G, z, t, 0.2)) - c, -1.0, 1.0, xtol=1e-14)
    assert cut.z == pytest.approx(root, abs=1e-9)


@pytest.mark.parametrize("G", [E.normal(1e4), E.normal(900.0), E.normal(25.0)], ids=["a1e4", "a900", "a25"])
@pytest.mark.parametrize("c", [0.3, 0.5, 0.8])
def test_posterior_straddles_cutoff(G, c):
    p = os1.Prop5Params(0.2, 0.1, c, G)
    a = os1.initial_attack_1s(0.45, p)
    z = os1.attack_cutoff(a, p).z
    below, above = os1.success_posterior_1s(a, G, np.array([z - 1e-6, z + 1e-6]))
    assert above >= c >= below


def test_cutoff_mid_gap_for_bounded_noise():
    G = E.uniform(0.05)
    p = params(G)
    cut = os1.attack_cutoff(os1.initial_attack_1s(0.5, p), p)
    # signals reachable from the two regimes: [0.25, 0.35] and [-0.35, -0.25] shifted
    lo, hi = cut.undefined_gap
    assert lo == pytest.approx(-0.25, abs=1e-9)
    assert hi == pytest.approx(0.25, abs=1e-9)
    assert cut.z == pytest.approx(0.0, abs=1e-12)


def test_cutoff_without_crossing(monkeypatch):
    p = params(E.normal(1e4))
    a = os1.initial_attack_1s(0.5, p)
    monkeypatch.setattr(os1, "success_posterior_1s", lambda *args: np.array([0.1]))
    with pytest.raises(NumericalError):
        os1.attack_cutoff(a, p)


def test_cutoff_rejects_unbounded_conjecture():
    p = params(E.normal(1e4))
    a = os1.initial_attack_1s(0.5, p)
    bad = a.from_node_values(np.full(a.nodes()[0].size, 0.5))
    with pytest.raises(DomainError):
        os1.attack_cutoff(bad, p)


# ---- best response ------------------------------------------------------------

def test_best_response_uniform_ramp():
    sigma, delta, t, z = 0.05, 0.2, 0.5, 0.02
    G = E.uniform(sigma)
    p = params(G)
    a0 = os1.initial_attack_1s(t, p)
    a1 = os1.best_response_1s(a0, z, p)
    th, v, _ = a1.nodes()
    j = a0.jump_index
    # left of t: ramp from 1 down to 0 between (1-delta) - z -/+ sigma
    left = np.clip(((1 - delta) - z + sigma - th) / (2 * sigma), 0.0, 1.0)
    right = np.clip((delta - z + sigma - th) / (2 * sigma), 0.0, 1.0)
    want = np.concatenate([left[: j + 1], right[j + 1 :]])
    assert np.allclose(v, want, atol=1e-15)


def test_best_response_depends_on_shifted_state_only():
    G = E.normal(900.0)
    p = params(G)
    a0 = os1.initial_attack_1s(0.5, p)
    th, v, _ = a0.nodes()
    a1 = os1.best_response_1s(a0, 0.01, p)
    assert np.array_equal(a1.node_values(), np.asarray(G.sf(0.01 - v + th)))


def test_best_response_bounds_on_thousand_point_grid():
    grid = os1.OneSignalGrid(n_theta=1001)
    p = params(E.normal(1e4))
    a0 = os1.initial_attack_1s(0.5, p, grid)
    assert a0.theta.size == 1001
    cut = os1.attack_cutoff(a0, p, grid=grid)
    a1 = os1.best_response_1s(a0, cut.z, p)
    assert a1.within_bounds(0.2, 0.5)


@settings(max_examples=20)
@given(seed=st.integers(0, 2**32 - 1), t=st.floats(0.3, 0.7))
def test_bounds_preserved_from_random_bounded_conjecture(seed, t):
    rng = np.random.default_rng(seed)
    p = params(E.normal(1e4))
    th = step_grid(t, 1.0, 201)
    vals = np.where(th < t, rng.uniform(0.8, 1.0, th.size), rng.uniform(0.0, 0.2, th.size))
    a = AttackFunction(th, vals, jump=t, left_limit=float(rng.uniform(0.8, 1.0)))
    cut = os1.attack_cutoff(a, p)
    assert cut.in_bound_band
    assert os1.best_response_1s(a, cut.z, p).within_bounds(0.2, t)


# ---- iteration -----------------------------------------------------------------

@pytest.mark.parametrize("G", [E.normal(1e4), E.normal(900.0), E.uniform(0.05)], ids=["a1e4", "a900", "unif"])
@pytest.mark.parametrize("t", [0.35, 0.5, 0.65])
def test_iteration_converges_with_bounds(G, t):
    p = params(G)
    rep = os1.iterate_to_equilibrium_1s(t, p)
    assert rep.converged and rep.residual < 1e-4
    assert all(rep.bounds_ok)
    assert all(rep.diagnostics["slopes_ok"])
    assert rep.diagnostics["monotone"]
    for cut in rep.cutoffs:
        assert cut["in_narrow_band"] and cut["in_bound_band"]
    assert all(m <= p.slope_bound + 1e-3 for m in rep.diagnostics["max_abs_slope"])


def test_uniform_noise_limit_is_exact():
    rep = os1.iterate_to_equilibrium_1s(0.5, params(E.uniform(0.05)))
    assert rep.residual == 0.0


def test_iteration_requires_conditions():
    with pytest.raises(DomainError):
        os1.iterate_to_equilibrium_1s(0.5, params(E.normal(1.0)))


def test_iteration_budget_exhaustion_carries_trace():
    with pytest.raises(ConvergenceError) as info:
        os1.iterate_to_equilibrium_1s(0.5, params(E.normal(1e4)), max_iter=1, sup_tol=0.0)
    rep = info.value.trace
    assert not rep.converged and rep.iterations == 1
    assert len(rep.cutoffs) == 1
