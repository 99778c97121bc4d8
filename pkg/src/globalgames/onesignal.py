"""Single net-size signal z = A(theta) - theta + rho with a general error law G.

Agents attack on high signals: given a conjectured attack function A_n the
posterior P[A_n(theta) > theta | z] is increasing in z, so the best response
is a cutoff z_n and the next attack function has the closed form

    A_{n+1}(theta) = 1 - G(z_n - A_n(theta) + theta).

Signals are reported relative to two reference points: the symmetric point
1/2 - t, where a mirror-symmetric conjecture puts the cutoff when c = 1/2,
and 1 - delta - t, the level above which a bounded conjecture makes agents
attack for sure.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .core import AttackFunction, EquilibriumReport, step_grid
from .dist import ErrorDistribution
from .errors import ConvergenceError, DomainError, InvariantViolation, NumericalError


@dataclass(frozen=True)
class OneSignalGrid:
    n_theta: int = 2001
    half_width_sd: float = 5.0
    min_half_width: float = 1.0
    posterior_tol: float = 1e-10
    cutoff_tol: float = 1e-12
    slope_slack: float = 1e-3  # finite-difference allowance on the derivative bound


@dataclass(frozen=True)
class Prop5Params:
    delta: float
    gamma: float
    c: float
    dist_rho: ErrorDistribution

    def __post_init__(self):
        for name in ("delta", "gamma"):
            v = getattr(self, name)
            if not (v > 0 and math.isfinite(v)):
                raise DomainError(f"{name} must be positive, got {v}")
        if not 0.0 < self.c < 1.0:
            raise DomainError(f"cost c must lie in (0, 1), got {self.c}")
        if not 2.0 * (self.delta + self.gamma) <= 1.0:
            raise DomainError("need delta + gamma <= 1/2 so the signal bands do not cross")
        if not self.dist_rho.symmetric:
            raise DomainError("signal noise must be symmetric")

    @property
    def slope_bound(self) -> float:
        g = float(self.dist_rho.pdf(self.gamma - self.delta))
        return g / (1.0 - g) if g < 1.0 else math.inf


@dataclass
class Prop5Check:
    cond17_margin: float
    cond18_margin: float
    cond19_margin: float
    satisfied: bool
    worst_xi: float
    xi_max: float

    def to_dict(self) -> dict:
        return dict(self.__dict__)


def check_prop5_conditions(p: Prop5Params, xi_max: Optional[float] = None, n_xi: int = 2001, n_a: int = 201) -> Prop5Check:
    """Margins (positive = holds) of the three sufficient conditions.

    The odds bound is scanned for xi in [1 - delta - gamma, xi_max] with the
    extreme over the two attack-level ranges taken on ``n_a``-point sub-grids,
    in log space. Signal values that no conjecture within the bounds can
    produce (zero numerator) contribute odds 0.
    """
    xi_lo = 1.0 - p.delta - p.gamma
    G = p.dist_rho
    if xi_max is None:
        xi_max = xi_lo + max(2.0, 12.0 * G.sd)
    if xi_max < xi_lo:
        raise DomainError(f"xi_max must be at least 1 - delta - gamma = {xi_lo}")
    xis = np.linspace(xi_lo, xi_max, n_xi)
    a_low = np.linspace(0.0, p.delta, n_a)
    a_high = np.linspace(1.0 - p.delta, 1.0, n_a)
    lnum = np.max(np.asarray(G.logsf(xis[:, None] - a_low[None, :])), axis=1)
    lden = np.min(np.asarray(G.logcdf(xis[:, None] - a_high[None, :])), axis=1)
    with np.errstate(invalid="ignore"):
        lratio = np.where(np.isneginf(lnum), -np.inf, lnum - lden)
    worst = int(np.argmax(lratio))
    lr = float(lratio[worst])
    lhs = 0.0 if lr == -np.inf else math.exp(min(lr, 700.0))
    m17 = (1.0 - p.c) / p.c - lhs
    m18 = float(G.cdf(p.gamma)) - (1.0 - p.delta)
    m19 = 1.0 - float(G.pdf(p.delta - p.gamma))
    return Prop5Check(m17, m18, m19, bool(m17 >= 0 and m18 >= 0 and m19 > 0), float(xis[worst]), float(xi_max))


# --------------------------------------------------------------------------
# posterior and cutoff


def _pieces(attack: AttackFunction):
    """Split the linear segments of ``attack`` where A(theta) - theta changes
    sign; returns (theta0, a0, theta1, a1, success) per piece."""
    th, a, _ = attack.nodes()
    keep = np.diff(th) > 0
    t0, t1 = th[:-1][keep], th[1:][keep]
    a0, a1 = a[:-1][keep], a[1:][keep]
    f0, f1 = a0 - t0, a1 - t1
    cross = (f0 > 0) != (f1 > 0)
    with np.errstate(invalid="ignore", divide="ignore"):
        tc = np.where(cross, t0 + f0 / (f0 - f1) * (t1 - t0), t1)
    # a crossing piece becomes [t0, tc] and [tc, t1]; A(tc) = tc
    p_t0 = np.concatenate([t0, tc[cross]])
    p_a0 = np.concatenate([a0, tc[cross]])
    p_t1 = np.concatenate([np.where(cross, tc, t1), t1[cross]])
    p_a1 = np.concatenate([np.where(cross, tc, a1), a1[cross]])
    succ = np.concatenate([np.where(cross, f0 > 0, f0 + f1 > 0), f1[cross] > 0])
    return p_t0, p_a0, p_t1, p_a1, succ


def _interior_logs(attack: AttackFunction, G: ErrorDistribution, z: np.ndarray):
    """Log of the exact theta integral of g(z - A(theta) + theta) over each
    piece. On a piece A is linear, so the argument is linear in theta and the
    integral is a cdf difference divided by its slope."""
    t0, a0, t1, a1, succ = _pieces(attack)
    h = t1 - t0
    k = 1.0 - (a1 - a0) / np.where(h > 0, h, 1.0)
    u0 = z[:, None] - a0[None, :] + t0[None, :]
    u1 = z[:, None] - a1[None, :] + t1[None, :]
    lo, hi = np.minimum(u0, u1), np.maximum(u0, u1)
    with np.errstate(divide="ignore"):
        flat = (hi - lo) < 1e-6 * G.sd
        exact = np.asarray(G.log_interval_mass(lo, hi)) - np.log(np.abs(np.where(flat, 1.0, k[None, :])))
        # nearly constant argument: midpoint rule, relative error O(width^2)
        mid = np.asarray(G.logpdf(0.5 * (lo + hi))) + np.log(np.where(h > 0, h, 0.0))[None, :]
    terms = np.where(flat, mid, exact)
    terms = np.where(h[None, :] > 0, terms, -np.inf)
    return terms, succ


def _posterior_logs(attack: AttackFunction, G: ErrorDistribution, z: np.ndarray, n: float, interior=None):
    terms, succ = _interior_logs(attack, G, z) if interior is None else interior
    lo, hi = attack.window
    centre = attack.jump if attack.jump is not None else 0.5 * (lo + hi)
    lo_edge, hi_edge = centre - n, centre + n
    th0, the = attack.theta[0], attack.theta[-1]
    a0, ae = float(attack.values[0]), float(attack.values[-1])
    # beyond the grid A is constant, so the theta integral is a cdf difference
    lm = G.log_interval_mass
    left = np.asarray(lm(z - a0 + lo_edge, z - a0 + th0))
    left_s = np.asarray(lm(z - a0 + lo_edge, z - a0 + min(th0, max(lo_edge, a0))))
    right = np.asarray(lm(z - ae + the, z - ae + hi_edge))
    right_s = np.asarray(lm(z - ae + the, z - ae + min(hi_edge, max(the, ae))))
    all_t = np.column_stack([terms, left, right])
    s_t = np.column_stack([np.where(succ[None, :], terms, -np.inf), left_s, right_s])
    return _lse(s_t), _lse(all_t)


def _lse(m):
    top = np.max(m, axis=1)
    safe = np.where(np.isfinite(top), top, 0.0)
    with np.errstate(divide="ignore"):
        out = safe + np.log(np.sum(np.exp(m - safe[:, None]), axis=1))
    return np.where(np.isfinite(top), out, -np.inf)


def success_posterior_1s(attack: AttackFunction, G: ErrorDistribution, z, tol: float = 1e-10) -> np.ndarray:
    """P[A(theta) > theta | z] under a flat prior (NaN where z is impossible)."""
    z = np.atleast_1d(np.asarray(z, dtype=float))
    lo, hi = attack.window
    n = 2.0 * (hi - lo)

    interior = _interior_logs(attack, G, z)

    def post(n):
        ln, ld = _posterior_logs(attack, G, z, n, interior)
        with np.errstate(invalid="ignore"):
            return np.where(np.isfinite(ld), np.exp(ln - ld), np.nan)

    prev = post(n)
    for _ in range(40):
        n *= 2.0
        cur = post(n)
        diff = np.abs(np.nan_to_num(cur) - np.nan_to_num(prev))
        if np.max(diff, initial=0.0) < tol:
            return cur
        prev = cur
    raise NumericalError("posterior did not settle as the prior window grew")


@dataclass
class Cutoff:
    z: float
    t: float
    delta: float
    gamma: float
    undefined_gap: Optional[tuple] = None

    @property
    def symmetric_offset(self) -> float:
        return self.z - (0.5 - self.t)

    @property
    def bound_offset(self) -> float:
        return self.z - (1.0 - self.delta - self.t)

    @property
    def in_narrow_band(self) -> bool:
        return abs(self.symmetric_offset) < self.gamma

    @property
    def in_bound_band(self) -> bool:
        lo = self.delta + self.gamma - self.t
        hi = 1.0 - self.delta - self.gamma - self.t
        return lo <= self.z <= hi

    def to_dict(self) -> dict:
        return {
            "z": self.z,
            "symmetric_offset": self.symmetric_offset,
            "bound_offset": self.bound_offset,
            "in_narrow_band": self.in_narrow_band,
            "in_bound_band": self.in_bound_band,
            "undefined_gap": None if self.undefined_gap is None else list(self.undefined_gap),
        }


def attack_cutoff(a_n: AttackFunction, p: Prop5Params, t: Optional[float] = None, grid: OneSignalGrid = OneSignalGrid()) -> Cutoff:
    """Lowest signal at which the posterior of success reaches c.

    Searched by bisection on [1/2 - t - gamma - 1, 1/2 - t + gamma + 1]. With
    bounded noise the posterior may be undefined on a gap of impossible
    signals between the two regimes; the cutoff is then placed mid-gap.
    """
    t = a_n.jump if t is None else t
    if t is None:
        raise DomainError("cutoff search needs the switch point t")
    if not a_n.within_bounds(p.delta, t):
        raise DomainError("conjectured attack function violates the 1 - delta / delta bounds")
    centre = 0.5 - t
    lo0, hi0 = centre - p.gamma - 1.0, centre + p.gamma + 1.0

    def post(z):
        return float(success_posterior_1s(a_n, p.dist_rho, z, grid.posterior_tol)[0])

    def search(nan_attacks):
        def attacks(z):
            v = post(z)
            return nan_attacks if math.isnan(v) else v >= p.c

        lo, hi = lo0, hi0
        if attacks(lo) or not attacks(hi):
            raise NumericalError(f"no posterior crossing of c = {p.c} on [{lo:g}, {hi:g}]")
        while hi - lo > grid.cutoff_tol:
            mid = 0.5 * (lo + hi)
            if mid in (lo, hi):
                break
            if attacks(mid):
                hi = mid
            else:
                lo = mid
        return 0.5 * (lo + hi)

    z_low = search(True)
    z_high = search(False)
    gap = None if z_high - z_low <= 2 * grid.cutoff_tol else (z_low, z_high)
    return Cutoff(0.5 * (z_low + z_high), t, p.delta, p.gamma, gap)


def best_response_1s(a_n: AttackFunction, z_n: float, p: Prop5Params, t: Optional[float] = None) -> AttackFunction:
    """Attack mass when everyone attacks on signals at or above ``z_n``."""
    t = a_n.jump if t is None else t
    th, a, _ = a_n.nodes()
    nxt = a_n.from_node_values(np.asarray(p.dist_rho.sf(z_n - a + th)))
    if t is not None and not nxt.within_bounds(p.delta, t):
        raise InvariantViolation("best response left the 1 - delta / delta bounds")
    return nxt


def initial_attack_1s(t: float, p: Prop5Params, grid: OneSignalGrid = OneSignalGrid()) -> AttackFunction:
    half = max(grid.half_width_sd * p.dist_rho.sd, grid.min_half_width)
    theta = step_grid(t, half, grid.n_theta)
    values = np.where(theta < t, 1.0 - p.delta, p.delta)
    return AttackFunction(theta, values, jump=t, left_limit=1.0 - p.delta)


def iterate_to_equilibrium_1s(
    t: float,
    p: Prop5Params,
    max_iter: int = 200,
    sup_tol: float = 1e-6,
    grid: OneSignalGrid = OneSignalGrid(),
    xi_max: Optional[float] = None,
) -> EquilibriumReport:
    """Alternate cutoff search and best response from the bounded step.

    Every iterate's cutoff, bounds and finite-difference slopes are recorded;
    the slope check uses ``grid.slope_slack`` as allowance.
    """
    cond = check_prop5_conditions(p, xi_max)
    if not cond.satisfied:
        raise DomainError(
            "sufficient conditions fail (margins "
            f"{cond.cond17_margin:.3g}, {cond.cond18_margin:.3g}, {cond.cond19_margin:.3g})"
        )
    a = initial_attack_1s(t, p, grid)
    bound = p.slope_bound
    report = EquilibriumReport("onesignal", t, a, False, 0, margins=cond.to_dict())
    report.bounds_ok.append(a.within_bounds(p.delta, t))
    slopes_ok, max_slopes = [], []
    for it in range(1, max_iter + 1):
        cut = attack_cutoff(a, p, t, grid)
        report.cutoffs.append(cut.to_dict())
        nxt = best_response_1s(a, cut.z, p, t)
        sl = nxt.slopes()
        max_slopes.append(float(np.max(np.abs(sl))))
        slopes_ok.append(bool(np.all(sl <= grid.slope_slack) and np.all(sl >= -bound - grid.slope_slack)))
        delta = nxt.sup_distance(a)
        report.deltas.append(delta)
        report.bounds_ok.append(nxt.within_bounds(p.delta, t))
        report.iterations = it
        a = nxt
        report.attack = a
        if delta < sup_tol:
            report.converged = True
            break
    report.diagnostics = {
        "slope_bound": bound,
        "max_abs_slope": max_slopes,
        "slopes_ok": slopes_ok,
        "monotone": bool(np.all(a.slopes() <= grid.slope_slack)),
    }
    if not report.converged:
        raise ConvergenceError(f"no convergence within {max_iter} iterations", trace=report)
    cut = attack_cutoff(a, p, t, grid)
    report.residual = best_response_1s(a, cut.z, p, t).sup_distance(a)
    return report
