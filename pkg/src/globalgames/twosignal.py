"""Separate private signals over the fundamental and over the aggregate attack.

Each agent sees x = theta + e_x and y = A(theta) + e_y and attacks when the
posterior probability that the attack succeeds, P[A(theta) > theta | x, y],
is at least the cost c (ties attack). An attack function is an equilibrium
when the mass of agents it induces to attack reproduces it at every theta.

Numerics, all tied to :class:`TwoSignalGrid`:

* The flat prior on theta is the limit of uniform priors on [m - N, m + N]
  (m = jump location or window centre). Inside the attack function's grid the
  theta integral is a trapezoid sum; beyond it A is constant and the integral
  is a cdf difference. N doubles until the posterior settles.
* The posterior is tabulated on an (x, y) grid with two matrix products.
  y-likelihood rows are rescaled by their maximum so that precise action
  signals do not underflow.
* In every x row the attack set is a union of y intervals. Interval ends that
  carry probability mass are bisected against the pointwise log-posterior;
  the y integral is then a sum of cdf differences and the x integral uses the
  exact probability of each x cell.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .core import AttackFunction, EquilibriumReport, GameParams, step_grid
from .dist import ErrorDistribution, _mass_from_tails
from .errors import ConvergenceError, DomainError, InvariantViolation, NumericalError


@dataclass(frozen=True)
class TwoSignalGrid:
    n_theta: int = 2001
    half_width_sd: float = 5.0  # theta window half-width, in max signal sd
    n_x: int = 1201
    n_y: int = 1201
    signal_sd: float = 6.0  # signal grids reach this many sd past the theta/A range
    posterior_tol: float = 1e-8  # prior-window doubling stops below this change
    boundary_tol: float = 1e-13
    mass_floor: float = 1e-15  # attack-set edges in cells lighter than this are not refined

    def __post_init__(self):
        if self.n_theta < 3 or self.n_theta % 2 == 0:
            raise DomainError("n_theta must be an odd integer >= 3")
        if self.n_x < 2 or self.n_y < 2:
            raise DomainError("signal grids need at least two points")


@dataclass(frozen=True)
class Prop4Params:
    """Bounds and cost for the iterated equilibria with general signal noise.

    ``delta`` bounds how far the attack stays from 0/1 away from the switch,
    ``gamma`` is the action-signal slack and ``xi`` the fundamental-signal
    slack around the switch point.
    """

    delta: float
    gamma: float
    xi: float
    c: float
    dist_x: ErrorDistribution
    dist_y: ErrorDistribution

    def __post_init__(self):
        for name in ("delta", "gamma", "xi"):
            v = getattr(self, name)
            if not (v > 0 and math.isfinite(v)):
                raise DomainError(f"{name} must be positive, got {v}")
        if not 0.0 < self.c < 1.0:
            raise DomainError(f"cost c must lie in (0, 1), got {self.c}")
        if not 1.0 - self.delta >= self.gamma:
            raise DomainError("side condition 1 - delta >= gamma fails")
        if not 1.0 > 3.0 * self.delta + 2.0 * self.gamma:
            raise DomainError("side condition 1 > 3 delta + 2 gamma fails")
        if not (self.dist_x.symmetric and self.dist_y.symmetric):
            raise DomainError("signal noise must be symmetric")

    @property
    def game(self) -> GameParams:
        return GameParams(self.c, dist_x=self.dist_x, dist_y=self.dist_y)

    @property
    def t_interval(self) -> tuple:
        return (self.delta + self.gamma, 1.0 - self.delta - self.gamma)


# --------------------------------------------------------------------------
# posterior machinery


class _Conjecture:
    """An attack function conjectured by the agents, ready for posterior work."""

    def __init__(self, attack: AttackFunction, game: GameParams, grid: TwoSignalGrid):
        if game.dist_x is None or game.dist_y is None:
            raise DomainError("two-signal model needs dist_x and dist_y")
        self.attack = attack
        self.c = game.c
        self.dx = game.dist_x
        self.dy = game.dist_y
        self.grid = grid
        self.th, self.a, self.w = attack.nodes()
        self.succ = self.a > self.th
        lo, hi = attack.window
        self.centre = attack.jump if attack.jump is not None else 0.5 * (lo + hi)
        self.n0 = max(self.centre - lo, hi - self.centre) * 2.0
        with np.errstate(divide="ignore"):
            self.logw = np.log(self.w)

    # tails: theta beyond the grid, where A is frozen at its edge values
    def _tail_masses(self, xs, n):
        th0, the = self.th[0], self.th[-1]
        a0, ae = self.a[0], self.a[-1]
        lo_edge, hi_edge = self.centre - n, self.centre + n
        # mass of theta in [u, v] seen through x: P(x - v < e_x <= x - u)
        left = self.dx.interval_mass(xs - th0, xs - lo_edge)
        left_s = self.dx.interval_mass(xs - min(th0, max(lo_edge, a0)), xs - lo_edge)
        right = self.dx.interval_mass(xs - hi_edge, xs - the)
        right_s = self.dx.interval_mass(xs - min(hi_edge, max(the, ae)), xs - the)
        return np.asarray(left), np.asarray(left_s), np.asarray(right), np.asarray(right_s)

    def _log_tail_masses(self, xs, n):
        th0, the = self.th[0], self.th[-1]
        a0, ae = self.a[0], self.a[-1]
        lo_edge, hi_edge = self.centre - n, self.centre + n
        lm = self.dx.log_interval_mass
        return (
            np.asarray(lm(xs - th0, xs - lo_edge)),
            np.asarray(lm(xs - min(th0, max(lo_edge, a0)), xs - lo_edge)),
            np.asarray(lm(xs - hi_edge, xs - the)),
            np.asarray(lm(xs - min(hi_edge, max(the, ae)), xs - the)),
        )

    def grid_num_den(self, xs, ys):
        """Posterior numerator/denominator on the product grid (row-rescaled)."""
        fx = np.exp(self.dx.logpdf(xs[:, None] - self.th[None, :]))
        wn, wd = fx * (self.w * self.succ), fx * self.w
        levels, inv = np.unique(self.a, return_inverse=True)
        if levels.size * 4 <= self.a.size:
            # few distinct attack levels: sum theta columns sharing a level first
            onehot = np.zeros((self.a.size, levels.size))
            onehot[np.arange(self.a.size), inv] = 1.0
            wn, wd = wn @ onehot, wd @ onehot
        else:
            levels = self.a
        lfy = np.asarray(self.dy.logpdf(ys[:, None] - levels[None, :]))
        my = lfy.max(axis=1)
        my = np.where(np.isfinite(my), my, 0.0)
        fy = np.exp(lfy - my[:, None])
        num0 = wn @ fy.T
        den0 = wd @ fy.T
        fy0 = np.exp(np.asarray(self.dy.logpdf(ys - self.a[0])) - my)
        fye = np.exp(np.asarray(self.dy.logpdf(ys - self.a[-1])) - my)

        def with_tails(n):
            left, left_s, right, right_s = self._tail_masses(xs, n)
            num = num0 + np.outer(left_s, fy0) + np.outer(right_s, fye)
            den = den0 + np.outer(left, fy0) + np.outer(right, fye)
            return num, den

        n = self.n0
        num, den = with_tails(n)
        prev = _ratio(num, den)
        for _ in range(40):
            n *= 2.0
            num, den = with_tails(n)
            cur = _ratio(num, den)
            if np.nanmax(np.abs(cur - prev), initial=0.0) < self.grid.posterior_tol:
                self.n_final = n
                return num, den
            prev = cur
        raise ConvergenceError("posterior did not settle as the prior window grew")

    def point_logs(self, xs, ys, n=None):
        """log numerator, log denominator of the posterior at scattered points."""
        n = getattr(self, "n_final", self.n0 * 2.0) if n is None else n
        base = np.asarray(self.dx.logpdf(xs[:, None] - self.th[None, :])) + self.logw[None, :]
        tails = self._log_tail_masses(xs, n)
        return self._logs_from(base, tails, ys)

    def _logs_from(self, base, tails, ys):
        lt_left, lt_left_s, lt_right, lt_right_s = tails
        terms = base + np.asarray(self.dy.logpdf(ys[:, None] - self.a[None, :]))
        ly0 = np.asarray(self.dy.logpdf(ys - self.a[0]))
        lye = np.asarray(self.dy.logpdf(ys - self.a[-1]))
        all_terms = np.column_stack([terms, lt_left + ly0, lt_right + lye])
        s_terms = np.column_stack(
            [np.where(self.succ[None, :], terms, -np.inf), lt_left_s + ly0, lt_right_s + lye]
        )
        return _logsumexp_rows(s_terms), _logsumexp_rows(all_terms)

    def posterior(self, xs, ys):
        ln, ld = self.point_logs(np.atleast_1d(xs).astype(float), np.atleast_1d(ys).astype(float))
        with np.errstate(invalid="ignore"):
            return np.where(np.isfinite(ld), np.exp(ln - ld), np.nan)

    # attack set and best response -----------------------------------------
    def signal_grids(self):
        g = self.grid
        sx, sy = self.dx.sd, self.dy.sd
        xs = np.linspace(self.th[0] - g.signal_sd * sx, self.th[-1] + g.signal_sd * sx, g.n_x)
        ys = np.linspace(self.a.min() - g.signal_sd * sy, self.a.max() + g.signal_sd * sy, g.n_y)
        return xs, ys

    def best_response_nodes(self):
        xs, ys = self.signal_grids()
        num, den = self.grid_num_den(xs, ys)
        attack = (den > 0) & (num >= self.c * den)
        top = attack[:, -1].astype(float)
        rows, cols = np.nonzero(attack[:, 1:] != attack[:, :-1])
        # +1: attack set ends going up in y, -1: it starts
        signs = np.where(attack[rows, cols], 1.0, -1.0)
        lo = ys[cols].astype(float)
        hi = ys[cols + 1].astype(float)
        edges = 0.5 * (lo + hi)
        if rows.size:
            heavy = self._heavy_cells(lo, hi)
            if np.any(heavy):
                edges[heavy] = self._refine_edges(xs[rows[heavy]], lo[heavy], hi[heavy], attack[rows[heavy], cols[heavy]])
        # probability, for each theta node, that y lands in the row's attack set
        py = np.repeat(top[:, None], self.a.size, axis=1)
        if rows.size:
            contrib = signs[:, None] * np.asarray(self.dy.cdf(edges[:, None] - self.a[None, :]))
            np.add.at(py, rows, contrib)
        np.clip(py, 0.0, 1.0, out=py)
        # exact probability of each x cell given theta
        cuts = np.concatenate([[-np.inf], 0.5 * (xs[1:] + xs[:-1]), [np.inf]])
        d = cuts[:, None] - self.th[None, :]
        tails = self.dx.small_tail(d)
        wx = _mass_from_tails(d[:-1], d[1:], tails[:-1], tails[1:])
        out = np.einsum("ik,ik->k", wx, py)
        bad = ~np.isfinite(out)
        if np.any(bad):
            raise NumericalError(f"non-finite induced attack at theta = {float(self.th[np.argmax(bad)]):.6g}")
        return np.clip(out, 0.0, 1.0)

    def _heavy_cells(self, lo, hi):
        # a cell matters if some attack level is within the y noise's reach of it
        reach = float(self.dy.ppf(1.0 - self.grid.mass_floor)) if self.grid.mass_floor > 0 else np.inf
        levels = np.sort(self.a)
        first = np.searchsorted(levels, lo - reach, side="left")
        last = np.searchsorted(levels, hi + reach, side="right")
        return last > first

    def _refine_edges(self, xs, lo, hi, attack_at_lo):
        """Locate attack-set edges inside brackets ``[lo, hi]`` (one per point).

        The decision is ``num >= c den`` with both sums in linear space: the
        x part and the y part are rescaled by their own row maxima, as on the
        grid. Brackets with a finite posterior at both ends use Illinois false
        position; the rest are bisected.
        """
        n = getattr(self, "n_final", self.n0 * 2.0)
        lx = np.asarray(self.dx.logpdf(xs[:, None] - self.th[None, :])) + self.logw[None, :]
        lt = np.column_stack(self._log_tail_masses(xs, n))  # left, left_s, right, right_s
        mx = np.maximum(lx.max(axis=1), lt.max(axis=1))
        mx = np.where(np.isfinite(mx), mx, 0.0)
        ex = np.exp(lx - mx[:, None])
        ex_s = ex * self.succ[None, :]
        et = np.exp(lt - mx[:, None])
        c = self.c

        def gap(y, idx=slice(None)):
            lfy = np.asarray(self.dy.logpdf(y[:, None] - self.a[None, :]))
            l0 = np.asarray(self.dy.logpdf(y - self.a[0]))
            le = np.asarray(self.dy.logpdf(y - self.a[-1]))
            my = np.maximum(np.maximum(lfy.max(axis=1), l0), le)
            my = np.where(np.isfinite(my), my, 0.0)
            fy = np.exp(lfy - my[:, None])
            f0 = np.exp(l0 - my)
            fe = np.exp(le - my)
            t_ = et[idx]
            num = np.einsum("ij,ij->i", ex_s[idx], fy) + t_[:, 1] * f0 + t_[:, 3] * fe
            den = np.einsum("ij,ij->i", ex[idx], fy) + t_[:, 0] * f0 + t_[:, 2] * fe
            with np.errstate(divide="ignore", invalid="ignore"):
                g = np.where(den > 0, num / den - c, np.nan)
            return g, (den > 0) & (num >= c * den)

        lo, hi = lo.astype(float).copy(), hi.astype(float).copy()
        done = np.zeros(lo.size, dtype=bool)
        self._snap_support_edges(lo, hi, done, attack_at_lo, gap)
        glo = np.full(lo.size, np.nan)
        ghi = np.full(lo.size, np.nan)
        open_ = np.nonzero(~done)[0]
        if open_.size:
            glo[open_] = gap(lo[open_], open_)[0]
            ghi[open_] = gap(hi[open_], open_)[0]
        side = np.zeros(lo.size, dtype=int)  # Illinois: which end was kept last
        tol = self.grid.boundary_tol
        for _ in range(200):
            active = ~done & (hi - lo > tol)
            if not np.any(active):
                break
            idx = np.nonzero(active)[0]
            a_, b_ = lo[idx], hi[idx]
            ga, gb = glo[idx], ghi[idx]
            mid = 0.5 * (a_ + b_)
            fp_ok = np.isfinite(ga) & np.isfinite(gb) & (ga != gb)
            with np.errstate(divide="ignore", invalid="ignore"):
                fp = a_ - ga * (b_ - a_) / (gb - ga)
            inside = fp_ok & (fp > a_) & (fp < b_)
            trial = np.where(inside, fp, mid)
            stuck = (trial <= a_) | (trial >= b_)
            trial = np.where(stuck, mid, trial)
            stuck = (trial <= a_) | (trial >= b_)
            done[idx[stuck]] = True
            g, att = gap(trial, idx)
            same = att == attack_at_lo[idx]
            keep_lo = ~same
            # Illinois halving of the retained end's value
            ghalf_lo = keep_lo & (side[idx] == -1)
            ghalf_hi = same & (side[idx] == 1)
            lo[idx] = np.where(same, trial, a_)
            hi[idx] = np.where(same, b_, trial)
            glo[idx] = np.where(same, g, np.where(ghalf_lo, 0.5 * ga, ga))
            ghi[idx] = np.where(same, np.where(ghalf_hi, 0.5 * gb, gb), g)
            side[idx] = np.where(same, 1, -1)
        return 0.5 * (lo + hi)

    def _snap_support_edges(self, lo, hi, done, attack_at_lo, gap):
        # bounded y noise: the posterior jumps where y leaves some a_k's support
        if self.dy.kind == "normal":
            return
        levels = np.unique(self.a)
        if levels.size > 16:
            return
        r = self.dy.support[1]
        cands = np.unique(np.concatenate([levels - r, levels + r]))
        eps = self.grid.boundary_tol
        for e in cands:
            hit = np.nonzero(~done & (lo < e - eps) & (hi > e + eps))[0]
            if hit.size == 0:
                continue
            _, att_l = gap(np.full(hit.size, e - eps), hit)
            _, att_r = gap(np.full(hit.size, e + eps), hit)
            flip = (att_l == attack_at_lo[hit]) & (att_r != attack_at_lo[hit])
            sel = hit[flip]
            lo[sel] = e - eps
            hi[sel] = e + eps
            done[sel] = True


def _ratio(num, den):
    with np.errstate(invalid="ignore", divide="ignore"):
        return np.where(den > 0, num / den, np.nan)


def _logsumexp_rows(m):
    top = np.max(m, axis=1)
    safe = np.where(np.isfinite(top), top, 0.0)
    with np.errstate(divide="ignore"):
        out = safe + np.log(np.sum(np.exp(m - safe[:, None]), axis=1))
    return np.where(np.isfinite(top), out, -np.inf)


def success_posterior(attack: AttackFunction, game: GameParams, x, y, grid: TwoSignalGrid = TwoSignalGrid()):
    """P[A(theta) > theta | x, y] under the conjecture ``attack`` (NaN where
    the signal pair is impossible)."""
    conj = _Conjecture(attack, game, grid)
    xs = np.atleast_1d(np.asarray(x, dtype=float))
    ys = np.atleast_1d(np.asarray(y, dtype=float))
    conj.n_final = _settled_window(conj, xs, ys)
    return conj.posterior(xs, ys)


def posterior_odds(attack: AttackFunction, game: GameParams, x, y, grid: TwoSignalGrid = TwoSignalGrid()):
    """Failure-to-success likelihood ratio of the flat-prior posterior.

    Under attack functions bounded away from 0/1 on either side of their jump
    this is the large-window limit of the ratio of the theta >= t and
    theta < t likelihood integrals.
    """
    p = success_posterior(attack, game, x, y, grid)
    with np.errstate(divide="ignore"):
        return (1.0 - p) / p


def _window_posterior(conj, xs, ys, n):
    ln, ld = conj.point_logs(xs, ys, n)
    with np.errstate(invalid="ignore"):
        return np.where(np.isfinite(ld), np.exp(ln - ld), 0.0)


def _settled_window(conj, xs, ys):
    n = conj.n0
    prev = _window_posterior(conj, xs, ys, n)
    for _ in range(40):
        n *= 2.0
        cur = _window_posterior(conj, xs, ys, n)
        if np.max(np.abs(cur - prev), initial=0.0) < conj.grid.posterior_tol:
            return n
        prev = cur
    raise ConvergenceError("posterior did not settle as the prior window grew")


# --------------------------------------------------------------------------
# public operations


@dataclass
class ConsistencyReport:
    theta: np.ndarray  # nodes, jump node doubled (left limit first)
    attack: np.ndarray
    induced: np.ndarray
    residuals: np.ndarray
    tol: float

    @property
    def max_residual(self) -> float:
        return float(np.max(self.residuals))

    @property
    def passed(self) -> bool:
        return self.max_residual <= self.tol

    @property
    def argmax_theta(self) -> float:
        return float(self.theta[int(np.argmax(self.residuals))])

    def to_dict(self) -> dict:
        return {
            "max_residual": self.max_residual,
            "argmax_theta": self.argmax_theta,
            "passed": self.passed,
            "tol": self.tol,
        }


def induced_attack(attack: AttackFunction, game: GameParams, grid: TwoSignalGrid = TwoSignalGrid()) -> AttackFunction:
    """Mass of agents who attack when everyone conjectures ``attack``."""
    conj = _Conjecture(attack, game, grid)
    return attack.from_node_values(conj.best_response_nodes())


def verify_consistency(
    attack: AttackFunction, game: GameParams, tol: float = 1e-10, grid: TwoSignalGrid = TwoSignalGrid()
) -> ConsistencyReport:
    """Per-node gap between ``attack`` and the attack mass it induces."""
    th, a, _ = attack.nodes()
    induced = _Conjecture(attack, game, grid).best_response_nodes()
    return ConsistencyReport(th, a, induced, np.abs(induced - a), tol)


def build_step_equilibrium(t: float, sigma: float, half_width: float = 5.0, n: int = 2001) -> AttackFunction:
    """All-or-nothing attack switching off at ``t``.

    With action-signal noise supported on [-sigma, sigma] and sigma < 1/2 the
    signals from the two regimes fall on opposite sides of 1/2, so everyone
    can tell which regime they are in and the step reproduces itself.
    """
    if not 0.0 <= t <= 1.0:
        raise DomainError(f"switch point t must lie in [0, 1], got {t}")
    if not 0.0 < sigma < 0.5:
        raise DomainError(f"step equilibria need action noise half-width 0 < sigma < 1/2, got {sigma}")
    theta = step_grid(t, half_width, n)
    values = np.where(theta < t, 1.0, 0.0)
    return AttackFunction(theta, values, jump=t, left_limit=1.0)


def step_classification_residual(attack: AttackFunction, dist_y: ErrorDistribution) -> float:
    """Largest gap when agents attack exactly on action signals above 1/2."""
    _, a, _ = attack.nodes()
    induced = np.asarray(dist_y.sf(0.5 - a))
    return float(np.max(np.abs(induced - a)))


@dataclass
class Prop4Check:
    cond15_margin: float
    cond16_margin: float
    satisfied: bool
    worst_eta: float
    monotone_at_boundary: bool
    eta_max: float

    def to_dict(self) -> dict:
        return dict(self.__dict__)


def check_prop4_conditions(p: Prop4Params, eta_max: Optional[float] = None, n_eta: int = 2001, n_a: int = 201) -> Prop4Check:
    """Margins (right side minus left side) of the two sufficient conditions.

    The likelihood-ratio condition must hold for every eta >= 1 - delta - gamma;
    it is scanned on ``n_eta`` points up to ``eta_max``, with the sup and inf
    over the attack levels taken on ``n_a``-point sub-grids. Work is done in
    log space since precise action signals make the density ratio tiny.
    ``monotone_at_boundary`` reports whether the scanned ratio is
    nonincreasing over the last tenth of the eta range.
    """
    eta_lo = 1.0 - p.delta - p.gamma
    if eta_max is None:
        eta_max = eta_lo + max(2.0, 12.0 * p.dist_y.sd)
    if eta_max < eta_lo:
        raise DomainError(f"eta_max must be at least 1 - delta - gamma = {eta_lo}")
    etas = np.linspace(eta_lo, eta_max, n_eta)
    a_low = np.linspace(0.0, p.delta, n_a)
    a_high = np.linspace(1.0 - p.delta, 1.0, n_a)
    lsup = np.max(np.asarray(p.dist_y.logpdf(etas[:, None] - a_low[None, :])), axis=1)
    linf = np.min(np.asarray(p.dist_y.logpdf(etas[:, None] - a_high[None, :])), axis=1)
    lodds = float(p.dist_x.logcdf(p.xi)) - float(p.dist_x.logsf(p.xi))
    with np.errstate(invalid="ignore"):
        lratio = np.where(np.isneginf(lsup), -np.inf, lodds + lsup - linf)
    worst = int(np.argmax(lratio))
    lhs = math.exp(min(float(lratio[worst]), 700.0)) if np.isfinite(lratio[worst]) or lratio[worst] > 0 else 0.0
    if lratio[worst] == np.inf:
        lhs = math.inf
    rhs = (1.0 - p.c) / p.c
    m15 = rhs - lhs
    m16 = float(p.dist_x.cdf(p.xi)) * float(p.dist_y.cdf(p.gamma)) - (1.0 - p.delta)
    tail = lratio[int(0.9 * n_eta):]
    finite = tail[np.isfinite(tail)]
    mono = bool(finite.size < 2 or np.all(np.diff(finite) <= 1e-12))
    return Prop4Check(m15, m16, bool(m15 >= 0 and m16 >= 0), float(etas[worst]), mono, float(eta_max))


def initial_attack(t: float, p: Prop4Params, grid: TwoSignalGrid = TwoSignalGrid()) -> AttackFunction:
    """Starting conjecture: 1 - delta left of ``t`` and delta from ``t`` on."""
    s = max(p.dist_x.sd, p.dist_y.sd)
    theta = step_grid(t, grid.half_width_sd * s, grid.n_theta)
    values = np.where(theta < t, 1.0 - p.delta, p.delta)
    return AttackFunction(theta, values, jump=t, left_limit=1.0 - p.delta)


def best_response(a_n: AttackFunction, p: Prop4Params, t: Optional[float] = None, grid: TwoSignalGrid = TwoSignalGrid()) -> AttackFunction:
    """One step of the best-response iteration, checked against the bounds."""
    t = a_n.jump if t is None else t
    if not a_n.within_bounds(p.delta, t):
        raise DomainError("input attack function violates the 1 - delta / delta bounds")
    nxt = induced_attack(a_n, p.game, grid)
    if not nxt.within_bounds(p.delta, t):
        raise InvariantViolation("best response left the 1 - delta / delta bounds")
    return nxt


def _monotone_sides(a: AttackFunction, slack: float = 1e-9) -> bool:
    return bool(np.all(a.slopes() <= slack))


def iterate_to_equilibrium(
    t: float,
    p: Prop4Params,
    max_iter: int = 200,
    sup_tol: float = 1e-6,
    grid: TwoSignalGrid = TwoSignalGrid(),
    eta_max: Optional[float] = None,
    check_tol: float = 1e-4,
) -> EquilibriumReport:
    """Iterate best responses from the bounded step until the sup-norm change
    drops below ``sup_tol``.

    Raises :class:`ConvergenceError` (carrying the partial report) if
    ``max_iter`` is exhausted.
    """
    cond = check_prop4_conditions(p, eta_max)
    if not cond.satisfied:
        raise DomainError(
            f"sufficient conditions fail (margins {cond.cond15_margin:.3g}, {cond.cond16_margin:.3g})"
        )
    t_lo, t_hi = p.t_interval
    if not t_lo <= t <= t_hi:
        raise DomainError(f"t must lie in [{t_lo:g}, {t_hi:g}], got {t}")
    a = initial_attack(t, p, grid)
    report = EquilibriumReport("twosignal", t, a, False, 0, margins=cond.to_dict())
    report.bounds_ok.append(a.within_bounds(p.delta, t))
    for it in range(1, max_iter + 1):
        nxt = best_response(a, p, t, grid)
        delta = nxt.sup_distance(a)
        report.deltas.append(delta)
        report.bounds_ok.append(nxt.within_bounds(p.delta, t))
        report.iterations = it
        a = nxt
        report.attack = a
        if delta < sup_tol:
            report.converged = True
            break
    if not report.converged:
        raise ConvergenceError(f"no convergence within {max_iter} iterations", trace=report)
    check = verify_consistency(a, p.game, check_tol, grid)
    report.residual = check.max_residual
    report.diagnostics = {
        "monotone": _monotone_sides(a),
        "consistent": check.passed,
        "left_limit": a.left_limit,
        "right_limit": float(a.values[a.jump_index]),
    }
    return report
