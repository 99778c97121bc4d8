"""Single normal signal over the attack's net size, z = A - theta + noise.

Agents attack when their signal is at least the cutoff ``z*``. Given the
cutoff, the attack mass solves

    A = 1 - Phi(sqrt(alpha_z) (z* - A + theta)),

an S-curve against the diagonal that crosses it once or three times. The
crossings depend on ``z* + theta`` only, which several routines below exploit.
"""

from __future__ import annotations

import functools
import math
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from . import _parallel
from .dist import integrate, normal_cdf, normal_pdf
from .errors import DomainError, NumericalError

GRID_BITS = 12
ROOT_TOL = 1e-12


def _check_alpha(alpha_z):
    if not (alpha_z > 0 and math.isfinite(alpha_z)):
        raise DomainError(f"alpha_z must be positive and finite, got {alpha_z}")


@dataclass(frozen=True)
class FixedPointSet:
    theta: float
    z_star: float
    alpha_z: float
    solutions: tuple
    stability: tuple

    @property
    def count(self) -> int:
        return len(self.solutions)

    def residuals(self) -> np.ndarray:
        a = np.asarray(self.solutions)
        s = math.sqrt(self.alpha_z)
        return a - normal_cdf(s * (a - self.z_star - self.theta))

    def to_dict(self) -> dict:
        return {
            "theta": self.theta,
            "z_star": self.z_star,
            "alpha_z": self.alpha_z,
            "solutions": list(self.solutions),
            "stability": list(self.stability),
        }


def _residual(a, w, s):
    # A - (1 - Phi(s (w - A))) written with the symmetric cdf for accuracy
    return a - normal_cdf(s * (a - w))


def map_slope(a, w, s):
    return s * normal_pdf(s * (a - w))


def attack_fixed_points(
    theta: float, z_star: float, alpha_z: float, grid_bits: int = GRID_BITS, tol: float = ROOT_TOL
) -> FixedPointSet:
    """All solutions of the attack-mass equation in [0, 1].

    The residual is scanned on ``2**grid_bits + 1`` equally spaced points and
    every sign change is bisected to ``tol``. Two roots closer than the grid
    spacing (only possible within that distance of a fold) are not resolved.
    """
    _check_alpha(alpha_z)
    s = math.sqrt(alpha_z)
    w = z_star + theta
    grid = np.linspace(0.0, 1.0, 2**grid_bits + 1)
    r = _residual(grid, w, s)
    roots = []
    for i in np.flatnonzero(r == 0.0):
        roots.append(float(grid[i]))
    for i in np.flatnonzero(r[:-1] * r[1:] < 0):
        lo, hi = float(grid[i]), float(grid[i + 1])
        flo = float(r[i])
        while hi - lo > tol:
            mid = 0.5 * (lo + hi)
            fm = _residual(mid, w, s)
            if fm == 0.0:
                lo = hi = mid
                break
            if (fm < 0) == (flo < 0):
                lo, flo = mid, fm
            else:
                hi = mid
        roots.append(0.5 * (lo + hi))
    roots.sort()
    stab = tuple("stable" if map_slope(a, w, s) < 1.0 else "unstable" for a in roots)
    return FixedPointSet(theta, z_star, alpha_z, tuple(roots), stab)


@dataclass(frozen=True)
class MultiplicityRegion:
    z_star: float
    alpha_z: float
    theta_low: float
    theta_high: float
    empty: bool
    # attack masses at the two folds (upper fold first)
    fold_masses: tuple = ()

    @property
    def width(self) -> float:
        return max(0.0, self.theta_high - self.theta_low)

    def contains(self, theta: float) -> bool:
        return (not self.empty) and self.theta_low < theta < self.theta_high

    def to_dict(self) -> dict:
        return {
            "z_star": self.z_star,
            "alpha_z": self.alpha_z,
            "theta_low": self.theta_low,
            "theta_high": self.theta_high,
            "empty": self.empty,
        }


def _tangent_offset(s: float, tol: float = 1e-15) -> float:
    """Positive u with s * phi(u) = 1, by bisection."""
    lo, hi = 0.0, 40.0
    if s * normal_pdf(hi) >= 1.0:
        raise NumericalError("tangency bracket does not contain the unit-slope point")
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        if hi - lo <= tol or mid in (lo, hi):
            return mid
        if s * normal_pdf(mid) > 1.0:
            lo = mid
        else:
            hi = mid
    raise NumericalError("tangency bisection did not converge")


def multiplicity_region(z_star: float, alpha_z: float) -> MultiplicityRegion:
    """Range of theta for which the attack-mass equation has three solutions.

    The boundaries are the two folds where the S-curve touches the diagonal
    with unit slope. At ``alpha_z = 2 pi`` both folds merge at
    ``theta = 1/2 - z*`` and the region is reported as empty with zero width.
    """
    _check_alpha(alpha_z)
    s = math.sqrt(alpha_z)
    peak = s * normal_pdf(0.0)
    centre = 0.5 - z_star
    if peak <= 1.0 + 1e-12:
        return MultiplicityRegion(z_star, alpha_z, centre, centre, True)
    u = _tangent_offset(s)
    # fold where the lower and middle roots merge / where middle and upper merge
    a_low = normal_cdf(-u)
    a_high = normal_cdf(u)
    w_low_fold = a_low + u / s
    w_high_fold = a_high - u / s
    lo, hi = sorted((w_low_fold - z_star, w_high_fold - z_star))
    return MultiplicityRegion(z_star, alpha_z, lo, hi, not hi > lo, (a_high, a_low))


def bifurcation(z_star: float, alpha_z: float, thetas: Sequence[float], workers: Optional[int] = None):
    """Rows (theta, A, stability) over a theta sweep, sorted by theta then A."""
    sets = _parallel.pmap(_fp_task, [(float(th), z_star, alpha_z) for th in thetas], workers)
    rows = []
    for fp in sets:
        for a, st in zip(fp.solutions, fp.stability):
            rows.append((fp.theta, a, st))
    rows.sort(key=lambda r: (r[0], r[1]))
    return rows


def _fp_task(args):
    return attack_fixed_points(*args)


# --- posterior of a successful attack at the cutoff signal -------------------


@dataclass(frozen=True)
class Branch:
    """Composite downward-sloping equilibrium branch.

    For theta below the switch the upper solution is used, above it the lower
    one. ``switch`` places the switch inside the multiplicity region as a
    fraction of its width (0 = lower boundary, 1 = upper boundary); it is
    ignored when the region is empty.
    """

    switch: float = 0.5

    def __post_init__(self):
        if not 0.0 <= self.switch <= 1.0:
            raise DomainError("branch switch must lie in [0, 1]")


def _excluded_gap(alpha_z: float, branch: Branch):
    """Net-size offsets u = y - z* that the composite branch never produces.

    On the branch y = A - theta relates to theta through
    theta = Phi(sqrt(alpha_z)(y - z*)) - y, so everything depends on
    u = y - z* alone. Returns None when every u is attainable.
    """
    region = multiplicity_region(0.0, alpha_z)
    if region.empty:
        return None
    # keep off the folds themselves, where the merged pair defeats the scan
    frac = min(max(branch.switch, 1e-6), 1.0 - 1e-6)
    w = region.theta_low + frac * (region.theta_high - region.theta_low)
    fp = attack_fixed_points(w, 0.0, alpha_z)
    return fp.solutions[0] - w, fp.solutions[-1] - w


def posterior_weight(u, alpha_z: float):
    """Unnormalised posterior density of u = y - z* at the cutoff signal.

    Likelihood of the signal, phi(sqrt(alpha_z) u), times the flat-prior
    density of y, |d theta / d y| = 1 - sqrt(alpha_z) phi(sqrt(alpha_z) u).
    """
    s = math.sqrt(alpha_z)
    if isinstance(u, float):
        p = normal_pdf(s * u)
        return p * (1.0 - s * p)
    p = normal_pdf(s * np.asarray(u, dtype=float))
    return p * (1.0 - s * p)


@functools.lru_cache(maxsize=8192)
def _weight_mass(lo, hi, alpha_z, tol):
    if hi <= lo:
        return 0.0
    s = math.sqrt(alpha_z)
    cuts = sorted({lo, hi, *(k / s for k in (-8, -4, -2, -1, 0, 1, 2, 4, 8) if lo < k / s < hi)})
    return sum(integrate(lambda v: posterior_weight(v, alpha_z), a, b, tol) for a, b in zip(cuts[:-1], cuts[1:]))


def _posterior(z_star, alpha_z, gap, half_window, tol):
    pieces = [(-half_window, half_window)] if gap is None else [(-half_window, gap[0]), (gap[1], half_window)]
    den = num = 0.0
    for a, b in pieces:
        den += _weight_mass(a, b, alpha_z, tol)
        num += _weight_mass(max(a, -z_star), b, alpha_z, tol)
    if den <= 0.0:
        raise NumericalError("posterior normaliser vanished")
    return min(1.0, max(0.0, num / den))


def posterior_success_prob(
    z_star: float,
    alpha_z: float,
    branch: Branch = Branch(),
    tol: float = 1e-12,
    window_tol: float = 1e-8,
) -> float:
    """P(A_t(theta, z*) - theta > 0 | z = z*) under a flat prior on theta.

    The flat prior is realised as a uniform window of half-width
    ``50 / sqrt(alpha_z)`` around ``z*`` in net-size space; the window doubles
    until the answer moves by less than ``window_tol``.
    """
    _check_alpha(alpha_z)
    gap = _excluded_gap(alpha_z, branch)
    half = 50.0 / math.sqrt(alpha_z)
    prev = _posterior(z_star, alpha_z, gap, half, tol)
    for _ in range(20):
        half *= 2.0
        cur = _posterior(z_star, alpha_z, gap, half, tol)
        if abs(cur - prev) < window_tol:
            return cur
        prev = cur
    raise NumericalError("posterior did not stabilise as the prior window grew")


def _posterior_task(args):
    return posterior_success_prob(*args)


@dataclass(frozen=True)
class Cutoff:
    """One equilibrium cutoff. ``plateau`` is set when the posterior equals
    ``c`` on a whole interval; the cutoff is then the interval's midpoint."""

    z_star: float
    kind: str  # "root" or "discontinuity"
    p_below: float
    p_above: float
    plateau: Optional[tuple] = None

    def to_dict(self) -> dict:
        return {
            "z_star": self.z_star,
            "kind": self.kind,
            "p_below": self.p_below,
            "p_above": self.p_above,
            "plateau": None if self.plateau is None else list(self.plateau),
        }


@dataclass
class CutoffSearch:
    c: float
    alpha_z: float
    window: tuple
    cutoffs: list = field(default_factory=list)

    def to_dict(self) -> dict:
        return {
            "c": self.c,
            "alpha_z": self.alpha_z,
            "window": list(self.window),
            "cutoffs": [cut.to_dict() for cut in self.cutoffs],
        }


def find_equilibrium_cutoffs(
    c: float,
    alpha_z: float,
    branch: Branch = Branch(),
    window: Optional[tuple] = None,
    n_scan: int = 161,
    jump: float = 0.1,
    resolution: float = 1e-8,
    level_tol: float = 1e-12,
    workers: Optional[int] = None,
) -> CutoffSearch:
    """Every z* in the scan window where the success posterior meets ``c``.

    Sign changes of ``P - c`` between scan points are bisected until the
    bracket is ``resolution`` wide; a bracket whose end values still differ by
    more than ``jump`` is a discontinuity, otherwise a root. Runs of scan
    points with ``|P - c| <= level_tol`` form a plateau whose edges are
    bisected and whose midpoint is reported. An empty list means no crossing
    inside ``window``.
    """
    if not 0.0 < c < 1.0:
        raise DomainError(f"cost c must lie in (0, 1), got {c}")
    _check_alpha(alpha_z)
    if window is None:
        half = 1.0 + 10.0 / math.sqrt(alpha_z)
        window = (-half, half)
    zs = np.linspace(window[0], window[1], n_scan)
    ps = np.asarray(_parallel.pmap(_posterior_task, [(float(z), alpha_z, branch) for z in zs], workers))

    def level(p):
        return 0 if abs(p - c) <= level_tol else (1 if p > c else -1)

    def post(z):
        return posterior_success_prob(z, alpha_z, branch)

    def bisect(lo, hi, plo, phi_, test):
        # ``test`` is True at ``lo`` and False at ``hi`` (or vice versa)
        tlo = test(plo)
        while hi - lo > resolution:
            mid = 0.5 * (lo + hi)
            pm = post(mid)
            if test(pm) == tlo:
                lo, plo = mid, pm
            else:
                hi, phi_ = mid, pm
        return lo, hi, plo, phi_

    lv = [level(p) for p in ps]
    out = []
    i = 0
    n = len(zs)
    while i < n:
        if lv[i] == 0:
            j = i
            while j + 1 < n and lv[j + 1] == 0:
                j += 1
            left = float(zs[i])
            if i > 0:
                lo, hi, _, _ = bisect(float(zs[i - 1]), left, ps[i - 1], ps[i], lambda p: level(p) == 0)
                left = hi
            right = float(zs[j])
            if j + 1 < n:
                lo, hi, _, _ = bisect(right, float(zs[j + 1]), ps[j], ps[j + 1], lambda p: level(p) == 0)
                right = lo
            mid = 0.5 * (left + right)
            pm = post(mid)
            plateau = (left, right) if j > i else None
            out.append(Cutoff(mid, "root", pm, pm, plateau))
            i = j + 1
            continue
        if i + 1 < n and lv[i + 1] != 0 and lv[i] != lv[i + 1]:
            lo, hi, plo, phi_ = bisect(float(zs[i]), float(zs[i + 1]), ps[i], ps[i + 1], lambda p: p < c)
            kind = "discontinuity" if abs(phi_ - plo) > jump else "root"
            out.append(Cutoff(0.5 * (lo + hi), kind, float(plo), float(phi_)))
        i += 1
    return CutoffSearch(c, alpha_z, (float(window[0]), float(window[1])), out)
