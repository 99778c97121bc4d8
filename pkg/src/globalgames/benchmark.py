"""Fundamental-signal benchmark: agents see only x = theta + noise.

With normal noise of precision ``alpha_x`` the cutoff pair solves

    Phi(sqrt(alpha_x) (x* - theta*)) = theta*      (critical mass)
    Phi(sqrt(alpha_x) (theta* - x*)) = c           (indifference)

which has the unique solution theta* = Phi(-Phi^{-1}(c)) = 1 - c.
"""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass

import numpy as np

from .dist import normal_cdf, normal_quantile
from .errors import ConvergenceError, DomainError


@dataclass(frozen=True)
class BenchmarkSolution:
    x_star: float
    theta_star: float
    c: float
    alpha_x: float

    def residuals(self) -> tuple:
        s = math.sqrt(self.alpha_x)
        mass = normal_cdf(s * (self.x_star - self.theta_star)) - self.theta_star
        indiff = normal_cdf(s * (self.theta_star - self.x_star)) - self.c
        return mass, indiff

    def to_dict(self) -> dict:
        return asdict(self)


def _check(c, alpha_x):
    if not (0.0 < c < 1.0):
        raise DomainError(f"cost c must lie in (0, 1), got {c}")
    if not (alpha_x > 0.0 and math.isfinite(alpha_x)):
        raise DomainError(f"alpha_x must be positive and finite, got {alpha_x}")


def solve_benchmark(c: float, alpha_x: float) -> BenchmarkSolution:
    _check(c, alpha_x)
    q = normal_quantile(c)
    theta = normal_cdf(-q)
    x = -q / math.sqrt(alpha_x) + theta
    return BenchmarkSolution(x_star=x, theta_star=theta, c=c, alpha_x=alpha_x)


def _bisect(f, lo, hi, tol, max_iter=200):
    flo = f(lo)
    fhi = f(hi)
    if flo == 0.0:
        return lo, 0
    if fhi == 0.0:
        return hi, 0
    if flo * fhi > 0:
        raise ConvergenceError(f"no sign change on [{lo}, {hi}]", trace=[(lo, flo), (hi, fhi)])
    for it in range(max_iter):
        mid = 0.5 * (lo + hi)
        if hi - lo <= tol or mid in (lo, hi):
            return mid, it
        fm = f(mid)
        if fm == 0.0:
            return mid, it
        if (fm < 0) == (flo < 0):
            lo, flo = mid, fm
        else:
            hi = mid
    raise ConvergenceError("bisection exhausted its iteration budget", trace=[(lo, hi)])


def verify_benchmark_numerically(c: float, alpha_x: float, tol: float = 1e-12) -> BenchmarkSolution:
    """Solve the two cutoff equations by nested bisection, no closed form.

    The inner loop finds the signal cutoff x that makes an agent indifferent
    for a trial theta; the outer loop moves theta until the induced attack
    mass equals it. Both maps are monotone so bisection cannot fail.
    """
    _check(c, alpha_x)
    s = math.sqrt(alpha_x)
    span = 40.0 / s

    def x_of_theta(theta):
        x, _ = _bisect(lambda x: normal_cdf(s * (theta - x)) - c, theta - span, theta + span, tol * 1e-3)
        return x

    def mass_gap(theta):
        return normal_cdf(s * (x_of_theta(theta) - theta)) - theta

    theta, _ = _bisect(mass_gap, 1e-12, 1.0 - 1e-12, tol)
    return BenchmarkSolution(x_star=x_of_theta(theta), theta_star=theta, c=c, alpha_x=alpha_x)


def attack_mass_sign_changes(x_star: float, alpha_x: float, lo=-3.0, hi=4.0, n=10_000) -> int:
    """Count sign changes of theta -> Phi(sqrt(alpha_x)(x* - theta)) - theta on a grid."""
    th = np.linspace(lo, hi, n)
    g = normal_cdf(math.sqrt(alpha_x) * (x_star - th)) - th
    sg = np.sign(g)
    sg = sg[sg != 0]
    return int(np.count_nonzero(sg[1:] != sg[:-1]))
