"""Noise laws, the standard normal special functions and adaptive quadrature.

Every solver in the package talks to its error terms through
:class:`ErrorDistribution`, so the normal, uniform and tabulated laws are
interchangeable. All methods accept scalars or numpy arrays.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np
from scipy import special

from .errors import ConfigError, DomainError, IntegrationError

SQRT2PI = math.sqrt(2.0 * math.pi)
LOG_SQRT2PI = 0.5 * math.log(2.0 * math.pi)

# Infinite integration limits are cut at this many standard deviations.
DEFAULT_TRUNCATION = 8.0


def _out(value, like):
    if np.ndim(like) == 0:
        return float(value)
    return value


def normal_pdf(x):
    if isinstance(x, (float, int)):
        return math.exp(-0.5 * x * x) / SQRT2PI
    x = np.asarray(x, dtype=float)
    return _out(np.exp(-0.5 * x * x) / SQRT2PI, x)


def normal_cdf(x):
    """Standard normal cdf, accurate to a few ulp across the real line."""
    if isinstance(x, (float, int)):
        return 0.5 * math.erfc(-x / math.sqrt(2.0))
    x = np.asarray(x, dtype=float)
    return _out(special.ndtr(x), x)


def normal_quantile(p):
    p = np.asarray(p, dtype=float)
    if np.any(~((p > 0.0) & (p < 1.0))):
        raise DomainError("normal_quantile needs p strictly inside (0, 1)")
    return _out(special.ndtri(p), p)


def integrate(
    f: Callable[[float], float],
    lo: float,
    hi: float,
    tol: float = 1e-10,
    *,
    scale: float = 1.0,
    center: float = 0.0,
    truncation: float = DEFAULT_TRUNCATION,
    max_depth: int = 48,
    max_evals: int = 2_000_000,
) -> float:
    """Adaptive Simpson quadrature of a scalar function on ``[lo, hi]``.

    Infinite endpoints are replaced by ``center -/+ truncation * scale``.
    Subintervals are accepted once the Simpson/half-Simpson difference is below
    ``15 * tol_local``; the local tolerance halves at each split so the total
    error target is ``tol``. Raises :class:`IntegrationError` when an interval
    would need to be split beyond ``max_depth`` or the evaluation budget runs
    out; the exception carries the partial estimate.
    """
    if math.isinf(lo):
        lo = center - truncation * scale if lo < 0 else center + truncation * scale
    if math.isinf(hi):
        hi = center + truncation * scale if hi > 0 else center - truncation * scale
    if math.isnan(lo) or math.isnan(hi):
        raise DomainError("integration limits must not be NaN")
    if hi < lo:
        return -integrate(f, hi, lo, tol, max_depth=max_depth, max_evals=max_evals)
    if hi == lo:
        return 0.0

    def ev(x):
        v = float(f(x))
        if not math.isfinite(v):
            raise IntegrationError(f"integrand is not finite at x={x!r}")
        return v

    a, b = lo, hi
    m = 0.5 * (a + b)
    fa, fm, fb = ev(a), ev(m), ev(b)
    whole = (b - a) * (fa + 4.0 * fm + fb) / 6.0
    stack = [(a, b, fa, fm, fb, whole, tol, 0)]
    total = 0.0
    evals = 3
    while stack:
        a, b, fa, fm, fb, whole, eps, depth = stack.pop()
        m = 0.5 * (a + b)
        lm, rm = 0.5 * (a + m), 0.5 * (m + b)
        flm, frm = ev(lm), ev(rm)
        evals += 2
        left = (m - a) * (fa + 4.0 * flm + fm) / 6.0
        right = (b - m) * (fm + 4.0 * frm + fb) / 6.0
        diff = left + right - whole
        if abs(diff) <= 15.0 * eps or depth >= max_depth or evals > max_evals:
            if abs(diff) > 15.0 * eps:
                partial = total + left + right + diff / 15.0
                for item in stack:
                    partial += item[5]
                raise IntegrationError(
                    f"adaptive Simpson did not reach tol={tol:g} on [{lo:g}, {hi:g}]",
                    estimate=partial,
                )
            total += left + right + diff / 15.0
        else:
            stack.append((a, m, fa, flm, fm, left, 0.5 * eps, depth + 1))
            stack.append((m, b, fm, frm, fb, right, 0.5 * eps, depth + 1))
    return total


def _log1mexp(a):
    """log(1 - exp(a)) for a <= 0, stable on both ends."""
    a = np.asarray(a, dtype=float)
    with np.errstate(divide="ignore", invalid="ignore"):
        return np.where(a > -0.6931471805599453, np.log(-np.expm1(a)), np.log1p(-np.exp(a)))

def _mass_from_tails(lo, hi, t_lo, t_hi):
    """P(lo < e <= hi) for a symmetric law from the small tails at both ends."""
    cdf_lo = np.where(lo <= 0.0, t_lo, 1.0 - t_lo)
    cdf_hi = np.where(hi <= 0.0, t_hi, 1.0 - t_hi)
    sf_lo = np.where(lo <= 0.0, 1.0 - t_lo, t_lo)
    sf_hi = np.where(hi <= 0.0, 1.0 - t_hi, t_hi)
    left = cdf_hi - cdf_lo
    right = sf_lo - sf_hi
    with np.errstate(invalid="ignore"):
        centred_left = lo + hi <= 0.0
    return np.maximum(np.where(centred_left, left, right), 0.0)



KINDS = ("normal", "uniform", "tabulated")


@dataclass(frozen=True)
class ErrorDistribution:
    """A symmetric, zero-centred noise law.

    ``normal`` is parameterised by precision (1/variance), ``uniform`` by the
    half-width of its support and ``tabulated`` by a density sampled on a
    nonnegative grid starting at zero, mirrored to the negative half-line and
    interpolated linearly (renormalised to unit mass).
    """

    kind: str
    precision: Optional[float] = None
    half_width: Optional[float] = None
    table_x: Optional[tuple] = None
    table_pdf: Optional[tuple] = None
    _cum: Optional[np.ndarray] = field(default=None, repr=False, compare=False)

    def __post_init__(self):
        if self.kind not in KINDS:
            raise DomainError(f"unknown distribution kind {self.kind!r}")
        if self.kind == "normal":
            if self.precision is None or not (self.precision > 0 and math.isfinite(self.precision)):
                raise DomainError("normal distribution needs a positive finite precision")
        elif self.kind == "uniform":
            if self.half_width is None or not (self.half_width > 0 and math.isfinite(self.half_width)):
                raise DomainError("uniform distribution needs a positive finite half_width")
        else:
            x = np.asarray(self.table_x, dtype=float)
            p = np.asarray(self.table_pdf, dtype=float)
            if x.ndim != 1 or x.shape != p.shape or x.size < 2:
                raise DomainError("tabulated density needs matching 1-d x and pdf arrays")
            if x[0] != 0.0 or np.any(np.diff(x) <= 0):
                raise DomainError("tabulated x must start at 0 and increase strictly")
            if np.any(p < 0) or not np.all(np.isfinite(p)):
                raise DomainError("tabulated density must be finite and nonnegative")
            h = np.diff(x)
            seg = 0.5 * h * (p[:-1] + p[1:])
            half = seg.sum()
            if not half > 0:
                raise DomainError("tabulated density has zero mass")
            p = p / (2.0 * half)
            cum = np.concatenate([[0.5], 0.5 + np.cumsum(seg / (2.0 * half))])
            object.__setattr__(self, "table_x", tuple(x.tolist()))
            object.__setattr__(self, "table_pdf", tuple(p.tolist()))
            object.__setattr__(self, "_cum", cum)

    # constructors -----------------------------------------------------------
    @classmethod
    def normal(cls, precision: float) -> "ErrorDistribution":
        return cls("normal", precision=float(precision))

    @classmethod
    def uniform(cls, half_width: float) -> "ErrorDistribution":
        return cls("uniform", half_width=float(half_width))

    @classmethod
    def tabulated(cls, x, pdf) -> "ErrorDistribution":
        return cls("tabulated", table_x=tuple(np.asarray(x, float)), table_pdf=tuple(np.asarray(pdf, float)))

    @classmethod
    def from_config(cls, cfg: dict) -> "ErrorDistribution":
        if not isinstance(cfg, dict) or "kind" not in cfg:
            raise ConfigError("distribution spec must be a mapping with a 'kind' key", key="kind")
        allowed = {
            "normal": {"kind", "precision"},
            "uniform": {"kind", "half_width"},
            "tabulated": {"kind", "x", "pdf"},
        }
        kind = cfg["kind"]
        if kind not in allowed:
            raise ConfigError(f"unknown distribution kind {kind!r}", key="kind")
        for k in cfg:
            if k not in allowed[kind]:
                raise ConfigError(f"unknown key {k!r} for {kind} distribution", key=k)
        try:
            if kind == "normal":
                return cls.normal(cfg["precision"])
            if kind == "uniform":
                return cls.uniform(cfg["half_width"])
            return cls.tabulated(cfg["x"], cfg["pdf"])
        except KeyError as exc:
            raise ConfigError(f"missing key {exc.args[0]!r} for {kind} distribution", key=exc.args[0])
        except (TypeError, ValueError) as exc:
            raise ConfigError(f"bad {kind} distribution: {exc}", key="kind")

    def to_config(self) -> dict:
        if self.kind == "normal":
            return {"kind": "normal", "precision": self.precision}
        if self.kind == "uniform":
            return {"kind": "uniform", "half_width": self.half_width}
        return {"kind": "tabulated", "x": list(self.table_x), "pdf": list(self.table_pdf)}

    # basic facts ------------------------------------------------------------
    @property
    def symmetric(self) -> bool:
        return True

    @property
    def support(self) -> tuple:
        if self.kind == "normal":
            return (-math.inf, math.inf)
        r = self.half_width if self.kind == "uniform" else self.table_x[-1]
        return (-r, r)

    @property
    def sd(self) -> float:
        if self.kind == "normal":
            return 1.0 / math.sqrt(self.precision)
        if self.kind == "uniform":
            return self.half_width / math.sqrt(3.0)
        x = np.asarray(self.table_x)
        p = np.asarray(self.table_pdf)
        # second moment of a piecewise-linear density, exact per segment
        x0, x1, p0, p1 = x[:-1], x[1:], p[:-1], p[1:]
        h = x1 - x0
        m2 = h / 12.0 * (p0 * (3 * x0**2 + 2 * x0 * x1 + x1**2) + p1 * (x0**2 + 2 * x0 * x1 + 3 * x1**2))
        return math.sqrt(2.0 * m2.sum())

    # densities --------------------------------------------------------------
    def pdf(self, x):
        x = np.asarray(x, dtype=float)
        if self.kind == "normal":
            s = math.sqrt(self.precision)
            out = s * np.exp(-0.5 * (s * x) ** 2) / SQRT2PI
        elif self.kind == "uniform":
            out = np.where(np.abs(x) <= self.half_width, 0.5 / self.half_width, 0.0)
        else:
            ax = np.abs(x)
            out = np.interp(ax, self.table_x, self.table_pdf, right=0.0)
        return _out(out, x)

    def logpdf(self, x):
        x = np.asarray(x, dtype=float)
        if self.kind == "normal":
            s = math.sqrt(self.precision)
            out = math.log(s) - LOG_SQRT2PI - 0.5 * (s * x) ** 2
        elif self.kind == "uniform":
            out = np.where(np.abs(x) <= self.half_width, -math.log(2.0 * self.half_width), -np.inf)
        else:
            with np.errstate(divide="ignore"):
                out = np.log(np.asarray(self.pdf(x), dtype=float))
        return _out(out, x)

    def cdf(self, x):
        x = np.asarray(x, dtype=float)
        if self.kind == "normal":
            out = special.ndtr(math.sqrt(self.precision) * x)
        elif self.kind == "uniform":
            out = np.clip((x + self.half_width) / (2.0 * self.half_width), 0.0, 1.0)
        else:
            out = self._tab_cdf(x)
        return _out(out, x)

    def sf(self, x):
        x = np.asarray(x, dtype=float)
        return _out(np.asarray(self.cdf(-x), dtype=float), x)

    def logcdf(self, x):
        x = np.asarray(x, dtype=float)
        if self.kind == "normal":
            out = special.log_ndtr(math.sqrt(self.precision) * x)
        else:
            with np.errstate(divide="ignore"):
                out = np.log(np.asarray(self.cdf(x), dtype=float))
        return _out(out, x)

    def logsf(self, x):
        x = np.asarray(x, dtype=float)
        return _out(np.asarray(self.logcdf(-x), dtype=float), x)

    def interval_mass(self, lo, hi):
        """P(lo < e <= hi), computed on the tail that avoids cancellation."""
        lo = np.asarray(lo, dtype=float)
        hi = np.asarray(hi, dtype=float)
        out = _mass_from_tails(lo, hi, self.small_tail(lo), self.small_tail(hi))
        return _out(out, out)

    def small_tail(self, x):
        """cdf(-|x|): the lesser of cdf and sf, free of cancellation."""
        x = np.asarray(x, dtype=float)
        with np.errstate(invalid="ignore"):
            return np.asarray(self.cdf(-np.abs(x)), dtype=float)

    def log_interval_mass(self, lo, hi):
        """log P(lo < e <= hi), stable deep in either tail."""
        lo = np.asarray(lo, dtype=float)
        hi = np.asarray(hi, dtype=float)
        lc_hi, lc_lo = np.asarray(self.logcdf(hi), float), np.asarray(self.logcdf(lo), float)
        ls_lo, ls_hi = np.asarray(self.logsf(lo), float), np.asarray(self.logsf(hi), float)
        with np.errstate(invalid="ignore", divide="ignore"):
            left = lc_hi + _log1mexp(np.minimum(lc_lo - lc_hi, 0.0))
            right = ls_lo + _log1mexp(np.minimum(ls_hi - ls_lo, 0.0))
        out = np.where(lo + hi <= 0.0, left, right)
        out = np.where(hi <= lo, -np.inf, out)
        out = np.where(np.isnan(out), -np.inf, out)
        return _out(out, lo + hi)

    def ppf(self, p):
        p = np.asarray(p, dtype=float)
        if np.any((p < 0) | (p > 1)):
            raise DomainError("quantile needs p in [0, 1]")
        if self.kind == "normal":
            out = special.ndtri(p) / math.sqrt(self.precision)
        elif self.kind == "uniform":
            out = (2.0 * p - 1.0) * self.half_width
        else:
            out = self._tab_ppf(p)
        return _out(out, p)

    def sample(self, rng: np.random.Generator, size) -> np.ndarray:
        if self.kind == "normal":
            return rng.standard_normal(size) / math.sqrt(self.precision)
        if self.kind == "uniform":
            return rng.uniform(-self.half_width, self.half_width, size)
        return np.asarray(self.ppf(rng.random(size)))

    # tabulated helpers ------------------------------------------------------
    def _tab_cdf_pos(self, ax):
        x = np.asarray(self.table_x)
        p = np.asarray(self.table_pdf)
        k = np.clip(np.searchsorted(x, ax, side="right") - 1, 0, x.size - 2)
        d = np.clip(ax - x[k], 0.0, None)
        h = x[k + 1] - x[k]
        d = np.minimum(d, h)
        val = self._cum[k] + p[k] * d + (p[k + 1] - p[k]) * d * d / (2.0 * h)
        return np.where(ax >= x[-1], 1.0, val)

    def _tab_cdf(self, x):
        pos = self._tab_cdf_pos(np.abs(x))
        return np.where(x >= 0, pos, 1.0 - pos)

    def _tab_ppf(self, p):
        r = self.table_x[-1]
        lo = np.full(p.shape, -r)
        hi = np.full(p.shape, r)
        for _ in range(80):
            mid = 0.5 * (lo + hi)
            below = self._tab_cdf(mid) < p
            lo = np.where(below, mid, lo)
            hi = np.where(below, hi, mid)
        return 0.5 * (lo + hi)
