"""Types shared by the iterative solvers: game parameters, attack functions
and equilibrium reports."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .dist import ErrorDistribution
from .errors import DomainError


@dataclass(frozen=True)
class GameParams:
    """Attack cost plus the noise laws of whichever signals the agents see.

    The populated distributions select the model variant: ``dist_x`` alone is
    the fundamental-signal benchmark, ``dist_x`` with ``dist_y`` the
    two-signal game, ``dist_z`` the single net-size signal.
    """

    c: float
    dist_x: Optional[ErrorDistribution] = None
    dist_y: Optional[ErrorDistribution] = None
    dist_z: Optional[ErrorDistribution] = None

    def __post_init__(self):
        if not 0.0 < self.c < 1.0:
            raise DomainError(f"cost c must lie in (0, 1), got {self.c}")

    @property
    def variant(self) -> str:
        if self.dist_z is not None:
            return "netsignal" if self.dist_z.kind == "normal" else "onesignal"
        if self.dist_x is not None and self.dist_y is not None:
            return "twosignal"
        if self.dist_x is not None:
            return "benchmark"
        raise DomainError("no signal distribution configured")


class AttackFunction:
    """Aggregate attack A(theta) sampled on a finite, strictly increasing grid.

    If ``jump`` is given it must coincide with a grid node; ``values`` holds
    the right limit there and ``left_limit`` the left one. Between nodes the
    function is linear, outside the grid it is constant.
    """

    def __init__(self, theta, values, jump: Optional[float] = None, left_limit: Optional[float] = None):
        theta = np.asarray(theta, dtype=float)
        values = np.asarray(values, dtype=float)
        if theta.ndim != 1 or theta.shape != values.shape or theta.size < 2:
            raise DomainError("theta and values must be 1-d arrays of equal length >= 2")
        if np.any(np.diff(theta) <= 0):
            raise DomainError("theta grid must be strictly increasing")
        if np.any(~np.isfinite(values)) or values.min() < 0.0 or values.max() > 1.0:
            raise DomainError("attack values must lie in [0, 1]")
        self.theta = theta
        self.values = values
        self.jump = None if jump is None else float(jump)
        self.jump_index = None
        if self.jump is not None:
            idx = int(np.argmin(np.abs(theta - self.jump)))
            if abs(theta[idx] - self.jump) > 1e-9 * max(1.0, abs(self.jump)):
                raise DomainError("jump location must be a grid node")
            if idx == 0:
                raise DomainError("jump location needs grid nodes on both sides")
            self.jump_index = idx
            self.left_limit = float(values[idx - 1] if left_limit is None else left_limit)
            if not 0.0 <= self.left_limit <= 1.0:
                raise DomainError("left limit must lie in [0, 1]")
        else:
            self.left_limit = None

    def __repr__(self):
        return (
            f"AttackFunction(n={self.theta.size}, window=[{self.theta[0]:g}, {self.theta[-1]:g}], "
            f"jump={self.jump})"
        )

    @property
    def window(self):
        return float(self.theta[0]), float(self.theta[-1])

    # nodes with the jump split into its two one-sided values
    def nodes(self):
        """Return ``(theta, A, trapezoid weights)`` with the jump node doubled."""
        th, a = self.theta, self.values
        if self.jump_index is None:
            w = np.zeros_like(th)
            h = np.diff(th)
            w[:-1] += 0.5 * h
            w[1:] += 0.5 * h
            return th.copy(), a.copy(), w
        j = self.jump_index
        th_n = np.concatenate([th[:j], [th[j]], th[j:]])
        a_n = np.concatenate([a[:j], [self.left_limit], a[j:]])
        w = np.zeros_like(th_n)
        hl = np.diff(th_n[: j + 1])
        w[:j] += 0.5 * hl
        w[1 : j + 1] += 0.5 * hl
        hr = np.diff(th_n[j + 1 :])
        w[j + 1 : -1] += 0.5 * hr
        w[j + 2 :] += 0.5 * hr
        return th_n, a_n, w

    def node_values(self) -> np.ndarray:
        return self.nodes()[1]

    def from_node_values(self, a_nodes) -> "AttackFunction":
        """Build a function on the same grid from values laid out like :meth:`nodes`."""
        a_nodes = np.clip(np.asarray(a_nodes, dtype=float), 0.0, 1.0)
        if self.jump_index is None:
            return AttackFunction(self.theta, a_nodes)
        j = self.jump_index
        values = np.concatenate([a_nodes[:j], a_nodes[j + 1 :]])
        return AttackFunction(self.theta, values, self.jump, a_nodes[j])

    def __call__(self, theta):
        theta = np.asarray(theta, dtype=float)
        if self.jump_index is None:
            out = np.interp(theta, self.theta, self.values)
        else:
            j = self.jump_index
            lt = np.append(self.theta[:j], self.theta[j])
            la = np.append(self.values[:j], self.left_limit)
            left = np.interp(theta, lt, la)
            right = np.interp(theta, self.theta[j:], self.values[j:])
            out = np.where(theta < self.jump, left, right)
        return float(out) if out.ndim == 0 else out

    def sup_distance(self, other: "AttackFunction") -> float:
        if other.theta.shape != self.theta.shape or not np.array_equal(other.theta, self.theta):
            grid = np.union1d(self.theta, other.theta)
            return float(np.max(np.abs(self(grid) - other(grid))))
        return float(np.max(np.abs(self.node_values() - other.node_values())))

    def within_bounds(self, delta: float, t: Optional[float] = None, slack: float = 1e-12) -> bool:
        """Check ``A >= 1 - delta`` left of ``t`` and ``A <= delta`` from ``t`` on."""
        t = self.jump if t is None else t
        th, a, _ = self.nodes()
        if self.jump_index is None:
            left = th < t
        else:
            # node j is the doubled jump node carrying the left limit
            left = np.arange(th.size) <= self.jump_index
        ok_left = np.all(a[left] >= 1.0 - delta - slack)
        ok_right = np.all(a[~left] <= delta + slack)
        return bool(ok_left and ok_right)

    def slopes(self):
        """Finite-difference slopes on each side of the jump (never across it)."""
        if self.jump_index is None:
            return np.diff(self.values) / np.diff(self.theta)
        j = self.jump_index
        lt = np.append(self.theta[:j], self.theta[j])
        la = np.append(self.values[:j], self.left_limit)
        left = np.diff(la) / np.diff(lt)
        right = np.diff(self.values[j:]) / np.diff(self.theta[j:])
        return np.concatenate([left, right])

    def rows(self):
        """(theta, A) rows; at the jump the left limit precedes the right value."""
        th, a, _ = self.nodes()
        return list(zip(th.tolist(), a.tolist()))

    def to_dict(self) -> dict:
        return {
            "theta": self.theta.tolist(),
            "values": self.values.tolist(),
            "jump": self.jump,
            "left_limit": self.left_limit,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "AttackFunction":
        return cls(d["theta"], d["values"], d.get("jump"), d.get("left_limit"))


def step_grid(t: float, half_width: float, n: int) -> np.ndarray:
    """Uniform grid of ``n`` (odd) points over ``[t - half_width, t + half_width]``
    whose middle node is exactly ``t``."""
    if n < 3 or n % 2 == 0:
        raise DomainError("grid size must be an odd integer >= 3")
    k = np.arange(n) - (n - 1) // 2
    return t + k * (half_width / ((n - 1) // 2))


@dataclass
class EquilibriumReport:
    """Outcome of a best-response iteration and its diagnostics."""

    model: str
    t: float
    attack: AttackFunction
    converged: bool
    iterations: int
    deltas: list = field(default_factory=list)
    residual: float = float("nan")
    bounds_ok: list = field(default_factory=list)
    cutoffs: list = field(default_factory=list)
    margins: dict = field(default_factory=dict)
    diagnostics: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        return {
            "model": self.model,
            "t": self.t,
            "converged": self.converged,
            "iterations": self.iterations,
            "deltas": list(self.deltas),
            "residual": self.residual,
            "bounds_ok": list(self.bounds_ok),
            "cutoffs": list(self.cutoffs),
            "margins": dict(self.margins),
            "diagnostics": dict(self.diagnostics),
            "attack": self.attack.to_dict(),
        }

    @classmethod
    def from_dict(cls, d: dict) -> "EquilibriumReport":
        d = dict(d)
        d["attack"] = AttackFunction.from_dict(d["attack"])
        return cls(**d)
