"""Agent-based steady states: a finite crowd re-deciding round after round.

Each round every agent draws fresh signal noise around the current state
(theta, A_hat), applies a fixed cutoff rule, and the attacking fraction
becomes the next A_hat. A steady state of this process is a fixed point of
the aggregate attack map, so terminal values can be compared with the
analytic solvers.

Randomness: numpy's Philox4x64 counter-based generator. The stream for round
r and chunk k of a run with seed s is keyed by SeedSequence([s, r, k]) and
chunks have a fixed size, so a trace depends only on the configuration and
the seed, never on how the work was scheduled.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from typing import Optional, Sequence

import numpy as np

from ._parallel import pmap
from .dist import ErrorDistribution
from .errors import ConfigError, DomainError

MODELS = ("netsignal", "onesignal", "twosignal")
CHUNK = 1 << 16


@dataclass(frozen=True)
class SimConfig:
    """One simulated crowd.

    netsignal / onesignal: agents see z = A_hat - theta + noise and attack iff
    z >= ``cutoff`` (netsignal requires normal noise).
    twosignal: agents see x = theta + noise_x and y = A_hat + noise and
    attack iff y >= ``cutoff`` and x <= ``x_cutoff``.
    """

    model: str = "netsignal"
    n_agents: int = 100_000
    theta: float = 0.25
    cutoff: float = 0.25
    noise: ErrorDistribution = field(default_factory=lambda: ErrorDistribution.normal(16.0))
    noise_x: Optional[ErrorDistribution] = None
    x_cutoff: float = math.inf
    seed: int = 0
    max_rounds: int = 1000
    damping: float = 1.0
    init: float = 0.5
    tol: Optional[float] = None  # default 1/sqrt(n_agents)
    patience: int = 3

    def __post_init__(self):
        if self.model not in MODELS:
            raise ConfigError(f"unknown model {self.model!r}; expected one of {MODELS}", key="model")
        if int(self.n_agents) != self.n_agents or self.n_agents < 1:
            raise DomainError("n_agents must be a positive integer")
        if not 0.0 < self.damping <= 1.0:
            raise DomainError("damping must lie in (0, 1]")
        if not 0.0 <= self.init <= 1.0:
            raise DomainError("initial attack must lie in [0, 1]")
        if self.max_rounds < 1 or self.patience < 1:
            raise DomainError("max_rounds and patience must be positive")
        if not 0 <= self.seed < 2**64:
            raise DomainError("seed must be a 64-bit unsigned integer")
        if self.model == "netsignal" and self.noise.kind != "normal":
            raise DomainError("netsignal runs use normal noise")
        if self.model == "twosignal" and self.noise_x is None:
            raise DomainError("twosignal runs need noise_x")

    @property
    def threshold(self) -> float:
        return 1.0 / math.sqrt(self.n_agents) if self.tol is None else self.tol


@dataclass
class SimTrace:
    a_hat: list  # a_hat[0] is the initial value
    converged: bool
    convergence_round: Optional[int]
    damping: float
    theta: float
    seed: int

    @property
    def terminal(self) -> float:
        return float(self.a_hat[-1])

    @property
    def success(self) -> bool:
        # a tie keeps the status quo
        return self.terminal > self.theta

    def rows(self):
        return [(i, float(a)) for i, a in enumerate(self.a_hat)]

    def to_dict(self) -> dict:
        return {
            "a_hat": [float(a) for a in self.a_hat],
            "converged": self.converged,
            "convergence_round": self.convergence_round,
            "damping": self.damping,
            "terminal": self.terminal,
            "success": self.success,
            "theta": self.theta,
            "seed": self.seed,
        }


def _rng(seed: int, rnd: int, chunk: int) -> np.random.Generator:
    return np.random.Generator(np.random.Philox(np.random.SeedSequence([seed, rnd, chunk])))


def _count_attackers(cfg: SimConfig, a_prev: float, rnd: int) -> int:
    total = 0
    for k, start in enumerate(range(0, cfg.n_agents, CHUNK)):
        m = min(CHUNK, cfg.n_agents - start)
        rng = _rng(cfg.seed, rnd, k)
        if cfg.model == "twosignal":
            x = cfg.theta + cfg.noise_x.sample(rng, m)
            y = a_prev + cfg.noise.sample(rng, m)
            total += int(np.count_nonzero((y >= cfg.cutoff) & (x <= cfg.x_cutoff)))
        else:
            z = a_prev - cfg.theta + cfg.noise.sample(rng, m)
            total += int(np.count_nonzero(z >= cfg.cutoff))
    return total


def _run(cfg: SimConfig, damping: float) -> SimTrace:
    a = [float(cfg.init)]
    calm = 0
    tol = cfg.threshold
    for rnd in range(1, cfg.max_rounds + 1):
        frac = _count_attackers(cfg, a[-1], rnd) / cfg.n_agents
        nxt = damping * frac + (1.0 - damping) * a[-1]
        a.append(nxt)
        calm = calm + 1 if abs(nxt - a[-2]) < tol else 0
        if calm >= cfg.patience:
            return SimTrace(a, True, rnd, damping, cfg.theta, cfg.seed)
    return SimTrace(a, False, None, damping, cfg.theta, cfg.seed)


def run_steady_state(cfg: SimConfig) -> SimTrace:
    """Iterate the crowd until A_hat settles; one retry at damping 0.5.

    A non-converged trace is returned (``converged`` False) rather than raised.
    """
    trace = _run(cfg, cfg.damping)
    if not trace.converged and cfg.damping == 1.0:
        retry = _run(cfg, 0.5)
        if retry.converged:
            return retry
    return trace


def replication_seed(seed: int, replication: int) -> int:
    return int(np.random.SeedSequence([seed, replication]).generate_state(1, np.uint64)[0])


def _sweep_task(args):
    cfg, theta, rep, init = args
    s = replication_seed(cfg.seed, rep)
    tr = run_steady_state(replace(cfg, theta=float(theta), seed=s, init=float(init)))
    return {
        "theta": float(theta),
        "replication": rep,
        "seed": s,
        "init": float(init),
        "terminal": tr.terminal,
        "success": tr.success,
        "converged": tr.converged,
    }


def sweep(
    template: SimConfig,
    thetas: Sequence[float],
    replications: int = 1,
    inits: Sequence[float] = (0.0, 1.0),
    workers: Optional[int] = None,
) -> list:
    """Terminal attack over a theta grid, per replication and initial A_hat.

    Rows are sorted by (theta, init, replication); non-converged runs are
    kept and flagged.
    """
    if replications < 0:
        raise DomainError("replications must be non-negative")
    tasks = [(template, th, r, i) for th in sorted(thetas) for i in sorted(inits) for r in range(replications)]
    return pmap(_sweep_task, tasks, workers)


def hysteresis_gaps(rows: list) -> list:
    """(theta, terminal from the highest init - terminal from the lowest init),
    averaged over replications."""
    by = {}
    for r in rows:
        by.setdefault(r["theta"], {}).setdefault(r["init"], []).append(r["terminal"])
    out = []
    for th in sorted(by):
        d = by[th]
        hi, lo = max(d), min(d)
        out.append((th, float(np.mean(d[hi]) - np.mean(d[lo]))))
    return out
