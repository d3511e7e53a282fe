"""Monte Carlo estimates of first-hit distributions.

Brownian motion is simulated without time discretization: by continuity the
path visits every lattice site between its start and the first target it
hits, so a nearest-neighbour walk on a lattice refining the point set, with
exit probabilities taken from the scale function, has exactly the right
first-hit law.

Strictly stable paths are simulated on an adaptive time grid, with
increments from the Chambers-Mallows-Stuck transform. A point is declared
hit when the path first lands within ``eps`` of it; the same path is scored
for every ``eps`` of the schedule at once and the point-hitting probability
is obtained by a least-squares fit in ``eps**(alpha - 1)``. The fit is a
heuristic bias model for validation only.

Randomness comes from fixed-size blocks of paths, block ``b`` drawing from
``SeedSequence(seed, spawn_key=(b,))``, so results do not depend on how
blocks are scheduled.
"""

from __future__ import annotations

import json
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from .errors import ConfigError, UnsupportedFamily
from .hitting import PointSet
from .models import BrownianMotion, ProcessModel, SpectrallyNegative, StrictlyStable


@dataclass(frozen=True)
class PathConfig:
    """Simulation settings.

    ``step`` is dimensionless: for Brownian paths each gap between
    neighbouring points (and the start) is cut into ``ceil(1/step)`` lattice
    cells; for stable paths the time step at distance ``g`` from the nearest
    ball is ``step * g**alpha / scale``, so increments are ``step**(1/alpha) * g``
    times a standard stable variable. ``eps`` is the smallest hitting radius;
    the schedule is ``eps * (4, 2, 1)``. ``horizon`` (time units) censors
    paths that have not hit; ``None`` picks ``1e3 * diameter**alpha / scale``.
    """

    paths: int = 100_000
    step: float = 0.05
    eps: float = 1e-3
    seed: int = 0
    horizon: Optional[float] = None
    block_size: int = 10_000
    max_steps: int = 100_000
    workers: int = 1
    eps_factors: tuple[float, ...] = (4.0, 2.0, 1.0)

    def __post_init__(self):
        if self.paths < 1:
            raise ConfigError("paths must be at least 1")
        if not self.step > 0 or not self.eps > 0:
            raise ConfigError("step and eps must be positive")
        if self.horizon is not None and not self.horizon > 0:
            raise ConfigError("horizon must be positive")
        if self.block_size < 1 or self.max_steps < 1 or self.workers < 1:
            raise ConfigError("block_size, max_steps and workers must be positive")
        if not 0 <= self.seed < 2**64:
            raise ConfigError("seed must be a 64-bit unsigned integer")
        if len(self.eps_factors) < 2 or any(b >= a for a, b in zip(self.eps_factors, self.eps_factors[1:])):
            raise ConfigError("eps_factors must be strictly decreasing with at least two entries")

    @property
    def eps_schedule(self) -> list[float]:
        return [self.eps * f for f in self.eps_factors]

    def blocks(self) -> list[tuple[int, int]]:
        out, done, b = [], 0, 0
        while done < self.paths:
            size = min(self.block_size, self.paths - done)
            out.append((b, size))
            done += size
            b += 1
        return out


@dataclass
class MonteCarloReport:
    points: list[float]
    start: float
    estimates: list[float]
    std_errors: list[float]
    censored_fraction: float
    eps_schedule: list[float]
    seed: int
    paths: int
    method: str
    escape_fraction: float = 0.0
    per_eps: list[list[float]] = field(default_factory=list)
    notes: list[str] = field(default_factory=list)

    def as_dict(self) -> dict:
        return {
            "estimates": self.estimates,
            "std_errors": self.std_errors,
            "censored_fraction": self.censored_fraction,
            "eps_schedule": self.eps_schedule,
            "seed": self.seed,
            "paths": self.paths,
            "points": self.points,
            "start": self.start,
            "method": self.method,
            "escape_fraction": self.escape_fraction,
            "per_eps": self.per_eps,
            "notes": self.notes,
        }

    def to_json(self) -> str:
        return json.dumps(self.as_dict())


def _block_rng(seed: int, block: int) -> np.random.Generator:
    return np.random.default_rng(np.random.SeedSequence(seed, spawn_key=(block,)))


def _run_blocks(cfg: PathConfig, fn):
    blocks = cfg.blocks()
    if cfg.workers == 1:
        return [fn(b, size) for b, size in blocks]
    with ThreadPoolExecutor(max_workers=cfg.workers) as pool:
        return list(pool.map(lambda bs: fn(*bs), blocks))


# ---------------------------------------------------------------------------
# Brownian motion


def _bm_lattice(points: Sequence[float], x: float, cells: int) -> tuple[np.ndarray, int, np.ndarray]:
    """Lattice refining ``points`` and ``x``; returns sites, start index, target flags."""
    knots = sorted(set(points) | {x})
    sites = [knots[0]]
    for a, b in zip(knots, knots[1:]):
        sites.extend(np.linspace(a, b, cells + 1)[1:].tolist())
    sites = np.array(sites)
    target = np.isin(sites, np.array(points))
    return sites, int(np.searchsorted(sites, x)), target


def simulate_bm_hitting(
    x: float,
    points,
    cfg: PathConfig = PathConfig(),
    mu: float = 0.0,
    sigma2: float = 1.0,
) -> MonteCarloReport:
    """First-hit frequencies for Brownian motion with drift ``mu`` and variance ``sigma2``."""
    ps = points if isinstance(points, PointSet) else PointSet.of(points)
    pts = list(ps.points)
    n = len(pts)
    x = float(x)
    theta = 2.0 * mu / sigma2

    def scale(y):
        # s(y) with P_y(T_u < T_d) = (s(y) - s(d)) / (s(u) - s(d))
        return y if theta == 0 else -math.expm1(-theta * y) / theta

    hit = ps.index(x)
    counts_total = np.zeros(n)
    escaped_total = 0
    if hit is not None:
        est = [0.0] * n
        est[hit] = 1.0
        return MonteCarloReport(pts, x, est, [0.0] * n, 0.0, [], cfg.seed, cfg.paths, "exact")

    inside = pts[0] < x < pts[-1]
    if inside:
        cells = max(1, math.ceil(1.0 / cfg.step))
        sites, i0, target = _bm_lattice(pts, x, cells)
        s = np.array([scale(y) for y in sites])
        # probability of stepping up from each interior site
        p_up = np.zeros(len(sites))
        p_up[1:-1] = (s[1:-1] - s[:-2]) / (s[2:] - s[:-2])
        label = np.full(len(sites), -1)
        label[target] = np.arange(n)
    else:
        # outside the hull: the only possible first hit is the nearest end point
        near = 0 if x < pts[0] else n - 1
        a = pts[near]
        if (x < a and theta >= 0) or (x > a and theta <= 0):
            p_reach = 1.0
        else:
            p_reach = math.exp(-abs(theta) * abs(a - x))

    def block(b, size):
        rng = _block_rng(cfg.seed, b)
        counts = np.zeros(n)
        if not inside:
            reached = int(np.sum(rng.random(size) < p_reach))
            counts[near] = reached
            return counts, size - reached
        pos = np.full(size, i0)
        active = np.arange(size)
        while active.size:
            u = rng.random(active.size)
            pos[active] += np.where(u < p_up[pos[active]], 1, -1)
            done = target[pos[active]]
            if done.any():
                np.add.at(counts, label[pos[active[done]]], 1)
                active = active[~done]
        return counts, 0

    for counts, esc in _run_blocks(cfg, block):
        counts_total += counts
        escaped_total += esc
    N = cfg.paths
    p = counts_total / N
    se = np.sqrt(p * (1 - p) / N)
    notes = [] if inside else ["start outside the point set: one exact escape step"]
    return MonteCarloReport(
        pts, x, p.tolist(), se.tolist(), 0.0, [], cfg.seed, N, "lattice walk",
        escape_fraction=escaped_total / N, notes=notes,
    )


# ---------------------------------------------------------------------------
# stable processes


def stable_standard(rng: np.random.Generator, alpha: float, beta: float, size) -> np.ndarray:
    """Chambers-Mallows-Stuck draws with ``E exp(i lam S) = exp(-|lam|^alpha (1 - i beta tan(pi alpha/2) sgn lam))``.

    Valid for ``alpha != 1``.
    """
    V = rng.uniform(-0.5 * math.pi, 0.5 * math.pi, size)
    W = rng.standard_exponential(size)
    t = beta * math.tan(0.5 * math.pi * alpha)
    B = math.atan(t) / alpha
    S = (1.0 + t * t) ** (0.5 / alpha)
    a = alpha * (V + B)
    return S * np.sin(a) / np.cos(V) ** (1.0 / alpha) * (np.cos(V - a) / W) ** ((1.0 - alpha) / alpha)


def _as_stable(model: ProcessModel) -> StrictlyStable:
    if isinstance(model, StrictlyStable):
        return model
    if isinstance(model, SpectrallyNegative) and model.kind == "stable":
        return model.as_stable()
    raise UnsupportedFamily(f"stable path simulation needs a stable model, got {model.name}")


def sample_increments(model: ProcessModel, t: float, size: int, rng: np.random.Generator) -> np.ndarray:
    """Draws of ``X_t`` for a strictly stable model."""
    m = _as_stable(model)
    return (m.scale * t) ** (1.0 / m.alpha) * stable_standard(rng, m.alpha, m.beta, size)


def eps_fit_weights(eps: Sequence[float], exponent: float) -> np.ndarray:
    """Weights ``w`` with ``sum(w * p(eps))`` the least-squares intercept of ``p = p0 + c eps**exponent``."""
    X = np.column_stack([np.ones(len(eps)), np.asarray(eps, dtype=float) ** exponent])
    return np.linalg.pinv(X)[0]


def simulate_stable_eps_hitting(model: ProcessModel, x: float, points, cfg: PathConfig = PathConfig()) -> MonteCarloReport:
    """First entry into ``eps``-balls around ``points``, extrapolated to ``eps -> 0``."""
    m = _as_stable(model)
    ps = points if isinstance(points, PointSet) else PointSet.of(points)
    pts = np.array(ps.points)
    n = len(pts)
    x = float(x)
    hit = ps.index(x)
    eps = cfg.eps_schedule
    if hit is not None:
        est = [0.0] * n
        est[hit] = 1.0
        return MonteCarloReport(pts.tolist(), x, est, [0.0] * n, 0.0, eps, cfg.seed, cfg.paths, "exact")
    gaps = np.diff(pts)
    if n > 1 and 2 * eps[0] >= gaps.min():
        raise ConfigError("eps balls overlap: eps must be small relative to the smallest gap")

    alpha, beta, c = m.alpha, m.beta, m.scale
    diam = max(float(pts[-1] - pts[0]), float(np.max(np.abs(pts - x))), 1e-12)
    horizon = cfg.horizon if cfg.horizon is not None else 1e3 * diam**alpha / c
    eps_min = eps[-1]
    jump = cfg.step ** (1.0 / alpha)
    k = len(eps)

    def block(b, size):
        rng = _block_rng(cfg.seed, b)
        outcome = np.full((k, size), -1)
        pos = np.full(size, x)
        t = np.zeros(size)
        active = np.arange(size)
        for _ in range(cfg.max_steps):
            if not active.size:
                break
            y = pos[active]
            d = np.abs(y[:, None] - pts[None, :])
            g = np.maximum(d.min(axis=1) - eps_min, eps_min)
            t[active] += cfg.step * g**alpha / c
            y = y + jump * g * stable_standard(rng, alpha, beta, active.size)
            pos[active] = y
            d = np.abs(y[:, None] - pts[None, :])
            near = d.argmin(axis=1)
            dmin = d[np.arange(active.size), near]
            for j in range(k):
                new = (dmin <= eps[j]) & (outcome[j, active] < 0)
                outcome[j, active[new]] = near[new]
            keep = (outcome[k - 1, active] < 0) & (t[active] < horizon)
            active = active[keep]
        return outcome

    outcomes = np.concatenate(_run_blocks(cfg, block), axis=1)
    N = outcomes.shape[1]
    censored = outcomes[-1] < 0
    ok = ~censored
    n_ok = int(ok.sum())
    w = eps_fit_weights(eps, alpha - 1.0)
    per_eps = [[float(np.mean(outcomes[j, ok] == i)) if n_ok else math.nan for i in range(n)] for j in range(k)]
    est, se = [], []
    for i in range(n):
        # per-path combination keeps the correlation between eps levels
        z = sum(w[j] * (outcomes[j, ok] == i) for j in range(k))
        est.append(float(np.mean(z)) if n_ok else math.nan)
        se.append(float(np.std(z, ddof=1) / math.sqrt(n_ok)) if n_ok > 1 else math.nan)
    frac = float(censored.mean())
    notes = [f"eps bias model: linear in eps**{alpha - 1.0:g} (validation heuristic)"]
    if frac > 0.05:
        notes.append(f"warning: {frac:.1%} of paths censored at horizon {horizon:g}")
    return MonteCarloReport(
        pts.tolist(), x, est, se, frac, eps, cfg.seed, N, "eps-ball extrapolation", per_eps=per_eps, notes=notes
    )


def simulate_hitting(model: ProcessModel, x: float, points, cfg: PathConfig = PathConfig()) -> MonteCarloReport:
    """Dispatch on the model family."""
    if isinstance(model, BrownianMotion):
        return simulate_bm_hitting(x, points, cfg, mu=model.mu, sigma2=model.sigma2)
    if isinstance(model, SpectrallyNegative) and model.kind == "brownian":
        return simulate_bm_hitting(x, points, cfg, mu=model.mu, sigma2=model.sigma2)
    return simulate_stable_eps_hitting(model, x, points, cfg)
