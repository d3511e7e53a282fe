"""First-hit probabilities of a finite point set.

Two points are handled by an explicit formula in ``h`` (and ``kappa`` for
transient processes). For ``n`` points the first-hit distribution solves a
linear system built from two-point probabilities only: with a pivot point
``a_p`` and ``k, l`` ranging over the other points,

    P_x(T_{a_k} < T_{a_p}) = sum_l P_x(T_{a_l} = T_A) * P_{a_l}(T_{a_k} < T_{a_p}),

which is the strong Markov property at the first hitting time of ``A``.
The system only involves hitting events, so :func:`first_hit_from_pairs`
is written against an abstract pairwise-probability callable and is reused
verbatim by the finite Markov chain oracle.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from .errors import ConfigError, ConsistencyError, DomainError
from .numerics import solve_with_condition
from .resolvent import ResolventEvaluator

PROB_SLACK = 1e-9
PIVOT_TOL = 1e-7
MAX_CONDITION = 1e12


@dataclass(frozen=True)
class PointSet:
    """Strictly increasing target points ``a_1 < ... < a_n``."""

    points: tuple[float, ...]

    def __post_init__(self):
        pts = tuple(float(p) for p in self.points)
        if not pts:
            raise ConfigError("point set must contain at least one point")
        if not all(np.isfinite(pts)):
            raise ConfigError("points must be finite")
        if any(b <= a for a, b in zip(pts, pts[1:])):
            raise ConfigError("points must be strictly increasing")
        object.__setattr__(self, "points", pts)

    @classmethod
    def of(cls, points: Sequence[float]) -> "PointSet":
        return cls(tuple(points))

    def __len__(self):
        return len(self.points)

    def __getitem__(self, i):
        return self.points[i]

    def __iter__(self):
        return iter(self.points)

    def index(self, x: float) -> int | None:
        try:
            return self.points.index(float(x))
        except ValueError:
            return None

    def without(self, i: int) -> "PointSet":
        return PointSet(self.points[:i] + self.points[i + 1:])

    def shifted(self, c: float) -> "PointSet":
        return PointSet(tuple(p + c for p in self.points))


@dataclass(frozen=True)
class HittingProblem:
    points: PointSet
    start: float

    def __post_init__(self):
        if not isinstance(self.points, PointSet):
            object.__setattr__(self, "points", PointSet.of(self.points))
        object.__setattr__(self, "start", float(self.start))


@dataclass
class HittingDistribution:
    """``probs[i] = P_x(T_{a_i} = T_A)``, clamped to ``[0, 1]``.

    ``raw`` keeps the unclamped solver output; ``method_tags`` says where each
    entry came from (``indicator``, ``closed-form``, ``solved``).
    """

    points: tuple[float, ...]
    start: float
    probs: np.ndarray
    raw: np.ndarray
    method_tags: list[str]
    residual: float = 0.0
    condition: float = 1.0
    pivot_discrepancy: float = 0.0
    diagnostics: dict = field(default_factory=dict)

    @property
    def total(self) -> float:
        return float(np.sum(self.probs))

    def as_dict(self) -> dict:
        return {
            "start": self.start,
            "points": list(self.points),
            "probs": [float(p) for p in self.probs],
            "total": self.total,
            "methods": list(self.method_tags),
            "residual": self.residual,
            "condition": self.condition,
            "pivot_discrepancy": self.pivot_discrepancy,
        }


@dataclass
class GreenMatrix:
    """``G[i, k]``: expected local time at ``a_k`` before ``T_{a_p}`` from ``a_i``."""

    entries: np.ndarray
    indices: tuple[int, ...]
    pivot: int
    condition: float
    near_singular: bool


# ---------------------------------------------------------------------------
# generic core


PairProb = Callable[[int, int, int], float]


def pairwise_from(pair: PairProb, n: int, pivot: int) -> tuple[np.ndarray, list[int]]:
    """``M[k, l] = pair(l, k, pivot)``, i.e. ``P_{a_l}(T_{a_k} < T_{a_pivot})``.

    Rows and columns run over the indices other than ``pivot``; the diagonal
    is 1.
    """
    idx = [k for k in range(n) if k != pivot]
    m = len(idx)
    M = np.eye(m)
    for r, k in enumerate(idx):
        for c, l in enumerate(idx):
            if r != c:
                M[r, c] = pair(l, k, pivot)
    return M, idx


def first_hit_from_pairs(
    pair: PairProb,
    start_pair: Callable[[int, int], float],
    n: int,
    pivot: int,
    max_condition: float = MAX_CONDITION,
) -> tuple[dict[int, float], float, float]:
    """Solve the pivoted first-hit system.

    ``pair(l, k, p)`` is ``P_{a_l}(T_{a_k} < T_{a_p})`` and ``start_pair(k, p)``
    is ``P_x(T_{a_k} < T_{a_p})``. Returns ``({i: P_x(T_{a_i} = T_A)}`` for
    every ``i != pivot``, condition estimate, residual).
    """
    M, idx = pairwise_from(pair, n, pivot)
    v = np.array([start_pair(k, pivot) for k in idx])
    sol, cond, resid = solve_with_condition(
        M, v, max_condition, what=f"first-hit system with pivot {pivot}"
    )
    return dict(zip(idx, sol.tolist())), cond, resid


# ---------------------------------------------------------------------------
# Lévy-process operations


def two_point(ev: ResolventEvaluator, x: float, a: float, b: float) -> float:
    """``P_x(T_a < T_b)`` from ``h`` (and ``kappa`` when transient)."""
    if a == b:
        raise DomainError("two_point needs a != b")
    if x == a:
        return 1.0
    if x == b:
        return 0.0
    h = ev.h
    h_ba, h_ab, h_xb, h_xa = h(b - a), h(a - b), h(x - b), h(x - a)
    num = h_ba + h_xb - h_xa
    den = h_ab + h_ba
    if not ev.is_recurrent:
        k = ev.kappa()
        num -= k * h_xb * h_ba
        den -= k * h_ab * h_ba
    if not den > 0:
        raise DomainError(f"two_point: non-positive denominator {den!r} for a={a!r}, b={b!r}")
    return num / den


def single_point(ev: ResolventEvaluator, x: float, a: float) -> float:
    """``P_x(T_a < inf)``."""
    if x == a or ev.is_recurrent:
        return 1.0
    return 1.0 - ev.kappa() * ev.h(x - a)


def _pair_fn(ev: ResolventEvaluator, pts: Sequence[float]) -> PairProb:
    return lambda l, k, p: two_point(ev, pts[l], pts[k], pts[p])


def pairwise_matrix(ev: ResolventEvaluator, points: PointSet, pivot: int) -> np.ndarray:
    """Matrix ``P_{a_l}(T_{a_k} < T_{a_pivot})`` over the non-pivot indices."""
    n = len(points)
    if n < 2:
        raise DomainError("pairwise_matrix needs at least two points")
    if not 0 <= pivot < n:
        raise DomainError(f"pivot index {pivot} out of range")
    return pairwise_from(_pair_fn(ev, points.points), n, pivot)[0]


def _clamp(raw: np.ndarray) -> np.ndarray:
    return np.clip(raw, 0.0, 1.0)


def multi_point(
    ev: ResolventEvaluator,
    problem: HittingProblem,
    pivot_tol: float = PIVOT_TOL,
    max_condition: float = MAX_CONDITION,
) -> HittingDistribution:
    """First-hit distribution of ``problem.points`` from ``problem.start``.

    Entries other than ``a_n`` come from the system pivoted at ``a_n``; the
    ``a_n`` entry comes from a second solve pivoted at ``a_1``, and the two
    solves must agree on their common entries to ``pivot_tol``.
    """
    pts = problem.points.points
    x = problem.start
    n = len(pts)

    hit = problem.points.index(x)
    if hit is not None:
        raw = np.zeros(n)
        raw[hit] = 1.0
        return HittingDistribution(pts, x, raw.copy(), raw, ["indicator"] * n)

    if n == 1:
        p = single_point(ev, x, pts[0])
        raw = np.array([p])
        return HittingDistribution(pts, x, _clamp(raw), raw, ["closed-form"])

    pair = _pair_fn(ev, pts)

    def start_pair(k, p):
        return two_point(ev, x, pts[k], pts[p])

    last, cond_last, res_last = first_hit_from_pairs(pair, start_pair, n, n - 1, max_condition)
    first, cond_first, res_first = first_hit_from_pairs(pair, start_pair, n, 0, max_condition)

    raw = np.array([last[i] for i in range(n - 1)] + [first[n - 1]])
    overlap = [i for i in range(1, n - 1)]
    disc = max((abs(last[i] - first[i]) for i in overlap), default=0.0)
    if disc > pivot_tol:
        raise ConsistencyError(
            f"pivot a_1 and pivot a_n solutions differ by {disc:.3e} on shared entries"
        )
    tag = "closed-form" if n == 2 else "solved"
    dist = HittingDistribution(
        pts,
        x,
        _clamp(raw),
        raw,
        [tag] * n,
        residual=max(res_last, res_first),
        condition=max(cond_last, cond_first),
        pivot_discrepancy=disc,
    )
    dist.diagnostics["clamped"] = bool(np.any(raw != dist.probs))
    total = float(np.sum(raw))
    if ev.is_recurrent and abs(total - 1.0) > 1e3 * PROB_SLACK:
        dist.diagnostics["total_defect"] = total - 1.0
    return dist


def hitting_distribution(ev: ResolventEvaluator, points: Sequence[float], x: float, **kw) -> HittingDistribution:
    """Convenience wrapper around :func:`multi_point`."""
    return multi_point(ev, HittingProblem(PointSet.of(points), x), **kw)


def green_matrix(ev: ResolventEvaluator, points: PointSet, pivot: int) -> GreenMatrix:
    """Green matrix of the process killed at ``a_pivot``, restricted to the other points.

    Built as ``G[i, k] = P_{a_i}(T_{a_k} < T_{a_p}) * h^B(a_k - a_p)``, so
    ``G = M^T D`` with ``M`` the pairwise matrix and ``D`` diagonal.
    """
    n = len(points)
    if n < 2:
        raise DomainError("green_matrix needs at least two points")
    pts = points.points
    M, idx = pairwise_from(_pair_fn(ev, pts), n, pivot)
    d = np.array([ev.h_B(pts[k] - pts[pivot]) for k in idx])
    G = M.T * d[None, :]
    cond = float(np.linalg.cond(G, 1))
    return GreenMatrix(G, tuple(idx), pivot, cond, near_singular=not cond < MAX_CONDITION)
