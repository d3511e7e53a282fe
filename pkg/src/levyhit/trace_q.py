"""Generator (Q-matrix) of the trace process on a finite point set.

Row ``i`` is assembled from excursions away from ``a_i``:

* ``raw[k] = n^{a_i}(T_{a_k} < T_{a_i})``, the excursion rate reaching
  ``a_k``, which by spatial homogeneity is ``n^0(T_{a_k - a_i} < T_0)``;
* solving the pairwise system pivoted at ``a_i`` against ``raw`` gives
  ``s[k] = n^{a_i}(T_{a_k} = T_{A \\ a_i})``, the rate of excursions whose
  first point of ``A`` other than ``a_i`` is ``a_k``;
* ``P_{a_i}(T_{a_j} = T_{A \\ a_i})`` is a first-hit distribution of the
  remaining points, and ``q_ij = -q_ii * P_{a_i}(T_{a_j} = T_{A \\ a_i})``.

For a recurrent process ``q_ii = -sum(s)``. For a transient one, the
excursions that never come back and miss ``A`` also end the sojourn at
``a_i``; their rate is not in ``s``, so the total exit rate is
``sum(s) / sum_j P_{a_i}(T_{a_j} = T_{A \\ a_i})``, and the row deficit is
the killing rate of the trace chain.

Normalization: local time at ``a`` has ``q``-potential ``r_q(a - x)`` and
excursion measures are normalized accordingly; ``Q`` depends on this choice
and every route in this module uses it.

:func:`getoor_limit_Q` is an independent route: ``-Q`` is the limit of the
inverse of the ``lam``-resolvent matrix ``r_lam(a_j - a_i)`` as ``lam -> 0+``.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Optional, Sequence

import numpy as np

from .errors import DomainError, InvariantError, UnsupportedFamily
from .hitting import (
    MAX_CONDITION,
    HittingProblem,
    PointSet,
    _pair_fn,
    multi_point,
    pairwise_from,
    single_point,
)
from .models import BrownianMotion, ProcessModel, SpectrallyNegative, StrictlyStable
from .numerics import extrapolate_to_zero, solve_with_condition
from .resolvent import ResolventEvaluator

GEN_SLACK = 1e-9


@dataclass
class ExcursionVector:
    base: int
    indices: tuple[int, ...]
    solved: np.ndarray
    raw: np.ndarray
    condition: float = 1.0

    @property
    def total(self) -> float:
        return float(np.sum(self.solved))


@dataclass
class QMatrix:
    """Generator on ``points`` (in the order given), with diagnostics."""

    entries: np.ndarray
    points: tuple[float, ...]
    recurrent: bool
    route: str = "excursion"
    diagnostics: dict = field(default_factory=dict)

    @property
    def n(self) -> int:
        return len(self.points)

    @property
    def row_sums(self) -> np.ndarray:
        return self.entries.sum(axis=1)

    @property
    def killing_rates(self) -> np.ndarray:
        return np.maximum(-self.row_sums, 0.0)

    @property
    def min_offdiagonal(self) -> float:
        off = self.entries[~np.eye(self.n, dtype=bool)]
        return float(off.min()) if off.size else 0.0

    def check(self, slack: float = GEN_SLACK) -> list[str]:
        """List of violated generator invariants (empty when valid)."""
        Q = self.entries
        scale = max(1.0, float(np.max(np.abs(Q))))
        bad = []
        for i in range(self.n):
            if not Q[i, i] < 0:
                bad.append(f"q[{i},{i}] = {Q[i, i]!r} is not negative")
            for j in range(self.n):
                if i != j and Q[i, j] < -slack * scale:
                    bad.append(f"q[{i},{j}] = {Q[i, j]!r} is negative")
            rs = float(Q[i].sum())
            if self.recurrent and abs(rs) > slack * scale:
                bad.append(f"row {i} sums to {rs!r}")
            if not self.recurrent and rs > slack * scale:
                bad.append(f"row {i} sums to {rs!r} > 0")
        return bad

    def permuted(self, order: Sequence[int]) -> "QMatrix":
        order = list(order)
        return QMatrix(
            self.entries[np.ix_(order, order)].copy(),
            tuple(self.points[k] for k in order),
            self.recurrent,
            self.route,
            dict(self.diagnostics),
        )

    def as_dict(self) -> dict:
        return {
            "points": list(self.points),
            "matrix": [[float(v) for v in row] for row in self.entries],
            "recurrent": self.recurrent,
            "route": self.route,
            "row_sums": [float(v) for v in self.row_sums],
            "min_offdiagonal": self.min_offdiagonal,
            "diagnostics": {k: v for k, v in self.diagnostics.items() if _jsonable(v)},
        }


def _jsonable(v) -> bool:
    return isinstance(v, (int, float, str, bool, list, type(None)))


def _finalize(Q: np.ndarray, points, recurrent: bool, route: str, diagnostics: dict, slack: float = GEN_SLACK) -> QMatrix:
    """Clamp tiny negative off-diagonals and enforce generator invariants."""
    off = ~np.eye(len(Q), dtype=bool)
    low = Q[off].min() if off.any() else 0.0
    qm = QMatrix(Q, tuple(points), recurrent, route, diagnostics)
    problems = qm.check(slack)
    if problems:
        raise InvariantError(f"{route} generator is invalid: " + "; ".join(problems))
    Q[off & (Q < 0)] = 0.0
    diagnostics["min_offdiagonal_raw"] = float(low)
    diagnostics["row_sums"] = [float(v) for v in Q.sum(axis=1)]
    if not recurrent:
        diagnostics["killing_rates"] = [float(v) for v in np.maximum(-Q.sum(axis=1), 0.0)]
    return qm


# ---------------------------------------------------------------------------
# generic core


def generator_from_pairs(
    pair: Callable[[int, int, int], float],
    raw_rate: Callable[[int, int], float],
    first_hit: Callable[[int], dict],
    n: int,
    recurrent: bool,
    escape_rate: Optional[Callable[[int], float]] = None,
    max_condition: float = MAX_CONDITION,
) -> tuple[np.ndarray, list[ExcursionVector], dict]:
    """Assemble a generator from hitting data only.

    ``pair(l, k, p) = P_{a_l}(T_{a_k} < T_{a_p})``, ``raw_rate(i, k) =
    n^{a_i}(T_{a_k} < T_{a_i})`` and ``first_hit(i) = {j: P_{a_i}(T_{a_j} =
    T_{A \\ a_i})}``. ``escape_rate(i)`` is used for the diagonal of a
    transient row whose excursions can reach no other point.
    """
    if n < 2:
        raise DomainError("a generator needs at least two points")
    Q = np.zeros((n, n))
    vectors = []
    route_gap = 0.0
    conds = []
    for i in range(n):
        M, idx = pairwise_from(pair, n, i)
        raw = np.array([raw_rate(i, k) for k in idx])
        s, cond, _ = solve_with_condition(M, raw, max_condition, what=f"excursion system for row {i}")
        conds.append(cond)
        vectors.append(ExcursionVector(i, tuple(idx), s, raw, cond))
        J = float(np.sum(s))
        probs = first_hit(i)
        total = float(sum(probs.values()))
        if recurrent:
            qii = -J
        elif total > 0:
            qii = -J / total
        else:
            if escape_rate is None:
                raise DomainError(f"row {i}: no other point is reachable and no escape rate was given")
            qii = -escape_rate(i)
        Q[i, i] = qii
        for j, p in probs.items():
            Q[i, j] = -qii * p
        # s[j] is a second route to the same off-diagonal rate
        for k, sk in zip(idx, s):
            route_gap = max(route_gap, abs(Q[i, k] - sk))
    diag = {"excursion_route_gap": route_gap, "conditions": conds}
    return Q, vectors, diag


# ---------------------------------------------------------------------------
# Lévy-process operations


def _as_pointset(points) -> PointSet:
    return points if isinstance(points, PointSet) else PointSet.of(points)


def excursion_raw_vector(ev: ResolventEvaluator, points, i: int) -> np.ndarray:
    """``n^{a_i}(T_{a_k} < T_{a_i})`` for ``k != i``, in index order."""
    pts = _as_pointset(points).points
    if len(pts) < 2:
        raise DomainError("need at least two points")
    return np.array([ev.excursion_rate(pts[k] - pts[i]) for k in range(len(pts)) if k != i])


def excursion_solved_vector(ev: ResolventEvaluator, points, i: int) -> ExcursionVector:
    """``n^{a_i}(T_{a_k} = T_{A \\ a_i})`` for ``k != i``."""
    ps = _as_pointset(points)
    pts = ps.points
    M, idx = pairwise_from(_pair_fn(ev, pts), len(pts), i)
    raw = excursion_raw_vector(ev, ps, i)
    s, cond, _ = solve_with_condition(M, raw, MAX_CONDITION, what=f"excursion system for a_{i}")
    return ExcursionVector(i, tuple(idx), s, raw, cond)


def _first_hit_rest(ev: ResolventEvaluator, pts: Sequence[float], i: int) -> dict:
    """``{j: P_{a_i}(T_{a_j} = T_{A \\ a_i})}``."""
    rest = [j for j in range(len(pts)) if j != i]
    if len(rest) == 1:
        return {rest[0]: single_point(ev, pts[i], pts[rest[0]])}
    dist = multi_point(ev, HittingProblem(PointSet(tuple(pts[j] for j in rest)), pts[i]))
    return dict(zip(rest, dist.raw.tolist()))


def q_diagonal(ev: ResolventEvaluator, points, i: int) -> float:
    """``q_ii``: minus the rate of leaving ``a_i`` in the trace chain."""
    ps = _as_pointset(points)
    J = excursion_solved_vector(ev, ps, i).total
    if ev.is_recurrent:
        return -J
    total = sum(_first_hit_rest(ev, ps.points, i).values())
    return -J / total if total > 0 else -ev.kappa()


def q_offdiagonal(ev: ResolventEvaluator, points, i: int, j: int) -> float:
    """``q_ij = -q_ii P_{a_i}(T_{a_j} = T_{A \\ a_i})``."""
    if i == j:
        raise DomainError("q_offdiagonal needs i != j")
    ps = _as_pointset(points)
    p = _first_hit_rest(ev, ps.points, i)[j]
    return max(-q_diagonal(ev, ps, i) * p, 0.0)


def build_Q(ev: ResolventEvaluator, points) -> QMatrix:
    """Generator of the trace process on ``points``.

    ``points`` may be given in any order (distinct values); the result is
    indexed in that order.
    """
    seq = [float(p) for p in (points.points if isinstance(points, PointSet) else points)]
    if len(set(seq)) != len(seq):
        raise DomainError("points must be distinct")
    order = sorted(range(len(seq)), key=lambda k: seq[k])
    ps = PointSet(tuple(seq[k] for k in order))
    pts = ps.points
    n = len(pts)
    recurrent = ev.is_recurrent
    Q, vectors, diag = generator_from_pairs(
        _pair_fn(ev, pts),
        lambda i, k: ev.excursion_rate(pts[k] - pts[i]),
        lambda i: _first_hit_rest(ev, pts, i),
        n,
        recurrent,
        escape_rate=None if recurrent else (lambda i: ev.kappa()),
    )
    if not recurrent:
        k = ev.kappa()
        diag["killing_identity"] = [
            float(k * (1.0 - sum(s * ev.h(pts[j] - pts[v.base]) for j, s in zip(v.indices, v.solved))))
            for v in vectors
        ]
    qm = _finalize(Q, pts, recurrent, "excursion", diag)
    inverse = [order.index(k) for k in range(n)]
    return qm.permuted(inverse) if order != list(range(n)) else qm


# ---------------------------------------------------------------------------
# closed forms


def _bm_like_q(points, hB: Callable[[float], float]) -> np.ndarray:
    """Nearest-neighbour generator of a continuous process: rate ``1/h^B(gap)``."""
    n = len(points)
    Q = np.zeros((n, n))
    for i in range(n - 1):
        r = 1.0 / hB(points[i + 1] - points[i])
        Q[i, i + 1] = Q[i + 1, i] = r
    Q[np.diag_indices(n)] = -Q.sum(axis=1)
    return Q


def _stable_q3(K: float, beta: float, A: float, B: float, C: float) -> np.ndarray:
    D = (1 - beta**2) * (2 * A * B + 2 * A * C + 2 * B * C - A * A - B * B - C * C) + 4 * beta**2 * A * B
    bp, bm = 1 + beta, 1 - beta
    return (K / D) * np.array(
        [
            [-2 * B, bp * (C - A) + bm * B, bp * (A + B - C)],
            [bm * (C - A) + bp * B, -2 * C, bm * A + bp * (C - B)],
            [bm * (A + B - C), bp * A + bm * (C - B), -2 * A],
        ]
    )


def _sn_q3(W: Callable[[float], float], a1, a2, a3) -> np.ndarray:
    w12, w23, w13 = W(a2 - a1), W(a3 - a2), W(a3 - a1)
    d = w12 * w23
    return np.array(
        [
            [-1 / w12, 1 / w12, 0.0],
            [(w13 - w12) / d, -w13 / d, 1 / w23],
            [(w12 + w23 - w13) / d, (w13 - w23) / d, -1 / w23],
        ]
    )


def closed_form_Q(model: ProcessModel, points) -> QMatrix:
    """Explicit two- and three-point generators for recurrent closed-form families.

    Brownian motion gives nearest-neighbour rates ``sigma2 / (2 gap)``. The
    strictly stable three-point generator is a rational function of
    ``A = (a2-a1)^(alpha-1)``, ``B = (a3-a2)^(alpha-1)``,
    ``C = (a3-a1)^(alpha-1)`` and ``beta``. Recurrent spectrally negative
    processes are written through their scale function ``W``.
    """
    ps = _as_pointset(points)
    pts = ps.points
    n = len(pts)
    if n not in (2, 3):
        raise UnsupportedFamily("closed-form generators exist for two or three points only")
    if not model.is_recurrent:
        raise UnsupportedFamily("closed-form generators are for recurrent processes")

    if isinstance(model, BrownianMotion):
        Q = _bm_like_q(pts, lambda d: 2.0 * d / model.sigma2)
    elif isinstance(model, StrictlyStable):
        K, beta, p = model.K_alpha, model.beta, model.alpha - 1.0
        if n == 2:
            r = K / (2.0 * (pts[1] - pts[0]) ** p)
            Q = r * np.array([[-1.0, 1.0], [1.0, -1.0]])
        else:
            A, B, C = (pts[1] - pts[0]) ** p, (pts[2] - pts[1]) ** p, (pts[2] - pts[0]) ** p
            Q = _stable_q3(K, beta, A, B, C)
    elif isinstance(model, SpectrallyNegative):
        W = model.scale_function
        if n == 2:
            Q = (1.0 / W(pts[1] - pts[0])) * np.array([[-1.0, 1.0], [1.0, -1.0]])
        else:
            Q = _sn_q3(W, *pts)
    else:
        raise UnsupportedFamily(f"no closed-form generator for {model.name}")
    return QMatrix(Q, pts, True, "closed-form")


# ---------------------------------------------------------------------------
# resolvent-matrix limit


def getoor_matrix(ev: ResolventEvaluator, pts: Sequence[float], lam: float) -> np.ndarray:
    """``Q^lam = -(U^lam)^{-1}`` with ``U^lam[i, j] = r_lam(a_j - a_i)``."""
    n = len(pts)
    r0 = ev.resolvent_density(lam, 0.0)
    U = np.full((n, n), r0)
    for i in range(n):
        for j in range(n):
            if i != j:
                # r_lam(a_j - a_i) = r_lam(0) - (r_lam(0) - r_lam(-(a_i - a_j)))
                U[i, j] = r0 - ev.increment(lam, pts[i] - pts[j])
    inv, cond, _ = solve_with_condition(U, np.eye(n), 1e14, what=f"resolvent matrix at lam={lam:g}")
    return -inv


def getoor_limit_Q(
    ev: ResolventEvaluator,
    points,
    lambda_sequence: Optional[Sequence[float]] = None,
    tol: float = 1e-6,
) -> QMatrix:
    """Entrywise ``lim_{lam->0+} Q^lam`` by extrapolation along ``lambda_sequence``."""
    ps = _as_pointset(points)
    pts = ps.points
    if len(pts) < 2:
        raise DomainError("need at least two points")
    lams = list(lambda_sequence) if lambda_sequence is not None else list(ev.config.q_sequence)
    if len(lams) < 2 or any(b >= a for a, b in zip(lams, lams[1:])) or lams[-1] <= 0:
        raise DomainError("lambda_sequence must be strictly decreasing and positive")
    mats = np.array([getoor_matrix(ev, pts, lam) for lam in lams])
    scale = float(np.max(np.abs(mats[-1])))
    ext = extrapolate_to_zero(lams, mats, ev.model.getoor_basis(), tol, tol * scale, what="resolvent-matrix limit")
    Q = np.array(ext.value, dtype=float)
    diag = {
        "extrapolation_error": ext.error,
        "extrapolation_order": ext.order,
        "lam_min": lams[-1],
        "row_sums_at_lam_min": [float(v) for v in mats[-1].sum(axis=1)],
    }
    # an extrapolated limit is only as good as the extrapolation
    return _finalize(Q, pts, ev.is_recurrent, "resolvent-limit", diag, slack=max(GEN_SLACK, 100 * tol))


def max_deviation(P: QMatrix, R: QMatrix, relative: bool = False) -> float:
    """Largest entrywise difference (relative to ``max|R|`` when asked)."""
    d = float(np.max(np.abs(P.entries - R.entries)))
    if relative:
        d /= max(float(np.max(np.abs(R.entries))), 1e-300)
    return d


__all__ = [
    "ExcursionVector",
    "QMatrix",
    "build_Q",
    "closed_form_Q",
    "excursion_raw_vector",
    "excursion_solved_vector",
    "generator_from_pairs",
    "getoor_limit_Q",
    "getoor_matrix",
    "max_deviation",
    "q_diagonal",
    "q_offdiagonal",
]

