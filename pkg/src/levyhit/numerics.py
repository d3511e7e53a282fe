"""Numerical building blocks: Fourier-type quadrature, limit extrapolation
and small dense linear solves with a condition estimate.

All Fourier integrals here are half-line integrals of the form

    (1/pi) * int_0^inf Re(F(lam) * w(lam)) dlam

where ``F`` decays polynomially and ``w`` oscillates with frequency ``|x|``.
They are split at a cut ``L``: the head ``[0, L]`` is handled by adaptive
Gauss-Kronrod on geometric panels, and the tail is split into a
non-oscillatory part (integrated after the substitution ``lam = L/u``) and
cosine/sine parts handled by QUADPACK's Fourier routine (QAWF), which sums
over oscillation cycles with epsilon-algorithm acceleration.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np
from scipy.integrate import IntegrationWarning, quad
from scipy.linalg import lu_factor, lu_solve
from scipy.linalg.lapack import dgecon

from .errors import ExtrapolationError, QuadratureError, SolverError

ComplexFn = Callable[[float], complex]


@dataclass(frozen=True)
class QuadratureConfig:
    """Tolerances and limit sequence used by every numerical route.

    ``q_sequence`` is the decreasing list of killing rates used for
    ``q -> 0+`` extrapolation; by default ``4**-k`` for ``k = 0..10``.
    """

    abs_tol: float = 1e-10
    rel_tol: float = 1e-8
    max_panels: int = 2**14
    tail_growth: float = 2.0
    q_sequence: tuple[float, ...] = tuple(4.0**-k for k in range(11))

    def __post_init__(self):
        if not 0 < self.abs_tol < 1 or not 0 < self.rel_tol < 1:
            raise ValueError("abs_tol and rel_tol must lie in (0, 1)")
        if self.max_panels < 16:
            raise ValueError("max_panels must be at least 16")
        if not self.tail_growth > 1:
            raise ValueError("tail_growth must exceed 1")
        qs = tuple(float(q) for q in self.q_sequence)
        if len(qs) < 2 or any(q <= 0 for q in qs) or any(b >= a for a, b in zip(qs, qs[1:])):
            raise ValueError("q_sequence must be strictly decreasing positive reals")
        object.__setattr__(self, "q_sequence", qs)

    @classmethod
    def with_q_min(cls, q_min: float, ratio: float = 4.0, **kwargs) -> "QuadratureConfig":
        """Geometric sequence ``1, 1/ratio, ...`` stopping at or above ``q_min``."""
        n = int(math.floor(math.log(1.0 / q_min) / math.log(ratio) + 1e-9)) + 1
        return cls(q_sequence=tuple(ratio**-k for k in range(max(n, 2))), **kwargs)


# ---------------------------------------------------------------------------
# quadrature


class _BadIntegrand(Exception):
    pass


def _quad(fn, a, b, cfg: QuadratureConfig, **kw) -> tuple[float, float, bool]:
    # QUADPACK's Fourier routine can crash on nan input, so stop at the first one;
    # user exponents may also raise (division by zero, overflow)
    def guarded(t):
        try:
            v = fn(t)
        except (ArithmeticError, ValueError, TypeError) as exc:
            raise _BadIntegrand(f"integrand failed at lambda={t!r}: {exc}") from None
        if not math.isfinite(v):
            raise _BadIntegrand(f"integrand is not finite at lambda={t!r}")
        return v

    with warnings.catch_warnings(record=True) as caught:
        warnings.simplefilter("always", IntegrationWarning)
        try:
            val, err = quad(guarded, a, b, epsabs=cfg.abs_tol * 0.1, epsrel=cfg.rel_tol * 1e-2, **kw)
        except _BadIntegrand as exc:
            raise QuadratureError(str(exc)) from None
    troubled = any(issubclass(w.category, IntegrationWarning) for w in caught)
    return val, err, troubled


def _head_points(L: float, scales: Sequence[float], growth: float) -> list[float]:
    pts: set[float] = set()
    for s in scales:
        if s <= 0 or s >= L:
            continue
        p = s
        while p < L and len(pts) < 200:
            pts.add(p)
            p *= growth
    return sorted(pts)


def _tail_parts(F: ComplexFn, x: float, L: float, cfg: QuadratureConfig, nonosc_sign: float, osc_sign: float):
    """Return pieces of int_L^inf Re(F) and int_L^inf Re(F e^{i lam x})."""
    pieces = []
    if nonosc_sign:
        v, e, bad = _quad(
            lambda u: F(L / u).real * L / (u * u), 0.0, 1.0, cfg, limit=cfg.max_panels
        )
        pieces.append((nonosc_sign * v, e, bad))
    if osc_sign and x != 0.0:
        limlst = max(3, min(cfg.max_panels, 2000))
        c, ec, bc = _quad(lambda t: F(t).real, L, np.inf, cfg, weight="cos", wvar=abs(x), limlst=limlst)
        s, es, bs = _quad(lambda t: F(t).imag, L, np.inf, cfg, weight="sin", wvar=abs(x), limlst=limlst)
        # Re(F e^{i lam x}) = ReF cos(lam x) - ImF sin(lam x)
        pieces.append((osc_sign * (c - math.copysign(1.0, x) * s), ec + es, bc or bs))
    return pieces


def _check(pieces, cfg: QuadratureConfig, what: str) -> float:
    total = sum(p[0] for p in pieces)
    err = sum(p[1] for p in pieces)
    budget = max(cfg.abs_tol, cfg.rel_tol * abs(total))
    if not math.isfinite(total) or (any(p[2] for p in pieces) and err > 100 * budget):
        raise QuadratureError(f"{what}: no convergence within {cfg.max_panels} panels", tail_estimate=err)
    return total


def increment_integral(F: ComplexFn, x: float, cfg: QuadratureConfig, scales: Sequence[float] = ()) -> float:
    """``(1/pi) int_0^inf Re((1 - e^{i lam x}) F(lam)) dlam``.

    ``F`` may be singular at 0 as long as the product is integrable (for
    ``F = 1/Psi`` the integrand has a removable singularity at the origin).
    ``1 - cos`` is evaluated as ``2 sin^2`` to avoid cancellation near 0.
    """
    if x == 0.0:
        return 0.0
    L = max(math.pi / abs(x), *(4.0 * s for s in scales if s > 0)) if scales else math.pi / abs(x)

    def head(lam: float) -> float:
        f = F(lam)
        half = math.sin(0.5 * lam * x)
        return f.real * 2.0 * half * half + f.imag * math.sin(lam * x)

    pts = _head_points(L, scales, cfg.tail_growth)
    v, e, bad = _quad(head, 0.0, L, cfg, points=pts or None, limit=cfg.max_panels)
    pieces = [(v, e, bad)] + _tail_parts(F, x, L, cfg, nonosc_sign=1.0, osc_sign=-1.0)
    return _check(pieces, cfg, f"increment integral at x={x!r}") / math.pi


def density_integral(F: ComplexFn, x: float, cfg: QuadratureConfig, scales: Sequence[float] = ()) -> float:
    """``(1/pi) int_0^inf Re(e^{-i lam x} F(lam)) dlam`` for integrable ``F``."""
    base = [s for s in scales if s > 0]
    L = max([1.0] + [4.0 * s for s in base])
    if x != 0.0:
        L = max(L, math.pi / abs(x))

    def head(lam: float) -> float:
        f = F(lam)
        return f.real * math.cos(lam * x) + f.imag * math.sin(lam * x)

    pts = _head_points(L, base, cfg.tail_growth)
    v, e, bad = _quad(head, 0.0, L, cfg, points=pts or None, limit=cfg.max_panels)
    if x == 0.0:
        pieces = [(v, e, bad)] + _tail_parts(F, 0.0, L, cfg, nonosc_sign=1.0, osc_sign=0.0)
    else:
        # e^{-i lam x} = e^{i lam (-x)}
        pieces = [(v, e, bad)] + _tail_parts(F, -x, L, cfg, nonosc_sign=0.0, osc_sign=1.0)
    return _check(pieces, cfg, f"resolvent density at x={x!r}") / math.pi


# ---------------------------------------------------------------------------
# extrapolation


def expansion_basis(exponents: Sequence[float], tol: float = 1e-9) -> list[tuple[float, int]]:
    """Turn a multiset of correction exponents into ``(p, k)`` basis terms.

    Each term stands for ``s**p * log(s)**k``; an exponent that occurs ``m``
    times produces log powers ``0..m-1`` (resonant terms). Non-positive
    exponents are dropped.
    """
    merged: list[list[float]] = []
    for p in sorted(float(p) for p in exponents if p > tol):
        if merged and abs(merged[-1][0] - p) <= tol:
            merged[-1][1] += 1
        else:
            merged.append([p, 1])
    return [(p, k) for p, m in merged for k in range(int(m))]


@dataclass
class Extrapolation:
    value: np.ndarray | float
    error: float
    order: int
    history: list


def extrapolate_to_zero(
    s: Sequence[float],
    values: Sequence,
    basis: Sequence[tuple[float, int]],
    rel_tol: float,
    abs_tol: float,
    what: str = "limit",
    strict: bool = True,
) -> Extrapolation:
    """Generalized Richardson extrapolation of ``values(s)`` to ``s -> 0``.

    At order ``m`` the last ``m+1`` samples are fitted exactly by
    ``v0 + sum_{j<m} c_j * phi_j(s)`` with ``phi_j`` the first ``m`` terms of
    ``basis``. The reported value is the order whose estimate moved least
    from the previous order; that move is the error estimate.
    """
    s = np.asarray(s, dtype=float)
    vals = np.asarray(values, dtype=float)
    if s.ndim != 1 or len(s) != len(vals) or len(s) < 2:
        raise ValueError("need at least two samples")
    order_idx = np.argsort(-s)
    s, vals = s[order_idx], vals[order_idx]
    flat = vals.reshape(len(s), -1)

    history = [flat[-1].copy()]
    for m in range(1, min(len(basis), len(s) - 1) + 1):
        ss = s[-(m + 1):] / s[-1]
        cols = [np.ones(m + 1)]
        for p, k in basis[:m]:
            cols.append(ss**p * np.log(ss) ** k)
        A = np.column_stack(cols)
        try:
            coef = np.linalg.solve(A, flat[-(m + 1):])
        except np.linalg.LinAlgError:
            break
        history.append(coef[0])

    if len(history) == 1:
        diffs = [np.max(np.abs(flat[-1] - flat[-2]))]
        best = 0
    else:
        diffs = [np.max(np.abs(history[m] - history[m - 1])) for m in range(1, len(history))]
        best = int(np.argmin(diffs)) + 1
    err = float(diffs[best - 1] if best else diffs[0])
    est = history[best]
    scale = float(np.max(np.abs(est))) if est.size else 0.0
    if strict and not err <= max(abs_tol, rel_tol * scale):
        raise ExtrapolationError(
            f"{what}: extrapolation did not converge (best change {err:.3e})",
            diagnostics={"order": best, "change": err, "samples": s.tolist()},
        )
    value = est.reshape(vals.shape[1:]) if vals.ndim > 1 else float(est[0])
    return Extrapolation(value=value, error=err, order=best, history=[h.reshape(vals.shape[1:]) for h in history])


# ---------------------------------------------------------------------------
# linear algebra


def solve_with_condition(M: np.ndarray, rhs: np.ndarray, max_condition: float = 1e12, what: str = "system"):
    """Row-pivoted LU solve. Returns ``(solution, condition_estimate, residual_norm)``."""
    M = np.asarray(M, dtype=float)
    rhs = np.asarray(rhs, dtype=float)
    if M.size == 0:
        return rhs.copy(), 1.0, 0.0
    anorm = float(np.max(np.sum(np.abs(M), axis=0)))
    lu, piv = lu_factor(M, check_finite=True)
    rcond, info = dgecon(lu, anorm, norm="1")
    cond = math.inf if rcond == 0.0 else 1.0 / rcond
    if info != 0 or not cond <= max_condition:
        raise SolverError(
            f"{what}: matrix is singular or ill-conditioned (condition {cond:.3e}); "
            "a finite lifetime chain should always give an invertible matrix",
            condition=cond,
        )
    sol = lu_solve((lu, piv), rhs)
    resid = float(np.max(np.abs(M @ sol - rhs)))
    return sol, cond, resid
