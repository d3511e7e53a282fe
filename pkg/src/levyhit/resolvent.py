"""Resolvent density and renormalized zero resolvent.

For ``q > 0`` the resolvent density is

    r_q(y) = (1/pi) int_0^inf Re(e^{-i lam y} / (q + Psi(lam))) dlam,

the density of ``E_0 int_0^inf e^{-qt} 1{X_t in dy} dt``. The renormalized
zero resolvent is ``h(x) = lim_{q->0+} (r_q(0) - r_q(-x))``, evaluated by

* the family's closed form, when there is one,
* the Tsukada integral ``(1/pi) int_0^inf Re((1 - e^{i lam x}) / Psi(lam)) dlam``,
* or the limit itself, extrapolated along ``config.q_sequence``.

The difference ``r_q(0) - r_q(-x)`` is integrated as a single integrand
(never as a difference of two large numbers).
"""

from __future__ import annotations

import threading
from typing import Optional

from .errors import DomainError
from .models import ProcessModel, Recurrence
from .numerics import QuadratureConfig, density_integral, extrapolate_to_zero, increment_integral

METHODS = ("auto", "closed-form", "tsukada", "limit")


def _key(x: float) -> float:
    return float(f"{x:.12g}")


class ResolventEvaluator:
    """Evaluates ``r_q``, ``h``, ``h^B`` and excursion rates for one model.

    ``method`` pins the route used by :meth:`h` (``"auto"`` picks closed form,
    then Tsukada, then the limit). Results are cached on arguments rounded
    to 12 significant digits; the cache is guarded by a lock and only ever
    stores values that a fresh evaluation would reproduce.
    """

    def __init__(self, model: ProcessModel, config: Optional[QuadratureConfig] = None, method: str = "auto"):
        if method not in METHODS:
            raise ValueError(f"method must be one of {METHODS}")
        self.model = model
        self.config = config or QuadratureConfig()
        self.method = method
        self._cache: dict = {}
        self._lock = threading.Lock()
        self._kappa: Optional[float] = None

    def __repr__(self):
        return f"ResolventEvaluator({self.model!r}, method={self.method!r})"

    # -- cache ------------------------------------------------------------
    def _cached(self, key, compute):
        with self._lock:
            if key in self._cache:
                return self._cache[key]
        value = compute()
        with self._lock:
            self._cache.setdefault(key, value)
        return value

    def clear_cache(self):
        with self._lock:
            self._cache.clear()

    @property
    def recurrence(self) -> Recurrence:
        return self.model.recurrence

    @property
    def is_recurrent(self) -> bool:
        return self.model.recurrence is Recurrence.RECURRENT

    # -- raw integrals ----------------------------------------------------
    def _scales(self, q: float) -> list[float]:
        scales = list(self.model.frequency_scales())
        if q > 0:
            scales.append(self.model.lam_at_level(q))
        return scales

    def resolvent_density(self, q: float, x: float) -> float:
        """``r_q(x)``, the q-potential density at ``x`` for a start at 0."""
        if not q > 0:
            raise DomainError("resolvent density needs q > 0")
        psi = self.model.psi

        def compute():
            return density_integral(lambda lam: 1.0 / (q + psi(lam)), x, self.config, self._scales(q))

        return self._cached(("r", _key(q), _key(x)), compute)

    def increment(self, q: float, x: float) -> float:
        """``r_q(0) - r_q(-x)`` for ``q > 0``, or the Tsukada integral for ``q = 0``."""
        if q < 0:
            raise DomainError("q must be non-negative")
        if x == 0:
            return 0.0
        psi = self.model.psi

        def compute():
            return increment_integral(lambda lam: 1.0 / (q + psi(lam)), x, self.config, self._scales(q))

        return self._cached(("inc", _key(q), _key(x)), compute)

    # -- h ----------------------------------------------------------------
    def h_tsukada(self, x: float) -> float:
        return max(self.increment(0.0, x), 0.0)

    def h_limit(self, x: float) -> float:
        """``lim_{q->0+} (r_q(0) - r_q(-x))`` by generalized Richardson extrapolation."""
        if x == 0:
            return 0.0

        def compute():
            qs = self.config.q_sequence
            vals = [self.increment(q, x) for q in qs]
            ext = extrapolate_to_zero(
                qs, vals, self.model.q_basis(), self.config.rel_tol, self.config.abs_tol, what=f"h({x!r})"
            )
            return max(float(ext.value), 0.0)

        return self._cached(("hlim", _key(x)), compute)

    def h_tagged(self, x: float) -> tuple[float, str]:
        """``(h(x), route)`` with route one of closed-form/tsukada/limit."""
        method = self.method
        if method == "auto":
            if self.model.has_closed_form_h:
                method = "closed-form"
            elif self.model.tsukada_applicable:
                method = "tsukada"
            else:
                method = "limit"
        if method == "closed-form":
            value = self.model.closed_form_h(x)
            if value is None:
                raise DomainError(f"{self.model.name} has no closed-form h")
            return float(value), method
        if method == "tsukada":
            return self.h_tsukada(x), method
        return self.h_limit(x), method

    def h(self, x: float) -> float:
        return self.h_tagged(x)[0]

    # -- transient quantities --------------------------------------------
    def kappa(self) -> float:
        """Escape rate ``n^0(T_0 = inf) = lim 1/r_q(0)``; closed form when known."""
        if self.is_recurrent:
            raise DomainError("kappa is undefined for a recurrent process")
        if self._kappa is None:
            k = self.model.closed_form_kappa() if self.method in ("auto", "closed-form") else None
            self._kappa = float(k) if k is not None else self.kappa_numeric()
        return self._kappa

    def kappa_numeric(self) -> float:
        qs = self.config.q_sequence
        vals = [1.0 / self.resolvent_density(q, 0.0) for q in qs]
        ext = extrapolate_to_zero(qs, vals, self.model.q_basis(), self.config.rel_tol, self.config.abs_tol, what="kappa")
        if not ext.value > 0:
            raise DomainError("numeric kappa is not positive; is the model really transient?")
        return float(ext.value)

    # -- local time before hitting ---------------------------------------
    def h_B(self, a: float) -> float:
        """Expected local time at 0 accumulated before ``T_a``."""
        if a == 0:
            raise DomainError("h_B needs a != 0")
        hp, hm = self.h(a), self.h(-a)
        if self.is_recurrent:
            return hp + hm
        return hp + hm - self.kappa() * hp * hm

    def excursion_rate(self, a: float) -> float:
        """``n^0(T_a < T_0)``: rate (per unit local time) of excursions reaching ``a``."""
        if a == 0:
            raise DomainError("excursion_rate needs a != 0")
        if self.is_recurrent:
            return 1.0 / self.h_B(a)
        return (1.0 - self.kappa() * self.h(-a)) / self.h_B(a)


# operation-style aliases ------------------------------------------------------


def resolvent_density(ev: ResolventEvaluator, q: float, x: float) -> float:
    return ev.resolvent_density(q, x)


def h_tsukada(ev: ResolventEvaluator, x: float) -> float:
    return ev.h_tsukada(x)


def h_limit(ev: ResolventEvaluator, x: float) -> float:
    return ev.h_limit(x)


def h(ev: ResolventEvaluator, x: float) -> float:
    return ev.h(x)


def h_B(ev: ResolventEvaluator, a: float) -> float:
    return ev.h_B(a)


def excursion_rate(ev: ResolventEvaluator, a: float) -> float:
    return ev.excursion_rate(a)
