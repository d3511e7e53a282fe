"""Lévy process families and their closed-form quantities.

Conventions: the characteristic exponent ``Psi`` satisfies
``E[exp(i lam X_t)] = exp(-t Psi(lam))``; for spectrally negative families
the Laplace exponent ``psi(theta) = log E[exp(theta X_1)]`` is also
available, and ``Psi(lam) = -psi(i lam)``.

The stable family is parametrized by its Lévy measure
``c_+ |x|^{-alpha-1} dx`` on ``(0, inf)`` and ``c_- |x|^{-alpha-1} dx`` on
``(-inf, 0)``; with no drift or Gaussian part this gives

    Psi(lam) = (c_+ + c_-) * (-Gamma(-alpha) cos(pi alpha / 2)) * |lam|^alpha
               * (1 - i beta tan(pi alpha / 2) sgn(lam)).
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field
from typing import Callable, Optional, Sequence

import numpy as np
from scipy.special import gamma

from .errors import ClassificationUnavailable, ConfigError, DomainError, UnsupportedFamily
from .numerics import expansion_basis


class Recurrence(enum.Enum):
    RECURRENT = "recurrent"
    TRANSIENT = "transient"

    @classmethod
    def parse(cls, value) -> "Recurrence":
        if isinstance(value, cls):
            return value
        try:
            return cls(str(value).strip().lower())
        except ValueError:
            raise ConfigError(f"unknown recurrence class {value!r}") from None


def _half_integer_exponents(n: int = 10) -> list[float]:
    return [0.5 * k for k in range(1, n + 1)]


def _stable_q_exponents(alpha: float, top: float = 4.0) -> list[float]:
    # h_q(x) - h(x) collects q^(m-1) (from 1/Psi^m) and q^((j+1)/alpha - 1)
    # (Taylor terms of the resolvent density at 0)
    out = [float(m) for m in range(1, int(top) + 1)]
    j = 1
    while (j + 1) / alpha - 1 <= top:
        out.append((j + 1) / alpha - 1)
        j += 1
    return out


class ProcessModel:
    """Base class; concrete families are frozen dataclasses."""

    name: str = "model"

    def psi(self, lam: float) -> complex:
        raise NotImplementedError

    @property
    def recurrence(self) -> Recurrence:
        raise NotImplementedError

    @property
    def is_recurrent(self) -> bool:
        return self.recurrence is Recurrence.RECURRENT

    def closed_form_h(self, x: float) -> Optional[float]:
        return None

    def closed_form_kappa(self) -> Optional[float]:
        return None

    def scale_function(self, x: float) -> float:
        raise UnsupportedFamily(f"{self.name} has no closed-form scale function")

    @property
    def has_closed_form_h(self) -> bool:
        return False

    @property
    def tsukada_applicable(self) -> bool:
        """Whether ``int_0^1 |Im(lam / Psi(lam))| dlam`` is finite."""
        return True

    def q_exponents(self) -> list[float]:
        """Exponents of ``q`` in the small-``q`` expansion of ``r_q(0) - r_q(-x)``."""
        return _half_integer_exponents()

    def getoor_exponents(self) -> list[float]:
        """Exponents of ``lam`` in the small-``lam`` expansion of ``Q^lam``."""
        return self.q_exponents()

    def q_basis(self):
        return expansion_basis(self.q_exponents())

    def getoor_basis(self):
        return expansion_basis(self.getoor_exponents())

    def frequency_scales(self) -> list[float]:
        """Frequencies where ``Psi`` changes character (used as panel breaks)."""
        return []

    def lam_at_level(self, level: float) -> float:
        """Smallest ``lam > 0`` with ``|Psi(lam)|`` close to ``level`` (bisection in log scale)."""
        if level <= 0:
            return 0.0
        lo, hi = 1e-300, 1.0
        while abs(self.psi(hi)) < level and hi < 1e300:
            hi *= 16.0
        lo = hi / 16.0
        while abs(self.psi(lo)) > level and lo > 1e-300:
            lo /= 16.0
        for _ in range(200):
            mid = math.sqrt(lo * hi)
            if abs(self.psi(mid)) < level:
                lo = mid
            else:
                hi = mid
            if hi / lo < 1 + 1e-6:
                break
        return hi

    def mc_time_scale(self) -> float:
        """``Re Psi(1)``; increments over time ``t`` have scale ``(t * this)^(1/alpha)``."""
        return float(self.psi(1.0).real)

    def describe(self) -> dict:
        raise NotImplementedError


# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class BrownianMotion(ProcessModel):
    """``sigma * B_t + mu * t``."""

    sigma2: float = 1.0
    mu: float = 0.0
    name: str = field(default="brownian", init=False, repr=False)

    def __post_init__(self):
        if not self.sigma2 > 0:
            raise ConfigError("sigma2 must be positive")
        if not math.isfinite(self.mu):
            raise ConfigError("mu must be finite")

    def psi(self, lam):
        return 0.5 * self.sigma2 * lam * lam - 1j * self.mu * lam

    def laplace_exponent(self, theta: float) -> float:
        return 0.5 * self.sigma2 * theta * theta + self.mu * theta

    @property
    def recurrence(self):
        return Recurrence.RECURRENT if self.mu == 0 else Recurrence.TRANSIENT

    @property
    def phi0(self) -> float:
        return max(0.0, -2.0 * self.mu / self.sigma2)

    def scale_function(self, x: float) -> float:
        if x < 0:
            return 0.0
        if self.mu == 0:
            return 2.0 * x / self.sigma2
        arg = -2.0 * self.mu * x / self.sigma2
        if arg > 700.0:
            return math.inf
        return -math.expm1(arg) / self.mu

    @property
    def has_closed_form_h(self):
        return True

    def closed_form_h(self, x):
        if self.mu == 0:
            return abs(x) / self.sigma2
        if self.mu < 0 and x >= 0:
            # W(x) and the drift correction cancel exactly
            return 0.0
        return _sn_h(self.scale_function(x), x, self.mu, self.phi0, abs(self.mu), math.inf)

    def closed_form_kappa(self):
        return abs(self.mu) if self.mu != 0 else None

    def q_exponents(self):
        if self.mu == 0:
            return _half_integer_exponents()
        return [1.0, 2.0, 3.0, 4.0, 5.0, 6.0]

    def frequency_scales(self):
        return [2.0 * abs(self.mu) / self.sigma2] if self.mu else []

    def mc_time_scale(self):
        return 0.5 * self.sigma2

    @property
    def index(self) -> float:
        return 2.0

    def describe(self):
        return {"family": "brownian", "sigma2": self.sigma2, "mu": self.mu}


def _sn_h(W: float, x: float, mean: float, phi0: float, psi_prime_phi0: float, second_moment: float) -> float:
    """Renormalized zero resolvent of a spectrally negative process from ``W``."""
    if mean > 0:
        return W
    if mean < 0:
        return W + (-math.expm1(phi0 * x)) / psi_prime_phi0
    return W - x / second_moment


@dataclass(frozen=True)
class StrictlyStable(ProcessModel):
    """Strictly alpha-stable process, ``alpha in (1, 2)``."""

    alpha: float
    c_plus: float = 0.5
    c_minus: float = 0.5
    name: str = field(default="stable", init=False, repr=False)

    def __post_init__(self):
        if not 1.0 < self.alpha < 2.0:
            raise ConfigError("stable index alpha must lie strictly inside (1, 2)")
        if self.c_plus < 0 or self.c_minus < 0 or not self.c_plus + self.c_minus > 0:
            raise ConfigError("need c_plus, c_minus >= 0 with c_plus + c_minus > 0")

    @classmethod
    def from_beta(cls, alpha: float, beta: float = 0.0, total: float = 1.0) -> "StrictlyStable":
        if not -1.0 <= beta <= 1.0:
            raise ConfigError("beta must lie in [-1, 1]")
        return cls(alpha=alpha, c_plus=0.5 * total * (1 + beta), c_minus=0.5 * total * (1 - beta))

    @property
    def beta(self) -> float:
        return (self.c_plus - self.c_minus) / (self.c_plus + self.c_minus)

    @property
    def scale(self) -> float:
        """Coefficient ``c`` in ``Psi(lam) = c |lam|^alpha (1 - i beta tan(pi alpha/2) sgn lam)``."""
        return (self.c_plus + self.c_minus) * (-gamma(-self.alpha) * math.cos(0.5 * math.pi * self.alpha))

    @property
    def K_alpha(self) -> float:
        t = math.tan(0.5 * math.pi * self.alpha)
        b = self.beta
        return -(self.c_plus + self.c_minus) * math.pi / (self.alpha * t) * (1.0 + b * b * t * t)

    @property
    def index(self) -> float:
        return self.alpha

    def psi(self, lam):
        t = math.tan(0.5 * math.pi * self.alpha)
        return self.scale * np.abs(lam) ** self.alpha * (1.0 - 1j * self.beta * t * np.sign(lam))

    @property
    def recurrence(self):
        return Recurrence.RECURRENT

    @property
    def has_closed_form_h(self):
        return True

    def closed_form_h(self, x):
        return (1.0 - self.beta * float(np.sign(x))) * abs(x) ** (self.alpha - 1.0) / self.K_alpha

    def scale_function(self, x):
        if self.c_plus != 0:
            raise UnsupportedFamily("scale function needs a spectrally negative stable process (c_plus = 0)")
        # oscillating with infinite variance: h = W
        return self.closed_form_h(x) if x > 0 else 0.0

    def q_exponents(self):
        return _stable_q_exponents(self.alpha)

    def getoor_exponents(self):
        return _stable_getoor_exponents(self.alpha, self.q_exponents())

    def describe(self):
        return {"family": "stable", "alpha": self.alpha, "c_plus": self.c_plus, "c_minus": self.c_minus}


def _stable_getoor_exponents(alpha: float, q_exps: Sequence[float], top: float = 3.0) -> list[float]:
    # Q^lam is analytic in 1/r_lam(0) ~ lam^(1 - 1/alpha) and in the
    # increments r_lam(0) - r_lam(x), whose corrections carry q_exps
    s = 1.0 - 1.0 / alpha
    base = sorted(set(round(p, 12) for p in q_exps if p <= top))
    out = set()
    k = 1
    while k * s <= top:
        out.add(round(k * s, 12))
        k += 1
    for p in base:
        out.add(p)
        k = 1
        while p + k * s <= top:
            out.add(round(p + k * s, 12))
            k += 1
    return sorted(out)


@dataclass(frozen=True)
class SpectrallyNegative(ProcessModel):
    """Spectrally negative sub-families with closed-form scale function.

    ``kind='brownian'``: ``psi(theta) = sigma2 theta^2 / 2 + mu theta``.
    ``kind='stable'``: ``psi(theta) = theta^alpha``, ``W(x) = x^(alpha-1)/Gamma(alpha)``.
    """

    kind: str = "stable"
    alpha: float = 1.5
    sigma2: float = 1.0
    mu: float = 0.0
    name: str = field(default="spectrally-negative", init=False, repr=False)

    def __post_init__(self):
        if self.kind not in ("brownian", "stable"):
            raise ConfigError(f"unknown spectrally negative sub-family {self.kind!r}")
        if self.kind == "stable" and not 1.0 < self.alpha < 2.0:
            raise ConfigError("stable index alpha must lie strictly inside (1, 2)")
        if self.kind == "brownian" and not self.sigma2 > 0:
            raise ConfigError("sigma2 must be positive")

    @property
    def _bm(self) -> BrownianMotion:
        return BrownianMotion(self.sigma2, self.mu)

    def laplace_exponent(self, theta: float) -> float:
        if self.kind == "stable":
            return theta**self.alpha
        return self._bm.laplace_exponent(theta)

    def psi(self, lam):
        if self.kind == "stable":
            return -((1j * lam) ** self.alpha)
        return self._bm.psi(lam)

    @property
    def index(self) -> float:
        return self.alpha if self.kind == "stable" else 2.0

    @property
    def phi0(self) -> float:
        return 0.0 if self.kind == "stable" else self._bm.phi0

    @property
    def regime(self) -> str:
        """``'oscillates'``, ``'drifts to +inf'`` or ``'drifts to -inf'``."""
        mean = 0.0 if self.kind == "stable" else self.mu
        return "oscillates" if mean == 0 else ("drifts to +inf" if mean > 0 else "drifts to -inf")

    @property
    def recurrence(self):
        return Recurrence.RECURRENT if self.regime == "oscillates" else Recurrence.TRANSIENT

    def scale_function(self, x):
        if x < 0:
            return 0.0
        if self.kind == "stable":
            return x ** (self.alpha - 1.0) / gamma(self.alpha)
        return self._bm.scale_function(x)

    @property
    def has_closed_form_h(self):
        return True

    def closed_form_h(self, x):
        W = self.scale_function(x)
        if self.kind == "stable":
            return _sn_h(W, x, 0.0, 0.0, 0.0, math.inf)
        if self.mu < 0 and x >= 0:
            return 0.0
        # psi'(Phi(0)+) = sigma2 * Phi(0) + mu
        return _sn_h(W, x, self.mu, self.phi0, self.sigma2 * self.phi0 + self.mu, self.sigma2)

    def closed_form_kappa(self):
        if self.kind == "brownian" and self.mu != 0:
            return abs(self.mu)
        return None

    def q_exponents(self):
        if self.kind == "stable":
            return _stable_q_exponents(self.alpha)
        return self._bm.q_exponents()

    def getoor_exponents(self):
        if self.kind == "stable":
            return _stable_getoor_exponents(self.alpha, self.q_exponents())
        return self._bm.getoor_exponents()

    def frequency_scales(self):
        return [] if self.kind == "stable" else self._bm.frequency_scales()

    def mc_time_scale(self):
        if self.kind == "stable":
            return -math.cos(0.5 * math.pi * self.alpha)
        return self._bm.mc_time_scale()

    def as_stable(self) -> StrictlyStable:
        """The same process in the Lévy-measure parametrization (``c_+ = 0``)."""
        if self.kind != "stable":
            raise UnsupportedFamily("only the stable sub-family has a stable parametrization")
        return StrictlyStable(self.alpha, c_plus=0.0, c_minus=1.0 / gamma(-self.alpha))

    def describe(self):
        d = {"family": "spectrally-negative", "kind": self.kind}
        if self.kind == "stable":
            d["alpha"] = self.alpha
        else:
            d.update(sigma2=self.sigma2, mu=self.mu)
        return d


@dataclass(frozen=True)
class CustomExponent(ProcessModel):
    """User-supplied characteristic exponent.

    Nothing about ``psi`` is checked: the caller vouches for the
    integrability condition on ``1/(q + Psi)`` and, when the Tsukada route
    is used, for ``int_0^1 |Im(lam/Psi(lam))| dlam < inf``.
    """

    func: Callable[[float], complex]
    declared: Optional[Recurrence] = None
    kappa: Optional[float] = None
    exponents: Optional[tuple[float, ...]] = None
    label: str = "custom"
    index: float = 2.0
    tsukada: bool = True
    name: str = field(default="custom", init=False, repr=False)

    def __post_init__(self):
        if self.declared is not None:
            object.__setattr__(self, "declared", Recurrence.parse(self.declared))
        if self.kappa is not None and not self.kappa > 0:
            raise ConfigError("declared kappa must be positive")

    def psi(self, lam):
        if lam == 0:
            return 0j
        return complex(self.func(lam))

    @property
    def recurrence(self):
        if self.declared is None:
            raise ClassificationUnavailable("custom model has no declared recurrence class")
        return self.declared

    @property
    def tsukada_applicable(self):
        return self.tsukada

    def closed_form_kappa(self):
        return self.kappa

    def q_exponents(self):
        return list(self.exponents) if self.exponents else _half_integer_exponents()

    def describe(self):
        d = {"family": "custom", "label": self.label}
        if self.declared is not None:
            d["recurrence"] = self.declared.value
        if self.kappa is not None:
            d["kappa"] = self.kappa
        return d


# ---------------------------------------------------------------------------
# operation-style helpers


def psi(model: ProcessModel, lam: float) -> complex:
    return complex(model.psi(lam))


def classify(model: ProcessModel) -> Recurrence:
    return model.recurrence


def closed_form_h(model: ProcessModel, x: float) -> Optional[float]:
    if not model.has_closed_form_h:
        return None
    return float(model.closed_form_h(x))


def kappa(model: ProcessModel) -> float:
    """Closed-form escape rate. Raises for recurrent models.

    Models without a closed form raise :class:`UnsupportedFamily`; use
    :meth:`levyhit.resolvent.ResolventEvaluator.kappa` for the numeric route.
    """
    if model.recurrence is Recurrence.RECURRENT:
        raise DomainError("kappa is undefined for a recurrent process")
    k = model.closed_form_kappa()
    if k is None:
        raise UnsupportedFamily(f"no closed-form kappa for {model.name}")
    return float(k)


def scale_function(model: ProcessModel, x: float) -> float:
    return float(model.scale_function(x))


def model_from_spec(spec: dict) -> ProcessModel:
    """Build a model from ``{"family": ..., <params>}``.

    Families: ``brownian`` (``sigma2``, ``mu``), ``stable`` (``alpha`` plus
    either ``c_plus``/``c_minus`` or ``beta`` with optional ``total``),
    ``sn-stable`` (``alpha``), ``sn-brownian`` (``sigma2``, ``mu``) and
    ``custom`` (``psi`` expression in ``lam``, ``recurrence``, optional
    ``kappa`` and ``exponents``).
    """
    spec = dict(spec)
    family = str(spec.pop("family", "")).strip().lower().replace("_", "-")
    try:
        if family in ("brownian", "bm"):
            return BrownianMotion(float(spec.pop("sigma2", 1.0)), float(spec.pop("mu", 0.0)))
        if family == "stable":
            alpha = float(spec.pop("alpha"))
            if "beta" in spec:
                return StrictlyStable.from_beta(alpha, float(spec.pop("beta")), float(spec.pop("total", 1.0)))
            return StrictlyStable(alpha, float(spec.pop("c_plus", 0.5)), float(spec.pop("c_minus", 0.5)))
        if family in ("sn-stable", "spectrally-negative-stable"):
            return SpectrallyNegative("stable", alpha=float(spec.pop("alpha", 1.5)))
        if family in ("sn-brownian", "spectrally-negative-brownian"):
            return SpectrallyNegative(
                "brownian", sigma2=float(spec.pop("sigma2", 1.0)), mu=float(spec.pop("mu", 0.0))
            )
        if family == "custom":
            expr = str(spec.pop("psi"))
            func = compile_exponent(expr)
            rec = spec.pop("recurrence", None)
            k = spec.pop("kappa", None)
            exps = spec.pop("exponents", None)
            return CustomExponent(
                func,
                declared=Recurrence.parse(rec) if rec is not None else None,
                kappa=float(k) if k is not None else None,
                exponents=tuple(float(e) for e in exps) if exps else None,
                label=expr,
            )
    except KeyError as exc:
        raise ConfigError(f"missing parameter {exc.args[0]!r} for family {family!r}") from None
    except (TypeError, ValueError) as exc:
        if isinstance(exc, ConfigError):
            raise
        raise ConfigError(f"bad parameter for family {family!r}: {exc}") from None
    raise ConfigError(f"unknown model family {family!r}")


_EXPR_NAMESPACE = {
    name: getattr(np, name)
    for name in ("abs", "sign", "sqrt", "exp", "log", "sin", "cos", "tan", "pi", "arctan", "power", "real", "imag")
}
_EXPR_NAMESPACE.update(j=1j, I=1j)


def compile_exponent(expr: str) -> Callable[[float], complex]:
    """Compile an expression in ``lam`` (numpy functions allowed) into ``Psi``."""
    try:
        code = compile(expr, "<psi>", "eval")
    except SyntaxError as exc:
        raise ConfigError(f"cannot parse exponent expression {expr!r}: {exc.msg}") from None
    for name in code.co_names:
        if name != "lam" and name not in _EXPR_NAMESPACE:
            raise ConfigError(f"name {name!r} not allowed in exponent expression")

    def func(lam):
        return complex(eval(code, {"__builtins__": {}}, dict(_EXPR_NAMESPACE, lam=lam)))

    try:
        func(0.7)
    except (ArithmeticError, ValueError, TypeError) as exc:
        raise ConfigError(f"exponent expression {expr!r} fails at lam=0.7: {exc}") from None
    return func
