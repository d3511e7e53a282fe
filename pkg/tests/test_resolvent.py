from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor

import numpy as np
import pytest
from scipy.integrate import quad
from scipy.special import gamma

from levyhit import (
    BrownianMotion,
    CustomExponent,
    DomainError,
    QuadratureError,
    ResolventEvaluator,
    SpectrallyNegative,
    StrictlyStable,
)
from levyhit.resolvent import excursion_rate, h, h_B, h_limit, h_tsukada, resolvent_density


def stable_with_scale(alpha: float, c: float = 1.0, beta: float = 0.0) -> StrictlyStable:
    """Stable model whose exponent is ``c |lam|^alpha (1 - i beta ...)``."""
    unit = -gamma(-alpha) * math.cos(math.pi * alpha / 2)
    total = c / unit
    return StrictlyStable(alpha, c_plus=total * (1 + beta) / 2, c_minus=total * (1 - beta) / 2)


class TestResolventDensity:
    @pytest.mark.parametrize("q", [1.0, 0.25, 0.01])
    @pytest.mark.parametrize("y", [-2.0, 0.0, 0.5, 3.0])
    def test_brownian(self, bm, q, y):
        s = math.sqrt(2 * q)
        assert resolvent_density(bm, q, y) == pytest.approx(math.exp(-s * abs(y)) / s, rel=1e-9)

    @pytest.mark.parametrize("y", [-2.0, -0.4, 0.0, 0.4, 2.0])
    def test_drift_direction(self, y):
        # drift up puts more occupation density above the start
        mu, q = 0.8, 0.3
        ev = ResolventEvaluator(BrownianMotion(1.0, mu))
        root = math.sqrt(mu * mu + 2 * q)
        exact = math.exp(mu * y - root * abs(y)) / root
        assert ev.resolvent_density(q, y) == pytest.approx(exact, rel=1e-9)

    @pytest.mark.parametrize("alpha", [1.2, 1.5, 1.8])
    @pytest.mark.parametrize("c", [0.5, 2.0])
    def test_stable_at_zero(self, alpha, c):
        ev = ResolventEvaluator(stable_with_scale(alpha, c))
        exact = c ** (-1 / alpha) / (alpha * math.sin(math.pi / alpha))
        assert ev.resolvent_density(1.0, 0.0) == pytest.approx(exact, rel=1e-9)

    def test_stable_off_zero_against_direct_quadrature(self):
        m = StrictlyStable.from_beta(1.5, 0.6)
        ev = ResolventEvaluator(m)
        for y in (-1.0, 0.7):
            # plain adaptive quadrature on [0, 200]; the oscillating tail beyond is below 1e-4
            direct = quad(lambda lam: (np.exp(-1j * lam * y) / (0.5 + m.psi(lam))).real, 0, 200, limit=2000)[0]
            assert ev.resolvent_density(0.5, y) == pytest.approx(direct / math.pi, abs=2e-4)

    def test_needs_positive_q(self, bm):
        with pytest.raises(DomainError):
            bm.resolvent_density(0.0, 1.0)
        with pytest.raises(DomainError):
            bm.increment(-1.0, 1.0)

    def test_increment_matches_difference(self, stable15):
        q = 0.1
        diff = stable15.resolvent_density(q, 0.0) - stable15.resolvent_density(q, -1.3)
        assert stable15.increment(q, 1.3) == pytest.approx(diff, rel=1e-9)


class TestH:
    @pytest.mark.parametrize("x", [-3.0, -0.5, 0.25, 2.0])
    def test_brownian_limit(self, bm, x):
        assert h_limit(bm, x) == pytest.approx(abs(x), rel=1e-6)

    @pytest.mark.parametrize("x", [-3.0, 0.1, 2.0])
    def test_brownian_tsukada(self, bm, x):
        assert h_tsukada(bm, x) == pytest.approx(abs(x), rel=1e-9)

    def test_stable_example(self, stable15):
        m = stable15.model
        assert h(stable15, 0.25) == pytest.approx(0.5 / m.K_alpha, rel=1e-12)
        assert h_tsukada(stable15, 0.25) == pytest.approx(0.5 / m.K_alpha, rel=1e-8)

    @pytest.mark.parametrize("mu", [1.0, -0.6])
    @pytest.mark.parametrize("x", [-1.5, -0.2, 0.4, 2.0])
    def test_transient_brownian_routes(self, mu, x):
        m = BrownianMotion(1.0, mu)
        exact = m.closed_form_h(x)
        assert ResolventEvaluator(m, method="tsukada").h(x) == pytest.approx(exact, abs=1e-9)
        assert ResolventEvaluator(m, method="limit").h(x) == pytest.approx(exact, abs=1e-6)

    def test_spectrally_negative_tsukada(self, sn15):
        ev = ResolventEvaluator(sn15.model, method="tsukada")
        for x in (-2.0, -0.5, 0.5, 2.0):
            assert ev.h(x) == pytest.approx(sn15.h(x), rel=1e-7, abs=1e-12)

    def test_dispatch_tags(self):
        assert ResolventEvaluator(BrownianMotion()).h_tagged(1.0)[1] == "closed-form"
        custom = CustomExponent(lambda lam: abs(lam) ** 1.5, declared="recurrent")
        assert ResolventEvaluator(custom).h_tagged(1.0)[1] == "tsukada"
        exps = tuple(StrictlyStable.from_beta(1.5, 0.0).q_exponents())
        no_tsukada = CustomExponent(lambda lam: abs(lam) ** 1.5, declared="recurrent", tsukada=False, exponents=exps)
        value, tag = ResolventEvaluator(no_tsukada).h_tagged(1.0)
        assert tag == "limit"
        assert value == pytest.approx(stable_with_scale(1.5).closed_form_h(1.0), rel=1e-6)
        with pytest.raises(DomainError):
            ResolventEvaluator(custom, method="closed-form").h(1.0)

    def test_custom_exponent_matches_stable(self):
        custom = ResolventEvaluator(CustomExponent(lambda lam: abs(lam) ** 1.5, declared="recurrent"))
        ref = stable_with_scale(1.5, 1.0)
        for x in (-2.0, 0.3, 1.0):
            assert custom.h(x) == pytest.approx(ref.closed_form_h(x), rel=1e-8)

    def test_zero(self, stable15):
        assert stable15.h_limit(0.0) == 0.0 and stable15.h_tsukada(0.0) == 0.0

    def test_nan_exponent_raises(self):
        ev = ResolventEvaluator(CustomExponent(lambda lam: complex(math.nan, 0), declared="recurrent"))
        with pytest.raises(QuadratureError):
            ev.h(1.0)

    def test_invalid_method(self):
        with pytest.raises(ValueError):
            ResolventEvaluator(BrownianMotion(), method="magic")


class TestTransient:
    def test_kappa(self, bm_drift):
        assert bm_drift.kappa() == 1.0
        assert bm_drift.kappa_numeric() == pytest.approx(1.0, abs=1e-8)
        assert ResolventEvaluator(BrownianMotion(1.0, 1.0), method="tsukada").kappa() == pytest.approx(1.0, abs=1e-8)

    def test_kappa_recurrent(self, bm):
        with pytest.raises(DomainError):
            bm.kappa()

    @pytest.mark.parametrize("m", [BrownianMotion(1.0, 1.0), BrownianMotion(2.0, -0.4), SpectrallyNegative("brownian", mu=-1.0)], ids=repr)
    def test_kappa_h_at_most_one(self, m):
        ev = ResolventEvaluator(m)
        assert all(ev.kappa() * ev.h(x) <= 1.0 + 1e-12 for x in np.linspace(-6, 6, 41))


class TestLocalTime:
    @pytest.mark.parametrize("a", [-2.0, 0.5, 3.0])
    def test_brownian(self, bm, a):
        assert h_B(bm, a) == pytest.approx(2 * abs(a))
        assert excursion_rate(bm, a) == pytest.approx(1 / (2 * abs(a)))

    @pytest.mark.parametrize("a", [0.3, 1.0, 2.5])
    def test_drift_up(self, bm_drift, a):
        g = -math.expm1(-2 * a)
        assert bm_drift.h_B(a) == pytest.approx(g)
        assert bm_drift.h_B(-a) == pytest.approx(g)
        assert bm_drift.excursion_rate(a) == pytest.approx(1 / g)
        assert bm_drift.excursion_rate(-a) == pytest.approx(math.exp(-2 * a) / g)

    def test_stable_symmetry(self):
        ev = ResolventEvaluator(StrictlyStable.from_beta(1.4, 0.7))
        assert ev.h_B(1.3) == pytest.approx(ev.h_B(-1.3), rel=1e-14)

    def test_zero(self, bm):
        with pytest.raises(DomainError):
            bm.h_B(0.0)
        with pytest.raises(DomainError):
            bm.excursion_rate(0.0)


class TestCache:
    def test_thread_consistency(self):
        xs = np.linspace(-3, 3, 24)
        serial = [ResolventEvaluator(StrictlyStable.from_beta(1.3, 0.4), method="tsukada").h(x) for x in xs]
        shared = ResolventEvaluator(StrictlyStable.from_beta(1.3, 0.4), method="tsukada")
        with ThreadPoolExecutor(8) as pool:
            parallel = list(pool.map(shared.h, list(xs) * 3))
        assert parallel == serial * 3

    def test_clear(self):
        ev = ResolventEvaluator(BrownianMotion(), method="tsukada")
        a = ev.h(1.7)
        ev.clear_cache()
        assert ev.h(1.7) == a
