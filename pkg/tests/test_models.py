from __future__ import annotations

import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy.special import gamma

from levyhit import (
    BrownianMotion,
    ClassificationUnavailable,
    ConfigError,
    CustomExponent,
    DomainError,
    Recurrence,
    SpectrallyNegative,
    StrictlyStable,
    UnsupportedFamily,
    classify,
    closed_form_h,
    kappa,
    model_from_spec,
    psi,
    scale_function,
)

MODELS = [
    BrownianMotion(),
    BrownianMotion(2.0, 0.7),
    BrownianMotion(0.5, -1.2),
    StrictlyStable.from_beta(1.5, 0.0),
    StrictlyStable.from_beta(1.2, 0.6),
    StrictlyStable.from_beta(1.8, -1.0),
    StrictlyStable(1.4, c_plus=0.3, c_minus=1.1),
    SpectrallyNegative("stable", alpha=1.5),
    SpectrallyNegative("brownian", sigma2=1.5, mu=-0.4),
    CustomExponent(lambda lam: abs(lam) ** 1.5, declared="recurrent"),
]
LAMS = [-7.0, -1.3, -0.2, 0.05, 0.9, 4.0, 30.0]


class TestPsi:
    def test_standard_brownian(self):
        assert psi(BrownianMotion(), 2.0) == pytest.approx(2.0)
        assert psi(BrownianMotion(), 2.0).imag == 0.0

    @pytest.mark.parametrize("m", MODELS, ids=repr)
    def test_zero_at_origin(self, m):
        assert psi(m, 0.0) == 0

    @pytest.mark.parametrize("m", MODELS, ids=repr)
    def test_hermitian(self, m):
        for lam in LAMS:
            assert psi(m, -lam) == pytest.approx(psi(m, lam).conjugate(), rel=1e-14)

    @pytest.mark.parametrize("m", MODELS, ids=repr)
    def test_nonnegative_real_part(self, m):
        assert all(psi(m, lam).real >= 0 for lam in LAMS)

    def test_symmetric_stable_is_real(self):
        m = StrictlyStable(1.5, 0.7, 0.7)
        assert all(psi(m, lam).imag == pytest.approx(0.0, abs=1e-15) for lam in LAMS)

    def test_brownian_drift_sign(self):
        # E exp(i lam X_1) = exp(i lam mu - sigma2 lam^2 / 2)
        assert psi(BrownianMotion(1.0, 2.0), 1.0) == pytest.approx(0.5 - 2.0j)

    def test_spectrally_negative_stable_matches_levy_measure_form(self):
        sn = SpectrallyNegative("stable", alpha=1.7)
        st_ = sn.as_stable()
        assert st_.beta == pytest.approx(-1.0)
        for lam in LAMS:
            assert psi(sn, lam) == pytest.approx(psi(st_, lam), rel=1e-12)

    def test_stable_constant_from_levy_measure(self):
        # Psi(1) = int (1 - cos y) nu(dy) - i int (sin y - y) nu(dy) for the
        # two-sided power law Levy measure, integrated numerically
        from scipy.integrate import quad

        m = StrictlyStable(1.5, c_plus=0.8, c_minus=0.3)

        def w(y):
            return y**-2.5

        # on [1, inf) use the Fourier weights; near zero expand the cancellations
        re_int = quad(lambda y: 2 * math.sin(0.5 * y) ** 2 * w(y), 0, 1)[0]
        re_int += quad(w, 1, np.inf)[0] - quad(w, 1, np.inf, weight="cos", wvar=1.0)[0]
        im_int = quad(lambda y: (math.sin(y) - y) * w(y), 0, 1)[0]
        im_int += quad(w, 1, np.inf, weight="sin", wvar=1.0)[0] - 2.0
        re = (m.c_plus + m.c_minus) * re_int
        im = -(m.c_plus - m.c_minus) * im_int
        assert psi(m, 1.0) == pytest.approx(complex(re, im), rel=1e-9)


class TestClassify:
    @pytest.mark.parametrize(
        "m, expected",
        [
            (BrownianMotion(1, 0), Recurrence.RECURRENT),
            (BrownianMotion(1, 1), Recurrence.TRANSIENT),
            (StrictlyStable.from_beta(1.5, 0.5), Recurrence.RECURRENT),
            (SpectrallyNegative("stable", alpha=1.3), Recurrence.RECURRENT),
            (SpectrallyNegative("brownian", mu=-1.0), Recurrence.TRANSIENT),
            (SpectrallyNegative("brownian", mu=0.0), Recurrence.RECURRENT),
        ],
    )
    def test_builtins(self, m, expected):
        assert classify(m) is expected

    def test_custom_needs_declaration(self):
        with pytest.raises(ClassificationUnavailable):
            classify(CustomExponent(lambda lam: lam * lam))

    def test_custom_declared(self):
        assert classify(CustomExponent(lambda lam: lam * lam, declared="transient", kappa=1.0)) is Recurrence.TRANSIENT


class TestClosedFormH:
    def test_brownian(self):
        assert closed_form_h(BrownianMotion(), -3.0) == 3.0
        assert closed_form_h(BrownianMotion(sigma2=4.0), -3.0) == pytest.approx(0.75)

    def test_stable_example(self):
        m = StrictlyStable.from_beta(1.5, 0.0)
        assert closed_form_h(m, 0.25) == pytest.approx(0.5 / m.K_alpha)

    def test_drift_up_vanishes_on_negatives(self):
        assert closed_form_h(SpectrallyNegative("brownian", mu=1.0), -2.0) == 0.0
        assert closed_form_h(BrownianMotion(1.0, 1.0), -2.0) == 0.0

    def test_drift_down(self):
        # drifting to -inf: h(x) = W(x) + (1 - e^{Phi0 x}) / psi'(Phi0)
        m = BrownianMotion(1.0, -1.0)
        assert closed_form_h(m, -1.0) == pytest.approx(1 - math.exp(-2.0))
        assert closed_form_h(m, 1.0) == 0.0

    def test_custom_has_none(self):
        assert closed_form_h(CustomExponent(lambda lam: lam * lam, declared="recurrent"), 1.0) is None

    @pytest.mark.parametrize("beta, zero_side", [(1.0, 1.0), (-1.0, -1.0)])
    def test_one_sided_stable(self, beta, zero_side):
        m = StrictlyStable.from_beta(1.5, beta)
        assert closed_form_h(m, zero_side * 2.0) == 0.0
        assert closed_form_h(m, -zero_side * 2.0) > 0

    @pytest.mark.parametrize("m", [m for m in MODELS if m.has_closed_form_h], ids=repr)
    def test_nonnegative_and_zero_at_origin(self, m):
        assert closed_form_h(m, 0.0) == 0.0
        assert all(closed_form_h(m, x) >= 0 for x in np.linspace(-6, 6, 25))

    @pytest.mark.parametrize("m", [m for m in MODELS if m.has_closed_form_h and m.is_recurrent], ids=repr)
    @settings(max_examples=60, deadline=None)
    @given(x=st.floats(-5, 5), y=st.floats(-5, 5))
    def test_subadditive(self, m, x, y):
        assert closed_form_h(m, x + y) <= closed_form_h(m, x) + closed_form_h(m, y) + 1e-12


class TestStableConstants:
    @pytest.mark.parametrize("alpha", np.linspace(1.01, 1.99, 15))
    @pytest.mark.parametrize("beta", [-1.0, -0.4, 0.0, 0.7, 1.0])
    def test_K_positive(self, alpha, beta):
        assert StrictlyStable.from_beta(alpha, beta).K_alpha > 0

    def test_beta(self):
        assert StrictlyStable(1.5, 0.3, 0.1).beta == pytest.approx(0.5)

    @pytest.mark.parametrize("bad", [dict(alpha=1.0), dict(alpha=2.0), dict(alpha=1.5, c_plus=0.0, c_minus=0.0)])
    def test_invalid(self, bad):
        with pytest.raises(ConfigError):
            StrictlyStable(**{"c_plus": 0.5, "c_minus": 0.5, **bad})

    def test_invalid_brownian(self):
        with pytest.raises(ConfigError):
            BrownianMotion(sigma2=0.0)


class TestKappa:
    @pytest.mark.parametrize("mu", [1.0, 2.0, -0.5])
    def test_drift(self, mu):
        assert kappa(BrownianMotion(1.0, mu)) == pytest.approx(abs(mu))

    def test_recurrent_raises(self):
        with pytest.raises(DomainError):
            kappa(BrownianMotion())

    def test_no_closed_form(self):
        with pytest.raises(UnsupportedFamily):
            kappa(CustomExponent(lambda lam: lam * lam / 2 - 1j * lam, declared="transient"))

    def test_transient_identity(self):
        # kappa h(x) = P_x(T_0 = inf) for drift 1: 1 - e^{-2x} for x > 0
        m = BrownianMotion(1.0, 1.0)
        for x in (0.3, 1.0, 4.0):
            assert kappa(m) * closed_form_h(m, x) == pytest.approx(1 - math.exp(-2 * x))


class TestScaleFunction:
    def test_brownian(self):
        assert scale_function(BrownianMotion(), 1.0) == pytest.approx(2.0)
        assert scale_function(BrownianMotion(1.0, 1.0), 1.0) == pytest.approx(1 - math.exp(-2.0))

    def test_negative_argument(self):
        for m in (BrownianMotion(), SpectrallyNegative("stable", alpha=1.5)):
            assert scale_function(m, -0.5) == 0.0

    def test_sn_stable(self):
        assert scale_function(SpectrallyNegative("stable", alpha=1.5), 4.0) == pytest.approx(2.0 / gamma(1.5))

    @pytest.mark.parametrize("m", [BrownianMotion(1.0, 0.5), BrownianMotion(2.0, -0.3), SpectrallyNegative("stable", alpha=1.4)], ids=repr)
    def test_laplace_transform(self, m):
        from scipy.integrate import quad

        for theta in (1.3, 2.5):
            val = quad(lambda x: math.exp(-theta * x) * scale_function(m, x), 0, 200.0, limit=200)[0]
            assert val == pytest.approx(1.0 / m.laplace_exponent(theta), rel=1e-7)

    def test_nondecreasing(self):
        m = SpectrallyNegative("brownian", mu=-0.5)
        xs = np.linspace(0, 5, 50)
        assert np.all(np.diff([scale_function(m, x) for x in xs]) >= 0)

    def test_unsupported(self):
        with pytest.raises(UnsupportedFamily):
            scale_function(CustomExponent(lambda lam: lam * lam, declared="recurrent"), 1.0)


class TestModelFromSpec:
    def test_families(self):
        assert model_from_spec({"family": "bm", "mu": 1}) == BrownianMotion(1.0, 1.0)
        assert model_from_spec({"family": "stable", "alpha": 1.5, "beta": 0.2}).beta == pytest.approx(0.2)
        assert model_from_spec({"family": "stable", "alpha": 1.5, "c_plus": 1, "c_minus": 0}).beta == 1.0
        assert model_from_spec({"family": "sn-stable", "alpha": 1.6}).alpha == 1.6
        assert model_from_spec({"family": "sn-brownian", "mu": -1}).recurrence is Recurrence.TRANSIENT

    def test_custom_expression(self):
        m = model_from_spec({"family": "custom", "psi": "abs(lam)**1.5", "recurrence": "recurrent"})
        assert psi(m, -2.0) == pytest.approx(2.0**1.5)

    @pytest.mark.parametrize(
        "spec",
        [
            {"family": "nope"},
            {"family": "stable"},
            {"family": "stable", "alpha": "x"},
            {"family": "custom", "psi": "__import__('os')", "recurrence": "recurrent"},
            {"family": "custom", "psi": "lam +", "recurrence": "recurrent"},
            {"family": "custom", "psi": "lam", "recurrence": "sometimes"},
        ],
    )
    def test_bad(self, spec):
        with pytest.raises(ConfigError):
            model_from_spec(spec)
