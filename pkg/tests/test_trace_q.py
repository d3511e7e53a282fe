from __future__ import annotations

import json
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from levyhit import (
    BrownianMotion,
    CustomExponent,
    DomainError,
    QMatrix,
    ResolventEvaluator,
    SpectrallyNegative,
    StrictlyStable,
    UnsupportedFamily,
    build_Q,
    closed_form_Q,
    excursion_raw_vector,
    excursion_solved_vector,
    getoor_limit_Q,
    hitting_distribution,
    q_diagonal,
    q_offdiagonal,
)
from levyhit.trace_q import getoor_matrix, max_deviation


class TestBrownian:
    def test_golden(self, bm):
        Q = build_Q(bm, [0.0, 1.0, 3.0])
        np.testing.assert_allclose(Q.entries, [[-0.5, 0.5, 0.0], [0.5, -0.75, 0.25], [0.0, 0.25, -0.25]], atol=1e-14)
        assert Q.check() == []
        assert Q.recurrent and Q.route == "excursion"

    def test_variance_scaling(self):
        Q = build_Q(ResolventEvaluator(BrownianMotion(sigma2=3.0)), [0.0, 2.0])
        np.testing.assert_allclose(Q.entries, 0.75 * np.array([[-1, 1], [1, -1]]), atol=1e-14)

    def test_drift_two_points(self, bm_drift):
        g = -math.expm1(-2.0)
        Q = build_Q(bm_drift, [0.0, 1.0])
        exact = np.array([[-1 / g, 1 / g], [math.exp(-2) / g, -math.exp(-2) / g - 1.0]])
        np.testing.assert_allclose(Q.entries, exact, atol=1e-13)
        np.testing.assert_allclose(Q.killing_rates, [0.0, 1.0], atol=1e-13)
        np.testing.assert_allclose(Q.diagnostics["killing_identity"], Q.killing_rates, atol=1e-13)

    def test_drift_three_points_nearest_neighbour(self):
        Q = build_Q(ResolventEvaluator(BrownianMotion(1.0, -0.4)), [-1.0, 0.5, 2.0])
        assert Q.entries[0, 2] == pytest.approx(0.0, abs=1e-13) and Q.entries[2, 0] == pytest.approx(0.0, abs=1e-13)
        assert Q.check() == []


class TestStable:
    def test_equally_spaced_symmetric(self, stable15):
        K = stable15.model.K_alpha
        Q = build_Q(stable15, [0.0, 1.0, 2.0])
        assert Q.entries[0, 0] == pytest.approx(-K / (2 * math.sqrt(2) - 1), rel=1e-12)
        assert Q.entries[0, 0] == pytest.approx(-0.547 * K, rel=1e-3)
        np.testing.assert_allclose(Q.entries, closed_form_Q(stable15.model, [0.0, 1.0, 2.0]).entries, rtol=1e-12)

    def test_three_point_form_agrees_with_resolvent_limit(self):
        ev = ResolventEvaluator(StrictlyStable.from_beta(1.5, 0.5))
        ref = closed_form_Q(ev.model, [0.0, 1.0, 2.0])
        assert max_deviation(getoor_limit_Q(ev, [0.0, 1.0, 2.0]), ref) < 1e-5

    def test_two_point(self):
        m = StrictlyStable.from_beta(1.7, -0.3)
        Q = build_Q(ResolventEvaluator(m), [0.0, 1.5])
        r = m.K_alpha / (2 * 1.5**0.7)
        np.testing.assert_allclose(Q.entries, r * np.array([[-1, 1], [1, -1]]), rtol=1e-12)

    @settings(max_examples=40, deadline=None)
    @given(alpha=st.floats(1.05, 1.95), beta=st.floats(-1, 1), a=st.floats(0.1, 3), b=st.floats(0.1, 3))
    def test_matches_closed_form(self, alpha, beta, a, b):
        m = StrictlyStable.from_beta(alpha, beta)
        pts = [0.0, a, a + b]
        d = max_deviation(build_Q(ResolventEvaluator(m), pts), closed_form_Q(m, pts), relative=True)
        assert d < 1e-8

    @pytest.mark.parametrize("beta", [0.0, 0.4, 1.0])
    def test_reflection(self, beta):
        pts = [-0.5, 0.3, 2.0, 2.6]
        fwd = build_Q(ResolventEvaluator(StrictlyStable.from_beta(1.4, beta)), pts)
        back = build_Q(ResolventEvaluator(StrictlyStable.from_beta(1.4, -beta)), [-p for p in reversed(pts)])
        np.testing.assert_allclose(fwd.entries, back.entries[::-1, ::-1], rtol=1e-11, atol=1e-13)

    def test_jump_chain_is_first_hit_law(self):
        ev = ResolventEvaluator(StrictlyStable.from_beta(1.3, -0.6))
        pts = [-1.0, 0.0, 0.8, 2.0]
        Q = build_Q(ev, pts)
        for i in range(len(pts)):
            rest = pts[:i] + pts[i + 1:]
            law = hitting_distribution(ev, rest, pts[i]).probs
            jump = np.delete(Q.entries[i], i) / -Q.entries[i, i]
            np.testing.assert_allclose(jump, law, atol=1e-12)


class TestSpectrallyNegative:
    def test_no_upward_skip(self, sn15):
        Q = build_Q(sn15, [0.0, 1.0, 2.0])
        assert Q.entries[0, 2] == pytest.approx(0.0, abs=1e-14)
        assert Q.entries[2, 0] > 0
        np.testing.assert_allclose(Q.entries, closed_form_Q(sn15.model, [0.0, 1.0, 2.0]).entries, rtol=1e-10, atol=1e-14)

    def test_matches_stable_with_negative_jumps_only(self):
        sn = SpectrallyNegative("stable", alpha=1.6)
        pts = [0.0, 0.7, 2.0]
        a = build_Q(ResolventEvaluator(sn), pts)
        b = closed_form_Q(sn.as_stable(), pts)
        assert max_deviation(a, b, relative=True) < 1e-10


class TestComponents:
    def test_excursion_vectors(self, stable15):
        pts = [0.0, 1.0, 2.5]
        raw = excursion_raw_vector(stable15, pts, 1)
        assert raw.shape == (2,) and np.all(raw > 0)
        vec = excursion_solved_vector(stable15, pts, 1)
        assert vec.base == 1 and vec.indices == (0, 2)
        Q = build_Q(stable15, pts)
        np.testing.assert_allclose(vec.solved, Q.entries[1, [0, 2]], rtol=1e-12)
        assert vec.total == pytest.approx(-Q.entries[1, 1], rel=1e-12)

    def test_entry_functions(self, stable15):
        pts = [0.0, 1.0, 2.5]
        Q = build_Q(stable15, pts)
        assert q_diagonal(stable15, pts, 2) == pytest.approx(Q.entries[2, 2], rel=1e-12)
        assert q_offdiagonal(stable15, pts, 2, 0) == pytest.approx(Q.entries[2, 0], rel=1e-12)


class TestInvariants:
    def test_relabel(self, stable15, rng):
        pts = [0.0, 0.6, 1.1, 3.0]
        Q = build_Q(stable15, pts)
        perm = rng.permutation(4)
        Qp = build_Q(stable15, [pts[k] for k in perm])
        assert np.array_equal(Qp.entries, Q.entries[np.ix_(perm, perm)])
        assert Qp.points == tuple(pts[k] for k in perm)

    def test_duplicates(self, bm):
        with pytest.raises(DomainError):
            build_Q(bm, [0.0, 1.0, 0.0])

    def test_check_reports(self):
        bad = QMatrix(np.array([[0.1, -0.1], [1.0, -2.0]]), (0.0, 1.0), recurrent=True)
        problems = bad.check()
        assert any("not negative" in p for p in problems)
        assert any("is negative" in p for p in problems)
        assert any("sums to" in p for p in problems)

    def test_transient_rows(self):
        Q = build_Q(ResolventEvaluator(BrownianMotion(2.0, -0.7)), [-1.0, 0.0, 1.5])
        assert Q.check() == []
        assert np.all(Q.row_sums <= 1e-12)
        np.testing.assert_allclose(Q.diagnostics["killing_identity"], Q.killing_rates, atol=1e-12)

    def test_as_dict_is_json(self, bm_drift):
        d = build_Q(bm_drift, [0.0, 1.0]).as_dict()
        assert json.loads(json.dumps(d))["points"] == [0.0, 1.0]


class TestClosedFormQ:
    @pytest.mark.parametrize(
        "model, pts",
        [
            (BrownianMotion(), [0.0, 1.0, 2.0, 3.0]),
            (BrownianMotion(), [0.0]),
            (BrownianMotion(1.0, 1.0), [0.0, 1.0]),
            (CustomExponent(lambda lam: lam * lam / 2, declared="recurrent"), [0.0, 1.0]),
        ],
    )
    def test_unsupported(self, model, pts):
        with pytest.raises(UnsupportedFamily):
            closed_form_Q(model, pts)


class TestResolventLimit:
    def test_brownian_two_points(self, bm):
        Q = getoor_limit_Q(bm, [0.0, 1.0])
        np.testing.assert_allclose(Q.entries, [[-0.5, 0.5], [0.5, -0.5]], atol=1e-6)
        assert Q.route == "resolvent-limit"

    def test_killed_rows_at_positive_lambda(self, bm):
        Ql = getoor_matrix(bm, [0.0, 1.0, 3.0], 1.0)
        assert np.all(Ql.sum(axis=1) < 0)
        assert np.all(Ql[~np.eye(3, dtype=bool)] >= -1e-12)

    def test_transient_brownian(self, bm_drift):
        a = getoor_limit_Q(bm_drift, [0.0, 1.0])
        b = build_Q(bm_drift, [0.0, 1.0])
        assert max_deviation(a, b) < 1e-8
        np.testing.assert_allclose(b.entries, [[-1.1565, 1.1565], [0.1565, -1.1565]], atol=1e-4)

    @pytest.mark.parametrize("seq", [[1.0], [0.5, 1.0], [1.0, 0.0]])
    def test_bad_sequence(self, bm, seq):
        with pytest.raises(DomainError):
            getoor_limit_Q(bm, [0.0, 1.0], lambda_sequence=seq)

    def test_one_point(self, bm):
        with pytest.raises(DomainError):
            getoor_limit_Q(bm, [0.0])
