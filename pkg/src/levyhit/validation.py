"""Validation suites run by ``levyhit validate``.

Each suite returns an :class:`~levyhit.oracle.OracleReport` holding the
largest deviation seen and the worst case, serialized so that the same seed
reproduces it.
"""

from __future__ import annotations

from typing import Callable

import numpy as np

from .errors import ConfigError
from .models import BrownianMotion, SpectrallyNegative, StrictlyStable
from .oracle import OracleReport, first_hit_suite, roundtrip_suite
from .resolvent import ResolventEvaluator
from .trace_q import build_Q, closed_form_Q, max_deviation

STABLE_GRID = [(a, b) for a in (1.2, 1.5, 1.8) for b in (-0.5, 0.0, 0.5)]


def _rel(a: float, b: float) -> float:
    return abs(a - b) / max(abs(b), 1e-300)


def random_triple(rng: np.random.Generator, span: float = 4.0) -> list[float]:
    pts = np.sort(rng.uniform(-span, span, 3))
    while np.min(np.diff(pts)) < 0.05:
        pts = np.sort(rng.uniform(-span, span, 3))
    return pts.tolist()


def golden_suite(seed: int = 0, triples: int = 5, quadrature: bool = True) -> list[OracleReport]:
    """Excursion-route generators against the explicit two- and three-point forms."""
    rng = np.random.default_rng(np.random.SeedSequence(seed, spawn_key=(20_000,)))
    exact = OracleReport("golden Q, closed-form h", 1e-8)
    quad = OracleReport("golden Q, quadrature h", 1e-5)

    bm = BrownianMotion()
    Q = build_Q(ResolventEvaluator(bm), [0.0, 1.0, 3.0])
    target = np.array([[-0.5, 0.5, 0.0], [0.5, -0.75, 0.25], [0.0, 0.25, -0.25]])
    exact.record(float(np.max(np.abs(Q.entries - target)) / 0.75), {"model": bm.describe(), "points": [0, 1, 3]})

    models = [BrownianMotion(sigma2=2.0)] + [StrictlyStable.from_beta(a, b) for a, b in STABLE_GRID]
    models.append(SpectrallyNegative("stable", alpha=1.5))
    models.append(SpectrallyNegative("stable", alpha=1.3))
    for m in models:
        for _ in range(triples):
            pts = random_triple(rng)
            for sub in (pts, pts[:2]):
                ref = closed_form_Q(m, sub)
                d = max_deviation(build_Q(ResolventEvaluator(m), sub), ref, relative=True)
                exact.record(d, {"model": m.describe(), "points": sub, "route": "closed-form h"})
        if quadrature:
            pts = random_triple(rng)
            ref = closed_form_Q(m, pts)
            d = max_deviation(build_Q(ResolventEvaluator(m, method="tsukada"), pts), ref, relative=True)
            quad.record(d, {"model": m.describe(), "points": pts, "route": "tsukada"})
    return [exact, quad] if quadrature else [exact]


def calibration_suite() -> list[OracleReport]:
    """Fourier-integral ``h`` against the closed forms."""
    bm_rep = OracleReport("h calibration, Brownian", 1e-8)
    ev = ResolventEvaluator(BrownianMotion(), method="tsukada")
    for x in np.linspace(-5, 5, 21):
        if x != 0:
            bm_rep.record(_rel(ev.h(x), abs(x)), {"x": float(x)})
    st_rep = OracleReport("h calibration, stable", 1e-6)
    for a, b in STABLE_GRID:
        m = StrictlyStable.from_beta(a, b)
        ev = ResolventEvaluator(m, method="tsukada")
        for x in (-5.0, -1.3, -0.2, 0.2, 1.3, 5.0):
            st_rep.record(_rel(ev.h(x), m.closed_form_h(x)), {"alpha": a, "beta": b, "x": x})
    return [bm_rep, st_rep]


def cross_method_suite() -> list[OracleReport]:
    """Fourier-integral ``h`` against the extrapolated ``q -> 0`` limit."""
    rep = OracleReport("h cross-method (integral vs limit)", 1e-5)
    cases = [(BrownianMotion(), np.linspace(-5, 5, 11))]
    cases += [(StrictlyStable.from_beta(a, b), np.array([-5.0, -1.3, -0.2, 0.2, 1.3, 5.0])) for a, b in STABLE_GRID]
    for m, xs in cases:
        ev = ResolventEvaluator(m)
        for x in xs:
            if x == 0:
                continue
            rep.record(_rel(ev.h_limit(x), ev.h_tsukada(x)), {"model": m.describe(), "x": float(x)})
    return [rep]


SUITES: dict[str, Callable[[int], list[OracleReport]]] = {
    "oracle": lambda seed: [first_hit_suite(seed), roundtrip_suite(seed)],
    "golden": lambda seed: golden_suite(seed),
    "calibration": lambda seed: calibration_suite(),
    "cross": lambda seed: cross_method_suite(),
}


def run_suites(names, seed: int = 0) -> list[OracleReport]:
    names = list(SUITES) if not names or "all" in names else list(names)
    unknown = [n for n in names if n not in SUITES]
    if unknown:
        raise ConfigError(f"unknown suite(s) {unknown}; choose from {sorted(SUITES)} or 'all'")
    out: list[OracleReport] = []
    for n in names:
        out.extend(SUITES[n](seed))
    return out
