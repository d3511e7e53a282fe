from __future__ import annotations

import numpy as np
import pytest

from levyhit import BrownianMotion, ResolventEvaluator, SpectrallyNegative, StrictlyStable

ACCEPTANCE_LINES: list[str] = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


@pytest.fixture(scope="session")
def bm():
    return ResolventEvaluator(BrownianMotion())


@pytest.fixture(scope="session")
def bm_drift():
    return ResolventEvaluator(BrownianMotion(1.0, 1.0))


@pytest.fixture(scope="session")
def stable15():
    return ResolventEvaluator(StrictlyStable.from_beta(1.5, 0.0))


@pytest.fixture(scope="session")
def sn15():
    return ResolventEvaluator(SpectrallyNegative("stable", alpha=1.5))
