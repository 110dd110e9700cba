from __future__ import annotations

import numpy as np
import pytest

from formalpowers.core.profile import RadialProfile

ACCEPTANCE_LINES: list[str] = []


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


@pytest.fixture(params=["constant", "r^2", "e^r"])
def preset_profile(request):
    rng_ = (0.05, 20.0)
    return {
        "constant": RadialProfile.constant(1.0, rng_),
        "r^2": RadialProfile.power(1.0, 2.0, rng_),
        "e^r": RadialProfile.exponential(1.0, 1.0, rng_),
    }[request.param]


@pytest.fixture
def acceptance():
    """Record one PASS/FAIL line per acceptance criterion."""

    def record(number: int, title: str, passed: bool, detail: str) -> bool:
        line = f"criterion {number:2d} {'PASS' if passed else 'FAIL'}  {title}: {detail}"
        print(line)
        ACCEPTANCE_LINES.append(line)
        return passed

    return record


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
