from __future__ import annotations

import numpy as np
import pytest

from robust_bridge import DEFAULT_PARAMS, TimeGrid

A0, R0, S0 = 0.03673, 0.7100, 0.7252


def closed_form_mean(t, a=A0, r=R0):
    """Integrating-factor solution of m' = a - r m/(1-t), m(0) = 0."""
    u = 1.0 - np.asarray(t, dtype=float)
    if abs(r - 1.0) < 1e-12:
        return -a * u * np.log(np.where(u > 0, u, 1.0))
    return a * (u - u**r) / (r - 1.0)


def closed_form_F(a=A0, r=R0):
    return a / (2.0 * (r + 1.0))


@pytest.fixture
def params():
    return DEFAULT_PARAMS


@pytest.fixture(scope="session")
def grid_1e4():
    return TimeGrid(10_000)


@pytest.fixture(scope="session")
def grid_1e5():
    return TimeGrid(100_000)


@pytest.fixture(autouse=True)
def _single_thread(monkeypatch):
    # keep worker counts deterministic regardless of the caller's environment
    monkeypatch.delenv("ROBUST_BRIDGE_THREADS", raising=False)


def pytest_terminal_summary(terminalreporter):
    import acceptance_report

    lines = acceptance_report.render()
    if lines:
        terminalreporter.section("acceptance criteria")
        for line in lines:
            terminalreporter.write_line(line)
