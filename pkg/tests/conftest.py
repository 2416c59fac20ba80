import numpy as np
import pytest
from hypothesis import settings

from coupled_market.dgp import simulate_market
from coupled_market.market import ScenarioConfig

settings.register_profile("coupled", deadline=None, max_examples=100)
settings.load_profile("coupled")


@pytest.fixture(scope="session")
def benchmark_config():
    return ScenarioConfig()


@pytest.fixture()
def benchmark_path(benchmark_config):
    return simulate_market(benchmark_config, np.random.default_rng(7))


def ar1_series(n, mean=50.0, phi=0.7, sd=5.0, seed=0):
    """Reference AR(1) draw, written independently of the package simulator."""
    rng = np.random.default_rng(seed)
    y = np.empty(n)
    y[0] = mean + rng.standard_normal() * sd / np.sqrt(1 - phi**2)
    eps = rng.standard_normal(n) * sd
    for t in range(1, n):
        y[t] = mean + phi * (y[t - 1] - mean) + eps[t]
    return y


_ACCEPTANCE: dict[int, str] = {}


@pytest.fixture()
def acceptance():
    """Record one PASS/FAIL line per acceptance criterion, then assert it."""

    def record(number, title, ok, detail):
        _ACCEPTANCE[number] = f"{'PASS' if ok else 'FAIL'}  criterion {number} ({title}): {detail}"
        assert ok, _ACCEPTANCE[number]

    return record


def pytest_terminal_summary(terminalreporter):
    if _ACCEPTANCE:
        terminalreporter.section("acceptance criteria")
        for number in sorted(_ACCEPTANCE):
            terminalreporter.write_line(_ACCEPTANCE[number])
