import numpy as np
import pytest
from hypothesis import HealthCheck, settings

settings.register_profile(
    "default", deadline=None, max_examples=200, suppress_health_check=[HealthCheck.too_slow]
)
settings.load_profile("default")

# filled by the acceptance module, printed after the run
ACCEPTANCE_LINES: list[str] = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


def random_series(rng, lo=1, hi=16, dim=1, integer=False):
    n = int(rng.integers(lo, hi + 1))
    if integer:
        return rng.integers(0, 4, size=(n, dim)).astype(float)
    return rng.uniform(0.0, 1.0, size=(n, dim))


def random_set(rng, lo=1, hi=12, integer=False):
    n = int(rng.integers(lo, hi + 1))
    if integer:
        return np.unique(rng.integers(0, 20, size=n).astype(float))
    return np.unique(rng.uniform(0.0, 1.0, size=n))
