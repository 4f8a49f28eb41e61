import numpy as np
import pytest
from hypothesis import HealthCheck, settings

from mpps.config import load_example
from mpps.floquet import floquet_data, multipliers

settings.register_profile(
    "default", max_examples=25, deadline=None,
    suppress_health_check=[HealthCheck.too_slow, HealthCheck.function_scoped_fixture],
)
settings.load_profile("default")

CRITERIA = pytest.StashKey[dict]()


def pytest_configure(config):
    config.stash[CRITERIA] = {}


def pytest_terminal_summary(terminalreporter, config):
    results = config.stash.get(CRITERIA, {})
    if not results:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(results):
        passed, detail = results[n]
        terminalreporter.write_line(f"criterion {n:2d}: {'PASS' if passed else 'FAIL'}  {detail}")


@pytest.fixture
def criterion(request):
    """Record one acceptance verdict; the line is printed now and in the summary."""
    def record(n, passed, detail):
        results = request.config.stash[CRITERIA]
        if n in results:
            passed, detail = results[n][0] and passed, f"{results[n][1]}; {detail}"
        results[n] = (bool(passed), detail)
        print(f"criterion {n}: {'PASS' if passed else 'FAIL'}  {detail}")
        return results[n][0]
    return record


@pytest.fixture(scope="session")
def examples():
    return {n: load_example(n) for n in (1, 2, 3)}


@pytest.fixture(scope="session")
def ex1(examples):
    return examples[1]


@pytest.fixture(scope="session")
def ex2(examples):
    return examples[2]


@pytest.fixture(scope="session")
def ex3(examples):
    return examples[3]


@pytest.fixture(scope="session")
def certified():
    """Multipliers plus certified decay pair for each example's matrix."""
    cache = {}

    def get(cfg):
        if cfg.name not in cache:
            cache[cfg.name] = floquet_data(cfg.system.A)
        return cache[cfg.name]

    return get


@pytest.fixture(scope="session")
def paper_pair(ex3):
    """Example 3's multipliers with the constants stated for it (K=1, alpha=pi/2)."""
    return multipliers(ex3.system.A).with_constants(*ex3.declared, source="declared")


@pytest.fixture
def rng():
    return np.random.default_rng(12345)
