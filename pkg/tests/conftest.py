import numpy as np
import pytest
from hypothesis import HealthCheck, settings

from complex_heat_blowup.decomposition import ShrinkingParams
from complex_heat_blowup.solver import SolverConfig

settings.register_profile(
    "default", max_examples=40, deadline=None, suppress_health_check=[HealthCheck.too_slow]
)
settings.load_profile("default")


@pytest.fixture
def sp():
    return ShrinkingParams()


@pytest.fixture
def short_config():
    """Default resolution on a grid just wide enough for s ≤ 22."""
    return SolverConfig(ymax=100.0)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


ACCEPTANCE_LINES: list[str] = []


@pytest.fixture
def acceptance_line():
    """Record one pass/fail line; all lines are echoed in the terminal summary."""

    def emit(name: str, passed: bool, detail: str) -> None:
        line = f"ACCEPTANCE {name:22s} {'PASS' if passed else 'FAIL'}  {detail}"
        ACCEPTANCE_LINES.append(line)
        print(line)

    return emit


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
