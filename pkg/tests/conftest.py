import numpy as np
import pytest
from hypothesis import HealthCheck, settings

from hamthermo import IdealGasEnergy, IdealGasParams, embed

settings.register_profile(
    "repo", derandomize=True, deadline=None, max_examples=60, suppress_health_check=[HealthCheck.too_slow]
)
settings.load_profile("repo")

# criterion number -> (passed, detail); filled by tests/test_acceptance.py
ACCEPTANCE: dict[int, tuple[bool, str]] = {}


@pytest.fixture
def gas():
    return IdealGasParams(1.0, 1.5)


@pytest.fixture
def phi(gas):
    return IdealGasEnergy(gas)


@pytest.fixture
def x_unit(phi):
    """Equilibrium point over (S, V, N) = (0, 1, 1)."""
    return embed(phi, [0.0, 1.0, 1.0])


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for k in sorted(ACCEPTANCE):
        ok, detail = ACCEPTANCE[k]
        terminalreporter.write_line(f"{'PASS' if ok else 'FAIL'}  criterion {k:2d}: {detail}")
