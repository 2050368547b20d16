import numpy as np
import pytest
from hypothesis import HealthCheck, settings

from kslab.spectral import build_domain

settings.register_profile("default", deadline=None, max_examples=40,
                          suppress_health_check=[HealthCheck.too_slow])
settings.load_profile("default")

# acceptance criterion -> (passed, detail); filled by test_acceptance.py
CRITERIA: dict[int, tuple[bool, str]] = {}


def pytest_terminal_summary(terminalreporter):
    if not CRITERIA:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(CRITERIA):
        ok, detail = CRITERIA[n]
        terminalreporter.write_line(f"criterion {n:2d}: {'PASS' if ok else 'FAIL'}  {detail}")


@pytest.fixture
def interval():
    return build_domain(1, [np.pi], 64)


@pytest.fixture
def rect():
    return build_domain(2, [np.pi, 2.0], [32, 16])


@pytest.fixture
def rng():
    return np.random.default_rng(1234)
