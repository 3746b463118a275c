import numpy as np
import pytest
from hypothesis import HealthCheck, settings

settings.register_profile("default", deadline=None, max_examples=60, suppress_health_check=[HealthCheck.too_slow])
settings.load_profile("default")


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


def pytest_terminal_summary(terminalreporter):
    from test_acceptance import RESULTS

    if RESULTS:
        terminalreporter.section("acceptance criteria")
        for check in RESULTS:
            terminalreporter.write_line(check.line())
        passed = sum(c.passed for c in RESULTS)
        terminalreporter.write_line(f"{passed}/{len(RESULTS)} criteria passed")
