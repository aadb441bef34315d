import numpy as np
import pytest
from hypothesis import HealthCheck, settings

from nodallab import CovarianceKernel

settings.register_profile("default", deadline=None, suppress_health_check=[HealthCheck.too_slow])
settings.load_profile("default")


@pytest.fixture(scope="session")
def bf():
    return CovarianceKernel.bargmann_fock()


@pytest.fixture(scope="session")
def tw():
    return CovarianceKernel.truncated_wave()


@pytest.fixture(scope="session")
def j0():
    return CovarianceKernel.bessel_j0()


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


_CRITERIA: dict[int, str] = {}


@pytest.fixture
def criterion(capsys):
    """Record and print one PASS/FAIL line for an exit criterion, then assert it."""

    def report(number: int, ok: bool, detail: str):
        line = f"criterion {number:2d}: {'PASS' if ok else 'FAIL'}  {detail}"
        _CRITERIA[number] = line
        with capsys.disabled():
            print("\n" + line)
        assert ok, line

    return report


def pytest_terminal_summary(terminalreporter):
    if _CRITERIA:
        terminalreporter.section("exit criteria")
        for n in sorted(_CRITERIA):
            terminalreporter.write_line(_CRITERIA[n])
