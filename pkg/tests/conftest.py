import numpy as np
import pytest

from smoco import benchmark as pe


@pytest.fixture(scope="session")
def plant():
    return pe.plant()


@pytest.fixture(scope="session")
def aug():
    return pe.augmented()


@pytest.fixture(scope="session")
def reference():
    return pe.reference_gains()


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


def random_hurwitz(rng, n, shift=0.5):
    M = rng.standard_normal((n, n))
    a = np.max(np.linalg.eigvals(M).real)
    return M - (a + shift) * np.eye(n)


ACCEPTANCE_LINES = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
