import numpy as np
import pytest

from wavecross.grid import Grid

_ACCEPTANCE_LINES = []


@pytest.fixture(scope="session")
def acceptance_log():
    return _ACCEPTANCE_LINES


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    if _ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(_ACCEPTANCE_LINES, key=lambda s: int(s.split("criterion")[1].split()[0])):
            terminalreporter.write_line(line)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


def grid1d(lo=-12.0, hi=12.0, n=1024):
    return Grid((lo,), (hi,), (n,))


def random_symplectic(rng, d=1, t=1.0):
    """exp(t J S) for a random symmetric S, i.e. the flow of a random quadratic Hamiltonian."""
    from scipy.linalg import expm
    a = rng.normal(size=(2 * d, 2 * d))
    s = 0.5 * (a + a.T)
    j = np.block([[np.zeros((d, d)), np.eye(d)], [-np.eye(d), np.zeros((d, d))]])
    return expm(t * j @ s)
