import numpy as np
import pytest

from flexent import qcore


@pytest.fixture
def rng():
    return np.random.default_rng(20231015)


@pytest.fixture
def phi_plus():
    return qcore.DensityMatrix.from_pure(qcore.PHI_PLUS)


def random_hermitian(rng, dim=4):
    z = qcore.sample_ginibre(rng, dim)
    return 0.5 * (z + z.conj().T)


def random_state(rng, dim=2):
    g = qcore.sample_ginibre(rng, dim)
    r = g @ g.conj().T
    return qcore.DensityMatrix(r / np.trace(r).real)


ACCEPTANCE_LINES = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES):
            terminalreporter.write_line(line)
