import numpy as np
import pytest

from absmor.pencil import DipoleBlock, build_pencil


def random_problem(n, seed, coupling=0.05, lo=1.0, hi=3.0):
    """Diagonally dominant SPD pencil with gaps in ``[lo, hi]``."""
    rng = np.random.default_rng(seed)
    A = np.diag(rng.uniform(lo, hi, n))
    R = rng.uniform(-1, 1, (n, n)) * coupling
    A = A + R + R.T
    Bm = rng.uniform(-1, 1, (n, n)) * coupling * 0.4
    Bm = Bm + Bm.T
    return build_pencil(A, Bm, check_spd=True), DipoleBlock(rng.normal(size=(n, 3)))


def scalar_problem():
    return build_pencil([[2.0]], [[1.0]], check_spd=True), DipoleBlock([[1.0, 0.0, 0.0]])


def scalar_sigma(omegas, eta):
    """Closed form ``w Im 2 / (3 - (w + i eta)^2)`` of the 1x1 pencil A=2, B=1."""
    wt = omegas + 1j * eta
    return omegas * (2.0 / (3.0 - wt**2)).imag


@pytest.fixture
def prob32():
    return random_problem(32, 32)


@pytest.fixture
def prob16():
    return random_problem(16, 16)


# (number, line) pairs filled by test_acceptance.py
ACCEPTANCE = []


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.write_sep("=", "acceptance criteria")
    for _, line in sorted(ACCEPTANCE):
        terminalreporter.write_line(line)
