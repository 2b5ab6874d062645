import numpy as np
import pytest

from rosenfied.matpoly import MatrixPolynomial
from rosenfied.rosenbrock import SystemMatrix, random_system

_criteria = []


def scalar_system(a, d, b, c):
    """n = m = 1 system from ascending scalar coefficient lists."""
    A = MatrixPolynomial([[[v]] for v in a])
    D = MatrixPolynomial([[[v]] for v in d])
    return SystemMatrix(A, [[b]], [[c]], D)


def corpus(count, seed, max_d=5, max_size=3, integer=True, min_d=1):
    """Seeded systems cycling through d_A > d_D, d_A < d_D and d_A = d_D."""
    rng = np.random.default_rng(seed)
    out = []
    while len(out) < count:
        d = int(rng.integers(max(min_d, 2), max_d + 1))
        low = int(rng.integers(1, d))
        regime = len(out) % 3
        dA, dD = [(d, low), (low, d), (d, d)][regime]
        n, m = (int(v) for v in rng.integers(1, max_size + 1, size=2))
        out.append(random_system(n, m, dA, dD, rng, integer=integer))
    return out


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


@pytest.fixture
def unit_system():
    # A = λ, D = λ, B = C = 1: det S = λ² + 1
    return scalar_system([0, 1], [0, 1], 1, 1)


def pytest_runtest_logreport(report):
    props = dict(report.user_properties)
    if "criterion" not in props:
        return
    if report.when == "call" or (report.when == "setup" and report.outcome != "passed"):
        _criteria.append((props["criterion"], report.outcome, report.duration))


def pytest_terminal_summary(terminalreporter):
    if not _criteria:
        return
    terminalreporter.section("acceptance criteria")
    for name, outcome, duration in sorted(_criteria, key=lambda t: int(t[0].split()[0])):
        verdict = "PASS" if outcome == "passed" else "FAIL"
        terminalreporter.write_line(f"criterion {name}: {verdict} ({duration:.2f} s)")
