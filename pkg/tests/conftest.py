import numpy as np
import pytest

from stabgreedy.geometry import DomainKind, DomainSampler
from stabgreedy.kernels import Family, Kernel


def dense_oracle(kernel, centers, points, f_centers=None):
    """Power^2, interpolant and cardinal functions by direct dense solves."""
    X = np.asarray(centers, dtype=float)
    P = np.asarray(points, dtype=float)
    A = kernel(X)
    Z = kernel(X, P)                       # N x M
    cardinal = np.linalg.solve(A, Z).T     # M x N
    power_sq = 1.0 - np.sum(Z.T * cardinal, axis=1)
    interp = None if f_centers is None else cardinal @ np.asarray(f_centers, dtype=float)
    return power_sq, interp, cardinal


def random_instance(rng, n=40):
    """Random (kernel, candidates) whose kernel matrices stay well posed up to ``n`` centers.

    The Gaussian shape grows like n^(1/d) so that shape times center spacing stays of order one.
    """
    fam = list(Family)[rng.integers(3)]
    d = int(rng.integers(1, 4))
    shape = {Family.BASIC_MATERN: rng.uniform(0.5, 3.0),
             Family.LINEAR_MATERN: rng.uniform(1.0, 4.0),
             Family.GAUSSIAN: rng.uniform(1.5, 3.0) * n ** (1 / d)}[fam]
    kernel = Kernel(fam, float(shape))
    cand = DomainSampler(DomainKind.UNIT_CUBE, d, int(rng.integers(2**32))).sample(int(rng.integers(60, 300)))
    return kernel, cand


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


_ACCEPTANCE = []


@pytest.fixture
def report():
    """Record one acceptance-criterion verdict for the terminal summary."""
    def _record(criterion, ok, detail=""):
        _ACCEPTANCE.append((criterion, bool(ok), detail))
        return ok
    return _record


def pytest_terminal_summary(terminalreporter):
    if not _ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for criterion, ok, detail in _ACCEPTANCE:
        terminalreporter.write_line(f"[{'PASS' if ok else 'FAIL'}] {criterion}: {detail}")
