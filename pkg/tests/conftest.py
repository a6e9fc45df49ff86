import numpy as np
import pytest

from spinmple.coupling import build_coupling, matvec
from spinmple.graph import gen_complete, gen_erdos_renyi


def random_instance(rng, n=None, family=None):
    """(J, sigma, m, beta, h) on a complete or sparse random graph."""
    n = int(rng.integers(4, 65)) if n is None else n
    family = family or rng.choice(["gaussian", "rademacher", "uniform"])
    seed = int(rng.integers(2**32))
    if rng.random() < 0.5:
        g = gen_complete(n)
    else:
        g = gen_erdos_renyi(n, 0.5, seed)
    j = build_coupling(g, str(family), seed + 1)
    sigma = np.where(rng.random(n) < 0.5, -1.0, 1.0)
    beta, h = rng.uniform(-2, 2), rng.uniform(-2, 2)
    return j, sigma, matvec(j, sigma), beta, h


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


@pytest.fixture(scope="session")
def sk10():
    return build_coupling(gen_complete(10), "gaussian", 2024)


_ACCEPTANCE = {}


@pytest.fixture(scope="session")
def acceptance_log():
    """Criterion number -> (passed, detail); echoed in the terminal summary."""
    return _ACCEPTANCE


def pytest_terminal_summary(terminalreporter):
    if not _ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for k in sorted(_ACCEPTANCE):
        ok, detail = _ACCEPTANCE[k]
        terminalreporter.write_line(f"criterion {k:2d}: {'PASS' if ok else 'FAIL'}  {detail}")
