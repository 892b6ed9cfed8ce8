import numpy as np
import pytest

from greedy_kaczmarz import RowMatrix


@pytest.fixture
def ref():
    """3x2 instance with rows (1,0), (0,1), (1,1), b = (1,2,3), x* = (1,2)."""
    A = RowMatrix(np.array([[1.0, 0.0], [0.0, 1.0], [1.0, 1.0]]))
    return A, np.array([1.0, 2.0, 3.0]), np.array([1.0, 2.0])


def consistent(m, n, seed, sparse=False, density=0.3):
    """Random consistent system (A, b, x*) with x* the min-norm solution via pinv."""
    rng = np.random.default_rng(seed)
    if sparse:
        import scipy.sparse as sp

        M = sp.random(m, n, density=density, random_state=rng, format="csr",
                      data_rvs=rng.standard_normal)
        dense = M.toarray()
        dense[~dense.any(axis=1), 0] = 1.0
        M = sp.csr_matrix(dense)
        A = RowMatrix(M)
    else:
        dense = rng.standard_normal((m, n))
        A = RowMatrix(dense)
    b = dense @ rng.standard_normal(n)
    return A, b, np.linalg.pinv(dense) @ b


def pytest_terminal_summary(terminalreporter):
    try:
        from test_acceptance import VERDICTS
    except ImportError:
        return
    if VERDICTS:
        terminalreporter.section("acceptance criteria")
        for line in VERDICTS:
            terminalreporter.write_line(line)
