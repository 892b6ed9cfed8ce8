import numpy as np
import pytest
import scipy.sparse as sp
from hypothesis import given, settings
from hypothesis import strategies as st

from greedy_kaczmarz import (
    ContractError,
    InconsistentSystemError,
    IterState,
    RowMatrix,
    axpy_row,
    block_ls_apply,
    lambda_min_pos,
    min_norm_solution,
    row_dot,
)

from conftest import consistent


# -- RowMatrix ---------------------------------------------------------------

def test_zero_row_rejected():
    with pytest.raises(ContractError):
        RowMatrix(np.array([[1.0, 0.0], [0.0, 0.0]]))
    with pytest.raises(ContractError):
        RowMatrix(sp.csr_matrix(np.array([[1.0, 2.0], [0.0, 0.0]])))


def test_non_finite_rejected():
    with pytest.raises(ContractError):
        RowMatrix(np.array([[1.0, np.nan]]))


def test_sparse_and_dense_agree():
    rng = np.random.default_rng(3)
    D = rng.standard_normal((7, 5))
    D[D < 0.3] = 0.0
    D[:, 0] = 1.0
    Ad, As = RowMatrix(D), RowMatrix(sp.csr_matrix(D))
    np.testing.assert_allclose(As.row_sq_norms, (D * D).sum(axis=1))
    np.testing.assert_allclose(Ad.row_sq_norms, As.row_sq_norms)
    assert As.frob_sq == pytest.approx(np.sum(D * D))
    x = rng.standard_normal(5)
    np.testing.assert_allclose(As.matvec(x), D @ x)
    np.testing.assert_allclose(As.rows([4, 1]), D[[4, 1]])
    np.testing.assert_allclose(As.gram(), Ad.gram())


def test_from_csr_validates():
    A = RowMatrix.from_csr([0, 1, 2], [0, 1], [2.0, 3.0], (2, 2))
    np.testing.assert_array_equal(A.toarray(), np.diag([2.0, 3.0]))
    with pytest.raises(ContractError):
        RowMatrix.from_csr([0, 1, 2], [0, 5], [2.0, 3.0], (2, 2))


# -- row kernels -------------------------------------------------------------

def test_row_dot_identity():
    assert row_dot(RowMatrix(np.eye(2)), 0, [3.0, 4.0]) == 3.0


def test_row_dot_reference(ref):
    A, _, _ = ref
    assert row_dot(A, 2, [1.5, 1.5]) == 3.0


def test_row_dot_disjoint_sparse_support():
    A = RowMatrix(sp.csr_matrix(np.array([[0.0, 0.0, 1.0], [1.0, 0.0, 0.0]])))
    assert row_dot(A, 0, [5.0, -2.0, 0.0]) == 0.0


def test_row_dot_out_of_range(ref):
    A, _, _ = ref
    with pytest.raises(ContractError):
        row_dot(A, 3, [0.0, 0.0])
    with pytest.raises(ContractError):
        row_dot(A, -1, [0.0, 0.0])


def test_axpy_row_examples(ref):
    A, _, _ = ref
    np.testing.assert_array_equal(axpy_row([0.0, 0.0], 1.5, A, 2), [1.5, 1.5])
    np.testing.assert_array_equal(axpy_row([0.3, 0.7], 0.0, A, 1), [0.3, 0.7])
    np.testing.assert_array_equal(axpy_row([1.0, 2.0], -1.0, RowMatrix(np.eye(2)), 0), [0.0, 2.0])


def test_axpy_row_sparse_touches_stored_only():
    A = RowMatrix(sp.csr_matrix(np.array([[0.0, 2.0, 0.0]])))
    np.testing.assert_array_equal(axpy_row([1.0, 1.0, 1.0], 0.5, A, 0), [1.0, 2.0, 1.0])


# -- spectra -----------------------------------------------------------------

def test_lambda_min_pos_examples(ref):
    A, _, _ = ref
    assert lambda_min_pos(A) == pytest.approx(1.0)
    assert lambda_min_pos(RowMatrix(np.eye(4))) == pytest.approx(1.0)
    assert lambda_min_pos(RowMatrix(np.array([[1.0, 0.0], [2.0, 0.0]]))) == pytest.approx(5.0)


@pytest.mark.parametrize("shape", [(12, 5), (5, 12)])
def test_lambda_min_pos_against_singular_values(shape):
    # oracle: smallest nonzero singular value squared
    rng = np.random.default_rng(11)
    D = rng.standard_normal(shape)
    s = np.linalg.svd(D, compute_uv=False)
    assert lambda_min_pos(RowMatrix(D)) == pytest.approx(s[s > 1e-8].min() ** 2, rel=1e-9)


def test_lemma_lower_bound_on_row_space():
    rng = np.random.default_rng(5)
    D = rng.standard_normal((15, 6))
    D[:, 5] = D[:, 0] + D[:, 1]  # rank deficient
    A = RowMatrix(D)
    lam = lambda_min_pos(A)
    for _ in range(100):
        x = D.T @ rng.standard_normal(15)
        assert np.sum((D @ x) ** 2) >= lam * (x @ x) * (1 - 1e-8)


# -- min-norm oracle ---------------------------------------------------------

def test_min_norm_examples(ref):
    A, b, xs = ref
    np.testing.assert_allclose(min_norm_solution(A, b), xs)
    np.testing.assert_allclose(min_norm_solution(RowMatrix(np.eye(2)), [1.0, 2.0]), [1.0, 2.0])
    np.testing.assert_allclose(min_norm_solution(RowMatrix(np.array([[1.0, 1.0]])), [2.0]), [1.0, 1.0])


def test_min_norm_inconsistent(ref):
    A, _, _ = ref
    with pytest.raises(InconsistentSystemError, match="system inconsistent"):
        min_norm_solution(A, [1.0, 2.0, 4.0])


def test_min_norm_matches_pinv_wide():
    A, b, xs = consistent(8, 20, seed=2)
    np.testing.assert_allclose(min_norm_solution(A, b), xs, rtol=1e-9, atol=1e-12)


# -- block least squares -----------------------------------------------------

def test_block_ls_examples(ref):
    A, _, _ = ref
    np.testing.assert_allclose(block_ls_apply(A, [2], [3.0]), [1.5, 1.5])
    I3 = RowMatrix(np.eye(3))
    np.testing.assert_allclose(block_ls_apply(I3, [0, 2], [4.0, 5.0]), [4.0, 0.0, 5.0])
    P = RowMatrix(np.array([[1.0, 0.0], [2.0, 0.0]]))
    np.testing.assert_allclose(block_ls_apply(P, [0, 1], [1.0, 2.0]), [1.0, 0.0], atol=1e-14)


def test_block_ls_empty(ref):
    A, _, _ = ref
    with pytest.raises(ContractError):
        block_ls_apply(A, [], [])


@settings(max_examples=60, deadline=None)
@given(seed=st.integers(0, 2**32 - 1), size=st.integers(1, 30), sparse=st.booleans())
def test_block_ls_matches_svd_pinv(seed, size, sparse):
    rng = np.random.default_rng(seed)
    D = rng.standard_normal((30, 10))
    if sparse:
        D[rng.random(D.shape) < 0.5] = 0.0
        D[:, 0] += 1.0
    A = RowMatrix(sp.csr_matrix(D) if sparse else D)
    idx = np.sort(rng.choice(30, size=size, replace=False))
    rhs = rng.standard_normal(size)
    # oracle: full SVD pseudoinverse
    U, s, Vt = np.linalg.svd(D[idx], full_matrices=False)
    keep = s > 1e-12 * s[0]
    oracle = Vt[keep].T @ ((U[:, keep].T @ rhs) / s[keep])
    z = block_ls_apply(A, idx, rhs)
    assert np.linalg.norm(z - oracle) <= 1e-9 * max(1.0, np.linalg.norm(oracle))


def test_block_ls_consistent_subsystem_exact():
    rng = np.random.default_rng(8)
    D = rng.standard_normal((12, 4))
    idx = np.arange(12)
    rhs = D @ rng.standard_normal(4)
    z = block_ls_apply(RowMatrix(D), idx, rhs)
    assert np.linalg.norm(D @ z - rhs) <= 1e-10 * (1 + np.linalg.norm(rhs))


# -- IterState ---------------------------------------------------------------

def test_iterstate_start_and_drift(ref):
    A, b, _ = ref
    s = IterState.start(A, b)
    np.testing.assert_array_equal(s.r, b)
    assert s.k == 0 and s.residual_drift(A, b) == 0.0
    c = s.copy()
    c.x[0] = 9.0
    assert s.x[0] == 0.0
