import numpy as np
import pytest
import scipy.sparse as sp
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from nsaug.errors import DimensionMismatch, SingularMatrix
from nsaug.linalg import SparseLU, dense_solve, sparse_solve, thin_svd


def test_sparse_identity_and_diagonal():
    b = np.array([3.0, -1.0, 2.0])
    np.testing.assert_array_equal(sparse_solve(sp.identity(3), b), b)
    x = sparse_solve(sp.diags([2.0, 4.0]), np.array([2.0, 8.0]))
    np.testing.assert_allclose(x, [1.0, 2.0])


def test_sparse_random_diagonally_dominant():
    rng = np.random.default_rng(3)
    A = sp.random(50, 50, density=0.1, random_state=4, format="csr")
    A = A + sp.diags(np.abs(A).sum(axis=1).A1 + 1.0)
    b = rng.standard_normal(50)
    x = sparse_solve(A, b)
    assert np.linalg.norm(A @ x - b) <= 1e-10 * np.linalg.norm(b)


def test_sparse_zero_rhs_gives_zero():
    A = sp.diags([1.0, 2.0, 3.0]) + sp.eye(3, k=1)
    np.testing.assert_array_equal(sparse_solve(A, np.zeros(3)), 0.0)


def test_sparse_singular_raises():
    A = sp.csr_matrix(np.array([[1.0, 1.0], [1.0, 1.0]]))
    with pytest.raises(SingularMatrix):
        sparse_solve(A, np.array([1.0, 2.0]))


def test_sparse_dimension_mismatch():
    with pytest.raises(DimensionMismatch):
        sparse_solve(sp.identity(3), np.ones(4))
    with pytest.raises(DimensionMismatch):
        SparseLU(sp.csr_matrix(np.ones((2, 3))))


def test_saddle_point_with_zero_block():
    # zero diagonal needs pivoting
    A = sp.csr_matrix(np.array([[2.0, 0.0, 1.0], [0.0, 2.0, 1.0], [1.0, 1.0, 0.0]]))
    b = np.array([1.0, 3.0, 0.0])
    x = sparse_solve(A, b)
    np.testing.assert_allclose(A @ x, b, atol=1e-14)


def test_svd_examples():
    r = thin_svd(np.diag([3.0, 1.0]))
    np.testing.assert_allclose(r.singular_values, [3.0, 1.0])
    u, v = np.array([1.0, 2.0, 2.0]) / 3, np.array([1.0, -1.0]) / np.sqrt(2)
    r = thin_svd(6.0 * np.outer(u, v))
    np.testing.assert_allclose(r.singular_values, [6.0, 0.0], atol=1e-14)
    assert abs(abs(r.U[:, 0] @ u) - 1) < 1e-14


def test_svd_duplicate_columns_rank():
    x = np.random.default_rng(0).standard_normal(20)
    s = thin_svd(np.column_stack([x, x])).singular_values
    assert s[1] <= 1e-14 * s[0]


@settings(max_examples=40, deadline=None)
@given(arrays(float, st.tuples(st.integers(1, 30), st.integers(1, 8)), elements=st.floats(-10, 10)))
def test_svd_invariants(X):
    r = thin_svd(X)
    k = min(X.shape)
    assert r.U.shape == (X.shape[0], k) and r.singular_values.shape == (k,)
    assert np.all(np.diff(r.singular_values) <= 1e-12 * max(1.0, r.singular_values[0]))
    assert np.all(r.singular_values >= 0)
    recon = (r.U * r.singular_values) @ r.V.T
    assert np.linalg.norm(recon - X) <= 1e-10 * max(1.0, np.linalg.norm(X))
    keep = r.singular_values > 1e-10 * max(1.0, r.singular_values[0])
    G = r.U[:, keep].T @ r.U[:, keep]
    np.testing.assert_allclose(G, np.eye(keep.sum()), atol=1e-10)


def test_dense_solve_examples():
    np.testing.assert_allclose(dense_solve(np.eye(2), [1.0, 2.0]), [1.0, 2.0])
    P = np.array([[0.0, 1.0], [1.0, 0.0]])
    np.testing.assert_allclose(dense_solve(P, [1.0, 2.0]), [2.0, 1.0])
    rng = np.random.default_rng(1)
    A = rng.standard_normal((20, 20)) + 20 * np.eye(20)
    b = rng.standard_normal(20)
    assert np.linalg.norm(A @ dense_solve(A, b) - b) <= 1e-12 * np.linalg.norm(b) * 20


def test_dense_singular_raises():
    with pytest.raises(SingularMatrix):
        dense_solve(np.array([[1.0, 2.0], [2.0, 4.0]]), [1.0, 1.0])
