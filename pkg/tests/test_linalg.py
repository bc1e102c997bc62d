import numpy as np
import pytest
import scipy.linalg
from hypothesis import given, settings, strategies as st
from hypothesis.extra.numpy import arrays

from stekopt.linalg import (
    NearSingularError,
    as_symmetric,
    householder_tridiagonalize,
    factor_sym,
    is_positive_definite,
    solve_sym,
    sym_eig,
    sym_eigvals,
    tridiagonal_ql,
)


def random_sym(rng, n):
    A = rng.standard_normal((n, n))
    return 0.5 * (A + A.T)


@pytest.mark.parametrize("n", [1, 2, 3, 4, 7, 20, 60])
def test_eigenpairs_match_lapack(rng, n):
    A = random_sym(rng, n)
    w, V = sym_eig(A)
    np.testing.assert_allclose(w, np.linalg.eigvalsh(A), atol=1e-12 * (1 + np.abs(w).max()))
    assert np.all(np.diff(w) >= 0)
    np.testing.assert_allclose(A @ V, V * w, atol=1e-11)
    np.testing.assert_allclose(V.T @ V, np.eye(n), atol=1e-12)


def test_f1_quadratic_part_spectrum():
    w = sym_eigvals([[-2, -0.35], [-0.35, -4]])
    # the published smallest eigenvalue is -4.059481005021
    assert w[0] == pytest.approx(-4.059481005021, abs=1e-12)
    assert w[1] == pytest.approx(-1.94051899, abs=1e-8)


def test_qing3_quadratic_part_spectrum():
    B = [[-2, -0.35, -0.35], [-0.35, -4, -0.35], [-0.35, -0.35, -6]]
    assert sym_eigvals(B)[0] == pytest.approx(-6.099604966650, abs=1e-11)


def test_tridiagonal_form_is_similar(rng):
    A = random_sym(rng, 9)
    diag, off, Q = householder_tridiagonalize(A)
    T = np.diag(diag) + np.diag(off, 1) + np.diag(off, -1)
    np.testing.assert_allclose(Q @ T @ Q.T, A, atol=1e-12)
    np.testing.assert_allclose(Q.T @ Q, np.eye(9), atol=1e-13)


def test_ql_on_known_tridiagonal():
    # 1-D Laplacian: eigenvalues 2 - 2 cos(k pi / (n + 1))
    n = 12
    w = tridiagonal_ql(np.full(n, 2.0), np.full(n - 1, -1.0))
    k = np.arange(1, n + 1)
    np.testing.assert_allclose(np.sort(w), np.sort(2 - 2 * np.cos(k * np.pi / (n + 1))), atol=1e-13)


def test_lapack_method_agrees(rng):
    A = random_sym(rng, 15)
    np.testing.assert_allclose(sym_eigvals(A), sym_eigvals(A, method="lapack"), atol=1e-12)
    with pytest.raises(ValueError):
        sym_eigvals(A, method="jacobi")


def test_diagonal_and_repeated_eigenvalues():
    w, V = sym_eig(np.diag([3.0, 1.0, 3.0, 2.0]))
    np.testing.assert_allclose(w, [1, 2, 3, 3])
    np.testing.assert_allclose(np.abs(V.T @ V), np.eye(4), atol=1e-14)


def test_as_symmetric_rejects_and_repairs():
    M = [[1.0, 2.0], [2.5, 1.0]]
    with pytest.raises(ValueError, match="not symmetric"):
        as_symmetric(M)
    np.testing.assert_allclose(as_symmetric(M, symmetrize=True), [[1, 2.25], [2.25, 1]])
    with pytest.raises(ValueError, match="square"):
        as_symmetric(np.ones((2, 3)))


def test_solve_pd_matches_scipy(rng):
    A = random_sym(rng, 8)
    A = A @ A.T + 8 * np.eye(8)
    b = rng.standard_normal(8)
    sol = solve_sym(A, b)
    assert sol.factorization == "cholesky" and sol.positive_definite
    np.testing.assert_allclose(sol.x, scipy.linalg.solve(A, b, assume_a="pos"), rtol=1e-12)
    cond1 = np.linalg.norm(A, 1) * np.linalg.norm(np.linalg.inv(A), 1)
    assert 0.1 / cond1 < sol.rcond <= 10 / cond1


def test_solve_indefinite_falls_back(rng):
    A = np.array([[1.0, 2.0], [2.0, 1.0]])
    sol = solve_sym(A, [1.0, 0.0])
    assert sol.factorization == "ldl" and not sol.positive_definite
    np.testing.assert_allclose(A @ sol.x, [1, 0], atol=1e-14)


def test_near_singular_rejected():
    A = np.array([[1.0, 1.0], [1.0, 1.0 + 1e-14]])
    with pytest.raises(NearSingularError) as exc:
        solve_sym(A, [1.0, 1.0])
    assert exc.value.rcond < 1e-12
    # disabling the check still returns something
    assert solve_sym(A, [1.0, 1.0], rcond_threshold=None).rcond < 1e-12


def test_is_positive_definite():
    assert is_positive_definite(np.eye(3))
    assert not is_positive_definite(np.diag([1.0, 0.0]))
    assert not is_positive_definite([[1.0, 2.0], [2.0, 1.0]])


sym_matrices = st.integers(1, 8).flatmap(
    lambda n: arrays(np.float64, (n, n), elements=st.floats(-10, 10, allow_nan=False, allow_subnormal=False))
).map(lambda A: 0.5 * (A + A.T))


@settings(max_examples=60, deadline=None)
@given(sym_matrices)
def test_trace_and_residual_property(A):
    w, V = sym_eig(A)
    scale = 1.0 + np.abs(A).max()
    assert abs(w.sum() - np.trace(A)) <= 1e-11 * scale * A.shape[0]
    assert np.abs(A @ V - V * w).max() <= 1e-11 * scale * A.shape[0]


def test_ql_deflates_entries_near_underflow():
    tiny = 3.21260558e-247
    A = np.full((4, 4), tiny)
    A[0, 1] = A[1, 0] = 0.5
    w, V = sym_eig(A)
    assert np.allclose(w, [-0.5, 0.0, 0.0, 0.5], atol=1e-15)
    assert np.abs(A @ V - V * w).max() <= 1e-15


def test_householder_column_near_underflow():
    M = np.array([[4.0, 1.0, 2.0], [1.0, 3.0, 1.0], [2.0, 1.0, 0.5]])
    A = 1e-300 * M
    w, V = sym_eig(A)
    assert np.allclose(w * 1e300, np.linalg.eigvalsh(M), rtol=1e-12)
    assert np.abs(A @ V - V * w).max() <= 1e-14 * 1e-300
    assert np.abs(V.T @ V - np.eye(3)).max() <= 1e-14


def test_mixed_scale_matrices():
    rng = np.random.default_rng(3)
    for _ in range(500):
        n = int(rng.integers(2, 9))
        A = rng.uniform(-10, 10, (n, n)) * 10.0 ** rng.integers(-300, 3, (n, n))
        A = 0.5 * (A + A.T)
        w, V = sym_eig(A)
        s = np.abs(A).max()
        assert np.abs(A @ V - V * w).max() <= 1e-11 * s * n
        assert np.abs(V.T @ V - np.eye(n)).max() <= 1e-12 * n


def test_factor_reused_for_several_right_hand_sides(rng):
    for M in ([[4.0, 1.0], [1.0, 3.0]], [[1.0, 2.0], [2.0, 1.0]]):
        fac = factor_sym(M)
        assert fac.positive_definite == is_positive_definite(M)
        for _ in range(3):
            b = rng.standard_normal(2)
            assert np.allclose(fac.solve(b).x, np.linalg.solve(M, b), rtol=1e-13)
    singular = factor_sym([[1.0, 1.0], [1.0, 1.0]])
    with pytest.raises(NearSingularError):
        singular.solve([1.0, 0.0])
