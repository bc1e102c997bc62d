"""Dense symmetric linear algebra used by the convexification and trajectory code.

Eigenvalues come from Householder tridiagonalization followed by the implicit
QL iteration; linear solves go through LAPACK Cholesky with a Bunch-Kaufman
LDL^T fallback and report a 1-norm reciprocal condition estimate.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.linalg import lapack

__all__ = [
    "EigenConvergenceError",
    "NearSingularError",
    "SymFactor",
    "SymSolve",
    "as_symmetric",
    "householder_tridiagonalize",
    "tridiagonal_ql",
    "sym_eig",
    "sym_eigvals",
    "factor_sym",
    "solve_sym",
    "is_positive_definite",
]

DEFAULT_RCOND_THRESHOLD = 1e-12
_MAX_QL_ITERATIONS = 60


class EigenConvergenceError(RuntimeError):
    """The QL iteration did not converge within its iteration cap."""


class NearSingularError(np.linalg.LinAlgError):
    """A symmetric solve was rejected because the matrix is too ill-conditioned."""

    def __init__(self, rcond: float, threshold: float):
        self.rcond = float(rcond)
        self.threshold = float(threshold)
        super().__init__(f"matrix is near-singular: rcond={rcond:.3e} < {threshold:.1e}")


def as_symmetric(M, *, symmetrize: bool = False, tol: float = 1e-12, name: str = "matrix") -> np.ndarray:
    """Return `M` as a float square array, checking (or enforcing) symmetry.

    With ``symmetrize=True`` the average ``(M + M.T) / 2`` is returned instead of
    rejecting an asymmetric input.
    """
    A = np.array(M, dtype=float)
    if A.ndim != 2 or A.shape[0] != A.shape[1] or A.shape[0] < 1:
        raise ValueError(f"{name} must be a non-empty square matrix, got shape {A.shape}")
    if symmetrize:
        return 0.5 * (A + A.T)
    scale = 1.0 + np.abs(A).max()
    if np.abs(A - A.T).max() > tol * scale:
        raise ValueError(f"{name} is not symmetric (max |M - M^T| = {np.abs(A - A.T).max():.3e})")
    return A


def householder_tridiagonalize(M) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Reduce symmetric `M` to tridiagonal form ``Q^T M Q = T``.

    Returns the diagonal, the sub-diagonal (length n-1) and the orthogonal Q.
    """
    A = np.array(M, dtype=float)
    n = A.shape[0]
    Q = np.eye(n)
    for k in range(n - 2):
        x = A[k + 1:, k]
        scale = np.abs(x).max()
        if scale == 0.0 or np.abs(x[1:]).max(initial=0.0) == 0.0:
            continue
        # the reflector is invariant under scaling v; normalizing avoids under/overflow
        v = x / scale
        head = -math.copysign(np.linalg.norm(v), v[0])
        v[0] -= head
        head *= scale
        beta = 2.0 / (v @ v)
        A22 = A[k + 1:, k + 1:]
        p = beta * (A22 @ v)
        w = p - (0.5 * beta * (p @ v)) * v
        A22 -= np.outer(v, w) + np.outer(w, v)
        A[k + 1:, k] = 0.0
        A[k, k + 1:] = 0.0
        A[k + 1, k] = A[k, k + 1] = head
        Qs = Q[:, k + 1:]
        Qs -= beta * np.outer(Qs @ v, v)
    diag = np.diag(A).copy()
    off = np.diag(A, -1).copy()
    return diag, off, Q


def tridiagonal_ql(diag, off, Z=None, *, max_iter: int = _MAX_QL_ITERATIONS):
    """Implicit-shift QL on a symmetric tridiagonal matrix.

    `Z` (if given) is updated in place with the accumulated rotations, so
    passing the Q from :func:`householder_tridiagonalize` yields eigenvectors
    of the original matrix.  Eigenvalues are returned unsorted.
    """
    d = np.array(diag, dtype=float)
    n = d.size
    e = np.zeros(n)
    e[: n - 1] = off
    eps = np.finfo(float).eps
    # absolute floor: without it entries near underflow never deflate
    tiny = eps * eps * max(np.abs(d).max(initial=0.0), np.abs(e).max(initial=0.0))
    for l in range(n):
        iters = 0
        while True:
            m = l
            while m < n - 1:
                dd = abs(d[m]) + abs(d[m + 1])
                if abs(e[m]) <= eps * dd or abs(e[m]) <= tiny:
                    break
                m += 1
            if m == l:
                break
            iters += 1
            if iters > max_iter:
                raise EigenConvergenceError(
                    f"QL iteration failed to converge for eigenvalue {l} of a {n}x{n} tridiagonal matrix"
                )
            g = (d[l + 1] - d[l]) / (2.0 * e[l])
            r = math.hypot(g, 1.0)
            g = d[m] - d[l] + e[l] / (g + math.copysign(r, g))
            s = c = 1.0
            p = 0.0
            i = m - 1
            underflow = False
            while i >= l:
                f = s * e[i]
                b = c * e[i]
                r = math.hypot(f, g)
                e[i + 1] = r
                if r == 0.0:
                    d[i + 1] -= p
                    e[m] = 0.0
                    underflow = True
                    break
                s = f / r
                c = g / r
                g = d[i + 1] - p
                r = (d[i] - g) * s + 2.0 * c * b
                p = s * r
                d[i + 1] = g + p
                g = c * r - b
                if Z is not None:
                    zi1 = Z[:, i + 1].copy()
                    Z[:, i + 1] = s * Z[:, i] + c * zi1
                    Z[:, i] = c * Z[:, i] - s * zi1
                i -= 1
            if underflow:
                continue
            d[l] -= p
            e[l] = g
            e[m] = 0.0
    return d


def sym_eig(M, *, method: str = "ql") -> tuple[np.ndarray, np.ndarray]:
    """Eigen-decomposition of a symmetric matrix, eigenvalues ascending.

    ``method="ql"`` runs the in-package tridiagonal QL solver; ``"lapack"``
    delegates to ``numpy.linalg.eigh``.
    """
    A = as_symmetric(M)
    if method == "lapack":
        return np.linalg.eigh(A)
    if method != "ql":
        raise ValueError(f"unknown eigen method {method!r}")
    if A.shape[0] == 1:
        return A[0].copy(), np.ones((1, 1))
    diag, off, Q = householder_tridiagonalize(A)
    w = tridiagonal_ql(diag, off, Q)
    order = np.argsort(w)
    return w[order], Q[:, order]


def sym_eigvals(M, *, method: str = "ql") -> np.ndarray:
    """Ascending eigenvalues of a symmetric matrix."""
    A = as_symmetric(M)
    if method == "lapack":
        return np.linalg.eigvalsh(A)
    if method != "ql":
        raise ValueError(f"unknown eigen method {method!r}")
    if A.shape[0] == 1:
        return A[0].copy()
    diag, off, _ = householder_tridiagonalize(A)
    return np.sort(tridiagonal_ql(diag, off))


@dataclass(frozen=True)
class SymSolve:
    x: np.ndarray
    rcond: float
    factorization: str  # "cholesky" or "ldl"

    @property
    def positive_definite(self) -> bool:
        return self.factorization == "cholesky"


@dataclass(frozen=True, eq=False)
class SymFactor:
    """A Cholesky or Bunch-Kaufman factorization with its 1-norm rcond estimate."""

    factorization: str  # "cholesky" or "ldl"
    rcond: float
    _lu: np.ndarray
    _ipiv: np.ndarray | None = None

    @property
    def positive_definite(self) -> bool:
        return self.factorization == "cholesky"

    def solve(self, b, *, rcond_threshold: float | None = DEFAULT_RCOND_THRESHOLD) -> SymSolve:
        if rcond_threshold is not None and not self.rcond >= rcond_threshold:
            raise NearSingularError(self.rcond, rcond_threshold)
        if self.rcond == 0.0:
            raise NearSingularError(0.0, 0.0 if rcond_threshold is None else rcond_threshold)
        rhs = np.asarray(b, dtype=float)
        if self.positive_definite:
            x, _ = lapack.dpotrs(self._lu, rhs, lower=1)
        else:
            x2, _ = lapack.dsytrs(self._lu, self._ipiv, rhs.reshape(len(rhs), -1), lower=1)
            x = x2.reshape(rhs.shape)
        return SymSolve(x=x, rcond=self.rcond, factorization=self.factorization)


def factor_sym(M) -> SymFactor:
    """Factor symmetric `M`: Cholesky when it succeeds, pivoted LDL^T otherwise.  Never raises."""
    A = np.asarray(M, dtype=float)
    anorm = np.abs(A).sum(axis=0).max()
    c, info = lapack.dpotrf(A, lower=1, clean=0)
    if info == 0:
        rcond, _ = lapack.dpocon(c, anorm, uplo="L")
        fac = SymFactor("cholesky", float(rcond), c)
    else:
        lu, ipiv, info = lapack.dsytrf(A, lower=1)
        rcond = 0.0 if info > 0 else lapack.dsycon(lu, ipiv, anorm, lower=1)[0]
        fac = SymFactor("ldl", float(rcond), lu, ipiv)
    if anorm == 0.0:
        fac = SymFactor(fac.factorization, 0.0, fac._lu, fac._ipiv)
    return fac


def solve_sym(M, b, *, rcond_threshold: float | None = DEFAULT_RCOND_THRESHOLD) -> SymSolve:
    """Solve ``M x = b`` for symmetric `M`.

    Cholesky is tried first; an indefinite matrix falls back to the pivoted
    LDL^T factorization.  Raises :class:`NearSingularError` when the 1-norm
    rcond estimate drops below `rcond_threshold` (pass ``None`` to disable).
    """
    return factor_sym(M).solve(b, rcond_threshold=rcond_threshold)


def is_positive_definite(M) -> bool:
    """Cholesky-based positive-definiteness test."""
    _, info = lapack.dpotrf(np.asarray(M, dtype=float), lower=1, clean=0)
    return info == 0
