r"""Dense linear-algebra kernel.

Thin SVD with a relative rank cut-off, Eckart-Young truncation, singular
value soft-thresholding (the proximal map of the nuclear norm), and the
projections / pseudo-inverse built from the thin SVD of a design matrix.

Matrices are plain 2-d ``numpy.ndarray`` objects of dtype float64. Every
public routine validates its input with :func:`as_matrix`.
"""

from dataclasses import dataclass

import numpy as np

from .exceptions import InputError

__all__ = [
    "ThinSVD",
    "as_matrix",
    "default_rank_tol",
    "thin_svd",
    "numerical_rank",
    "truncate_rank",
    "svt",
    "project_colspace",
    "project_rowspace",
    "pinv_apply",
    "op_norm",
    "nuclear_norm",
]


def as_matrix(M, name="matrix"):
    """Return ``M`` as a finite float64 2-d array with nonzero dimensions."""
    A = np.asarray(M, dtype=np.float64)
    if A.ndim != 2:
        raise InputError(f"{name} must be 2-dimensional, got ndim={A.ndim}")
    if A.shape[0] == 0 or A.shape[1] == 0:
        raise InputError(f"{name} must have nonzero dimensions, got {A.shape}")
    if not np.all(np.isfinite(A)):
        raise InputError(f"{name} contains NaN or Inf entries")
    return A


def default_rank_tol(shape):
    """Relative singular-value cut-off used when none is given."""
    return 1e-10 * max(shape)


@dataclass(frozen=True)
class ThinSVD:
    """Factorization ``M = U @ diag(s) @ V.T`` over the retained singular values.

    ``U`` is m x k, ``V`` is n x k, both with orthonormal columns, and ``s``
    is strictly positive and nonincreasing. ``k = 0`` encodes the zero matrix.
    """

    U: np.ndarray
    s: np.ndarray
    V: np.ndarray

    @property
    def rank(self):
        return self.s.shape[0]

    @property
    def shape(self):
        return self.U.shape[0], self.V.shape[0]

    def reconstruct(self):
        return (self.U * self.s) @ self.V.T


def thin_svd(M, tol=None):
    """Thin SVD of ``M`` keeping singular values ``s_k > tol * s_1``.

    Parameters
    ----------
    M : array_like, shape (m, n)
    tol : float, optional
        Relative threshold. Defaults to ``1e-10 * max(m, n)``.

    Returns
    -------
    ThinSVD
        Empty (k = 0) when ``M`` is the zero matrix.
    """
    M = as_matrix(M)
    if tol is None:
        tol = default_rank_tol(M.shape)
    if tol < 0:
        raise InputError("tol must be nonnegative")
    U, s, Vt = np.linalg.svd(M, full_matrices=False)
    if s.size == 0 or s[0] == 0.0:
        k = 0
    else:
        k = int(np.count_nonzero(s > tol * s[0]))
    return ThinSVD(U=U[:, :k].copy(), s=s[:k].copy(), V=Vt[:k].T.copy())


def numerical_rank(svd):
    """Number of singular values retained by :func:`thin_svd`."""
    return svd.rank


def truncate_rank(M, r):
    """Best rank-``r`` approximation of ``M`` in Frobenius norm."""
    M = as_matrix(M)
    r = _check_count(r, "r")
    if r == 0:
        return np.zeros_like(M)
    U, s, Vt = np.linalg.svd(M, full_matrices=False)
    if r >= s.size:
        return M.copy()
    return (U[:, :r] * s[:r]) @ Vt[:r]


def svt(M, tau, return_singular_values=False):
    r"""Singular value soft-thresholding.

    Returns ``U diag(max(s - tau, 0)) V^T``, the minimizer over ``A`` of
    ``0.5 * ||M - A||_F^2 + tau * ||A||_*``.

    With ``return_singular_values=True`` the shrunk positive singular values
    are returned as well, which gives the nuclear norm of the output for free.
    """
    M = as_matrix(M)
    tau = float(tau)
    if not np.isfinite(tau) or tau < 0:
        raise InputError(f"tau must be a finite nonnegative number, got {tau}")
    U, s, Vt = np.linalg.svd(M, full_matrices=False)
    shrunk = s - tau
    k = int(np.count_nonzero(shrunk > 0))
    out = (U[:, :k] * shrunk[:k]) @ Vt[:k]
    if return_singular_values:
        return out, shrunk[:k]
    return out


def _check_svd_rows(svdX, M, which, name):
    M = as_matrix(M, name)
    rows = svdX.U.shape[0] if which == "U" else svdX.V.shape[0]
    if M.shape[0] != rows:
        raise InputError(
            f"{name} has {M.shape[0]} rows, expected {rows} to match the design"
        )
    return M


def project_colspace(svdX, M):
    """Orthogonal projection of the columns of ``M`` onto col(X): ``U U^T M``."""
    M = _check_svd_rows(svdX, M, "U", "M")
    return svdX.U @ (svdX.U.T @ M)


def project_rowspace(svdX, A):
    """Orthogonal projection of the columns of ``A`` onto the range of X^T.

    Computed as ``V V^T A``; it leaves ``X @ A`` unchanged and never
    increases any singular value of ``A``.
    """
    A = _check_svd_rows(svdX, A, "V", "A")
    return svdX.V @ (svdX.V.T @ A)


def pinv_apply(svdX, M):
    """Apply the Moore-Penrose pseudo-inverse of X to ``M`` (n x T)."""
    M = _check_svd_rows(svdX, M, "U", "M")
    return svdX.V @ ((svdX.U.T @ M) / svdX.s[:, None])


def op_norm(M):
    """Largest singular value (0 for the zero matrix)."""
    M = as_matrix(M)
    return float(np.linalg.norm(M, 2))


def nuclear_norm(M):
    """Sum of singular values."""
    M = as_matrix(M)
    return float(np.linalg.svd(M, compute_uv=False).sum())


def _check_count(r, name):
    if isinstance(r, bool) or int(r) != r:
        raise InputError(f"{name} must be an integer, got {r!r}")
    r = int(r)
    if r < 0:
        raise InputError(f"{name} must be nonnegative, got {r}")
    return r
