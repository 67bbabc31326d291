r"""Low-rank estimators for the multivariate model ``Y = X A0 + E``.

Two families are provided:

* reduced-rank least squares ``A_r`` (exact, via projection onto col(X),
  Eckart-Young truncation and the pseudo-inverse), with rank selection by a
  penalized criterion;
* the nuclear-norm-penalized estimator

  .. math::
      \hat A_\lambda \in \arg\min_A \|Y - XA\|_F^2 + \lambda \|A\|_*

  computed by proximal gradient descent with optional Nesterov momentum
  (FISTA with objective-based restart), plus its closed form for designs with
  orthonormal columns.
"""

import math
from dataclasses import dataclass, field, replace

import numpy as np

from .exceptions import InputError, PreconditionError
from .matlin import (
    as_matrix,
    pinv_apply,
    project_colspace,
    svt,
    thin_svd,
    truncate_rank,
)

__all__ = [
    "FitResult",
    "SolverOptions",
    "RankSelection",
    "fit_reduced_rank",
    "fit_reduced_rank_path",
    "select_rank",
    "nnp_objective",
    "fit_nnp",
    "fit_nnp_orthogonal",
    "default_penalty",
    "default_log_penalty",
]

# rss below this fraction of ||Y||^2 counts as an exact fit in the log criterion
EXACT_FIT_RTOL = 1e-24


@dataclass(frozen=True)
class FitResult:
    A_hat: np.ndarray
    fitted: np.ndarray
    rss: float
    nuclear_norm: float
    rank_hat: int
    iterations: int = 0
    converged: bool = True
    objective: float = float("nan")
    history: tuple = field(default=(), repr=False)

    def diagnostics(self):
        return {
            "rss": self.rss,
            "nuclear_norm": self.nuclear_norm,
            "rank_hat": self.rank_hat,
            "iterations": self.iterations,
            "converged": self.converged,
        }


@dataclass(frozen=True)
class SolverOptions:
    """Settings for :func:`fit_nnp`.

    ``step_scale`` multiplies the safe step ``1 / (2 sigma_1(X)^2)``.
    """

    max_iterations: int = 50000
    rel_tol: float = 1e-10
    acceleration: bool = True
    step_scale: float = 1.0

    def __post_init__(self):
        if int(self.max_iterations) != self.max_iterations or self.max_iterations < 1:
            raise InputError("max_iterations must be an integer >= 1")
        if not self.rel_tol > 0:
            raise InputError("rel_tol must be positive")
        if not 0 < self.step_scale <= 1:
            raise InputError("step_scale must lie in (0, 1]")


@dataclass(frozen=True)
class RankSelection:
    rank: int
    criterion: str
    values: np.ndarray
    exact_fit: bool = False


def _check_xy(X, Y):
    X = as_matrix(X, "X")
    Y = as_matrix(Y, "Y")
    if X.shape[0] != Y.shape[0]:
        raise InputError(
            f"X and Y must have the same number of rows, got {X.shape[0]} and {Y.shape[0]}"
        )
    return X, Y


def _finish(X, Y, A, **kwargs):
    fitted = X @ A
    rss = float(np.sum((Y - fitted) ** 2))
    if np.any(A):
        svdA = thin_svd(A)
        nuc, rank = float(svdA.s.sum()), svdA.rank
    else:
        nuc, rank = 0.0, 0
    kwargs.setdefault("objective", rss)
    return FitResult(A_hat=A, fitted=fitted, rss=rss, nuclear_norm=nuc, rank_hat=rank, **kwargs)


def fit_reduced_rank(X, Y, r, svdX=None):
    """Least squares over coefficient matrices of rank at most ``r``.

    The minimizer is ``X^+ [P_X Y]_r`` where ``P_X`` projects onto col(X)
    and ``[.]_r`` keeps the top ``r`` singular triplets.
    """
    X, Y = _check_xy(X, Y)
    p, T = X.shape[1], Y.shape[1]
    if isinstance(r, bool) or int(r) != r or not 0 <= r <= min(p, T):
        raise InputError(f"r must be an integer in [0, {min(p, T)}], got {r!r}")
    r = int(r)
    if svdX is None:
        svdX = thin_svd(X)
    if r == 0 or svdX.rank == 0:
        A = np.zeros((p, T))
    else:
        A = pinv_apply(svdX, truncate_rank(project_colspace(svdX, Y), r))
    return _finish(X, Y, A)


def fit_reduced_rank_path(X, Y):
    """Reduced-rank fits for every ``r = 0, ..., min(p, T)``.

    The SVD of the projected response is computed once and reused.
    """
    X, Y = _check_xy(X, Y)
    p, T = X.shape[1], Y.shape[1]
    svdX = thin_svd(X)
    fits = []
    if svdX.rank == 0:
        fits = [_finish(X, Y, np.zeros((p, T)))] * (min(p, T) + 1)
        return fits
    PY = project_colspace(svdX, Y)
    U, s, Vt = np.linalg.svd(PY, full_matrices=False)
    for r in range(min(p, T) + 1):
        k = min(r, s.size)
        A = pinv_apply(svdX, (U[:, :k] * s[:k]) @ Vt[:k])
        fits.append(_finish(X, Y, A))
    return fits


def default_penalty(T, q, c=1.1):
    """Known-variance penalty ``pen(r) = c * r * (sqrt(T) + sqrt(q))**2``.

    A placeholder of the right order of magnitude, not a tuned constant.
    """
    scale = c * (math.sqrt(T) + math.sqrt(q)) ** 2
    return lambda r: scale * r


def default_log_penalty(n, T, q, c=1.1):
    """Log-form penalty ``pen'(r) = -log(1 - c r (sqrt(T)+sqrt(q))^2 / (n T))``.

    Minimizing ``log(rss) + pen'(r)`` then amounts to minimizing
    ``rss / (nT - c r (sqrt(T)+sqrt(q))^2)``. Returns ``inf`` once the
    denominator is no longer positive. Placeholder, like
    :func:`default_penalty`.
    """
    scale = c * (math.sqrt(T) + math.sqrt(q)) ** 2 / (n * T)

    def pen(r):
        x = scale * r
        return math.inf if x >= 1 else -math.log1p(-x)

    return pen


def select_rank(path, criterion="crit", penalty=None, sigma=None):
    """Choose ``r`` minimizing a penalized criterion over a reduced-rank path.

    Parameters
    ----------
    path : sequence of FitResult
        Element ``r`` is the rank-``r`` fit, as returned by
        :func:`fit_reduced_rank_path`.
    criterion : {"crit", "crit-log"}
        ``"crit"``: ``rss(r) + pen(r) * sigma**2`` (requires ``sigma > 0``).
        ``"crit-log"``: ``log(rss(r)) + pen(r)``.
    penalty : callable
        ``r -> float``.
    sigma : float, optional

    Returns
    -------
    RankSelection
        Ties go to the smallest ``r``. Under ``"crit-log"``, if some fit is
        exact (zero residual) the smallest such ``r`` is returned with
        ``exact_fit=True`` since the logarithm is undefined there.
    """
    if len(path) == 0:
        raise InputError("empty path")
    if penalty is None:
        raise InputError("a penalty function is required")
    rss = np.array([f.rss for f in path], dtype=np.float64)
    pen = np.array([float(penalty(r)) for r in range(len(path))])
    if criterion == "crit":
        if sigma is None or not sigma > 0:
            raise InputError("the known-variance criterion needs sigma > 0")
        values = rss + pen * sigma**2
    elif criterion == "crit-log":
        floor = EXACT_FIT_RTOL * max(rss.max(), 0.0)
        exact = np.flatnonzero(rss <= floor)
        with np.errstate(divide="ignore"):
            values = np.where(rss > floor, np.log(np.maximum(rss, floor)) + pen, -np.inf)
        if exact.size:
            return RankSelection(int(exact[0]), criterion, values, exact_fit=True)
    else:
        raise InputError(f"unknown criterion {criterion!r}")
    return RankSelection(int(np.argmin(values)), criterion, values)


def nnp_objective(X, Y, A, lam):
    """``||Y - X A||_F^2 + lam * ||A||_*``."""
    X, Y = _check_xy(X, Y)
    A = as_matrix(A, "A")
    if A.shape != (X.shape[1], Y.shape[1]):
        raise InputError(f"A must have shape {(X.shape[1], Y.shape[1])}, got {A.shape}")
    lam = _check_lambda(lam)
    rss = float(np.sum((Y - X @ A) ** 2))
    if lam == 0:
        return rss
    return rss + lam * float(np.linalg.svd(A, compute_uv=False).sum())


def _check_lambda(lam):
    lam = float(lam)
    if not np.isfinite(lam) or lam < 0:
        raise InputError(f"lambda must be finite and nonnegative, got {lam}")
    return lam


def fit_nnp(X, Y, lam, opts=None):
    """Nuclear-norm-penalized least squares by proximal gradient.

    Iterates ``A <- svt(Z - t * 2 X^T (X Z - Y), t * lam)`` from ``A = 0``
    with step ``t = step_scale / (2 sigma_1(X)^2)``. With acceleration, ``Z``
    is the usual FISTA extrapolation; whenever an accelerated step would
    increase the objective it is discarded and the momentum reset, so the
    recorded objective sequence is nonincreasing either way.

    Iterates stay in the row space of X: the start is 0, gradients lie in
    range(X^T), and thresholding never enlarges the column space.

    Stops once the relative objective decrease falls below ``opts.rel_tol``
    and the prox-gradient step ``||A_new - Z||`` is below ``opts.rel_tol``
    relative to ``max(1, ||A||)``; the objective test alone can pass while
    the iterate is still far from the minimizer.
    Hitting ``max_iterations`` is reported through ``converged=False``.
    ``lam = 0`` returns the minimum-norm least-squares solution directly.
    """
    X, Y = _check_xy(X, Y)
    lam = _check_lambda(lam)
    opts = SolverOptions() if opts is None else opts
    p, T = X.shape[1], Y.shape[1]
    svdX = thin_svd(X)
    if svdX.rank == 0:
        raise InputError("degenerate design: X is the zero matrix")

    A = np.zeros((p, T))
    obj = float(np.sum(Y**2))
    if obj == 0.0:
        return _finish(X, Y, A, iterations=0, converged=True, objective=0.0, history=(0.0,))
    if lam == 0.0:
        A = pinv_apply(svdX, Y)
        res = _finish(X, Y, A, iterations=0, converged=True)
        return replace(res, history=(obj, res.rss))

    step = opts.step_scale / (2.0 * svdX.s[0] ** 2)
    XtY = X.T @ Y
    XtX = X.T @ X
    history = [obj]
    Z = A
    t = 1.0
    converged = False
    it = 0
    while it < opts.max_iterations:
        it += 1
        G = 2.0 * (XtX @ Z - XtY)
        A_new, s_new = svt(Z - step * G, step * lam, return_singular_values=True)
        obj_new = float(np.sum((Y - X @ A_new) ** 2)) + lam * float(s_new.sum())
        if obj_new > obj and Z is not A:
            # momentum overshot: restart from the last accepted iterate
            Z, t = A, 1.0
            continue
        decrease = obj - obj_new
        moved = float(np.linalg.norm(A_new - Z))
        if opts.acceleration:
            t_next = 0.5 * (1.0 + math.sqrt(1.0 + 4.0 * t * t))
            Z = A_new + ((t - 1.0) / t_next) * (A_new - A)
            t = t_next
        else:
            Z = A_new
        A = A_new
        obj = obj_new
        history.append(obj)
        small_decrease = decrease <= opts.rel_tol * max(abs(obj), np.finfo(np.float64).tiny)
        if small_decrease and moved <= opts.rel_tol * max(1.0, float(np.linalg.norm(A))):
            converged = True
            break
    return _finish(
        X, Y, A, iterations=it, converged=converged, objective=obj, history=tuple(history)
    )


def fit_nnp_orthogonal(X, Y, lam, atol=1e-8):
    """Closed-form NNP minimizer when ``X^T X = I``: ``svt(X^T Y, lam / 2)``.

    Raises
    ------
    PreconditionError
        If the columns of ``X`` are not orthonormal to ``atol``.
    """
    X, Y = _check_xy(X, Y)
    lam = _check_lambda(lam)
    p = X.shape[1]
    gram_err = np.max(np.abs(X.T @ X - np.eye(p)))
    if gram_err > atol:
        raise PreconditionError(
            f"X must have orthonormal columns (max |X^T X - I| = {gram_err:.3g})"
        )
    A = svt(X.T @ Y, lam / 2.0)
    res = _finish(X, Y, A)
    return replace(res, objective=res.rss + lam * res.nuclear_norm)
