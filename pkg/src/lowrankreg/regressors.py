"""scikit-learn compatible wrappers around the estimators.

Both regressors fit ``Y = X A`` without an intercept; center the data first
(e.g. in a :class:`~sklearn.pipeline.Pipeline`) if one is needed. ``coef_``
follows the scikit-learn layout ``(n_targets, n_features)``, i.e. ``A.T``.
"""

import numpy as np
from sklearn.base import BaseEstimator, RegressorMixin
from sklearn.utils.validation import check_array, check_is_fitted, check_X_y

from .bounds import lambda_calibrated
from .design import summarize_design
from .estimators import (
    SolverOptions,
    default_log_penalty,
    default_penalty,
    fit_nnp,
    fit_reduced_rank_path,
    select_rank,
)
from .exceptions import InputError

__all__ = ["ReducedRankRegression", "NuclearNormRegression"]


class _LowRankBase(RegressorMixin, BaseEstimator):
    def _validate_fit(self, X, y):
        X, y = check_X_y(X, y, multi_output=True, y_numeric=True, dtype=np.float64)
        self._y_1d = y.ndim == 1
        Y = y.reshape(-1, 1) if self._y_1d else y
        self.n_features_in_ = X.shape[1]
        return X, Y

    def _store(self, fit):
        self.fit_result_ = fit
        self.coef_ = fit.A_hat.T.copy()
        if self._y_1d:
            self.coef_ = self.coef_.ravel()

    def predict(self, X):
        check_is_fitted(self, "coef_")
        X = check_array(X, dtype=np.float64)
        if X.shape[1] != self.n_features_in_:
            raise ValueError(
                f"X has {X.shape[1]} features, but the model was fit with {self.n_features_in_}"
            )
        return X @ self.coef_.T

    @property
    def rank_hat_(self):
        check_is_fitted(self, "fit_result_")
        return self.fit_result_.rank_hat


class ReducedRankRegression(_LowRankBase):
    """Least squares with a rank constraint on the coefficient matrix.

    Parameters
    ----------
    rank : int or None
        Fixed rank. If None the rank is chosen on the full path
        ``0..min(p, T)`` by ``criterion``.
    criterion : {"crit", "crit-log"}
        ``"crit"`` minimizes ``rss + pen(r) sigma^2`` and needs ``sigma``;
        ``"crit-log"`` minimizes ``log(rss) + pen'(r)``.
    sigma : float, optional
        Known noise level for ``"crit"``.
    pen_c : float
        Multiplier of the default penalties (see
        :func:`~lowrankreg.estimators.default_penalty`).
    penalty : callable, optional
        Overrides the default penalty, ``r -> float``.
    """

    def __init__(self, rank=None, criterion="crit", sigma=None, pen_c=1.1, penalty=None):
        self.rank = rank
        self.criterion = criterion
        self.sigma = sigma
        self.pen_c = pen_c
        self.penalty = penalty

    def fit(self, X, y):
        X, Y = self._validate_fit(X, y)
        n, T = Y.shape
        path = fit_reduced_rank_path(X, Y)
        self.path_rss_ = np.array([f.rss for f in path])
        if self.rank is not None:
            if not 0 <= self.rank < len(path):
                raise InputError(f"rank must lie in [0, {len(path) - 1}]")
            self.rank_ = int(self.rank)
            self.criterion_values_ = None
        else:
            q = summarize_design(X).q
            pen = self.penalty
            if pen is None:
                if self.criterion == "crit-log":
                    pen = default_log_penalty(n, T, q, self.pen_c)
                else:
                    pen = default_penalty(T, q, self.pen_c)
            sel = select_rank(path, self.criterion, pen, self.sigma)
            self.rank_ = sel.rank
            self.criterion_values_ = sel.values
        self._store(path[self.rank_])
        return self


class NuclearNormRegression(_LowRankBase):
    """Least squares penalized by ``lam`` times the nuclear norm of the coefficients.

    ``lam="calibrated"`` uses the calibrated level
    ``2 K sigma_1(X) (sqrt(T) + sqrt(rank X)) sigma`` and requires ``sigma``.
    """

    def __init__(
        self,
        lam=1.0,
        sigma=None,
        K=1.5,
        max_iter=50000,
        tol=1e-10,
        acceleration=True,
        step_scale=1.0,
    ):
        self.lam = lam
        self.sigma = sigma
        self.K = K
        self.max_iter = max_iter
        self.tol = tol
        self.acceleration = acceleration
        self.step_scale = step_scale

    def fit(self, X, y):
        X, Y = self._validate_fit(X, y)
        self.design_ = summarize_design(X)
        if isinstance(self.lam, str):
            if self.lam != "calibrated":
                raise InputError(f"unknown lam rule {self.lam!r}")
            if self.sigma is None:
                raise InputError('lam="calibrated" needs sigma')
            lam = lambda_calibrated(self.design_.sigma1, Y.shape[1], self.design_.q, self.K, self.sigma)
        else:
            lam = float(self.lam)
        opts = SolverOptions(
            max_iterations=self.max_iter,
            rel_tol=self.tol,
            acceleration=self.acceleration,
            step_scale=self.step_scale,
        )
        self.lambda_ = lam
        self._store(fit_nnp(X, Y, lam, opts))
        self.n_iter_ = self.fit_result_.iterations
        return self
