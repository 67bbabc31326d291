r"""Oracle-bound evaluation for the nuclear-norm-penalized estimator.

With ``mu = 1/sigma_q(X)`` and ``lambda >= 2 sigma_1(X^T E)`` the prediction
error of the penalized estimator satisfies

.. math::
    \|X\hat A_\lambda - XA_0\|^2 \le \min_r \Big\{ \sum_{k>r}\sigma_k(XA_0)^2
        + c\,\mu^2\lambda^2 r \Big\}

with ``c = ((1 + sqrt 2)/2)^2`` ("exact") or its round-up ``c = 3/2``
("relaxed"). Under Gaussian noise and the calibrated
``lambda = 2 K sigma_1(X) (sqrt T + sqrt q) sigma`` the per-rank price becomes
``6 K^2 eta^2 (sqrt T + sqrt q)^2 sigma^2``.
"""

import math
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

from .design import summarize_design
from .exceptions import InputError
from .matlin import as_matrix, op_norm, thin_svd

__all__ = [
    "EXACT_CONSTANT",
    "RELAXED_CONSTANT",
    "HOLDS_RTOL",
    "BoundValue",
    "GaussianBound",
    "BoundReport",
    "bound_constant",
    "lambda_noise_min",
    "lambda_calibrated",
    "tail_energy",
    "rank_price",
    "gaussian_rank_price",
    "eta_rank_price",
    "oracle_bound",
    "oracle_bound_at",
    "gaussian_oracle_bound",
    "gaussian_failure_probability",
    "check_oracle",
    "OracleViolation",
]

EXACT_CONSTANT = ((1.0 + math.sqrt(2.0)) / 2.0) ** 2
RELAXED_CONSTANT = 1.5
HOLDS_RTOL = 1e-8
# absolute floor relative to the signal energy, for rhs == 0 (e.g. lam == 0)
HOLDS_ATOL_SCALE = 1e-24


class BoundValue(NamedTuple):
    value: float
    argmin_r: int


class GaussianBound(NamedTuple):
    value: float
    argmin_r: int
    eta_value: float


@dataclass(frozen=True)
class BoundReport:
    lhs: float
    rhs: float
    argmin_r: int
    lambda_used: float
    lambda_min_event: bool | None
    constant_mode: str
    holds: bool

    @property
    def consistent(self):
        """False only when the event holds, the constant is exact, and the bound fails."""
        return not (self.lambda_min_event and self.constant_mode == "exact" and not self.holds)

    def as_dict(self):
        return {
            "lhs": self.lhs,
            "rhs": self.rhs,
            "argmin_r": self.argmin_r,
            "lambda_used": self.lambda_used,
            "lambda_min_event": self.lambda_min_event,
            "constant_mode": self.constant_mode,
            "holds": self.holds,
        }


class OracleViolation(AssertionError):
    """The deterministic bound failed although its noise condition held."""


def bound_constant(constant_mode):
    if constant_mode == "exact":
        return EXACT_CONSTANT
    if constant_mode == "relaxed":
        return RELAXED_CONSTANT
    raise InputError(f"constant_mode must be 'exact' or 'relaxed', got {constant_mode!r}")


def lambda_noise_min(X, E):
    """Smallest admissible penalty level ``2 sigma_1(X^T E)``."""
    X = as_matrix(X, "X")
    E = as_matrix(E, "E")
    if X.shape[0] != E.shape[0]:
        raise InputError("X and E must have the same number of rows")
    return 2.0 * op_norm(X.T @ E)


def lambda_calibrated(sigma1_X, T, q, K, sigma):
    """Calibrated penalty ``2 K sigma_1(X) (sqrt(T) + sqrt(q)) sigma``."""
    if not K > 1:
        raise InputError(f"K must be > 1, got {K}")
    if T < 1 or q < 1:
        raise InputError("T and q must be >= 1")
    if sigma < 0 or sigma1_X < 0:
        raise InputError("sigma and sigma1_X must be nonnegative")
    return 2.0 * K * sigma1_X * (math.sqrt(T) + math.sqrt(q)) * sigma


def gaussian_failure_probability(K, T, q):
    """Failure probability ``exp(-(K-1)^2 (T+q) / 2)`` of the calibrated event."""
    if not K > 1:
        raise InputError(f"K must be > 1, got {K}")
    return math.exp(-((K - 1.0) ** 2) * (T + q) / 2.0)


def tail_energy(s):
    """``tails[r] = sum_{k>r} s_k^2`` for ``r = 0..len(s)``."""
    sq = np.asarray(s, dtype=np.float64) ** 2
    tails = np.zeros(sq.size + 1)
    tails[:-1] = np.cumsum(sq[::-1])[::-1]
    return tails


def rank_price(mu, lam, constant_mode="exact"):
    return bound_constant(constant_mode) * mu**2 * lam**2


def gaussian_rank_price(sigma1, sigmaq, T, q, K, sigma):
    return 6.0 * K**2 * (sigma1**2 / sigmaq**2) * (math.sqrt(T) + math.sqrt(q)) ** 2 * sigma**2


def eta_rank_price(eta, T, q, K, sigma):
    return 6.0 * K**2 * eta**2 * (math.sqrt(T) + math.sqrt(q)) ** 2 * sigma**2


def _scan(tails, price):
    values = tails + price * np.arange(tails.size)
    r = int(np.argmin(values))
    return BoundValue(float(values[r]), r)


def _signal_spectrum(X, A0):
    X = as_matrix(X, "X")
    A0 = as_matrix(A0, "A0")
    if A0.shape[0] != X.shape[1]:
        raise InputError(f"A0 must have {X.shape[1]} rows, got {A0.shape[0]}")
    return thin_svd(X @ A0).s


def oracle_bound(X, A0, lam, constant_mode="exact", summary=None):
    """Minimum over ``r = 0..rank(X A0)`` of tail energy plus ``c mu^2 lam^2 r``.

    Ties go to the smallest ``r``.
    """
    if summary is None:
        summary = summarize_design(X)
    if lam < 0:
        raise InputError("lambda must be nonnegative")
    tails = tail_energy(_signal_spectrum(X, A0))
    return _scan(tails, rank_price(summary.mu, lam, constant_mode))


def oracle_bound_at(X, A0, A, lam, constant_mode="exact", summary=None):
    """``||XA - XA0||^2 + c mu^2 lam^2 rank(A)`` for one candidate ``A``."""
    X = as_matrix(X, "X")
    A0 = as_matrix(A0, "A0")
    A = as_matrix(A, "A")
    if summary is None:
        summary = summarize_design(X)
    rank = thin_svd(A).rank
    fit = float(np.sum((X @ A - X @ A0) ** 2))
    return fit + rank_price(summary.mu, lam, constant_mode) * rank


def gaussian_oracle_bound(X, A0, K, sigma, summary=None):
    """Calibrated-penalty bound and its condition-number form.

    Both scans use the same per-rank price written two ways
    (``sigma_1^2 / sigma_q^2`` versus ``eta^2``); they must agree.
    """
    if summary is None:
        summary = summarize_design(X)
    if not K > 1:
        raise InputError(f"K must be > 1, got {K}")
    if sigma < 0:
        raise InputError("sigma must be nonnegative")
    A0 = as_matrix(A0, "A0")
    T, q = A0.shape[1], summary.q
    tails = tail_energy(_signal_spectrum(X, A0))
    main = _scan(tails, gaussian_rank_price(summary.sigma1, summary.sigmaq, T, q, K, sigma))
    alt = _scan(tails, eta_rank_price(summary.eta, T, q, K, sigma))
    if not math.isclose(main.value, alt.value, rel_tol=1e-12, abs_tol=1e-300):
        raise AssertionError(
            f"eta-form bound {alt.value!r} disagrees with calibrated bound {main.value!r}"
        )
    return GaussianBound(main.value, main.argmin_r, alt.value)


def check_oracle(X, A0, A_hat, lam, E=None, constant_mode="exact", summary=None, strict=False):
    """Compare the realized prediction error of ``A_hat`` with the bound.

    ``holds`` allows a relative slack of ``HOLDS_RTOL`` for rounding, plus an
    absolute floor of ``HOLDS_ATOL_SCALE * max(||XA0||^2, ||XA_hat||^2)`` so
    that a zero right-hand side is not failed by round-off alone.
    ``lambda_min_event`` is None when ``E`` is not supplied. With
    ``strict=True`` an :class:`OracleViolation` is raised when the report is
    inconsistent with the deterministic exact-constant bound.
    """
    X = as_matrix(X, "X")
    A0 = as_matrix(A0, "A0")
    A_hat = as_matrix(A_hat, "A_hat")
    if A_hat.shape != A0.shape or A0.shape[0] != X.shape[1]:
        raise InputError(
            f"A_hat {A_hat.shape} and A0 {A0.shape} must both be {X.shape[1]} x T"
        )
    if summary is None:
        summary = summarize_design(X)
    XA0, XA = X @ A0, X @ A_hat
    lhs = float(np.sum((XA - XA0) ** 2))
    floor = HOLDS_ATOL_SCALE * max(float(np.sum(XA0**2)), float(np.sum(XA**2)))
    bound = oracle_bound(X, A0, lam, constant_mode, summary=summary)
    event = None
    if E is not None:
        event = bool(lam >= lambda_noise_min(X, E))
    report = BoundReport(
        lhs=lhs,
        rhs=bound.value,
        argmin_r=bound.argmin_r,
        lambda_used=float(lam),
        lambda_min_event=event,
        constant_mode=constant_mode,
        holds=bool(lhs <= bound.value * (1.0 + HOLDS_RTOL) + floor),
    )
    if strict and not report.consistent:
        raise OracleViolation(f"lhs={lhs!r} exceeds rhs={bound.value!r} on the noise event")
    return report
