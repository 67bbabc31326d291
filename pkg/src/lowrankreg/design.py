"""Design-matrix diagnostics.

The nuclear-norm estimator only needs a lower bound on the smallest
*positive* singular value of X, not on the smallest eigenvalue of X^T X.
This module extracts that quantity, the induced constant ``mu = 1/sigma_q``
and the condition number ``eta = sigma_1/sigma_q`` over the nonzero spectrum,
none of which require ``n >= p``.
"""

from dataclasses import dataclass

import numpy as np

from .exceptions import DegenerateDesignError, InputError
from .matlin import ThinSVD, as_matrix, thin_svd

__all__ = [
    "DesignSummary",
    "MinSingularValueReport",
    "summarize_design",
    "check_min_singular_value",
    "check_ri_property",
]

# Boundary comparisons are made on products that should equal 1 exactly in
# real arithmetic; allow a few ulps.
_BOUNDARY_SLACK = 4 * np.finfo(np.float64).eps


@dataclass(frozen=True)
class DesignSummary:
    svd: ThinSVD
    n: int
    p: int
    q: int
    sigma1: float
    sigmaq: float
    mu: float
    eta: float

    def as_dict(self):
        return {
            "n": self.n,
            "p": self.p,
            "q": self.q,
            "sigma1": self.sigma1,
            "sigmaq": self.sigmaq,
            "mu": self.mu,
            "eta": self.eta,
        }


@dataclass(frozen=True)
class MinSingularValueReport:
    holds: bool
    sigmaq: float
    mu_min: float
    mu_max: float
    eta: float

    def as_dict(self):
        return {
            "min_singular_value_ok": self.holds,
            "sigmaq": self.sigmaq,
            "mu_min": self.mu_min,
            "mu_max": self.mu_max,
            "eta": self.eta,
        }


def summarize_design(X, tol=None):
    """Rank, extreme positive singular values, ``mu`` and ``eta`` of ``X``.

    Raises
    ------
    DegenerateDesignError
        If ``X`` is the zero matrix.
    """
    X = as_matrix(X, "X")
    svd = thin_svd(X, tol=tol)
    if svd.rank == 0:
        raise DegenerateDesignError(
            "degenerate design: X has no positive singular value"
        )
    sigma1 = float(svd.s[0])
    sigmaq = float(svd.s[-1])
    return DesignSummary(
        svd=svd,
        n=X.shape[0],
        p=X.shape[1],
        q=svd.rank,
        sigma1=sigma1,
        sigmaq=sigmaq,
        mu=1.0 / sigmaq,
        eta=sigma1 / sigmaq,
    )


def check_min_singular_value(summary, mu_max):
    """Check ``sigma_q(X) >= 1/mu_max``.

    Returns the verdict together with a report carrying ``sigma_q``, the
    smallest admissible constant ``mu_min = 1/sigma_q`` and ``eta``. The
    report is produced whether or not the check passes.
    """
    mu_max = float(mu_max)
    if not mu_max > 0 or not np.isfinite(mu_max):
        raise InputError(f"mu_max must be positive and finite, got {mu_max}")
    holds = bool(summary.sigmaq * mu_max >= 1.0 - _BOUNDARY_SLACK)
    report = MinSingularValueReport(
        holds=holds,
        sigmaq=summary.sigmaq,
        mu_min=summary.mu,
        mu_max=mu_max,
        eta=summary.eta,
    )
    return holds, report


def check_ri_property(summary, eta_max):
    """True iff ``1 <= sigma_1/sigma_q <= eta_max``."""
    eta_max = float(eta_max)
    if not eta_max >= 1:
        raise InputError(f"eta_max must be >= 1, got {eta_max}")
    return bool(summary.eta <= eta_max * (1.0 + _BOUNDARY_SLACK))
