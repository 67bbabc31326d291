"""Seeded simulation of ``Y = X A0 + E`` and Monte Carlo checks of the bounds.

Every generator is a pure function of a :class:`TrialConfig`. Randomness
comes from ``numpy.random.Generator`` (PCG64) seeded with
``SeedSequence([seed, stream])``, one stream each for the design, the
coefficients and the noise, so the three draws are independent of each
other and of the order in which they are requested. Gaussian variates use
NumPy's ziggurat sampler (``Generator.standard_normal``).

Monte Carlo trial ``i`` uses seed ``cfg.seed + i``.
"""

from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, replace

import numpy as np

from .bounds import (
    OracleViolation,
    check_oracle,
    gaussian_failure_probability,
    gaussian_oracle_bound,
    lambda_calibrated,
    lambda_noise_min,
)
from .design import summarize_design
from .estimators import fit_nnp
from .exceptions import InputError
from .matlin import as_matrix, thin_svd

__all__ = [
    "TrialConfig",
    "TrialReport",
    "MCReport",
    "gen_design",
    "gen_coef",
    "gen_noise",
    "gen_data",
    "run_trial",
    "monte_carlo",
    "embed_trace_check",
]

_DESIGN, _COEF, _NOISE = 1, 2, 3
LAMBDA_RULES = ("calibrated", "noise-min")


@dataclass(frozen=True)
class TrialConfig:
    n: int = 15
    p: int = 30
    T: int = 8
    r0: int = 3
    eta_target: float = 3.0
    sigma1_target: float = 1.0
    signal: float = 30.0
    sigma: float = 1.0
    K: float = 1.5
    seed: int = 0
    lambda_rule: str = "calibrated"
    coef_in_rowspace: bool = False

    def __post_init__(self):
        for name in ("n", "p", "T"):
            if int(getattr(self, name)) != getattr(self, name) or getattr(self, name) < 1:
                raise InputError(f"{name} must be a positive integer")
        if not 0 <= self.r0 <= min(self.p, self.T):
            raise InputError(f"r0 must lie in [0, min(p, T)] = [0, {min(self.p, self.T)}]")
        if self.coef_in_rowspace and self.r0 > min(self.n, self.p):
            raise InputError("r0 cannot exceed rank(X) when A0 is confined to the row space")
        if not self.eta_target >= 1:
            raise InputError("eta_target must be >= 1")
        if not self.sigma1_target > 0:
            raise InputError("sigma1_target must be positive")
        if self.signal < 0:
            raise InputError("signal must be nonnegative")
        if not self.K > 1:
            raise InputError("K must be > 1")
        if not self.sigma >= 0:
            raise InputError("sigma must be nonnegative")
        if int(self.seed) != self.seed or self.seed < 0:
            raise InputError("seed must be a nonnegative integer")
        if self.lambda_rule not in LAMBDA_RULES:
            raise InputError(f"lambda_rule must be one of {LAMBDA_RULES}")

    def as_dict(self):
        return asdict(self)


def _rng(cfg, stream):
    return np.random.default_rng(np.random.SeedSequence([int(cfg.seed), stream]))


def _haar(rng, m, k):
    """m x k matrix with orthonormal columns, Haar distributed."""
    Q, R = np.linalg.qr(rng.standard_normal((m, k)))
    signs = np.sign(np.diag(R))
    signs[signs == 0] = 1.0
    return Q * signs


def gen_design(cfg):
    """Rotated design with ``min(n, p)`` geometrically spaced singular values.

    The spectrum runs from ``sigma1_target`` down to
    ``sigma1_target / eta_target``.
    """
    q = min(cfg.n, cfg.p)
    rng = _rng(cfg, _DESIGN)
    U = _haar(rng, cfg.n, q)
    V = _haar(rng, cfg.p, q)
    if q == 1:
        s = np.array([cfg.sigma1_target])
    else:
        s = cfg.sigma1_target * cfg.eta_target ** (-np.arange(q) / (q - 1))
        s[0] = cfg.sigma1_target
        s[-1] = cfg.sigma1_target / cfg.eta_target
    return (U * s) @ V.T


def gen_coef(cfg, X=None):
    """Rank-``r0`` coefficient matrix with all nonzero singular values = ``signal``.

    With ``cfg.coef_in_rowspace`` the column space of ``A0`` is drawn inside
    range(X^T); ``X`` defaults to ``gen_design(cfg)``.
    """
    if cfg.r0 == 0:
        return np.zeros((cfg.p, cfg.T))
    rng = _rng(cfg, _COEF)
    if cfg.coef_in_rowspace:
        basis = thin_svd(gen_design(cfg) if X is None else X).V
        left = basis @ _haar(rng, basis.shape[1], cfg.r0)
    else:
        left = _haar(rng, cfg.p, cfg.r0)
    right = _haar(rng, cfg.T, cfg.r0)
    return cfg.signal * (left @ right.T)


def gen_noise(cfg):
    """``n x T`` matrix of i.i.d. N(0, sigma^2) entries."""
    if cfg.sigma == 0:
        return np.zeros((cfg.n, cfg.T))
    return cfg.sigma * _rng(cfg, _NOISE).standard_normal((cfg.n, cfg.T))


def gen_data(cfg):
    """Return ``(X, A0, E, Y)`` with ``Y = X A0 + E``."""
    X = gen_design(cfg)
    A0 = gen_coef(cfg, X)
    E = gen_noise(cfg)
    return X, A0, E, X @ A0 + E


@dataclass(frozen=True)
class TrialReport:
    config: TrialConfig
    design: dict
    lambda_used: float
    lambda_noise_min: float
    lambda_min_event: bool
    exact: object
    relaxed: object
    gaussian_rhs: float
    eta_rhs: float
    fit: dict

    @property
    def converged(self):
        return self.fit["converged"]

    def bound(self, constant_mode):
        return self.exact if constant_mode == "exact" else self.relaxed

    def as_dict(self):
        return {
            "config": self.config.as_dict(),
            "design": self.design,
            "lambda_used": self.lambda_used,
            "lambda_noise_min": self.lambda_noise_min,
            "lambda_min_event": self.lambda_min_event,
            "exact": self.exact.as_dict(),
            "relaxed": self.relaxed.as_dict(),
            "gaussian_rhs": self.gaussian_rhs,
            "eta_rhs": self.eta_rhs,
            "fit": self.fit,
        }


def run_trial(cfg, opts=None):
    """Generate data, fit the penalized estimator and evaluate both bounds."""
    X, A0, E, Y = gen_data(cfg)
    summary = summarize_design(X)
    lam_min = lambda_noise_min(X, E)
    if cfg.lambda_rule == "noise-min":
        lam = lam_min
    else:
        lam = lambda_calibrated(summary.sigma1, cfg.T, summary.q, cfg.K, cfg.sigma)
    fit = fit_nnp(X, Y, lam, opts)
    reports = {
        mode: check_oracle(X, A0, fit.A_hat, lam, E=E, constant_mode=mode, summary=summary)
        for mode in ("exact", "relaxed")
    }
    cor = gaussian_oracle_bound(X, A0, cfg.K, cfg.sigma, summary=summary)
    return TrialReport(
        config=cfg,
        design=summary.as_dict(),
        lambda_used=lam,
        lambda_noise_min=lam_min,
        lambda_min_event=bool(lam >= lam_min),
        exact=reports["exact"],
        relaxed=reports["relaxed"],
        gaussian_rhs=cor.value,
        eta_rhs=cor.eta_value,
        fit=fit.diagnostics(),
    )


@dataclass(frozen=True)
class MCReport:
    trials: int
    constant_mode: str
    violation_count: int
    event_fail_count: int
    determinism_violations: int
    nonconverged_count: int
    bound_probability: float
    lhs: np.ndarray
    rhs: np.ndarray
    reports: tuple

    @property
    def violation_frequency(self):
        return self.violation_count / self.trials

    @property
    def event_fail_frequency(self):
        return self.event_fail_count / self.trials

    def as_dict(self):
        ratio = self.lhs / np.where(self.rhs > 0, self.rhs, np.inf)
        return {
            "trials": self.trials,
            "constant_mode": self.constant_mode,
            "violation_count": self.violation_count,
            "event_fail_count": self.event_fail_count,
            "determinism_violations": self.determinism_violations,
            "nonconverged_count": self.nonconverged_count,
            "bound_probability": self.bound_probability,
            "violation_frequency": self.violation_frequency,
            "event_fail_frequency": self.event_fail_frequency,
            "lhs_mean": float(self.lhs.mean()),
            "lhs_max": float(self.lhs.max()),
            "rhs_mean": float(self.rhs.mean()),
            "rhs_min": float(self.rhs.min()),
            "lhs_rhs_ratio_max": float(ratio.max()),
            "per_trial": [
                {
                    "seed": r.config.seed,
                    "lhs": r.bound(self.constant_mode).lhs,
                    "rhs": r.bound(self.constant_mode).rhs,
                    "lambda_used": r.lambda_used,
                    "lambda_min_event": r.lambda_min_event,
                    "holds": r.bound(self.constant_mode).holds,
                }
                for r in self.reports
            ],
        }


def _trial_configs(cfg, n_trials):
    return [replace(cfg, seed=cfg.seed + i) for i in range(n_trials)]


def monte_carlo(cfg, n_trials, constant_mode="relaxed", opts=None, n_jobs=1, strict=True):
    """Run ``n_trials`` independent trials and count bound violations.

    ``violation_count`` counts trials where the ``constant_mode`` bound
    fails; ``event_fail_count`` those where ``lambda < 2 sigma_1(X^T E)``.
    ``determinism_violations`` counts exact-constant failures on the event,
    which the deterministic bound forbids; with ``strict`` a nonzero count
    raises :class:`OracleViolation`.
    """
    if int(n_trials) != n_trials or n_trials < 1:
        raise InputError("n_trials must be a positive integer")
    if constant_mode not in ("exact", "relaxed"):
        raise InputError(f"constant_mode must be 'exact' or 'relaxed', got {constant_mode!r}")
    configs = _trial_configs(cfg, int(n_trials))
    if n_jobs == 1:
        reports = [run_trial(c, opts) for c in configs]
    else:
        with ProcessPoolExecutor(max_workers=n_jobs) as pool:
            reports = list(pool.map(run_trial, configs, [opts] * len(configs)))

    violations = sum(not r.bound(constant_mode).holds for r in reports)
    event_fail = sum(not r.lambda_min_event for r in reports)
    determinism = sum(not r.exact.consistent for r in reports)
    if strict and determinism:
        raise OracleViolation(
            f"{determinism} trial(s) violate the exact-constant bound on the noise event"
        )
    if constant_mode == "exact" and strict and violations > event_fail:
        raise OracleViolation("exact-constant violations exceed noise-event failures")
    q = reports[0].design["q"]
    return MCReport(
        trials=len(reports),
        constant_mode=constant_mode,
        violation_count=violations,
        event_fail_count=event_fail,
        determinism_violations=determinism,
        nonconverged_count=sum(not r.converged for r in reports),
        bound_probability=gaussian_failure_probability(cfg.K, cfg.T, q),
        lhs=np.array([r.bound(constant_mode).lhs for r in reports]),
        rhs=np.array([r.bound(constant_mode).rhs for r in reports]),
        reports=tuple(reports),
    )


def embed_trace_check(X, A, product=None, atol=1e-12):
    """Check ``trace((x_i e_t^T)^T A) == (X A)_{it}`` for every ``i, t``.

    Each entry is recomputed from its rank-one sensing matrix
    ``Z_it = x_i e_t^T`` and compared with ``product`` (default ``X @ A``)
    to ``atol`` scaled by the largest magnitude involved.
    """
    X = as_matrix(X, "X")
    A = as_matrix(A, "A")
    if X.shape[1] != A.shape[0]:
        raise InputError(f"X has {X.shape[1]} columns but A has {A.shape[0]} rows")
    n, T = X.shape[0], A.shape[1]
    product = X @ A if product is None else as_matrix(product, "product")
    if product.shape != (n, T):
        raise InputError(f"product must have shape {(n, T)}")
    eye = np.eye(T)
    traced = np.empty((n, T))
    for i in range(n):
        for t in range(T):
            Z = np.outer(X[i], eye[t])
            traced[i, t] = np.trace(Z.T @ A)
    scale = max(1.0, float(np.abs(traced).max()), float(np.abs(product).max()))
    return bool(np.all(np.abs(traced - product) <= atol * scale))
