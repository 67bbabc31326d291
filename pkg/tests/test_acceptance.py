"""Exit criteria for the package, one test per criterion.

Each test prints a ``[PASS]``/``[FAIL]`` line (collected again in the pytest
terminal summary) and then asserts. Tolerances are fixed here.
"""

import math
import time

import numpy as np

from lowrankreg.bounds import (
    check_oracle,
    gaussian_rank_price,
    lambda_calibrated,
    tail_energy,
    oracle_bound_at,
    rank_price,
)
from lowrankreg.cli import main
from lowrankreg.design import summarize_design
from lowrankreg.estimators import fit_nnp, fit_nnp_orthogonal, fit_reduced_rank
from lowrankreg.matlin import op_norm, pinv_apply, project_rowspace, thin_svd, truncate_rank
from lowrankreg.simkit import TrialConfig, monte_carlo


def test_criterion_1_deterministic_bound(record_criterion):
    cfg = TrialConfig(n=15, p=30, T=8, r0=3, eta_target=3.0, sigma=1.0, seed=1000, lambda_rule="noise-min")
    start = time.perf_counter()
    mc = monte_carlo(cfg, 500, constant_mode="exact", strict=False)
    elapsed = time.perf_counter() - start
    events = sum(r.lambda_min_event for r in mc.reports)
    holds = sum(r.exact.holds for r in mc.reports)
    passed = events == 500 and holds == 500 and elapsed < 120
    record_criterion(
        "1 Deterministic oracle bound (exact constant, lambda = 2 sigma1(X^T E))",
        passed,
        f"holds {holds}/500, events {events}/500, {elapsed:.1f}s",
    )
    assert passed


def test_criterion_2_gaussian_tail(record_criterion):
    cfg = TrialConfig(n=12, p=20, T=10, r0=2, K=1.5, sigma=1.0, seed=2000)
    start = time.perf_counter()
    mc = monte_carlo(cfg, 1000, constant_mode="relaxed")
    elapsed = time.perf_counter() - start
    q = mc.reports[0].design["q"]
    prob = math.exp(-2.75)
    threshold = prob + 3 * math.sqrt(prob * (1 - prob) / 1000)
    passed = (
        q == 12
        and math.isclose(mc.bound_probability, prob, rel_tol=1e-15)
        and mc.violation_frequency <= threshold
        and mc.event_fail_frequency <= threshold
        and elapsed < 600
    )
    record_criterion(
        "2 Gaussian calibration tail frequency (K=1.5, relaxed constant)",
        passed,
        f"violations {mc.violation_frequency:.4f}, event failures {mc.event_fail_frequency:.4f}, "
        f"threshold {threshold:.4f}, {elapsed:.1f}s",
    )
    assert passed


def test_criterion_3_solver_vs_closed_form(record_criterion):
    rng = np.random.default_rng(3000)
    worst = 0.0
    failures = 0
    for _ in range(50):
        p = int(rng.integers(1, 8))
        n = p + int(rng.integers(0, 6))
        T = int(rng.integers(1, 7))
        X = np.linalg.qr(rng.standard_normal((n, p)))[0]
        Y = rng.standard_normal((n, T))
        lam = rng.uniform(0.0, 2.0 * op_norm(X.T @ Y))
        oracle = fit_nnp_orthogonal(X, Y, lam).A_hat
        got = fit_nnp(X, Y, lam).A_hat
        err = np.linalg.norm(got - oracle) / max(1.0, np.linalg.norm(oracle))
        worst = max(worst, err)
        failures += err > 1e-6
    passed = failures == 0
    record_criterion("3 NNP solver vs orthonormal closed form", passed, f"worst rel. error {worst:.2e}")
    assert passed


def test_criterion_4_reduced_rank_global_optimality(record_criterion):
    rng = np.random.default_rng(4000)
    violations = 0
    checks = 0
    for _ in range(50):
        n, p, T = (int(v) for v in rng.integers(1, 7, size=3))
        X, Y = rng.standard_normal((n, p)), rng.standard_normal((n, T))
        for r in range(min(p, T) + 1):
            fit = fit_reduced_rank(X, Y, r)
            if r == 0:
                cands = np.zeros((1, p, T))
            else:
                scale = max(1.0, np.linalg.norm(fit.A_hat))
                far = rng.standard_normal((2500, p, r)) @ rng.standard_normal((2500, r, T))
                far *= scale / np.sqrt(p * T)
                near = fit.A_hat + 0.05 * scale * rng.standard_normal((2500, p, T))
                U, s, Vt = np.linalg.svd(near, full_matrices=False)
                near = (U[:, :, :r] * s[:, None, :r]) @ Vt[:, :r, :]
                cands = np.concatenate([far, near])
            rss = np.sum((Y[None] - np.einsum("np,kpt->knt", X, cands)) ** 2, axis=(1, 2))
            violations += int(np.sum(rss < fit.rss - 1e-10 * max(1.0, fit.rss)))
            checks += 1
    passed = violations == 0
    record_criterion(
        "4 Reduced-rank global optimality (5000 random rank-r candidates)",
        passed,
        f"{checks} (instance, r) pairs, {violations} violations",
    )
    assert passed


def test_criterion_5_row_space_invariance(record_criterion):
    rng = np.random.default_rng(5000)
    worst = 0.0
    for _ in range(100):
        n, p, T = 8, 20, int(rng.integers(2, 7))
        X = rng.standard_normal((n, p)) * rng.uniform(0.2, 5.0)
        A0 = rng.standard_normal((p, 2)) @ rng.standard_normal((2, T))
        Y = X @ A0 + rng.standard_normal((n, T))
        lam = rng.uniform(0.01, 1.0) * 2 * op_norm(X.T @ Y)
        A = fit_nnp(X, Y, lam).A_hat
        resid = np.linalg.norm(A - project_rowspace(thin_svd(X), A)) / max(1.0, np.linalg.norm(A))
        worst = max(worst, resid)
    passed = worst <= 1e-8
    record_criterion("5 Row-space invariance of the NNP fit with p > n", passed, f"worst {worst:.2e}")
    assert passed


def test_criterion_6_two_infimum_forms(record_criterion):
    rng = np.random.default_rng(6000)
    worst = 0.0
    for _ in range(100):
        n, p, T = (int(v) for v in rng.integers(2, 10, size=3))
        X, A0 = rng.standard_normal((n, p)), rng.standard_normal((p, T))
        summary = summarize_design(X)
        svdX = summary.svd
        lam = rng.uniform(0.05, 5.0)
        tails = tail_energy(thin_svd(X @ A0).s)
        for mode in ("exact", "relaxed"):
            price = rank_price(summary.mu, lam, mode)
            for r in range(len(tails)):
                A = pinv_apply(svdX, truncate_rank(X @ A0, r)) if r else np.zeros((p, T))
                matrix_form = oracle_bound_at(X, A0, A, lam, mode, summary=summary)
                indexed = tails[r] + price * r
                worst = max(worst, abs(matrix_form - indexed) / abs(indexed))
    passed = worst <= 1e-10
    record_criterion("6 Matrix and rank-indexed forms of the bound agree", passed, f"worst rel. gap {worst:.2e}")
    assert passed


def test_criterion_7_constant_identity(record_criterion):
    rng = np.random.default_rng(7000)
    worst = 0.0
    for _ in range(100):
        n, p = (int(v) for v in rng.integers(1, 15, size=2))
        X = rng.standard_normal((n, p)) * rng.uniform(0.01, 100.0)
        s = summarize_design(X)
        T = int(rng.integers(1, 20))
        K, sigma = rng.uniform(1.001, 5.0), rng.uniform(0.01, 10.0)
        lam = lambda_calibrated(s.sigma1, T, s.q, K, sigma)
        lhs = gaussian_rank_price(s.sigma1, s.sigmaq, T, s.q, K, sigma)
        rhs = rank_price(s.mu, lam, "relaxed")
        worst = max(worst, abs(lhs - rhs) / rhs)
    passed = worst <= 1e-10
    record_criterion("7 Calibrated per-rank price equals (3/2) mu^2 lambda^2", passed, f"worst rel. gap {worst:.2e}")
    assert passed


def test_criterion_8_cli_determinism(tmp_path, record_criterion):
    data = tmp_path / "data"
    assert main(["gen-data", "--out", str(data), "--n", "7", "--p", "11", "--t", "4", "--r0", "2", "--seed", "8"]) == 0
    X, Y, A0 = (str(data / f) for f in ("X.csv", "Y.csv", "A0.csv"))
    commands = {
        "fit-rr": ["--x", X, "--y", Y, "--rank", "2"],
        "fit-nnp": ["--x", X, "--y", Y, "--k", "1.5", "--sigma", "1"],
        "select-rank": ["--x", X, "--y", Y, "--sigma", "1"],
        "check-design": ["--x", X],
        "bound": ["--x", X, "--a0", A0, "--y", Y, "--k", "1.5", "--sigma", "1"],
        "trial": ["--seed", "17"],
        "monte-carlo": ["--seed", "17", "--trials", "20"],
    }
    mismatched = []
    for name, extra in commands.items():
        outputs = []
        for run in range(2):
            out = tmp_path / f"{name}-{run}.json"
            assert main([name, *extra, "--out", str(out)]) == 0
            outputs.append(out.read_bytes())
        if outputs[0] != outputs[1]:
            mismatched.append(name)
    gen = []
    for run in range(2):
        d = tmp_path / f"gen-{run}"
        assert main(["gen-data", "--out", str(d), "--seed", "23"]) == 0
        gen.append([(d / f).read_bytes() for f in ("X.csv", "A0.csv", "E.csv", "Y.csv", "report.json")])
    if gen[0] != gen[1]:
        mismatched.append("gen-data")
    passed = not mismatched
    record_criterion(
        "8 Byte-identical JSON for repeated seeded runs",
        passed,
        f"{len(commands) + 1} subcommands checked" + (f", mismatched: {mismatched}" if mismatched else ""),
    )
    assert passed
