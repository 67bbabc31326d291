"""Command-line interface: CSV matrices in, JSON reports out.

Every subcommand prints a one-line summary on stdout and, with ``--out``,
writes the full report as JSON (otherwise the JSON goes to stdout instead of
the summary). Reports contain the resolved configuration, so a run is
reproducible from its report alone.
"""

import argparse
import csv
import json
import math
import sys
from pathlib import Path

import numpy as np

from . import __version__
from .bounds import (
    OracleViolation,
    check_oracle,
    gaussian_oracle_bound,
    lambda_calibrated,
    oracle_bound,
)
from .design import check_min_singular_value, check_ri_property, summarize_design
from .estimators import (
    SolverOptions,
    default_log_penalty,
    default_penalty,
    fit_nnp,
    fit_reduced_rank,
    fit_reduced_rank_path,
    select_rank,
)
from .exceptions import DegenerateDesignError, InputError, MatrixParseError
from .matlin import as_matrix
from .simkit import TrialConfig, gen_data, monte_carlo, run_trial

__all__ = ["read_matrix_csv", "write_matrix_csv", "run", "main", "build_parser"]

EXIT_OK = 0
EXIT_USAGE = 2
EXIT_INVALID = 3
EXIT_FILE = 4
EXIT_DEGENERATE = 5
EXIT_VIOLATION = 6

EXIT_CODES_HELP = """exit codes:
  0  success
  2  usage error (unknown subcommand, malformed flags)
  3  invalid parameters or inconsistent matrix dimensions
  4  file error (missing/unreadable file, CSV parse error, write failure)
  5  degenerate design (X has no positive singular value)
  6  exact-constant oracle bound violated on the noise event (monte-carlo)
"""


def _parse_float(cell):
    try:
        return float(cell)
    except ValueError:
        return None


def read_matrix_csv(path):
    """Read a rectangular numeric CSV file.

    A first row containing any non-numeric cell is taken as a header and
    skipped. Blank lines are ignored.

    Raises
    ------
    MatrixParseError
        On ragged rows, non-numeric or non-finite cells, or an empty file;
        the message carries the 1-based line number.
    """
    rows = []
    width = None
    with open(path, newline="", encoding="utf-8") as fh:
        for lineno, cells in enumerate(csv.reader(fh), start=1):
            if not cells or all(not c.strip() for c in cells):
                continue
            values = [_parse_float(c.strip()) for c in cells]
            if not rows and width is None and any(v is None for v in values):
                width = len(cells)
                continue
            if any(v is None for v in values):
                bad = cells[values.index(None)]
                raise MatrixParseError(f"non-numeric cell {bad!r}", lineno)
            if not all(math.isfinite(v) for v in values):
                raise MatrixParseError("non-finite cell", lineno)
            if width is None:
                width = len(values)
            elif len(values) != width:
                raise MatrixParseError(f"expected {width} columns, found {len(values)}", lineno)
            rows.append(values)
    if not rows:
        raise MatrixParseError(f"{path}: no numeric rows")
    return np.array(rows, dtype=np.float64)


def write_matrix_csv(M, path):
    """Write ``M`` with 17 significant digits so that reading it back is exact."""
    M = as_matrix(M)
    with open(path, "w", newline="", encoding="utf-8") as fh:
        for row in M:
            fh.write(",".join(format(float(v), ".17g") for v in row))
            fh.write("\n")


def _jsonable(obj):
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return [_jsonable(v) for v in obj.tolist()]
    if isinstance(obj, (np.bool_, bool)):
        return bool(obj)
    if isinstance(obj, (np.integer, int)):
        return int(obj)
    if isinstance(obj, (np.floating, float)):
        v = float(obj)
        return v if math.isfinite(v) else None
    return obj


def _load(args, name, required=True):
    path = getattr(args, name)
    if path is None:
        if required:
            raise InputError(f"--{name.replace('_', '-')} is required")
        return None
    return read_matrix_csv(path)


def _solver_options(args):
    return SolverOptions(
        max_iterations=args.max_iter, rel_tol=args.tol, acceleration=not args.no_accel
    )


def _resolve_lambda(args, X, T):
    if args.lam is not None:
        if args.lam < 0:
            raise InputError("--lambda must be nonnegative")
        return args.lam, "given"
    if args.k is None or args.sigma is None:
        raise InputError("give --lambda, or --k and --sigma for the calibrated level")
    summary = summarize_design(X)
    return lambda_calibrated(summary.sigma1, T, summary.q, args.k, args.sigma), "calibrated"


def _cmd_fit_rr(args):
    X, Y = _load(args, "x"), _load(args, "y")
    fit = fit_reduced_rank(X, Y, args.rank)
    if args.coef_out:
        write_matrix_csv(fit.A_hat, args.coef_out)
    result = {"rank": args.rank, **fit.diagnostics()}
    summary = f"fit-rr: rank<={args.rank} rss={fit.rss:.6g} rank_hat={fit.rank_hat}"
    return result, summary


def _cmd_fit_nnp(args):
    X, Y = _load(args, "x"), _load(args, "y")
    lam, rule = _resolve_lambda(args, X, Y.shape[1])
    fit = fit_nnp(X, Y, lam, _solver_options(args))
    if args.coef_out:
        write_matrix_csv(fit.A_hat, args.coef_out)
    result = {"lambda_used": lam, "lambda_rule": rule, "objective": fit.objective, **fit.diagnostics()}
    summary = (
        f"fit-nnp: lambda={lam:.6g} rss={fit.rss:.6g} rank_hat={fit.rank_hat} "
        f"iterations={fit.iterations} converged={fit.converged}"
    )
    return result, summary


def _cmd_select_rank(args):
    X, Y = _load(args, "x"), _load(args, "y")
    n, T = Y.shape
    q = summarize_design(X).q
    if args.criterion == "crit":
        pen = default_penalty(T, q, args.pen_c)
    else:
        pen = default_log_penalty(n, T, q, args.pen_c)
    path = fit_reduced_rank_path(X, Y)
    sel = select_rank(path, args.criterion, pen, args.sigma)
    result = {
        "selected_rank": sel.rank,
        "criterion": sel.criterion,
        "criterion_values": sel.values,
        "rss_path": [f.rss for f in path],
        "exact_fit": sel.exact_fit,
        "penalty": "c*r*(sqrt(T)+sqrt(q))^2" if args.criterion == "crit"
        else "-log(1-c*r*(sqrt(T)+sqrt(q))^2/(n*T))",
        "penalty_is_placeholder": True,
        **path[sel.rank].diagnostics(),
    }
    return result, f"select-rank: r_hat={sel.rank} ({args.criterion}, exact_fit={sel.exact_fit})"


def _cmd_check_design(args):
    X = _load(args, "x")
    summary = summarize_design(X)
    result = summary.as_dict()
    mu_max = args.mu_max if args.mu_max is not None else summary.mu
    holds, report = check_min_singular_value(summary, mu_max)
    result.update(report.as_dict())
    result["eta_max"] = args.eta_max
    result["ri_property_holds"] = check_ri_property(summary, args.eta_max)
    line = (
        f"check-design: q={summary.q} sigma1={summary.sigma1:.6g} sigmaq={summary.sigmaq:.6g} "
        f"eta={summary.eta:.6g} min_singular_value_ok={holds} ri_property={result['ri_property_holds']}"
    )
    return result, line


def _cmd_bound(args):
    X, A0 = _load(args, "x"), _load(args, "a0")
    Y = _load(args, "y", required=False)
    summary = summarize_design(X)
    lam, rule = _resolve_lambda(args, X, A0.shape[1])
    result = {"lambda_used": lam, "lambda_rule": rule}
    for mode in ("exact", "relaxed"):
        b = oracle_bound(X, A0, lam, mode, summary=summary)
        result[f"oracle_{mode}"] = {"rhs": b.value, "argmin_r": b.argmin_r}
    if args.k is not None and args.sigma is not None:
        cb = gaussian_oracle_bound(X, A0, args.k, args.sigma, summary=summary)
        result["gaussian_bound"] = {"rhs": cb.value, "argmin_r": cb.argmin_r, "eta_rhs": cb.eta_value}
    else:
        result["gaussian_bound"] = None
    result["oracle"] = None
    line = f"bound: lambda={lam:.6g} rhs[{args.constant}]={result['oracle_' + args.constant]['rhs']:.6g}"
    if Y is not None:
        if Y.shape[0] != X.shape[0] or Y.shape[1] != A0.shape[1]:
            raise InputError("Y must be n x T, matching X and A0")
        fit = fit_nnp(X, Y, lam, _solver_options(args))
        E = Y - X @ A0
        rep = check_oracle(X, A0, fit.A_hat, lam, E=E, constant_mode=args.constant, summary=summary)
        result["oracle"] = {**rep.as_dict(), **fit.diagnostics()}
        line += f" lhs={rep.lhs:.6g} holds={rep.holds} event={rep.lambda_min_event}"
    return result, line


def _trial_config(args):
    return TrialConfig(
        n=args.n,
        p=args.p,
        T=args.t,
        r0=args.r0,
        eta_target=args.eta,
        sigma1_target=args.sigma1,
        signal=args.signal,
        sigma=args.sigma,
        K=args.k,
        seed=args.seed,
        lambda_rule=args.lambda_rule,
        coef_in_rowspace=args.coef_in_rowspace,
    )


def _cmd_trial(args):
    rep = run_trial(_trial_config(args), _solver_options(args))
    b = rep.bound(args.constant)
    result = {**b.as_dict(), "trial": rep.as_dict()}
    line = (
        f"trial: seed={args.seed} lambda={b.lambda_used:.6g} lhs={b.lhs:.6g} "
        f"rhs={b.rhs:.6g} holds={b.holds} event={b.lambda_min_event}"
    )
    return result, line


def _cmd_monte_carlo(args):
    if args.trials < 1:
        raise InputError("--trials must be >= 1")
    mc = monte_carlo(
        _trial_config(args),
        args.trials,
        constant_mode=args.constant,
        opts=_solver_options(args),
        n_jobs=args.jobs,
    )
    line = (
        f"monte-carlo: trials={mc.trials} violations={mc.violation_count} "
        f"event_failures={mc.event_fail_count} bound_probability={mc.bound_probability:.6g}"
    )
    return mc.as_dict(), line


def _cmd_gen_data(args):
    cfg = _trial_config(args)
    X, A0, E, Y = gen_data(cfg)
    out = Path(args.out) if args.out else Path(".")
    try:
        out.mkdir(parents=True, exist_ok=True)
    except OSError as exc:
        raise FileNotFoundError(str(exc)) from exc
    files = {}
    for name, M in (("X", X), ("A0", A0), ("E", E), ("Y", Y)):
        path = out / f"{name}.csv"
        write_matrix_csv(M, path)
        files[name] = path.name
    result = {"files": files, "shapes": {"X": X.shape, "A0": A0.shape, "E": E.shape, "Y": Y.shape}}
    return result, f"gen-data: wrote X, A0, E, Y to {out}"


COMMANDS = {
    "fit-rr": _cmd_fit_rr,
    "fit-nnp": _cmd_fit_nnp,
    "select-rank": _cmd_select_rank,
    "check-design": _cmd_check_design,
    "bound": _cmd_bound,
    "trial": _cmd_trial,
    "monte-carlo": _cmd_monte_carlo,
    "gen-data": _cmd_gen_data,
}


def build_parser():
    parser = argparse.ArgumentParser(
        prog="lowrankreg",
        description="Low-rank multivariate regression estimators, design diagnostics and oracle-bound checks.",
        epilog=EXIT_CODES_HELP,
        formatter_class=argparse.RawDescriptionHelpFormatter,
    )
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="subcommand", required=True, metavar="SUBCOMMAND")

    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--out", help="JSON report path (directory for gen-data)")
    common.add_argument("--seed", type=int, default=0, help="random seed (default 0)")

    solver = argparse.ArgumentParser(add_help=False)
    solver.add_argument("--max-iter", type=int, default=50000)
    solver.add_argument("--tol", type=float, default=1e-10, help="relative objective tolerance")
    solver.add_argument("--no-accel", action="store_true", help="plain proximal gradient")

    data = argparse.ArgumentParser(add_help=False)
    data.add_argument("--x", help="design matrix CSV (n x p)")
    data.add_argument("--y", help="response matrix CSV (n x T)")

    lam = argparse.ArgumentParser(add_help=False)
    lam.add_argument("--lambda", dest="lam", type=float, help="penalty level")
    lam.add_argument("--k", type=float, help="K > 1 for the calibrated penalty level")
    lam.add_argument("--sigma", type=float, help="noise standard deviation")

    constant = argparse.ArgumentParser(add_help=False)
    constant.add_argument("--constant", choices=("exact", "relaxed"), default="exact")

    sim = argparse.ArgumentParser(add_help=False)
    d = TrialConfig()
    sim.add_argument("--n", type=int, default=d.n)
    sim.add_argument("--p", type=int, default=d.p)
    sim.add_argument("--t", type=int, default=d.T, help="number of responses T")
    sim.add_argument("--r0", type=int, default=d.r0, help="rank of the true coefficients")
    sim.add_argument("--eta", type=float, default=d.eta_target, help="condition number sigma_1/sigma_q of X")
    sim.add_argument("--sigma1", type=float, default=d.sigma1_target, help="largest singular value of X")
    sim.add_argument("--signal", type=float, default=d.signal, help="singular values of A0")
    sim.add_argument("--sigma", type=float, default=d.sigma, help="noise standard deviation")
    sim.add_argument("--k", type=float, default=d.K, help="K > 1")
    sim.add_argument("--lambda-rule", choices=("calibrated", "noise-min"), default=d.lambda_rule)
    sim.add_argument("--coef-in-rowspace", action="store_true")

    p = sub.add_parser("fit-rr", parents=[common, data], help="reduced-rank fit at a fixed rank")
    p.add_argument("--rank", type=int, required=True)
    p.add_argument("--coef-out", help="CSV path for the fitted coefficients")

    p = sub.add_parser("fit-nnp", parents=[common, data, lam, solver], help="nuclear-norm-penalized fit")
    p.add_argument("--coef-out", help="CSV path for the fitted coefficients")

    p = sub.add_parser("select-rank", parents=[common, data], help="rank selection on the reduced-rank path")
    p.add_argument("--criterion", choices=("crit", "crit-log"), default="crit")
    p.add_argument("--sigma", type=float, help="known noise level (crit)")
    p.add_argument("--pen-c", type=float, default=1.1, help="penalty multiplier (placeholder default)")

    p = sub.add_parser("check-design", parents=[common], help="singular-value diagnostics of X")
    p.add_argument("--x", help="design matrix CSV")
    p.add_argument("--mu-max", type=float, help="largest admissible mu (default: 1/sigma_q)")
    p.add_argument("--eta-max", type=float, default=10.0, help="threshold for the condition-number check")

    p = sub.add_parser("bound", parents=[common, data, lam, constant, solver], help="oracle bound values")
    p.add_argument("--a0", help="true coefficient matrix CSV (p x T)")

    sub.add_parser("trial", parents=[common, sim, constant, solver], help="one simulated trial")

    p = sub.add_parser("monte-carlo", parents=[common, sim, constant, solver], help="repeated trials")
    p.add_argument("--trials", type=int, default=100)
    p.add_argument("--jobs", type=int, default=1, help="worker processes")

    sub.add_parser("gen-data", parents=[common, sim], help="write simulated X, A0, E, Y as CSV")
    return parser


def _resolved_config(args):
    cfg = {k: v for k, v in vars(args).items() if k not in ("subcommand", "out")}
    if "lam" in cfg:
        cfg["lambda"] = cfg.pop("lam")
    return dict(sorted(cfg.items()))


def run(args):
    """Execute a parsed command. Returns ``(exit_code, report_or_None)``."""
    try:
        result, line = COMMANDS[args.subcommand](args)
    except DegenerateDesignError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_DEGENERATE, None
    except (MatrixParseError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_FILE, None
    except OracleViolation as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_VIOLATION, None
    except InputError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INVALID, None

    report = _jsonable(
        {
            "subcommand": args.subcommand,
            "version": __version__,
            "config": _resolved_config(args),
            "result": result,
        }
    )
    text = json.dumps(report, indent=2, allow_nan=False) + "\n"
    if args.subcommand == "gen-data":
        target = Path(args.out or ".") / "report.json"
    else:
        target = Path(args.out) if args.out else None
    if target is None:
        sys.stdout.write(text)
        return EXIT_OK, report
    try:
        target.write_text(text, encoding="utf-8")
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_FILE, None
    print(line)
    return EXIT_OK, report


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    code, _ = run(args)
    return code


if __name__ == "__main__":
    sys.exit(main())
