"""Command line front end: dichotomy checks, solves, reproductions, classification.

Subcommands and exit codes:

    dkit dichotomy <config.toml>   0 verified certificate, 2 no dichotomy, 1 config error
    dkit solve     <config.toml>   0 converged, 3 not contractive, 4 max iterations, 1 config error
    dkit repro     <ex1|ex2>       0 all assertions hold, 5 assertion failure, 1 unknown name
    dkit classify  <signal.csv>    0 classified, 1 parse error

Reports are JSON with floats at 17 significant digits and sorted keys, so
identical inputs produce byte-identical bytes; sequences go to CSV with the
same float format. Files are written atomically (temp file + rename).
DKIT_SEED fixes the randomized validation probe seed.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import math
import os
import sys
import tempfile

import numpy as np

from . import __version__
from .aa import ShiftPlan, classify
from .config import (
    RunConfig,
    build_kernel,
    build_system,
    load_config,
)
from .core import (
    ConfigError,
    SequenceWindow,
    SystemSpec,
    TimeWindow,
    WindowError,
    mat_norm,
    residual,
    validate_system,
)
from .dichotomy import (
    AmbiguousSplit,
    DichotomyCertificate,
    NoDichotomy,
    VerificationReport,
    certify,
    verify_certificate,
)
from .operator import lambda_cap, plan_truncation
from .solver import (
    ConditionReport,
    MaxIterExceeded,
    NotContractive,
    SolveDiagnostics,
    condition_report,
    solve_fixed_point,
)
from .systems import repro_ex1_system, repro_ex2_system
from .transition import SingularCoefficient, TransitionKernel

__all__ = ["main"]

_VALIDATION_PROBES = 256


# -- deterministic rendering ---------------------------------------------------

def _fmt_float(x: float) -> str:
    if not math.isfinite(x):
        return "null"
    return "%.17g" % x


def render_json(obj, indent: int = 0) -> str:
    """JSON with sorted keys and fixed 17-significant-digit floats."""
    pad = "  " * indent
    inner = "  " * (indent + 1)
    if obj is None:
        return "null"
    if isinstance(obj, bool):
        return "true" if obj else "false"
    if isinstance(obj, (np.floating, float)):
        return _fmt_float(float(obj))
    if isinstance(obj, (np.integer, int)):
        return str(int(obj))
    if isinstance(obj, str):
        return json.dumps(obj)
    if isinstance(obj, np.ndarray):
        return render_json(obj.tolist(), indent)
    if isinstance(obj, dict):
        if not obj:
            return "{}"
        parts = [
            f"{inner}{json.dumps(str(k))}: {render_json(v, indent + 1)}"
            for k, v in sorted(obj.items(), key=lambda kv: str(kv[0]))
        ]
        return "{\n" + ",\n".join(parts) + f"\n{pad}}}"
    if isinstance(obj, (list, tuple)):
        if not obj:
            return "[]"
        parts = [f"{inner}{render_json(v, indent + 1)}" for v in obj]
        return "[\n" + ",\n".join(parts) + f"\n{pad}]"
    raise TypeError(f"cannot render {type(obj).__name__}")


def atomic_write(path: str, text: str) -> None:
    directory = os.path.dirname(os.path.abspath(path))
    fd, tmp = tempfile.mkstemp(dir=directory, prefix=".dkit-", suffix=".tmp")
    try:
        with os.fdopen(fd, "w", encoding="utf-8") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def _emit_report(obj: dict, path: str | None) -> None:
    text = render_json(obj) + "\n"
    if path:
        atomic_write(path, text)
        print(f"report written to {path}")
    else:
        print(text, end="")


def write_solution_csv(path: str, seq: SequenceWindow) -> None:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(["t"] + [f"x{i + 1}" for i in range(seq.n)])
    for t in seq.window:
        writer.writerow([t] + [_fmt_float(float(v)) for v in seq.get(t)])
    atomic_write(path, buf.getvalue())


def read_signal_csv(path: str) -> SequenceWindow:
    """Read a signal CSV with columns t, v1..vn over consecutive integers."""
    with open(path, "r", encoding="utf-8", newline="") as fh:
        rows = list(csv.reader(fh))
    if len(rows) < 3:
        raise ConfigError(f"{path}: need a header and at least two samples")
    body = rows[1:] if any(not _is_number(c) for c in rows[0][1:]) or not _is_number(rows[0][0]) else rows
    try:
        ts = [int(float(r[0])) for r in body]
        vals = [[float(c) for c in r[1:]] for r in body]
    except (ValueError, IndexError) as exc:
        raise ConfigError(f"{path}: malformed row: {exc}") from exc
    widths = {len(v) for v in vals}
    if len(widths) != 1 or 0 in widths:
        raise ConfigError(f"{path}: inconsistent or empty value columns")
    if ts != list(range(ts[0], ts[0] + len(ts))):
        raise ConfigError(f"{path}: t column must be consecutive integers")
    return SequenceWindow(TimeWindow(ts[0], ts[-1]), np.array(vals))


def _is_number(token: str) -> bool:
    try:
        float(token)
        return True
    except ValueError:
        return False


# -- report dictionaries -------------------------------------------------------

def _cert_dict(cert: DichotomyCertificate) -> dict:
    return {
        "P": cert.P,
        "alpha1": cert.alpha1,
        "alpha2": cert.alpha2,
        "beta1": cert.beta1,
        "beta2": cert.beta2,
        "window": {"t_lo": cert.window.t_lo, "t_hi": cert.window.t_hi},
        "max_slack": cert.max_slack,
    }


def _verification_dict(rep: VerificationReport) -> dict:
    return {
        "passed": rep.passed,
        "max_slack": rep.max_slack,
        "worst_pair": list(rep.worst_pair),
        "worst_branch": rep.worst_branch,
        "pairs_checked": rep.pairs_checked,
    }


def _condition_dict(rep: ConditionReport) -> dict:
    return {
        "norm_A": rep.norm_A,
        "K": rep.K,
        "L": rep.L,
        "M0_min": rep.M0_min if math.isfinite(rep.M0_min) else None,
        "feasible": rep.feasible,
        "existence_asserted": rep.existence_asserted,
        "note": rep.note,
    }


def _diagnostics_dict(diag: SolveDiagnostics) -> dict:
    return {
        "iterations": diag.iterations,
        "residual_history": list(diag.residual_history),
        "final_sup_norm": diag.final_sup_norm,
        "truncation_error": diag.truncation_error,
        "interior": {"t_lo": diag.interior.t_lo, "t_hi": diag.interior.t_hi},
    }


# -- subcommands ----------------------------------------------------------------

def _prepare(config_path: str) -> tuple[RunConfig, SystemSpec, TransitionKernel]:
    cfg = load_config(config_path)
    spec = build_system(cfg.system)
    validate_system(spec, cfg.window, n_probes=_VALIDATION_PROBES)
    kernel = build_kernel(cfg.system, spec)
    return cfg, spec, kernel


def cmd_dichotomy(args) -> int:
    try:
        cfg, spec, kernel = _prepare(args.config)
    except (ConfigError, OSError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 1
    try:
        cert, report = certify(kernel, cfg.window)
    except (NoDichotomy, AmbiguousSplit, SingularCoefficient) as exc:
        _emit_report(
            {"error": type(exc).__name__, "detail": str(exc), "verified": False},
            cfg.outputs.report,
        )
        return 2
    _emit_report(
        {"certificate": _cert_dict(cert), "verification": _verification_dict(report)},
        cfg.outputs.report,
    )
    return 0 if report.passed else 2


def cmd_solve(args) -> int:
    try:
        cfg, spec, kernel = _prepare(args.config)
    except (ConfigError, OSError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 1
    try:
        cert, vreport = certify(kernel, cfg.window)
    except (NoDichotomy, AmbiguousSplit, SingularCoefficient) as exc:
        print(f"no usable dichotomy: {exc}", file=sys.stderr)
        return 2
    rep = condition_report(spec, cert, cfg.window)
    plan = None
    if cfg.truncation.mode == "fixed":
        cap = lambda_cap(spec, rep.norm_A, rep.M0_min if rep.feasible else 0.0)
        plan = plan_truncation(cert, cap, cfg.truncation.n_past, cfg.truncation.n_future)
    try:
        solution, diag = solve_fixed_point(
            spec, kernel, cert, cfg.window, plan,
            tol=cfg.solver.tol, max_iter=cfg.solver.max_iter,
        )
    except NotContractive as exc:
        print(f"not contractive: {exc}", file=sys.stderr)
        return 3
    except MaxIterExceeded as exc:
        print(f"iteration budget exhausted: {exc}", file=sys.stderr)
        return 4

    max_resid = max(
        (residual(spec, solution, t) for t in range(diag.interior.t_lo, diag.interior.t_hi)),
        default=float("nan"),
    )
    solution_path = cfg.outputs.solution or "solution.csv"
    write_solution_csv(solution_path, solution)
    print(f"solution written to {solution_path}")
    _emit_report(
        {
            "certificate": _cert_dict(cert),
            "verification": _verification_dict(vreport),
            "condition_report": _condition_dict(rep),
            "diagnostics": _diagnostics_dict(diag),
            "max_interior_residual": max_resid,
        },
        cfg.outputs.diagnostics or "diagnostics.json",
    )
    return 0


def _run_assertions(checks) -> tuple[bool, list[dict]]:
    results = []
    all_ok = True
    for name, fn in checks:
        try:
            detail = fn()
            results.append({"assertion": name, "passed": True, "detail": detail})
            print(f"PASS {name}: {detail}")
        except AssertionError as exc:
            all_ok = False
            results.append({"assertion": name, "passed": False, "detail": str(exc)})
            print(f"FAIL {name}: {exc}")
        except Exception as exc:  # an unexpected error still names the assertion
            all_ok = False
            detail = f"{type(exc).__name__}: {exc}"
            results.append({"assertion": name, "passed": False, "detail": detail})
            print(f"FAIL {name}: {detail}")
    return all_ok, results


def _repro_ex1() -> tuple[bool, list[dict]]:
    spec = repro_ex1_system()
    kernel = TransitionKernel(spec)
    window = TimeWindow(-60, 60)

    def kernel_magnitude():
        worst = 0.0
        for s in window:
            for t in range(s, window.t_hi + 1):
                mag = mat_norm(kernel.transition(t, s))
                expected = 3.0 ** (s - t)
                worst = max(worst, abs(mag - expected) / expected)
        assert worst <= 1e-12, f"kernel magnitude deviates from 3^(s-t) by {worst:.3e}"
        return f"|Phi(t,s)| = 3^(s-t) on [-60,60], worst relative error {worst:.3e}"

    cert = DichotomyCertificate(
        np.eye(2), alpha1=1.0, alpha2=1.0, beta1=1.0, beta2=1.0, window=window
    )

    def certificate():
        report = verify_certificate(kernel, cert)
        assert report.passed, f"stable bound failed at {report.worst_pair}"
        return f"beta1 = alpha1 = 1 verified, max slack {report.max_slack:.3e}"

    rep = condition_report(spec, cert, window)

    def conditions():
        assert abs(rep.K - 3.0) <= 3e-12, f"K = {rep.K!r}"
        assert abs(rep.L - 0.8) <= 8e-13, f"L = {rep.L!r}"
        assert abs(rep.M0_min - 30.0) <= 3e-11, f"M0_min = {rep.M0_min!r}"
        return f"K = 3, L = 0.8, M0_min = {rep.M0_min:.12g}"

    def solve():
        solution, diag = solve_fixed_point(
            spec, kernel, cert, TimeWindow(-200, 200), tol=1e-8, max_iter=100
        )
        ratios = [
            b / a
            for a, b in zip(diag.residual_history[3:], diag.residual_history[4:])
            if a > 0
        ]
        assert all(r <= 0.85 for r in ratios), f"contraction ratio {max(ratios):.3f}"
        assert diag.final_sup_norm <= 30.0, f"sup norm {diag.final_sup_norm}"
        worst = max(
            residual(spec, solution, t)
            for t in range(diag.interior.t_lo, diag.interior.t_hi)
        )
        assert worst <= 1e-6, f"interior residual {worst:.3e}"
        return (
            f"{diag.iterations} iterations, sup norm {diag.final_sup_norm:.6g} <= 30, "
            f"interior residual {worst:.3e}"
        )

    return _run_assertions(
        [
            ("ex1_kernel_magnitude", kernel_magnitude),
            ("ex1_certificate", certificate),
            ("ex1_condition_report", conditions),
            ("ex1_solve", solve),
        ]
    )


def _repro_ex2() -> tuple[bool, list[dict]]:
    spec = repro_ex2_system()
    kernel = TransitionKernel(spec)
    window = TimeWindow(-60, 60)

    def backward_fails():
        try:
            kernel.backward_transition(0, 2)
        except SingularCoefficient as exc:
            assert exc.index % 2 == 0, f"unexpected index {exc.index}"
            return f"SingularCoefficient at even index {exc.index}, as required"
        raise AssertionError("backward product through a singular time did not fail")

    cert = DichotomyCertificate(
        np.eye(2), alpha1=1.0, alpha2=1.0, beta1=1.0, beta2=1.0, window=window
    )

    def forward_verifies():
        report = verify_certificate(kernel, cert)
        assert report.passed, f"stable bound failed at {report.worst_pair}"
        return f"forward-only pipeline verified (kernel <= 2^(s-t)), max slack {report.max_slack:.3e}"

    def solve():
        solution, diag = solve_fixed_point(
            spec, kernel, cert, TimeWindow(-200, 200), tol=1e-8, max_iter=100
        )
        worst = max(
            residual(spec, solution, t)
            for t in range(diag.interior.t_lo, diag.interior.t_hi)
        )
        assert worst <= 1e-6, f"interior residual {worst:.3e}"
        return f"affine forcing solved, interior residual {worst:.3e}"

    return _run_assertions(
        [
            ("ex2_backward_singular", backward_fails),
            ("ex2_forward_certificate", forward_verifies),
            ("ex2_solve", solve),
        ]
    )


def cmd_repro(args) -> int:
    runners = {"ex1": _repro_ex1, "ex2": _repro_ex2}
    if args.name not in runners:
        print(f"unknown reproduction {args.name!r}; choose from ex1, ex2", file=sys.stderr)
        return 1
    ok, results = runners[args.name]()
    if args.json:
        atomic_write(
            args.json,
            render_json({"name": args.name, "passed": ok, "assertions": results}) + "\n",
        )
    return 0 if ok else 5


def _parse_shifts(text: str) -> ShiftPlan:
    if text == "fib":
        return ShiftPlan.fibonacci(8, 17)
    try:
        return ShiftPlan.explicit([int(v) for v in text.split(",")])
    except ValueError as exc:
        raise ConfigError(f"bad --shifts value {text!r}: {exc}") from exc


def cmd_classify(args) -> int:
    try:
        signal = read_signal_csv(args.csv)
        plan = _parse_shifts(args.shifts)
        eps_grid = [float(v) for v in args.eps.split(",")]
        result = classify(
            signal,
            eps_grid=eps_grid,
            plan=plan,
            tol=args.tol,
            tau_max=args.tau_max,
        )
    except (ConfigError, OSError, WindowError, ValueError) as exc:
        print(f"classify error: {exc}", file=sys.stderr)
        return 1
    bohr = {
        _fmt_float(eps): {
            "periods": list(periods),
            "max_gap": gap,
        }
        for eps, (periods, gap) in result.bohr.items()
    }
    bochner = None
    if result.bochner is not None:
        bochner = {
            "forward_discrepancy": list(result.bochner.forward_discrepancy),
            "backward_discrepancy": list(result.bochner.backward_discrepancy),
            "verdict": result.bochner.verdict,
            "shifts": list(result.bochner.plan.shifts),
            "probe": {
                "t_lo": result.bochner.probe.t_lo,
                "t_hi": result.bochner.probe.t_hi,
            },
            "tol": result.bochner.tol,
        }
    _emit_report(
        {
            "verdict": result.verdict,
            "exact_periods": list(result.exact_periods),
            "bohr": bohr,
            "bochner": bochner,
            "note": result.note,
        },
        args.out,
    )
    return 0


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="dkit",
        description="Discrete dichotomies, neutral delay solves, and almost automorphy tests.",
    )
    parser.add_argument("--version", action="version", version=f"dkit {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("dichotomy", help="estimate and verify a dichotomy certificate")
    p.add_argument("config")
    p.set_defaults(fn=cmd_dichotomy)

    p = sub.add_parser("solve", help="solve the configured neutral system")
    p.add_argument("config")
    p.set_defaults(fn=cmd_solve)

    p = sub.add_parser("repro", help="run a named reference reproduction")
    p.add_argument("name")
    p.add_argument("--json", default=None, help="also write the assertion report here")
    p.set_defaults(fn=cmd_repro)

    p = sub.add_parser("classify", help="classify a CSV signal")
    p.add_argument("csv")
    p.add_argument("--eps", default="0.5,0.1", help="comma-separated Bohr scan epsilons")
    p.add_argument("--tau-max", type=int, default=None, dest="tau_max")
    p.add_argument("--shifts", default="fib", help="'fib' or comma-separated shifts")
    p.add_argument("--tol", type=float, default=1e-3)
    p.add_argument("--out", default=None, help="write the JSON verdict here")
    p.set_defaults(fn=cmd_classify)

    args = parser.parse_args(argv)
    return args.fn(args)


if __name__ == "__main__":
    sys.exit(main())
