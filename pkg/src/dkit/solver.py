"""Existence conditions and fixed-point iteration for the neutral system.

The solvability check computes the contraction budget

    K  = beta1 (1+alpha1)/alpha1 + beta2/alpha2
    L  = E1 + [(|A|+1) E1 + 2 E2] K
    M0 = (b + [(|A|+1) b + a] K) / (1 - L)      (when L < 1)

and the iteration runs x_{k+1} = H(x_k) from x_0 = 0, which requires the
combined contraction L < 1 (stronger than the bare existence hypotheses; when
those hold but L >= 1, the report says so instead of iterating).
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .core import SequenceWindow, SystemSpec, TimeWindow, residual, sup_norm
from .dichotomy import DichotomyCertificate
from .operator import TruncationPlan, apply_H, auto_truncation, lambda_cap
from .transition import TransitionKernel

__all__ = [
    "NotContractive",
    "MaxIterExceeded",
    "ConditionReport",
    "SolveDiagnostics",
    "condition_report",
    "solve_fixed_point",
    "verify_solution",
    "interior_window",
]


class NotContractive(ArithmeticError):
    """The iterative scheme needs L < 1 (and E1 in (0,1)); this system fails that."""

    def __init__(self, report: "ConditionReport"):
        self.report = report
        super().__init__(report.note)


class MaxIterExceeded(ArithmeticError):
    """Fixed-point iteration ran out of iterations; carries the difference history."""

    def __init__(self, history: tuple[float, ...], tol: float):
        self.history = history
        self.tol = tol
        super().__init__(
            f"no convergence to {tol} in {len(history)} iterations "
            f"(last difference {history[-1]:.3e})"
        )


@dataclass(frozen=True)
class ConditionReport:
    """Derived constants and the feasibility verdict for the fixed-point scheme."""

    norm_A: float
    K: float
    L: float
    M0_min: float
    feasible: bool
    existence_asserted: bool
    note: str


def condition_report(
    spec: SystemSpec, cert: DichotomyCertificate, window: TimeWindow
) -> ConditionReport:
    """Evaluate the solvability inequality on a window.

    M0_min solves E1*M + b + [(|A|+1)(E1*M + b) + 2*E2*M + a]*K = M exactly
    when L < 1; feasibility additionally requires E1 in (0,1). Infeasibility
    is a verdict, not an error.
    """
    norm_a = spec.norm_A(window)
    big_k = cert.rate_constant
    big_l = spec.E1 + ((norm_a + 1.0) * spec.E1 + 2.0 * spec.E2) * big_k
    forced = spec.b + ((norm_a + 1.0) * spec.b + spec.a) * big_k
    e1_ok = 0.0 < spec.E1 < 1.0
    if big_l < 1.0:
        m0 = forced / (1.0 - big_l)
    elif forced == 0.0:
        m0 = 0.0
    else:
        m0 = math.inf
    feasible = e1_ok and big_l < 1.0
    existence = e1_ok and (big_l < 1.0 or forced == 0.0)
    if feasible:
        note = f"feasible: L = {big_l:.6g} < 1, minimal ball radius {m0:.6g}"
    elif not e1_ok:
        note = f"infeasible: E1 = {spec.E1} outside (0, 1)"
    elif existence:
        note = (
            "existence asserted by theorem; iterative scheme inapplicable "
            f"(L = {big_l:.6g} >= 1)"
        )
    else:
        note = f"infeasible: L = {big_l:.6g} >= 1"
    return ConditionReport(norm_a, big_k, big_l, m0, feasible, existence, note)


@dataclass(frozen=True)
class SolveDiagnostics:
    iterations: int
    residual_history: tuple[float, ...]
    final_sup_norm: float
    truncation_error: float
    interior: TimeWindow


def interior_window(
    spec: SystemSpec, window: TimeWindow, plan: TruncationPlan
) -> TimeWindow:
    """Times where H is evaluable: truncation plus max-delay margins trimmed."""
    gmax = spec.max_delay(window)
    lo = window.t_lo + plan.N_past + gmax
    hi = window.t_hi - plan.N_future - gmax
    if lo > hi:
        raise ValueError(
            f"window [{window.t_lo}, {window.t_hi}] too short for truncation "
            f"plan ({plan.N_past}, {plan.N_future}) with max delay {gmax}"
        )
    return TimeWindow(lo, hi)


def solve_fixed_point(
    spec: SystemSpec,
    kernel: TransitionKernel,
    cert: DichotomyCertificate,
    window: TimeWindow,
    plan: TruncationPlan | None = None,
    tol: float = 1e-8,
    max_iter: int = 100,
) -> tuple[SequenceWindow, SolveDiagnostics]:
    """Iterate x_{k+1} = H(x_k) from x_0 = 0 until sup differences reach tol.

    Updates happen on the interior (window minus truncation and delay
    margins); edge samples stay at zero, and their influence on the interior
    decays geometrically with the margin width. With plan=None a plan is
    chosen so the certified tails stay below tol/10 for the minimal ball.
    Raises NotContractive when the condition report is infeasible and
    MaxIterExceeded when the budget runs out.
    """
    report = condition_report(spec, cert, window)
    if not report.feasible:
        raise NotContractive(report)
    if plan is None:
        cap = lambda_cap(spec, report.norm_A, report.M0_min)
        plan = auto_truncation(cert, cap, tol)
    interior = interior_window(spec, window, plan)
    ilo = interior.t_lo - window.t_lo
    ihi = interior.t_hi - window.t_lo

    x = SequenceWindow.zeros(window, spec.n)
    history: list[float] = []
    trunc = 0.0
    for _ in range(max_iter):
        new_vals = np.array(x.values)
        trunc = 0.0
        for t in interior:
            value, err = apply_H(spec, kernel, cert, x, t, plan)
            new_vals[t - window.t_lo] = value
            trunc = max(trunc, err)
        diff = sup_norm(new_vals[ilo : ihi + 1] - x.values[ilo : ihi + 1])
        history.append(diff)
        x = SequenceWindow(window, new_vals)
        if diff <= tol:
            diag = SolveDiagnostics(
                iterations=len(history),
                residual_history=tuple(history),
                final_sup_norm=x.sup_norm(),
                truncation_error=trunc,
                interior=interior,
            )
            return x, diag
    raise MaxIterExceeded(tuple(history), tol)


def verify_solution(spec: SystemSpec, x: SequenceWindow) -> float:
    """Max recurrence residual over every admissible interior time."""
    window = x.window
    gmax = spec.max_delay(window)
    if len(window) < 2 + gmax:
        raise ValueError(
            f"window of length {len(window)} too short to test a system "
            f"with max delay {gmax}"
        )
    worst = 0.0
    found = False
    for t in range(window.t_lo, window.t_hi):
        if (t - spec.delay(t)) not in window:
            continue
        if (t + 1 - spec.delay(t + 1)) not in window:
            continue
        worst = max(worst, residual(spec, x, t))
        found = True
    if not found:
        raise ValueError("no admissible interior time in the window")
    return worst
