"""Numerical testers for almost periodicity and almost automorphy of sequences.

Neither property is decidable from finite data; these scans fix a falsifiable
protocol (a named shift plan, a probe window, explicit tolerances) and report
the evidence. A "pass" is evidence at the stated parameters, never a proof.

The Bohr scan hunts eps-translation numbers tau with
sup_t |f(t+tau) - f(t)| < eps. The Bochner test anchors the empirical limit
fbar at the plan's largest shift and tracks forward discrepancies
sup |f(t+k_n) - fbar(t)| and backward discrepancies sup |fbar(t-k_n) - f(t)|;
the verdict needs the last three of both below tolerance. For signals driven
by a golden-ratio rotation the right shifts are Fibonacci numbers (convergent
denominators minimize the rotation distance); multi-frequency signals need
simultaneous near-return shifts, see simultaneous_shifts.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Callable, Sequence

import numpy as np

from .core import (
    GeneratorSpec,
    SequenceWindow,
    TimeWindow,
    WindowError,
    eval_generator,
    sup_norm,
)

__all__ = [
    "ShiftPlan",
    "BochnerResult",
    "ClassificationResult",
    "fibonacci_numbers",
    "convergent_denominators",
    "simultaneous_shifts",
    "bohr_epsilon_periods",
    "bochner_test",
    "classify",
]


def fibonacci_numbers(lo_index: int, hi_index: int) -> list[int]:
    """Fibonacci numbers F_lo..F_hi with F_1 = F_2 = 1."""
    if lo_index < 1 or hi_index < lo_index:
        raise ValueError("need 1 <= lo_index <= hi_index")
    fibs = [1, 1]
    while len(fibs) < hi_index:
        fibs.append(fibs[-1] + fibs[-2])
    return fibs[lo_index - 1 : hi_index]


def convergent_denominators(theta: float, q_max: int = 10**6) -> list[int]:
    """Continued-fraction convergent denominators of theta, up to q_max.

    These are the integers q minimizing the distance of q*theta to the
    integers among all smaller q; for the golden ratio they are exactly the
    Fibonacci numbers.
    """
    frac = Fraction(float(theta))
    n, d = frac.numerator, frac.denominator
    q0, q1 = 1, 0
    out: list[int] = []
    while d != 0:
        a = n // d
        n, d = d, n - a * d
        q0, q1 = q1, a * q1 + q0
        if q1 > q_max:
            break
        if q1 >= 1 and (not out or q1 > out[-1]):
            out.append(q1)
    return out


def simultaneous_shifts(
    rotations: Sequence[float],
    k_max: int,
    multiple: int = 1,
    improvement: float = 0.5,
) -> list[int]:
    """Greedy near-return times for several rotations at once.

    Scans k = multiple, 2*multiple, ... <= k_max and emits k whenever the
    score max_r dist(k*r, Z) improves on the best so far by the given factor.
    The result is strictly increasing with strictly decreasing scores, a shift
    plan adapted to a signal mixing all the given frequencies.
    """
    if not rotations:
        raise ValueError("at least one rotation is required")
    ks = np.arange(multiple, k_max + 1, multiple, dtype=np.int64)
    score = np.zeros(ks.shape)
    for r in rotations:
        frac = (ks * float(r)) % 1.0
        score = np.maximum(score, np.minimum(frac, 1.0 - frac))
    out: list[int] = []
    best = math.inf
    for k, s in zip(ks, score):
        if s < best * improvement:
            out.append(int(k))
            best = float(s)
    return out


@dataclass(frozen=True)
class ShiftPlan:
    """A strictly increasing positive integer shift sequence with its provenance."""

    shifts: tuple[int, ...]
    source: str = "explicit"

    def __post_init__(self):
        shifts = tuple(int(k) for k in self.shifts)
        if not shifts:
            raise ValueError("shift plan is empty")
        if shifts[0] < 1 or any(b <= a for a, b in zip(shifts, shifts[1:])):
            raise ValueError("shifts must be strictly increasing positive integers")
        object.__setattr__(self, "shifts", shifts)

    @property
    def max_shift(self) -> int:
        return self.shifts[-1]

    @classmethod
    def explicit(cls, shifts: Sequence[int]) -> "ShiftPlan":
        return cls(tuple(shifts), "explicit")

    @classmethod
    def fibonacci(cls, lo_index: int, hi_index: int) -> "ShiftPlan":
        return cls(tuple(fibonacci_numbers(lo_index, hi_index)), "fibonacci")

    @classmethod
    def from_convergents(cls, theta: float, count: int = 12) -> "ShiftPlan":
        qs = convergent_denominators(theta)
        if len(qs) < 2:
            raise ValueError(f"theta={theta} yields too few convergent denominators")
        return cls(tuple(qs[:count]), f"convergent_denominators({theta!r})")


def _signal(provider) -> tuple[Callable[[int], np.ndarray], TimeWindow | None]:
    """Normalize a provider to (evaluator, coverage window or None)."""
    if isinstance(provider, SequenceWindow):
        return provider.get, provider.window
    if isinstance(provider, GeneratorSpec):
        gens = [provider]
    elif isinstance(provider, (list, tuple)) and all(
        isinstance(g, GeneratorSpec) for g in provider
    ):
        gens = list(provider)
    elif callable(provider):
        return (lambda t: np.atleast_1d(np.asarray(provider(t), dtype=float))), None
    else:
        raise TypeError(f"cannot interpret {type(provider).__name__} as a signal")
    return (lambda t: np.array([eval_generator(g, t) for g in gens])), None


def bohr_epsilon_periods(
    f: SequenceWindow, eps: float, tau_max: int
) -> tuple[set[int], int | None]:
    """Scan tau in [1, tau_max] for eps-translation numbers over the window.

    tau is accepted iff sup over the overlap of |f(t+tau) - f(t)| stays below
    eps. Returns the accepted set and the largest gap between consecutive
    accepted values (counting from 0), the empirical inclusion length, or
    None when the set is empty.
    """
    if eps <= 0:
        raise ValueError("eps must be positive")
    if tau_max < 1 or tau_max >= len(f.window) / 2:
        raise WindowError(tau_max, f.window, what="tau_max")
    vals = f.values
    accepted = []
    for tau in range(1, tau_max + 1):
        gap = float(np.max(np.abs(vals[tau:] - vals[:-tau])))
        if gap < eps:
            accepted.append(tau)
    if not accepted:
        return set(), None
    gaps = np.diff([0] + accepted)
    return set(accepted), int(np.max(gaps))


@dataclass(frozen=True)
class BochnerResult:
    """Empirical limit and discrepancy tails of a Bochner-style shift test."""

    fbar: SequenceWindow
    forward_discrepancy: tuple[float, ...]
    backward_discrepancy: tuple[float, ...]
    verdict: bool
    plan: ShiftPlan
    probe: TimeWindow
    tol: float


def bochner_test(
    provider, plan: ShiftPlan, probe: TimeWindow, tol: float
) -> BochnerResult:
    """Two-sided shift-limit test against the plan's largest shift.

    fbar(t) := f(t + k_N) for the largest shift k_N. Forward discrepancies
    compare f(t + k_n) with fbar on the probe; backward discrepancies compare
    fbar(t - k_n) = f(t - k_n + k_N) with f. Pass requires the last three
    entries of both sequences below tol. Fixed-sample providers must cover
    [probe.t_lo, probe.t_hi + k_N].
    """
    if tol <= 0:
        raise ValueError("tol must be positive")
    fn, coverage = _signal(provider)
    k_last = plan.max_shift
    if coverage is not None:
        if probe.t_lo < coverage.t_lo:
            raise WindowError(probe.t_lo, coverage, what="probe index")
        if probe.t_hi + k_last > coverage.t_hi:
            raise WindowError(probe.t_hi + k_last, coverage, what="shifted probe index")
    base = np.array([fn(t) for t in probe])
    fbar_vals = np.array([fn(t + k_last) for t in probe])
    forward = []
    backward = []
    for k in plan.shifts:
        shifted = np.array([fn(t + k) for t in probe])
        forward.append(sup_norm(shifted - fbar_vals))
        pulled = np.array([fn(t - k + k_last) for t in probe])
        backward.append(sup_norm(pulled - base))
    tail = min(3, len(plan.shifts))
    verdict = all(d < tol for d in forward[-tail:]) and all(
        d < tol for d in backward[-tail:]
    )
    return BochnerResult(
        fbar=SequenceWindow(probe, fbar_vals),
        forward_discrepancy=tuple(forward),
        backward_discrepancy=tuple(backward),
        verdict=verdict,
        plan=plan,
        probe=probe,
        tol=tol,
    )


@dataclass(frozen=True)
class ClassificationResult:
    """Verdict plus the sub-test artifacts it rests on. Numerical evidence only."""

    verdict: str
    exact_periods: tuple[int, ...]
    bohr: dict
    bochner: BochnerResult | None
    note: str = "numerical evidence at the stated parameters; not a proof"


# Acceptance threshold treated as exact periodicity (floating-point slack only).
EXACT_PERIOD_EPS = 1e-9


def classify(
    f: SequenceWindow,
    eps_grid: Sequence[float],
    plan: ShiftPlan,
    tol: float,
    tau_max: int | None = None,
    probe: TimeWindow | None = None,
) -> ClassificationResult:
    """Label a sampled signal by composing the Bohr and Bochner tests.

    periodic: an exact translation number exists at eps = 1e-9.
    numerically_almost_periodic: the Bohr set is nonempty (finite gap) at
    every eps in the grid. numerically_almost_automorphic: Bohr fails at some
    eps but the Bochner test passes. Otherwise unclassified.
    """
    if tau_max is None:
        tau_max = min(500, len(f.window) // 2 - 1)
    if probe is None:
        center = (f.window.t_lo + f.window.t_hi) // 2
        half = min(
            50, f.window.t_hi - plan.max_shift - center, center - f.window.t_lo
        )
        if half < 1:
            raise ValueError(
                "window too short for the plan's largest shift; pass an explicit probe"
            )
        probe = TimeWindow(center - half, center + half)

    exact, _ = bohr_epsilon_periods(f, EXACT_PERIOD_EPS, tau_max)
    bohr_results = {}
    all_eps_ok = True
    for eps in eps_grid:
        periods, gap = bohr_epsilon_periods(f, eps, tau_max)
        bohr_results[float(eps)] = (tuple(sorted(periods)), gap)
        if not periods:
            all_eps_ok = False

    if exact:
        return ClassificationResult("periodic", tuple(sorted(exact)), bohr_results, None)
    if all_eps_ok:
        return ClassificationResult(
            "numerically_almost_periodic", (), bohr_results, None
        )
    bochner = bochner_test(f, plan, probe, tol)
    if bochner.verdict:
        return ClassificationResult(
            "numerically_almost_automorphic", (), bohr_results, bochner
        )
    return ClassificationResult("unclassified", (), bohr_results, bochner)
