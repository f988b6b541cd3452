"""Exponential dichotomy verification and estimation for x(t+1) = A(t)x(t).

A dichotomy certificate holds a projector P and constants (alpha1, beta1,
alpha2, beta2) such that, on the checked window,

    |X(t) P X^-1(s)|       <= beta1 (1+alpha1)^(s-t)   for t >= s,
    |X(t) (I-P) X^-1(s)|   <= beta2 (1+alpha2)^(t-s)   for s >= t.

When P = I the stable-branch kernel is a pure forward product Phi(t, s), so
singular coefficients are supported; any other projector transports P by
similarity, which needs backward products and surfaces SingularCoefficient.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from typing import Iterable, Sequence

import numpy as np

from .core import SequenceWindow, SystemSpec, TimeWindow, mat_norm, sup_norm
from .transition import SingularCoefficient, TransitionKernel

__all__ = [
    "NoDichotomy",
    "AmbiguousSplit",
    "PremiseFailed",
    "DichotomyCertificate",
    "VerificationReport",
    "SummabilityWitness",
    "GrowthReport",
    "ConvergenceTrace",
    "stable_kernel",
    "unstable_kernel",
    "verify_certificate",
    "estimate_projector",
    "estimate_constants",
    "certify",
    "bounded_solution_test",
    "summability_bound_check",
    "shifted_kernel_limit",
]

# Growth rates closer than this to the split threshold are refused as ambiguous.
RATE_MARGIN = 1e-3

_PROJECTOR_TOL = 1e-10


class NoDichotomy(ArithmeticError):
    """The fitted stable (or unstable) branch does not decay."""


class AmbiguousSplit(ArithmeticError):
    """A growth rate sits too close to the split threshold to classify."""

    def __init__(self, rate: float, threshold: float):
        self.rate = rate
        self.threshold = threshold
        super().__init__(
            f"growth rate {rate:.6g} within {RATE_MARGIN} of threshold {threshold:.6g}"
        )


class PremiseFailed(ArithmeticError):
    """A summability witness violates its premise at some time."""

    def __init__(self, t: int, value: float, bound: float):
        self.t = t
        super().__init__(
            f"summability premise fails at t={t}: partial value {value:.6g} > bound {bound:.6g}"
        )


def _is_identity(p: np.ndarray) -> bool:
    return bool(np.array_equal(p, np.eye(p.shape[0])))


@dataclass(frozen=True)
class DichotomyCertificate:
    """Projector, decay constants, and the window they were checked on."""

    P: np.ndarray
    alpha1: float
    alpha2: float
    beta1: float
    beta2: float
    window: TimeWindow
    max_slack: float | None = None

    def __post_init__(self):
        p = np.array(self.P, dtype=float)
        if p.ndim != 2 or p.shape[0] != p.shape[1]:
            raise ValueError("projector must be a square matrix")
        if mat_norm(p @ p - p) > _PROJECTOR_TOL:
            raise ValueError("P is not idempotent to 1e-10")
        for name in ("alpha1", "alpha2", "beta1", "beta2"):
            if getattr(self, name) <= 0:
                raise ValueError(f"{name} must be positive")
        p.setflags(write=False)
        object.__setattr__(self, "P", p)

    @property
    def n(self) -> int:
        return self.P.shape[0]

    @property
    def rate_constant(self) -> float:
        """beta1 (1+alpha1)/alpha1 + beta2/alpha2, the summed-kernel constant."""
        return (
            self.beta1 * (1.0 + self.alpha1) / self.alpha1
            + self.beta2 / self.alpha2
        )


@dataclass(frozen=True)
class VerificationReport:
    passed: bool
    max_slack: float
    worst_pair: tuple[int, int]
    worst_branch: str
    pairs_checked: int


def stable_kernel(kernel: TransitionKernel, P: np.ndarray, t: int, s: int) -> np.ndarray:
    """X(t) P X^-1(s) for t >= s.

    For P = I this is exactly the forward product Phi(t, s) and needs no
    inverses; otherwise P is transported to time s by similarity first.
    """
    if t < s:
        raise ValueError(f"stable kernel needs t >= s, got {t} < {s}")
    if _is_identity(P):
        return kernel.transition(t, s)
    p_s = kernel.state(s) @ P @ kernel.state_inverse(s)
    return kernel.transition(t, s) @ p_s


def unstable_kernel(kernel: TransitionKernel, P: np.ndarray, t: int, s: int) -> np.ndarray:
    """X(t) (I - P) X^-1(s) for s >= t; identically zero when P = I."""
    if s < t:
        raise ValueError(f"unstable kernel needs s >= t, got {s} < {t}")
    n = P.shape[0]
    if _is_identity(P):
        return np.zeros((n, n))
    q = np.eye(n) - P
    return kernel.state(t) @ q @ kernel.state_inverse(s)


def verify_certificate(
    kernel: TransitionKernel, cert: DichotomyCertificate
) -> VerificationReport:
    """Sweep every (t, s) pair in the certificate window against both bounds.

    Slack at a pair is |K| - bound (nonpositive when the inequality holds);
    max_slack is the worst over all pairs. Equality passes, with a relative
    1e-12 allowance for accumulated rounding.
    """
    window = cert.window
    identity_p = _is_identity(cert.P)
    worst = -math.inf
    worst_pair = (window.t_lo, window.t_lo)
    worst_branch = "stable"
    pairs = 0
    for s in window:
        for t in range(s, window.t_hi + 1):
            bound = cert.beta1 * (1.0 + cert.alpha1) ** (s - t)
            slack = mat_norm(stable_kernel(kernel, cert.P, t, s)) - bound
            pairs += 1
            if slack > worst:
                worst, worst_pair, worst_branch = slack, (t, s), "stable"
    if not identity_p:
        for t in window:
            for s in range(t, window.t_hi + 1):
                bound = cert.beta2 * (1.0 + cert.alpha2) ** (t - s)
                slack = mat_norm(unstable_kernel(kernel, cert.P, t, s)) - bound
                pairs += 1
                if slack > worst:
                    worst, worst_pair, worst_branch = slack, (t, s), "unstable"
    else:
        # I - P = 0: the unstable bound holds with zero left side for any constants.
        pairs += len(window) * (len(window) + 1) // 2
    passed = worst <= 1e-12 * (1.0 + abs(worst))
    return VerificationReport(passed, worst, worst_pair, worst_branch, pairs)


def estimate_projector(
    kernel: TransitionKernel, window: TimeWindow, rate_threshold: float = 0.0
) -> np.ndarray:
    """Split state space by average per-step log growth of Phi(t_hi, t_lo).

    Modes (right singular vectors) whose rate log(sigma)/T lies below the
    threshold form the stable subspace; the orthogonal projector onto their
    span is returned, and exactly the identity when every mode decays. A rate
    within 1e-3 of the threshold raises AmbiguousSplit. Exact for diagonal and
    normal systems; cross-check against a bounded-trajectory oracle for others.
    """
    if len(window) < 8:
        raise ValueError(f"window of length >= 8 required, got {len(window)}")
    steps = window.t_hi - window.t_lo
    m = kernel.transition(window.t_hi, window.t_lo)
    _, sigma, vt = np.linalg.svd(m)
    with np.errstate(divide="ignore"):
        rates = np.log(sigma) / steps
    for r in rates:
        if math.isfinite(r) and abs(r - rate_threshold) < RATE_MARGIN:
            raise AmbiguousSplit(float(r), rate_threshold)
    stable = rates < rate_threshold
    if stable.all():
        return np.eye(kernel.n)
    v_stable = vt[stable].T
    return v_stable @ v_stable.T


def estimate_constants(
    kernel: TransitionKernel, P: np.ndarray, window: TimeWindow
) -> tuple[float, float, float, float]:
    """Fit the tightest (alpha, beta) per branch on the window.

    The decay rate comes from the least-squares slope of log|K(t,s)| against
    the signed gap; beta is then the max ratio |K| / (1+alpha)^gap, so the
    resulting certificate verifies on the same window by construction.
    Pairs with an exactly zero kernel satisfy any bound and are skipped in
    the fit. Raises NoDichotomy when a fitted branch fails to decay. With
    P = I the unstable branch is vacuous and mirrors the stable constants.
    """
    p = np.asarray(P, dtype=float)
    if mat_norm(p @ p - p) > _PROJECTOR_TOL:
        raise ValueError("P is not idempotent to 1e-10")

    def fit(norms_by_gap):
        gaps = np.array([g for g, v in norms_by_gap if v > 0.0], dtype=float)
        logs = np.array([math.log(v) for _, v in norms_by_gap if v > 0.0])
        if gaps.size < 2 or np.ptp(gaps) == 0:
            raise NoDichotomy("not enough decaying kernel data to fit constants")
        slope = np.polyfit(gaps, logs, 1)[0]
        alpha = math.exp(slope) - 1.0
        if alpha <= 0:
            raise NoDichotomy(f"fitted growth rate {alpha:.6g} <= 0: branch does not decay")
        beta = max(v / (1.0 + alpha) ** g for g, v in norms_by_gap)
        return alpha, max(beta, np.finfo(float).tiny)

    stable_data = []
    for s in window:
        for t in range(s, window.t_hi + 1):
            stable_data.append((s - t, mat_norm(stable_kernel(kernel, p, t, s))))
    alpha1, beta1 = fit(stable_data)

    if _is_identity(p):
        alpha2, beta2 = alpha1, beta1
    else:
        unstable_data = []
        for t in window:
            for s in range(t, window.t_hi + 1):
                unstable_data.append((t - s, mat_norm(unstable_kernel(kernel, p, t, s))))
        alpha2, beta2 = fit(unstable_data)
    return alpha1, beta1, alpha2, beta2


def certify(
    kernel: TransitionKernel, window: TimeWindow, rate_threshold: float = 0.0
) -> tuple[DichotomyCertificate, VerificationReport]:
    """Estimate projector and constants, then verify; returns both artifacts."""
    p = estimate_projector(kernel, window, rate_threshold)
    alpha1, beta1, alpha2, beta2 = estimate_constants(kernel, p, window)
    cert = DichotomyCertificate(p, alpha1, alpha2, beta1, beta2, window)
    report = verify_certificate(kernel, cert)
    return replace(cert, max_slack=report.max_slack), report


@dataclass(frozen=True)
class GrowthReport:
    """Trajectory growth of X(t) xi over a window, forward and backward of t0."""

    forward_sup: float
    backward_sup: float | None
    backward_defined: bool
    bound: float
    exceeded: bool
    growth_rate: float


def bounded_solution_test(
    kernel: TransitionKernel, xi, window: TimeWindow, bound: float
) -> GrowthReport:
    """Track |X(t) xi| across the window and flag escape beyond `bound`.

    The backward extension needs invertible coefficients; when one is missing
    the backward side is reported as undefined rather than raised, and only
    the forward claim stands.
    """
    xi = np.asarray(xi, dtype=float).reshape(kernel.n)
    t0 = min(max(kernel.t0, window.t_lo), window.t_hi)
    norm0 = sup_norm(xi)

    forward_sup = 0.0
    v = xi.copy()
    forward_steps = 0
    for t in range(t0, window.t_hi + 1):
        forward_sup = max(forward_sup, sup_norm(v))
        if t < window.t_hi:
            v = kernel.coeff(t) @ v
            forward_steps += 1

    backward_sup: float | None = 0.0
    backward_defined = True
    v = xi.copy()
    backward_steps = 0
    try:
        for t in range(t0 - 1, window.t_lo - 1, -1):
            v = kernel.backward_transition(t, t + 1) @ v
            backward_sup = max(backward_sup, sup_norm(v))
            backward_steps += 1
    except SingularCoefficient:
        backward_defined = False
        if backward_steps == 0:
            backward_sup = None

    rate = 0.0
    if norm0 > 0.0:
        if forward_steps and forward_sup > 0:
            rate = max(rate, math.log(forward_sup / norm0) / forward_steps)
        if backward_steps and backward_sup:
            rate = max(rate, math.log(backward_sup / norm0) / backward_steps)
    exceeded = forward_sup > bound or (backward_sup is not None and backward_sup > bound)
    return GrowthReport(forward_sup, backward_sup, backward_defined, bound, exceeded, rate)


@dataclass(frozen=True)
class SummabilityWitness:
    """A positive scalar sequence with a declared one-sided summability bound.

    direction "past_sum":   phi(t) * sum_{j < t} phi(j)^-1   <= bound
    direction "future_sum": psi(t) * sum_{j >= t} psi(j)^-1  <= bound
    """

    window: TimeWindow
    values: np.ndarray
    direction: str
    bound: float

    def __post_init__(self):
        v = np.array(self.values, dtype=float).reshape(-1)
        if v.shape[0] != len(self.window):
            raise ValueError("values length does not match window")
        if not (v > 0).all():
            raise ValueError("witness values must be strictly positive")
        if self.direction not in ("past_sum", "future_sum"):
            raise ValueError(f"unknown direction {self.direction!r}")
        if self.bound <= 0:
            raise ValueError("bound must be positive")
        v.setflags(write=False)
        object.__setattr__(self, "values", v)


def summability_bound_check(w: SummabilityWitness, t0: int) -> tuple[float, bool]:
    """Derive the geometric-decay constant from a summability witness and test it.

    For past_sum with bound mu: c = mu / u(t0), u(t) = sum_{j<t} phi(j)^-1,
    and the check is phi(t) <= c (1 + 1/mu)^(t0-t) for window t >= t0. The
    future_sum case mirrors it for t <= t0. The off-window part of u (or v)
    is a geometric tail estimated from the edge ratio; a non-summable tail or
    a premise violation at some t raises PremiseFailed(t).
    """
    if t0 not in w.window:
        raise ValueError(f"t0={t0} outside witness window")
    vals = w.values
    inv = 1.0 / vals
    eps = 1e-9
    if w.direction == "past_sum":
        # tail below the window, ratio from the two lowest samples
        q = vals[1] / vals[0] if len(vals) > 1 else 0.0
        if q >= 1.0:
            raise PremiseFailed(w.window.t_lo, math.inf, w.bound)
        tail = inv[0] * q / (1.0 - q)
        partial = tail + np.concatenate(([0.0], np.cumsum(inv[:-1])))
        u = partial  # u[i] ~ sum_{j < t_i} phi(j)^-1
        for i, t in enumerate(w.window):
            if vals[i] * u[i] > w.bound * (1.0 + eps):
                raise PremiseFailed(t, float(vals[i] * u[i]), w.bound)
        c = w.bound / float(u[w.window.offset(t0)])
        decay = 1.0 + 1.0 / w.bound
        holds = all(
            vals[w.window.offset(t)] <= c * decay ** (t0 - t) * (1.0 + eps)
            for t in range(t0, w.window.t_hi + 1)
        )
        return c, holds
    # future_sum: tail above the window, ratio from the two highest samples
    q = vals[-2] / vals[-1] if len(vals) > 1 else 0.0
    if q >= 1.0:
        raise PremiseFailed(w.window.t_hi, math.inf, w.bound)
    tail = inv[-1] * q / (1.0 - q)
    v = tail + np.cumsum(inv[::-1])[::-1]  # v[i] ~ sum_{j >= t_i} psi(j)^-1
    for i, t in enumerate(w.window):
        if vals[i] * v[i] > w.bound * (1.0 + eps):
            raise PremiseFailed(t, float(vals[i] * v[i]), w.bound)
    c = w.bound / float(v[w.window.offset(t0)])
    decay = 1.0 + 1.0 / w.bound
    holds = all(
        vals[w.window.offset(t)] <= c * decay ** (t - t0) * (1.0 + eps)
        for t in range(w.window.t_lo, t0 + 1)
    )
    return c, holds


@dataclass(frozen=True)
class ConvergenceTrace:
    """Shifted stable-branch kernels along a shift sequence, with differences."""

    shifts: tuple[int, ...]
    probes: tuple[tuple[int, int], ...]
    differences: tuple[float, ...]
    final_difference: float
    converged: bool
    limit_within_bound: bool
    limit_kernels: tuple[np.ndarray, ...]


def shifted_kernel_limit(
    spec: SystemSpec,
    cert: DichotomyCertificate,
    shifts: Sequence[int],
    probes: Sequence[tuple[int, int]],
    kernel: TransitionKernel | None = None,
    tol: float = 1e-6,
) -> ConvergenceTrace:
    """Evaluate shifted kernels K(t + theta_k, s + theta_k) and their settling.

    Each shifted system is evaluated through forward products of the original
    coefficients only (no shifted inverses), so singular A are fine on the
    stable branch. The reported differences are sup distances between
    consecutive shift iterates over all probes; the trace converges when the
    final difference drops below tol, and the empirical limit must satisfy the
    stable bound with the certificate's own constants (1e-8 slack) for
    limit_within_bound.
    """
    shifts = [int(k) for k in shifts]
    if len(shifts) < 2:
        raise ValueError("at least two shifts are required")
    for t, s in probes:
        if t < s:
            raise ValueError(f"stable-branch probe needs t >= s, got {(t, s)}")
    kern = kernel if kernel is not None else TransitionKernel(spec)
    iterates = []
    for k in shifts:
        iterates.append(
            [stable_kernel(kern, cert.P, t + k, s + k) for (t, s) in probes]
        )
    diffs = []
    for prev, cur in zip(iterates, iterates[1:]):
        diffs.append(max(mat_norm(c - p) for p, c in zip(prev, cur)))
    limit = iterates[-1]
    within = all(
        mat_norm(kmat) <= cert.beta1 * (1.0 + cert.alpha1) ** (s - t) + 1e-8
        for kmat, (t, s) in zip(limit, probes)
    )
    final = diffs[-1]
    return ConvergenceTrace(
        shifts=tuple(shifts),
        probes=tuple((int(t), int(s)) for t, s in probes),
        differences=tuple(diffs),
        final_difference=final,
        converged=final <= tol,
        limit_within_bound=within,
        limit_kernels=tuple(limit),
    )
