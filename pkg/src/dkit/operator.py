"""The fixed-point operator H = H1 + H2 with certified truncation.

H1 is the delayed-state map Q(t, x(t-g(t))). H2 is the bi-infinite
dichotomy-kernel sum against the combined nonlinearity

    Lambda(j, x) = (A(j) - I) Q(j, x(j-g(j))) + G(j, x(j), x(j-g(j))),

truncated to N_past terms below t and N_future terms at and above t. The
dropped tails are geometric under the certificate constants, so every value
comes back with a certified error bound.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .core import ConfigError, SequenceWindow, SystemSpec, WindowError, sup_norm
from .dichotomy import DichotomyCertificate, stable_kernel, unstable_kernel
from .transition import TransitionKernel

__all__ = [
    "TruncationPlan",
    "plan_truncation",
    "auto_truncation",
    "lambda_term",
    "apply_H1",
    "tail_bound",
    "lambda_cap",
    "apply_H2",
    "apply_H",
]


@dataclass(frozen=True)
class TruncationPlan:
    """Kept term counts per side and the certified tail bounds they were built with."""

    N_past: int
    N_future: int
    tail_past: float
    tail_future: float

    def __post_init__(self):
        if self.N_past < 1 or self.N_future < 1:
            raise ConfigError("truncation counts must be positive")
        if self.tail_past < 0 or self.tail_future < 0:
            raise ConfigError("tail bounds must be nonnegative")


def tail_bound(
    cert: DichotomyCertificate, sup_lambda: float, N_past: int, N_future: int
) -> tuple[float, float]:
    """Geometric remainders of the two kernel sums after N kept terms.

    tail_past   = sup_lambda * beta1 * (1+alpha1)^(1-N_past) / alpha1
    tail_future = sup_lambda * beta2 * (1+alpha2)^(-N_future) / alpha2

    At N = 0 both reduce to the full summed-kernel bound
    sup_lambda * [beta1(1+alpha1)/alpha1 + beta2/alpha2].
    """
    if sup_lambda < 0:
        raise ConfigError("sup_lambda must be nonnegative")
    past = sup_lambda * cert.beta1 * (1.0 + cert.alpha1) ** (1 - N_past) / cert.alpha1
    future = sup_lambda * cert.beta2 * (1.0 + cert.alpha2) ** (-N_future) / cert.alpha2
    return past, future


def plan_truncation(
    cert: DichotomyCertificate, sup_lambda: float, N_past: int, N_future: int
) -> TruncationPlan:
    past, future = tail_bound(cert, sup_lambda, N_past, N_future)
    return TruncationPlan(N_past, N_future, past, future)


def auto_truncation(
    cert: DichotomyCertificate, sup_lambda: float, tol: float
) -> TruncationPlan:
    """Smallest plan whose certified tails each stay below tol/10."""
    if tol <= 0:
        raise ConfigError("tolerance must be positive")
    target = tol / 10.0

    def count(beta, alpha, shift):
        if sup_lambda == 0:
            return 1
        # sup * beta * (1+alpha)^(shift - N) / alpha < target
        need = shift - math.log(target * alpha / (sup_lambda * beta)) / math.log1p(alpha)
        return max(1, math.ceil(need))

    n_past = count(cert.beta1, cert.alpha1, 1)
    n_future = count(cert.beta2, cert.alpha2, 0)
    return plan_truncation(cert, sup_lambda, n_past, n_future)


def lambda_term(spec: SystemSpec, x: SequenceWindow, j: int) -> np.ndarray:
    """(A(j) - I) Q(j, x(j-g(j))) + G(j, x(j), x(j-g(j)))."""
    d = spec.delay(j)
    for idx in (j, j - d):
        if idx not in x.window:
            raise WindowError(idx, x.window)
    xj = x.get(j)
    xd = x.get(j - d)
    return (spec.coeff(j) - np.eye(spec.n)) @ spec.q_at(j, xd) + spec.g_at(j, xj, xd)


def apply_H1(spec: SystemSpec, x: SequenceWindow, t: int) -> np.ndarray:
    """Q(t, x(t-g(t)))."""
    idx = t - spec.delay(t)
    if idx not in x.window:
        raise WindowError(idx, x.window)
    return spec.q_at(t, x.get(idx))


def lambda_cap(spec: SystemSpec, norm_a: float, x_sup: float) -> float:
    """Global bound on |Lambda(j, x)| for |x| <= x_sup under the declared constants."""
    return (norm_a + 1.0) * (spec.E1 * x_sup + spec.b) + 2.0 * spec.E2 * x_sup + spec.a


def apply_H2(
    spec: SystemSpec,
    kernel: TransitionKernel,
    cert: DichotomyCertificate,
    x: SequenceWindow,
    t: int,
    plan: TruncationPlan,
) -> tuple[np.ndarray, float]:
    """Truncated dichotomy sum at time t with a certified error bound.

    value = sum_{j=t-N_past}^{t-1} K_P(t, j+1) Lambda(j, x)
          - sum_{j=t}^{t+N_future-1} K_{I-P}(t, j+1) Lambda(j, x)

    Terms accumulate nearest-j first (descending kernel magnitude) to limit
    cancellation. The error bound is the geometric tail at sup_lambda taken as
    the observed max of |Lambda| over the evaluated range plus the declared
    growth cap, which bounds |Lambda| globally on the ball |x| <= |x|_sup, so
    the bound is certified rather than heuristic.
    """
    lo_needed = t - plan.N_past - spec.max_delay(x.window)
    hi_needed = t + plan.N_future + spec.max_delay(x.window)
    if lo_needed not in x.window:
        raise WindowError(lo_needed, x.window)
    if hi_needed not in x.window:
        raise WindowError(hi_needed, x.window)

    value = np.zeros(spec.n)
    observed = 0.0
    for j in range(t - 1, t - plan.N_past - 1, -1):
        lam = lambda_term(spec, x, j)
        observed = max(observed, sup_norm(lam))
        value += stable_kernel(kernel, cert.P, t, j + 1) @ lam
    for j in range(t, t + plan.N_future):
        lam = lambda_term(spec, x, j)
        observed = max(observed, sup_norm(lam))
        value -= unstable_kernel(kernel, cert.P, t, j + 1) @ lam

    cap = lambda_cap(spec, spec.norm_A(x.window), x.sup_norm())
    past, future = tail_bound(cert, observed + cap, plan.N_past, plan.N_future)
    return value, past + future


def apply_H(
    spec: SystemSpec,
    kernel: TransitionKernel,
    cert: DichotomyCertificate,
    x: SequenceWindow,
    t: int,
    plan: TruncationPlan,
) -> tuple[np.ndarray, float]:
    """(H1 x)(t) + (H2 x)(t); the error bound is inherited from H2."""
    h2, err = apply_H2(spec, kernel, cert, x, t, plan)
    return apply_H1(spec, x, t) + h2, err
