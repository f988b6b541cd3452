"""Principal fundamental matrix and transition products for x(t+1) = A(t)x(t).

Forward products never invert a coefficient, so singular A(t) is supported on
the stable branch; backward products fail loudly on (near-)singular factors.
"""

from __future__ import annotations

import threading
from typing import Optional

import numpy as np

from .core import SystemSpec, mat_norm

__all__ = ["SingularCoefficient", "TransitionKernel", "putzer_constant"]

# Condition-number gate for backward factors: exact zeros fail fast, generic
# well-scaled matrices pass.
COND_LIMIT = 1e12


class SingularCoefficient(ArithmeticError):
    """A backward product hit a singular or near-singular coefficient A(j)."""

    def __init__(self, index: int, cond: float = float("inf")):
        self.index = index
        self.cond = cond
        super().__init__(
            f"A({index}) is singular or near-singular (cond ~ {cond:.3e}); "
            "backward products are unavailable through this index"
        )


def putzer_constant(a, k: int) -> np.ndarray:
    """k-th power of a constant matrix via the Putzer recursion.

    Eigenvalues lam_1..lam_n feed the coefficient recurrence
    c_1(m+1) = lam_1 c_1(m), c_j(m+1) = lam_j c_j(m) + c_{j-1}(m), and the
    auxiliary matrices P_0 = I, P_j = (A - lam_j I) P_{j-1}; then
    A^k = sum_j c_j(k) P_{j-1}. Matches repeated multiplication to 1e-10
    relative error.
    """
    a = np.asarray(a, dtype=float)
    n = a.shape[0]
    if a.shape != (n, n):
        raise ValueError(f"square matrix required, got shape {a.shape}")
    if k < 0:
        raise ValueError("nonnegative power required")
    if k == 0:
        return np.eye(n)
    try:
        lam = np.linalg.eigvals(a)
    except np.linalg.LinAlgError as exc:  # pragma: no cover - numpy rarely fails here
        raise ArithmeticError(f"eigenvalue computation failed: {exc}") from exc
    lam = lam[np.lexsort((lam.imag, lam.real))]
    pmats = [np.eye(n, dtype=complex)]
    for j in range(n - 1):
        pmats.append((a - lam[j] * np.eye(n)) @ pmats[-1])
    c = np.zeros(n, dtype=complex)
    c[0] = 1.0
    for _ in range(k):
        nxt = np.empty_like(c)
        nxt[0] = lam[0] * c[0]
        for j in range(1, n):
            nxt[j] = lam[j] * c[j] + c[j - 1]
        c = nxt
    out = sum(c[j] * pmats[j] for j in range(n))
    scale = 1.0 + float(np.max(np.abs(out.real)))
    if float(np.max(np.abs(out.imag))) > 1e-8 * scale:
        raise ArithmeticError("Putzer recursion left a non-negligible imaginary part")
    return np.ascontiguousarray(out.real)


class TransitionKernel:
    """Cached transition products Phi(t, s) = A(t-1) ... A(s) with Phi(t, t) = I.

    X(t) is the principal fundamental matrix anchored at t0 (X(t0) = I);
    forward values are Phi(t, t0), backward values need invertible
    coefficients. The cache is lock-protected; the observable contract is
    purely functional, so concurrent reads are safe.

    With constant_matrix set, powers go through the Putzer recursion instead
    of repeated multiplication.
    """

    def __init__(self, spec: SystemSpec, t0: int = 0, constant_matrix=None):
        self.spec = spec
        self.t0 = t0
        self.constant = None if constant_matrix is None else np.asarray(constant_matrix, float)
        self._fwd: dict[tuple[int, int], np.ndarray] = {}
        self._bwd: dict[tuple[int, int], np.ndarray] = {}
        self._inv: dict[int, np.ndarray] = {}
        self._lock = threading.Lock()

    @property
    def n(self) -> int:
        return self.spec.n

    def coeff(self, t: int) -> np.ndarray:
        if self.constant is not None:
            return self.constant
        return self.spec.coeff(t)

    def transition(self, t: int, s: int) -> np.ndarray:
        """Phi(t, s) = A(t-1) A(t-2) ... A(s) for t >= s; never inverts A."""
        if t < s:
            raise ValueError(f"forward product needs t >= s, got t={t} < s={s}")
        if t == s:
            return np.eye(self.n)
        if self.constant is not None:
            return putzer_constant(self.constant, t - s)
        with self._lock:
            key = (t, s)
            if key in self._fwd:
                return self._fwd[key]
            r = t
            while r > s and (r, s) not in self._fwd:
                r -= 1
            m = self._fwd.get((r, s), np.eye(self.n))
            for j in range(r, t):
                m = self.coeff(j) @ m
                self._fwd[(j + 1, s)] = m
            return m

    def _inverse_coeff(self, j: int) -> np.ndarray:
        if j in self._inv:
            return self._inv[j]
        a = self.coeff(j)
        sigma = np.linalg.svd(a, compute_uv=False)
        s_max, s_min = float(sigma[0]), float(sigma[-1])
        cond = s_max / s_min if s_min > 0 else float("inf")
        # cond alone misses uniformly tiny matrices (cond(eps*I) = 1), so the
        # smallest singular value is also gated against unit scale
        if not np.isfinite(cond) or cond >= COND_LIMIT or s_min <= max(1.0, s_max) / COND_LIMIT:
            raise SingularCoefficient(j, cond)
        inv = np.linalg.inv(a)
        self._inv[j] = inv
        return inv

    def backward_transition(self, t: int, s: int) -> np.ndarray:
        """A(t)^-1 ... A(s-1)^-1 for s >= t, so backward(t,s) @ Phi(s,t) = I."""
        if s < t:
            raise ValueError(f"backward product needs s >= t, got s={s} < t={t}")
        if s == t:
            return np.eye(self.n)
        with self._lock:
            key = (t, s)
            if key in self._bwd:
                return self._bwd[key]
            # extend from the shortest cached suffix: bwd(t,s) = inv(A(t)) bwd(t+1,s)
            r = t
            while r < s and (r, s) not in self._bwd:
                r += 1
            m = self._bwd.get((r, s), np.eye(self.n))
            for j in range(r - 1, t - 1, -1):
                m = self._inverse_coeff(j) @ m
                self._bwd[(j, s)] = m
            return m

    def state(self, t: int) -> np.ndarray:
        """X(t): forward product from t0, backward (inverses) below t0."""
        if t >= self.t0:
            return self.transition(t, self.t0)
        return self.backward_transition(t, self.t0)

    def state_inverse(self, s: int) -> np.ndarray:
        """X(s)^-1: a forward product for s <= t0, inverses above t0."""
        if s <= self.t0:
            return self.transition(self.t0, s)
        return self.backward_transition(self.t0, s)
