"""Core types for delayed neutral difference systems on finite integer windows.

The state space is R^n with the sup norm; matrices carry the induced norm
(max absolute row sum). Coefficient functions, delays and nonlinearities are
plain callables of integer time, so any Python function works through the
library API; the declared generator families cover what the config surface
admits.
"""

from __future__ import annotations

import functools
import math
import os
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Callable, Iterable, Sequence

import numpy as np

__all__ = [
    "ConfigError",
    "WindowError",
    "TimeWindow",
    "sup_norm",
    "mat_norm",
    "sgn",
    "GeneratorSpec",
    "eval_generator",
    "SystemSpec",
    "SequenceWindow",
    "sample_generator",
    "residual",
    "validate_system",
    "probe_seed",
]

GENERATOR_KINDS = ("constant", "periodic_table", "sin_combination", "sign_cos_irrational")

# Denominator cutoff for the machine-intent irrationality check.
_MAX_RATIONAL_DENOMINATOR = 10**6


class ConfigError(ValueError):
    """Invalid configuration, parameters, or declared constants."""


class WindowError(IndexError):
    """A computation needed a time index outside the available window."""

    def __init__(self, index: int, window: "TimeWindow", what: str = "index"):
        self.index = index
        self.window = window
        super().__init__(
            f"{what} {index} outside window [{window.t_lo}, {window.t_hi}]"
        )


def probe_seed() -> int:
    """Seed for randomized validation probes; override with DKIT_SEED."""
    return int(os.environ.get("DKIT_SEED", "0"))


@dataclass(frozen=True)
class TimeWindow:
    """Closed integer interval [t_lo, t_hi]; sequences carry one entry per point."""

    t_lo: int
    t_hi: int

    def __post_init__(self):
        if self.t_lo > self.t_hi:
            raise ValueError(f"empty window: [{self.t_lo}, {self.t_hi}]")

    def __len__(self) -> int:
        return self.t_hi - self.t_lo + 1

    def __contains__(self, t: int) -> bool:
        return self.t_lo <= t <= self.t_hi

    def __iter__(self):
        return iter(range(self.t_lo, self.t_hi + 1))

    def offset(self, t: int) -> int:
        """Array index of time t."""
        if t not in self:
            raise WindowError(t, self)
        return t - self.t_lo


def sup_norm(v) -> float:
    """Vector sup norm; also the entrywise max for stacked samples."""
    v = np.asarray(v, dtype=float)
    return float(np.max(np.abs(v))) if v.size else 0.0


def mat_norm(a) -> float:
    """Induced sup norm of a matrix: max absolute row sum."""
    a = np.asarray(a, dtype=float)
    return float(np.max(np.sum(np.abs(a), axis=1)))


def sgn(x: float) -> float:
    """Sign with sgn(0) := +1 (the zero case never occurs for irrational rotations)."""
    return 1.0 if x >= 0.0 else -1.0


def _machine_rational_denominator(x: float, q_max: int = _MAX_RATIONAL_DENOMINATOR):
    """Smallest q <= q_max with x equal to some p/q at machine precision, else None.

    Runs the exact continued fraction of the binary rational x and tests each
    convergent. "Equal at machine precision" means within 4 ulp-scale of x, so
    float(1/3) is flagged while 0.333333333333 (a genuine 12-digit decimal) and
    the golden ratio are not.
    """
    frac = Fraction(x)
    n, d = frac.numerator, frac.denominator
    p0, q0, p1, q1 = 0, 1, 1, 0
    tol = 4.0 * np.finfo(float).eps * max(1.0, abs(x))
    while d != 0:
        a = n // d
        n, d = d, n - a * d
        p0, q0, p1, q1 = p1, q1, a * p1 + p0, a * q1 + q0
        if q1 > q_max:
            return None
        if abs(x - p1 / q1) <= tol:
            return q1
    return None


@dataclass(frozen=True)
class GeneratorSpec:
    """A scalar signal from one of the builtin families.

    kind / params:
      constant              value
      periodic_table        table (period = len(table) >= 1)
      sin_combination       terms: sequence of (amplitude, frequency, phase),
                            value = sum a*sin(w*t + p)
      sign_cos_irrational   theta (irrational at machine intent), amplitude
                            (default 1), value = amplitude * sgn(cos 2 pi t theta)
    """

    kind: str
    params: dict

    def __post_init__(self):
        if self.kind not in GENERATOR_KINDS:
            raise ConfigError(f"unknown generator kind: {self.kind!r}")
        p = dict(self.params)
        if self.kind == "constant":
            if "value" not in p:
                raise ConfigError("constant generator needs 'value'")
            p = {"value": float(p["value"])}
        elif self.kind == "periodic_table":
            table = tuple(float(v) for v in p.get("table", ()))
            if len(table) < 1:
                raise ConfigError("periodic_table needs a table with period >= 1")
            p = {"table": table}
        elif self.kind == "sin_combination":
            terms = []
            for term in p.get("terms", ()):
                term = tuple(float(v) for v in term)
                if len(term) == 2:
                    term = term + (0.0,)
                if len(term) != 3:
                    raise ConfigError("sin_combination terms are (amplitude, frequency[, phase])")
                terms.append(term)
            if not terms:
                raise ConfigError("sin_combination needs at least one term")
            p = {"terms": tuple(terms)}
        else:  # sign_cos_irrational
            if "theta" not in p:
                raise ConfigError("sign_cos_irrational needs 'theta'")
            theta = float(p["theta"])
            q = _machine_rational_denominator(theta)
            if q is not None:
                raise ConfigError(
                    f"theta={theta!r} equals a rational with denominator {q} <= "
                    f"{_MAX_RATIONAL_DENOMINATOR}; an irrational rotation is required"
                )
            p = {"theta": theta, "amplitude": float(p.get("amplitude", 1.0))}
        object.__setattr__(self, "params", p)


def eval_generator(gen: GeneratorSpec, t: int) -> float:
    """Evaluate a generator at integer time t. Deterministic (bit-identical)."""
    p = gen.params
    if gen.kind == "constant":
        return p["value"]
    if gen.kind == "periodic_table":
        table = p["table"]
        return table[t % len(table)]
    if gen.kind == "sin_combination":
        return float(sum(a * math.sin(w * t + ph) for (a, w, ph) in p["terms"]))
    if gen.kind == "sign_cos_irrational":
        return p["amplitude"] * sgn(math.cos(2.0 * math.pi * t * p["theta"]))
    raise ConfigError(f"unknown generator kind: {gen.kind!r}")


@dataclass(frozen=True)
class SystemSpec:
    """A neutral delay system x(t+1) = A(t)x(t) + delta[Q(t, x(t-g(t)))] + G(t, x(t), x(t-g(t))).

    delta is the forward difference of the composite t -> Q(t, x(t-g(t))).
    E1 bounds Q's Lipschitz constant in its state argument; E2 bounds G's in
    the sense |G(t,u,z)-G(t,v,w)| <= E2(|u-v| + |z-w|). a and b are declared
    upper bounds for sup |G(t,0,0)| and sup |Q(t,0)|. Declared constants are
    upper bounds, checked by validate_system, not required to be tight.
    """

    n: int
    A: Callable[[int], np.ndarray]
    g: Callable[[int], int]
    Q: Callable[[int, np.ndarray], np.ndarray]
    G: Callable[[int, np.ndarray, np.ndarray], np.ndarray]
    E1: float
    E2: float
    a: float
    b: float

    def __post_init__(self):
        if self.n < 1:
            raise ConfigError("dimension n must be >= 1")
        for name in ("E1", "E2", "a", "b"):
            if getattr(self, name) < 0:
                raise ConfigError(f"{name} must be nonnegative")

    def coeff(self, t: int) -> np.ndarray:
        """A(t) as an (n, n) float array."""
        a = np.asarray(self.A(t), dtype=float)
        if a.shape != (self.n, self.n):
            raise ConfigError(f"A({t}) has shape {a.shape}, expected {(self.n, self.n)}")
        return a

    def delay(self, t: int) -> int:
        d = int(self.g(t))
        if d < 0:
            raise ConfigError(f"g({t}) = {d} is negative")
        return d

    @functools.lru_cache(maxsize=64)
    def max_delay(self, window: TimeWindow) -> int:
        return max(self.delay(t) for t in window)

    @functools.lru_cache(maxsize=64)
    def norm_A(self, window: TimeWindow) -> float:
        """sup of |A(t)| over the window."""
        return max(mat_norm(self.coeff(t)) for t in window)

    def q_at(self, t: int, u) -> np.ndarray:
        v = np.asarray(self.Q(t, np.asarray(u, dtype=float)), dtype=float)
        return v.reshape(self.n)

    def g_at(self, t: int, u, w) -> np.ndarray:
        v = np.asarray(
            self.G(t, np.asarray(u, dtype=float), np.asarray(w, dtype=float)),
            dtype=float,
        )
        return v.reshape(self.n)


@dataclass(frozen=True)
class SequenceWindow:
    """A vector-valued sequence sampled on a finite window; values are read-only."""

    window: TimeWindow
    values: np.ndarray

    def __post_init__(self):
        v = np.array(self.values, dtype=float)
        if v.ndim == 1:
            v = v.reshape(-1, 1)
        if v.ndim != 2 or v.shape[0] != len(self.window):
            raise ValueError(
                f"values shape {v.shape} does not match window length {len(self.window)}"
            )
        v.setflags(write=False)
        object.__setattr__(self, "values", v)

    @property
    def n(self) -> int:
        return self.values.shape[1]

    def get(self, t: int) -> np.ndarray:
        if t not in self.window:
            raise WindowError(t, self.window)
        return self.values[t - self.window.t_lo]

    def sup_norm(self) -> float:
        return sup_norm(self.values)

    @classmethod
    def zeros(cls, window: TimeWindow, n: int) -> "SequenceWindow":
        return cls(window, np.zeros((len(window), n)))

    @classmethod
    def constant(cls, window: TimeWindow, vec) -> "SequenceWindow":
        vec = np.atleast_1d(np.asarray(vec, dtype=float))
        return cls(window, np.tile(vec, (len(window), 1)))


def sample_generator(gens, window: TimeWindow) -> SequenceWindow:
    """Sample one generator (or a list, one per component) on a window."""
    if isinstance(gens, GeneratorSpec):
        gens = [gens]
    vals = np.array([[eval_generator(g, t) for g in gens] for t in window])
    return SequenceWindow(window, vals)


def residual(spec: SystemSpec, x: SequenceWindow, t: int) -> float:
    """Sup-norm defect of the recurrence at time t.

    |x(t+1) - A(t)x(t) - [Q(t+1, x(t+1-g(t+1))) - Q(t, x(t-g(t)))]
     - G(t, x(t), x(t-g(t)))|
    """
    needed = (t, t + 1, t - spec.delay(t), t + 1 - spec.delay(t + 1))
    for idx in needed:
        if idx not in x.window:
            raise WindowError(idx, x.window)
    xt = x.get(t)
    xd = x.get(t - spec.delay(t))
    xd_next = x.get(t + 1 - spec.delay(t + 1))
    dq = spec.q_at(t + 1, xd_next) - spec.q_at(t, xd)
    r = x.get(t + 1) - spec.coeff(t) @ xt - dq - spec.g_at(t, xt, xd)
    return sup_norm(r)


def validate_system(
    spec: SystemSpec,
    window: TimeWindow,
    n_probes: int = 1000,
    amplitude: float = 10.0,
    seed: int | None = None,
    slack: float = 1e-12,
) -> None:
    """Check declared constants against randomized probes on the window.

    Raises ConfigError when a sampled pair violates the declared E1/E2 bounds
    beyond `slack`, when a or b fails as an upper bound on the window, or when
    a delay is negative. Passing is evidence, not proof.
    """
    rng = np.random.default_rng(probe_seed() if seed is None else seed)
    ts = rng.integers(window.t_lo, window.t_hi + 1, size=n_probes)
    for t in window:
        spec.delay(t)  # raises on negative delays
        ga = sup_norm(spec.g_at(t, np.zeros(spec.n), np.zeros(spec.n)))
        if ga > spec.a + slack:
            raise ConfigError(f"|G({t},0,0)| = {ga} exceeds declared a = {spec.a}")
        qb = sup_norm(spec.q_at(t, np.zeros(spec.n)))
        if qb > spec.b + slack:
            raise ConfigError(f"|Q({t},0)| = {qb} exceeds declared b = {spec.b}")
    for t in ts:
        t = int(t)
        z, w = rng.uniform(-amplitude, amplitude, (2, spec.n))
        lhs = sup_norm(spec.q_at(t, z) - spec.q_at(t, w))
        if lhs > spec.E1 * sup_norm(z - w) + slack:
            raise ConfigError(
                f"Q violates the declared Lipschitz bound E1={spec.E1} at t={t}"
            )
        u, v = rng.uniform(-amplitude, amplitude, (2, spec.n))
        lhs = sup_norm(spec.g_at(t, u, z) - spec.g_at(t, v, w))
        if lhs > spec.E2 * (sup_norm(u - v) + sup_norm(z - w)) + slack:
            raise ConfigError(
                f"G violates the declared Lipschitz bound E2={spec.E2} at t={t}"
            )
