"""Builders for the two reference systems reproduced by `dkit repro`.

ex1: a two-dimensional neutral system whose coefficient is the golden-rotation
sign signal scaled by 1/3,

    x(t+1) = (1/3) sgn(cos 2 pi t theta) x(t) + (1/10) delta x(t - tau)
             + (sin(pi t/2) + sin(pi t sqrt2/2), cos(pi t) + cos(pi t sqrt2))
             + (1/20) x(t - tau),

with E1 = 1/10, E2 = 1/20, a = 2, b = 0. The homogeneous kernel magnitude is
exactly 3^(s-t), so the stable bound holds with beta1 = alpha1 = 1 and the
solvability constants come out K = 3, L = 0.8, minimal ball radius 30.

ex2: a two-dimensional system with coefficient (1/2) sin(pi t/2) I, singular
at every even time, driven by the affine forcing
f(t, x) = (sin(pi t/2) + sin(pi t sqrt2/2)) (1,1) + x/10 (so E2 = 1/10; the
declared E1 = 0.01 is an arbitrary valid bound since Q vanishes). Backward
products fail on the even times while the forward-only stable branch
verifies with beta1 = alpha1 = 1 and the solve goes through.
"""

from __future__ import annotations

import math

import numpy as np

from .core import GeneratorSpec, SystemSpec
from .transition import TransitionKernel

__all__ = [
    "golden_theta",
    "repro_ex1_system",
    "repro_ex2_system",
    "ex1_generator",
]

SQRT2 = math.sqrt(2.0)


def golden_theta() -> float:
    """Default rotation number (sqrt(5) - 1) / 2."""
    return (math.sqrt(5.0) - 1.0) / 2.0


def ex1_generator(theta: float | None = None) -> GeneratorSpec:
    """The scaled sign-rotation coefficient entry of ex1."""
    return GeneratorSpec(
        "sign_cos_irrational",
        {"theta": golden_theta() if theta is None else theta, "amplitude": 1.0 / 3.0},
    )


def repro_ex1_system(theta: float | None = None, delay: int = 2) -> SystemSpec:
    gen = ex1_generator(theta)
    th = gen.params["theta"]
    eye = np.eye(2)

    def coeff(t: int) -> np.ndarray:
        s = 1.0 if math.cos(2.0 * math.pi * t * th) >= 0.0 else -1.0
        return (s / 3.0) * eye

    def forcing(t: int) -> np.ndarray:
        return np.array(
            [
                math.sin(math.pi * t / 2.0) + math.sin(math.pi * t * SQRT2 / 2.0),
                math.cos(math.pi * t) + math.cos(math.pi * t * SQRT2),
            ]
        )

    return SystemSpec(
        n=2,
        A=coeff,
        g=lambda t: delay,
        Q=lambda t, u: u / 10.0,
        G=lambda t, u, v: forcing(t) + v / 20.0,
        E1=0.1,
        E2=0.05,
        a=2.0,
        b=0.0,
    )


def repro_ex2_system() -> SystemSpec:
    eye = np.eye(2)
    # (1/2) sin(pi t / 2) on the integers, written exactly: even times are
    # exact zeros, so backward products fail fast as they must
    half_sine = (0.0, 0.5, 0.0, -0.5)

    def coeff(t: int) -> np.ndarray:
        return half_sine[t % 4] * eye

    def forcing(t: int) -> np.ndarray:
        h = math.sin(math.pi * t / 2.0) + math.sin(math.pi * t * SQRT2 / 2.0)
        return np.array([h, h])

    return SystemSpec(
        n=2,
        A=coeff,
        g=lambda t: 0,
        Q=lambda t, u: np.zeros(2),
        G=lambda t, u, v: forcing(t) + u / 10.0,
        E1=0.01,  # any value in (0,1) bounds the vanishing Q
        E2=0.1,
        a=2.0,
        b=0.0,
    )
