import numpy as np
import pytest

from dkit import (
    DichotomyCertificate,
    SystemSpec,
    TimeWindow,
    TransitionKernel,
)

GOLDEN = (np.sqrt(5.0) - 1.0) / 2.0
SQRT2 = np.sqrt(2.0)


def make_system(n, A, Q=None, G=None, g=None, E1=0.0, E2=0.0, a=0.0, b=0.0):
    zero = np.zeros(n)
    return SystemSpec(
        n=n,
        A=A,
        g=g or (lambda t: 0),
        Q=Q or (lambda t, u: zero),
        G=G or (lambda t, u, v: zero),
        E1=E1,
        E2=E2,
        a=a,
        b=b,
    )


def scalar_contraction():
    """x(t+1) = x(t)/2 + 1, fixed point x = 2. E1 is a loose bound (Q = 0)."""
    return make_system(
        1,
        A=lambda t: np.array([[0.5]]),
        G=lambda t, u, v: np.array([1.0]),
        E1=0.1,
        E2=0.0,
        a=1.0,
        b=0.0,
    )


def half_identity(n=2):
    eye = np.eye(n)
    return make_system(n, A=lambda t: 0.5 * eye, E1=0.1, a=0.0)


def double_identity(n=2):
    eye = np.eye(n)
    return make_system(n, A=lambda t: 2.0 * eye, E1=0.1)


def diag_half_three():
    mat = np.diag([0.5, 3.0])
    return make_system(2, A=lambda t: mat, E1=0.1)


def scalar_cert(window, alpha=1.0, beta=1.0):
    return DichotomyCertificate(
        np.eye(1), alpha1=alpha, alpha2=alpha, beta1=beta, beta2=beta, window=window
    )


def identity_cert(window, n=2, alpha=1.0, beta=1.0):
    return DichotomyCertificate(
        np.eye(n), alpha1=alpha, alpha2=alpha, beta1=beta, beta2=beta, window=window
    )


def bounded_subspace_projector(kernel, window, factor=10.0):
    """Independent projector oracle from bounded basis trajectories.

    A basis vector belongs to the stable subspace iff its forward trajectory
    never exceeds factor * |e_i| on the window. Valid for the test systems,
    whose stable subspaces are coordinate-aligned.
    """
    n = kernel.n
    stable = []
    for i in range(n):
        v = np.eye(n)[i]
        sup = 0.0
        for t in range(window.t_lo, window.t_hi + 1):
            sup = max(sup, np.max(np.abs(v)))
            v = kernel.coeff(t) @ v
        if sup <= factor:
            stable.append(i)
    p = np.zeros((n, n))
    for i in stable:
        p[i, i] = 1.0
    return p


@pytest.fixture
def rng():
    return np.random.default_rng(20260809)
