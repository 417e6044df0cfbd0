"""Closed-form manufactured solution u = x^2 (1-x)^2 y^2 (1-y)^2 on the unit square.

u and its gradient vanish on the boundary, so it is the exact clamped
solution for the load ``f = div div sigma(grad^2 u)``. For the moment law
``C_P (H + nu/(1-nu) tr(H) I)`` this load is ``C_P / (1 - nu) * bilap(u)``.
"""
import numpy as np

from ..plate import plate_constant


def _x(x):
    """X(x) = x^2 (1-x)^2 and its first two derivatives."""
    X = x**2 * (1 - x) ** 2
    X1 = 2 * x * (1 - x) * (1 - 2 * x)
    X2 = 2 * (1 - 6 * x * (1 - x))
    return X, X1, X2


def u_exact(x, y):
    return _x(x)[0] * _x(y)[0]


def grad_exact(x, y):
    X, X1, _ = _x(x)
    Y, Y1, _ = _x(y)
    return np.stack([X1 * Y, X * Y1], axis=-1)


def hess_exact(x, y):
    X, X1, X2 = _x(x)
    Y, Y1, Y2 = _x(y)
    xy = X1 * Y1
    return np.stack([np.stack([X2 * Y, xy], -1), np.stack([xy, X * Y2], -1)], -2)


def bilaplacian(x, y):
    """bilap(u) = 8 (3 (X + Y) + (1 - 6x(1-x)) (1 - 6y(1-y)))."""
    X, Y = _x(x)[0], _x(y)[0]
    return 8 * (3 * (X + Y) + (1 - 6 * x * (1 - x)) * (1 - 6 * y * (1 - y)))


def manufactured_load(spec):
    """Load whose exact clamped solution is :func:`u_exact` for plate ``spec``."""
    scale = plate_constant(spec) / (1 - spec.nu)

    def f(x, y):
        return scale * bilaplacian(x, y)

    return f


def biharmonic_load(spec):
    """``C_P * bilap(u)``: the exact load only when nu = 0.

    For nu > 0 it is smaller than :func:`manufactured_load` by the factor
    ``1 - nu`` (half of it at nu = 1/2), so :func:`u_exact` is not the
    discrete target.
    """
    Cp = plate_constant(spec)

    def f(x, y):
        return Cp * bilaplacian(x, y)

    return f
