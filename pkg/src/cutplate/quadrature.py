"""Quadrature on the reference triangle {(x, y): x, y >= 0, x + y <= 1} and on [0, 1]."""
from dataclasses import dataclass
from functools import lru_cache

import numpy as np
from scipy.special import roots_jacobi

MAX_DEGREE = 30


@dataclass(frozen=True)
class QuadratureRule:
    points: np.ndarray  # (nq, dim) reference coordinates
    weights: np.ndarray  # (nq,)
    degree: int

    def __len__(self):
        return len(self.weights)


def _s21(a, w):
    """Orbit of the barycentric point (a, a, 1 - 2a) under vertex permutations."""
    pts = [(a, a), (1 - 2 * a, a), (a, 1 - 2 * a)]
    return pts, [w] * 3


def _symmetric_rule(degree):
    if degree <= 1:
        return np.array([[1 / 3, 1 / 3]]), np.array([0.5])
    if degree == 2:
        pts, wts = _s21(1 / 6, 1 / 6)
        return np.array(pts), np.array(wts)
    # 7-point degree-5 rule, closed form
    r = np.sqrt(15.0)
    p1, w1 = _s21((6 - r) / 21, (155 - r) / 2400)
    p2, w2 = _s21((6 + r) / 21, (155 + r) / 2400)
    pts = [(1 / 3, 1 / 3)] + p1 + p2
    wts = [9 / 80] + w1 + w2
    return np.array(pts), np.array(wts)


def _collapsed_rule(degree):
    """Conical product of Gauss-Jacobi(1, 0) and Gauss-Legendre points."""
    n = (degree + 2) // 2
    xu, wu = roots_jacobi(n, 1.0, 0.0)  # weight (1 - x) on [-1, 1]
    xv, wv = np.polynomial.legendre.leggauss(n)
    u = (1 + xu) / 2
    wu = wu / 4  # (1 - u) du = (1 - x)/2 * dx/2
    v = (1 + xv) / 2
    wv = wv / 2
    U, Vv = np.meshgrid(u, v, indexing="ij")
    W = np.outer(wu, wv)
    pts = np.stack([U.ravel(), ((1 - U) * Vv).ravel()], axis=1)
    return pts, W.ravel()


@lru_cache(maxsize=None)
def triangle_rule(degree):
    """Rule on the reference triangle exact for polynomials of total degree ``degree``.

    Degrees up to 5 use fully symmetric rules (1, 3 and 7 points); higher
    degrees use a collapsed Gauss-Jacobi product rule.
    """
    degree = int(degree)
    if degree < 0 or degree > MAX_DEGREE:
        raise ValueError(f"unsupported triangle quadrature degree {degree} (0..{MAX_DEGREE})")
    if degree <= 5:
        pts, wts = _symmetric_rule(degree)
    else:
        pts, wts = _collapsed_rule(degree)
    pts.setflags(write=False)
    wts.setflags(write=False)
    return QuadratureRule(pts, wts, degree)


@lru_cache(maxsize=None)
def segment_rule(degree):
    """Gauss-Legendre rule on [0, 1] exact for polynomials of degree ``degree``."""
    degree = int(degree)
    if degree < 0 or degree > MAX_DEGREE:
        raise ValueError(f"unsupported segment quadrature degree {degree} (0..{MAX_DEGREE})")
    n = degree // 2 + 1
    x, w = np.polynomial.legendre.leggauss(n)
    pts = ((1 + x) / 2)[:, None]
    wts = w / 2
    pts.setflags(write=False)
    wts.setflags(write=False)
    return QuadratureRule(pts, wts, degree)
