"""Gaussian quadrature on the reference triangle and the unit interval.

Reference triangle is {(x, y): x >= 0, y >= 0, x + y <= 1} (area 1/2);
the reference edge is [0, 1].
"""
from dataclasses import dataclass
from functools import lru_cache

import numpy as np
from scipy.special import roots_jacobi

MAX_DEGREE = 10

# Degree used for assembling mass/stiffness/divergence terms.
ASSEMBLY_DEGREE = 4
# Degree used for data and exact-solution integrals.
DATA_DEGREE = 8


@dataclass(frozen=True)
class QuadratureRule:
    """Points and weights of a quadrature rule.

    ``points`` holds reference coordinates: shape (nq, 2) for triangles,
    shape (nq,) for edges.
    """

    points: np.ndarray
    weights: np.ndarray
    degree: int

    def __len__(self):
        return len(self.weights)


def _check_degree(degree):
    if not (isinstance(degree, (int, np.integer)) and 1 <= degree <= MAX_DEGREE):
        raise ValueError(f"quadrature degree must be an integer in 1..{MAX_DEGREE}, got {degree!r}")


@lru_cache(maxsize=None)
def triangle_rule(degree: int) -> QuadratureRule:
    """Quadrature rule on the reference triangle exact up to ``degree``.

    Degrees 1 and 2 use the classical symmetric rules (centroid, and the
    three interior points at barycentric (2/3, 1/6, 1/6)). Higher degrees
    use a collapsed (Duffy) product of Gauss-Jacobi and Gauss-Legendre
    points, which keeps every point strictly inside the triangle.
    """
    _check_degree(degree)
    if degree == 1:
        pts = np.array([[1.0 / 3.0, 1.0 / 3.0]])
        wts = np.array([0.5])
    elif degree == 2:
        a, b = 1.0 / 6.0, 2.0 / 3.0
        pts = np.array([[a, a], [b, a], [a, b]])
        wts = np.full(3, 1.0 / 6.0)
    else:
        n = (degree + 2) // 2
        # x-direction carries the (1 - s) Jacobian factor of the collapse.
        s, ws = roots_jacobi(n, 1.0, 0.0)
        t, wt = np.polynomial.legendre.leggauss(n)
        s = (s + 1.0) / 2.0
        ws = ws / 4.0
        t = (t + 1.0) / 2.0
        wt = wt / 2.0
        S, T = np.meshgrid(s, t, indexing="ij")
        WS, WT = np.meshgrid(ws, wt, indexing="ij")
        x = S.ravel()
        y = ((1.0 - S) * T).ravel()
        pts = np.column_stack([x, y])
        wts = (WS * WT).ravel()
    pts.setflags(write=False)
    wts.setflags(write=False)
    return QuadratureRule(pts, wts, degree)


@lru_cache(maxsize=None)
def edge_rule(degree: int) -> QuadratureRule:
    """Gauss-Legendre rule on [0, 1] exact up to ``degree``."""
    _check_degree(degree)
    n = degree // 2 + 1
    t, w = np.polynomial.legendre.leggauss(n)
    pts = (t + 1.0) / 2.0
    wts = w / 2.0
    pts.setflags(write=False)
    wts.setflags(write=False)
    return QuadratureRule(pts, wts, degree)
