"""
Quadrature rules on the reference box [-1, 1]^d and the unit simplex.
"""

from dataclasses import dataclass
from functools import lru_cache
from itertools import product

import numpy as np


MAX_BOX_ORDER = 5
MAX_SIMPLEX_ORDER = 4

_BOX_KINDS = {'q2_quad': 2, 'q1_quad': 2, 'quad': 2,
              'q2_hex': 3, 'q1_hex': 3, 'hex': 3}
_SIMPLEX_KINDS = {'p1_triangle': 2, 'triangle': 2,
                  'p1_tetrahedron': 3, 'tetrahedron': 3}


@dataclass(frozen=True)
class QuadratureRule:
    """Points and positive weights on a reference domain"""
    points: np.ndarray
    weights: np.ndarray
    order: int

    def __len__(self):
        return len(self.weights)


def _gauss_box(order, dim):
    n = (order + 2) // 2  # n Gauss points are exact to degree 2n - 1
    x, w = np.polynomial.legendre.leggauss(n)
    pts = []
    wts = []
    for idx in product(range(n), repeat=dim):
        idx = tuple(reversed(idx))
        pts.append([x[i] for i in idx])
        wts.append(np.prod([w[i] for i in idx]))
    return np.array(pts), np.array(wts)


def _triangle(order):
    if order <= 1:
        return np.array([[1.0 / 3.0, 1.0 / 3.0]]), np.array([0.5])
    if order == 2:
        pts = np.array([[1.0 / 6.0, 1.0 / 6.0],
                        [2.0 / 3.0, 1.0 / 6.0],
                        [1.0 / 6.0, 2.0 / 3.0]])
        return pts, np.full(3, 1.0 / 6.0)
    # symmetric six-point rule, degree 4
    a, wa = 0.445948490915965, 0.223381589678011
    b, wb = 0.091576213509771, 0.109951743655322
    pts = np.array([[a, a], [1.0 - 2.0 * a, a], [a, 1.0 - 2.0 * a],
                    [b, b], [1.0 - 2.0 * b, b], [b, 1.0 - 2.0 * b]])
    wts = 0.5 * np.array([wa, wa, wa, wb, wb, wb])
    return pts, wts


def _collapsed_tetrahedron(order):
    """Conical product Gauss rule; positive weights, exact to `order`"""
    n = (order + 4) // 2
    x, w = np.polynomial.legendre.leggauss(n)
    x = 0.5 * (x + 1.0)
    w = 0.5 * w
    pts = []
    wts = []
    for i, j, k in product(range(n), repeat=3):
        u, v, s = x[i], x[j], x[k]
        pts.append([u, (1.0 - u) * v, (1.0 - u) * (1.0 - v) * s])
        wts.append(w[i] * w[j] * w[k] * (1.0 - u) ** 2 * (1.0 - v))
    return np.array(pts), np.array(wts)


def _tetrahedron(order):
    if order <= 1:
        return np.array([[0.25, 0.25, 0.25]]), np.array([1.0 / 6.0])
    if order == 2:
        a = (5.0 + 3.0 * np.sqrt(5.0)) / 20.0
        b = (5.0 - np.sqrt(5.0)) / 20.0
        pts = np.array([[b, b, b], [a, b, b], [b, a, b], [b, b, a]])
        return pts, np.full(4, 1.0 / 24.0)
    return _collapsed_tetrahedron(order)


@lru_cache(maxsize=None)
def quadrature_rule(kind, order):
    """Quadrature rule exact to polynomial degree `order` for the element domain"""
    if order < 0:
        raise ValueError(f"Unsupported quadrature order {order}")
    if kind in _BOX_KINDS:
        if order > MAX_BOX_ORDER:
            raise ValueError(
                f"Unsupported quadrature order {order} for {kind} "
                f"(max {MAX_BOX_ORDER})"
            )
        pts, wts = _gauss_box(order, _BOX_KINDS[kind])
    elif kind in _SIMPLEX_KINDS:
        if order > MAX_SIMPLEX_ORDER:
            raise ValueError(
                f"Unsupported quadrature order {order} for {kind} "
                f"(max {MAX_SIMPLEX_ORDER})"
            )
        if _SIMPLEX_KINDS[kind] == 2:
            pts, wts = _triangle(order)
        else:
            pts, wts = _tetrahedron(order)
    else:
        raise ValueError(f"No quadrature for element kind: {kind}")
    pts.setflags(write=False)
    wts.setflags(write=False)
    return QuadratureRule(points=pts, weights=wts, order=order)
