"""
Reference elements for the fluid and solid discretizations.

Q2 (biquadratic / triquadratic) velocity on the fluid boxes, Q1 vertex pressure
with an optional per-cell constant, and P1 simplices on the solid mesh.
Nodes of the tensor-product elements are ordered lexicographically with the
first axis running fastest, matching the fluid grid connectivity.
"""

from dataclasses import dataclass
from functools import lru_cache
from itertools import product

import numpy as np


ELEMENT_KINDS = (
    'q2_quad',
    'q2_hex',
    'q1_quad',
    'q1_hex',
    'p1_triangle',
    'p1_tetrahedron',
    'pressure_q1_plus_p0',
)


@dataclass(frozen=True)
class ReferenceElement:
    """Reference element description"""
    kind: str
    dim: int
    domain: str  # 'box' or 'simplex'
    node_count: int
    local_node_coords: np.ndarray
    has_constant_mode: bool = False

    def __str__(self):
        return f"{self.kind} ({self.dim}D, {self.node_count} nodes)"


def _lattice(points_per_axis, dim):
    """Lexicographic lattice on [-1, 1]^dim, first axis fastest"""
    axis = np.linspace(-1.0, 1.0, points_per_axis)
    coords = [tuple(axis[i] for i in reversed(idx))
              for idx in product(range(points_per_axis), repeat=dim)]
    return np.array(coords, dtype=float)


@lru_cache(maxsize=None)
def reference_element(kind, dim=2):
    """Build (and cache) the reference element of the given kind.

    `dim` is only consulted for the enriched pressure element, whose
    name does not fix the dimension.
    """
    if kind == 'q2_quad':
        return ReferenceElement(kind, 2, 'box', 9, _lattice(3, 2))
    if kind == 'q2_hex':
        return ReferenceElement(kind, 3, 'box', 27, _lattice(3, 3))
    if kind == 'q1_quad':
        return ReferenceElement(kind, 2, 'box', 4, _lattice(2, 2))
    if kind == 'q1_hex':
        return ReferenceElement(kind, 3, 'box', 8, _lattice(2, 3))
    if kind == 'p1_triangle':
        coords = np.array([[0.0, 0.0], [1.0, 0.0], [0.0, 1.0]])
        return ReferenceElement(kind, 2, 'simplex', 3, coords)
    if kind == 'p1_tetrahedron':
        coords = np.array([[0.0, 0.0, 0.0], [1.0, 0.0, 0.0],
                           [0.0, 1.0, 0.0], [0.0, 0.0, 1.0]])
        return ReferenceElement(kind, 3, 'simplex', 4, coords)
    if kind == 'pressure_q1_plus_p0':
        if dim not in (2, 3):
            raise ValueError(f"Unsupported dimension {dim} for {kind}")
        vertices = _lattice(2, dim)
        coords = np.vstack([vertices, np.zeros((1, dim))])
        return ReferenceElement(kind, dim, 'box', len(coords), coords,
                                has_constant_mode=True)
    raise ValueError(f"Unknown element kind: {kind}")


def _lagrange_1d(s, order):
    """1D Lagrange values and derivatives on equispaced nodes of [-1, 1]"""
    if order == 1:
        values = np.stack([(1.0 - s) / 2.0, (1.0 + s) / 2.0], axis=-1)
        derivs = np.stack([np.full_like(s, -0.5), np.full_like(s, 0.5)], axis=-1)
    else:
        values = np.stack([s * (s - 1.0) / 2.0, 1.0 - s * s, s * (s + 1.0) / 2.0], axis=-1)
        derivs = np.stack([s - 0.5, -2.0 * s, s + 0.5], axis=-1)
    return values, derivs


def _tensor_shape(local, order):
    """Tensor-product Lagrange basis for a batch of points (q, dim)"""
    q, dim = local.shape
    per_axis = order + 1
    vals_1d, ders_1d = zip(*(_lagrange_1d(local[:, a], order) for a in range(dim)))

    node_count = per_axis ** dim
    values = np.ones((q, node_count))
    grads = np.ones((q, node_count, dim))
    for node, idx in enumerate(product(range(per_axis), repeat=dim)):
        idx = tuple(reversed(idx))  # first axis fastest
        for a in range(dim):
            values[:, node] *= vals_1d[a][:, idx[a]]
            for b in range(dim):
                factor = ders_1d[a][:, idx[a]] if a == b else vals_1d[a][:, idx[a]]
                grads[:, node, b] *= factor
    return values, grads


def _simplex_shape(local):
    q, dim = local.shape
    values = np.column_stack([1.0 - local.sum(axis=1), local])
    grads = np.zeros((q, dim + 1, dim))
    grads[:, 0, :] = -1.0
    grads[:, 1:, :] = np.eye(dim)
    return values, grads


def shape_values(elem, local):
    """Basis values and reference gradients at one or more reference points.

    `local` of shape (dim,) returns (node_count,) values and (node_count, dim)
    gradients; shape (q, dim) returns the batched (q, ...) arrays.
    """
    local = np.asarray(local, dtype=float)
    single = local.ndim == 1
    pts = np.atleast_2d(local)
    if pts.shape[1] != elem.dim:
        raise ValueError(f"{elem.kind} expects {elem.dim}D reference points")

    if elem.kind in ('q2_quad', 'q2_hex'):
        values, grads = _tensor_shape(pts, 2)
    elif elem.kind in ('q1_quad', 'q1_hex'):
        values, grads = _tensor_shape(pts, 1)
    elif elem.kind == 'pressure_q1_plus_p0':
        values, grads = _tensor_shape(pts, 1)
        values = np.column_stack([values, np.ones(len(pts))])
        grads = np.concatenate([grads, np.zeros((len(pts), 1, elem.dim))], axis=1)
    else:
        values, grads = _simplex_shape(pts)

    if single:
        return values[0], grads[0]
    return values, grads
