"""
Lagrangian solid meshes: P1 triangles (2D) and tetrahedra (3D).

Each mesh carries three coordinate sets over one connectivity: the
stress-free reference configuration X, the initial configuration x0 and
the current configuration x. Connectivity and reference coordinates never
change during a run; `with_current` returns an updated copy.
"""

from dataclasses import dataclass, field, replace
from itertools import permutations
import logging
import math

import numpy as np

from fsi_lab.exceptions import InvertedElementError, MeshError

logger = logging.getLogger(__name__)

SOLID_SHAPES = ('disc', 'quarter_disc', 'ball_octant')
SOLID_DIMS = {'disc': 2, 'quarter_disc': 2, 'ball_octant': 3}


@dataclass(frozen=True)
class SolidMesh:
    dim: int
    reference_coords: np.ndarray = field(repr=False)
    initial_coords: np.ndarray = field(repr=False)
    current_coords: np.ndarray = field(repr=False)
    connectivity: np.ndarray = field(repr=False)
    reference_measures: np.ndarray = field(repr=False)
    center: np.ndarray = None

    def __str__(self):
        return f"SolidMesh {self.dim}D ({self.n_nodes} nodes, {self.n_elements} elements)"

    @property
    def n_nodes(self):
        return len(self.reference_coords)

    @property
    def n_elements(self):
        return len(self.connectivity)

    def coords(self, configuration='current'):
        if configuration == 'reference':
            return self.reference_coords
        if configuration == 'initial':
            return self.initial_coords
        if configuration == 'current':
            return self.current_coords
        raise ValueError(f"Unknown configuration: {configuration}")

    def with_current(self, coords):
        coords = np.array(coords, dtype=float)
        if coords.shape != self.reference_coords.shape:
            raise MeshError(
                f"Current coordinates must have shape {self.reference_coords.shape}, "
                f"got {coords.shape}"
            )
        coords.setflags(write=False)
        return replace(self, current_coords=coords)


def signed_measures(coords, connectivity):
    """Signed area (2D) or volume (3D) of every simplex"""
    verts = np.asarray(coords)[np.asarray(connectivity)]
    edges = verts[:, 1:, :] - verts[:, :1, :]
    dim = edges.shape[-1]
    return np.linalg.det(edges) / math.factorial(dim)


def make_solid_mesh(reference_coords, connectivity, initial_coords=None, center=None):
    """Assemble a SolidMesh, fixing element orientation so every measure is positive.

    Raises MeshError on empty or degenerate input.
    """
    ref = np.array(reference_coords, dtype=float)
    conn = np.array(connectivity, dtype=np.int64)
    if ref.ndim != 2 or ref.shape[1] not in (2, 3):
        raise MeshError("Solid coordinates must be an (N, 2) or (N, 3) array")
    dim = ref.shape[1]
    if conn.ndim != 2 or conn.shape[1] != dim + 1 or len(conn) == 0:
        raise MeshError(f"Solid connectivity must be a non-empty (M, {dim + 1}) array")
    if conn.min() < 0 or conn.max() >= len(ref):
        raise MeshError("Solid connectivity refers to missing nodes")

    measures = signed_measures(ref, conn)
    flip = measures < 0.0
    conn[flip, 0], conn[flip, 1] = conn[flip, 1].copy(), conn[flip, 0].copy()
    measures = np.abs(measures)
    if np.any(measures <= 0.0):
        element = int(np.flatnonzero(measures <= 0.0)[0])
        raise MeshError(f"Degenerate solid element {element}")

    initial = ref.copy() if initial_coords is None else np.array(initial_coords, dtype=float)
    if initial.shape != ref.shape:
        raise MeshError("Initial and reference coordinates differ in shape")
    current = initial.copy()
    for arr in (ref, conn, measures, initial, current):
        arr.setflags(write=False)
    return SolidMesh(
        dim=dim,
        reference_coords=ref,
        initial_coords=initial,
        current_coords=current,
        connectivity=conn,
        reference_measures=measures,
        center=None if center is None else np.asarray(center, dtype=float),
    )


def _stitch(inner, inner_t, outer, outer_t):
    """Triangulate the strip between two node chains with matching parameters in [0, 1]"""
    triangles = []
    i = j = 0
    last_i, last_j = len(inner) - 1, len(outer) - 1
    while i < last_i or j < last_j:
        if j < last_j and (i == last_i or outer_t[j + 1] <= inner_t[i + 1]):
            triangles.append((inner[i], outer[j], outer[j + 1]))
            j += 1
        else:
            triangles.append((inner[i], outer[j], inner[i + 1]))
            i += 1
    return triangles


def _ring_count(radius, target_h):
    if radius <= 0.0 or target_h <= 0.0:
        raise MeshError("Solid radius and target size must be positive")
    if target_h > radius:
        raise MeshError(f"Target size {target_h} exceeds radius {radius}")
    return max(1, math.ceil(radius / target_h - 1e-9))


def _disc(center, radius, rings, closed):
    """Concentric rings; the full disc uses 6k nodes on ring k, the quarter 2k segments"""
    coords = [np.array(center, dtype=float)]
    triangles = []
    prev_ids, prev_t = [0], [0.0]
    for k in range(1, rings + 1):
        r = radius * k / rings
        if closed:
            count = 6 * k
            angles = 2.0 * np.pi * np.arange(count) / count
        else:
            count = 2 * k + 1
            angles = 0.5 * np.pi * np.arange(count) / (count - 1)
        start = len(coords)
        coords.extend(center + r * np.column_stack([np.cos(angles), np.sin(angles)]))
        ids = list(range(start, start + count))
        if closed:
            ids_t = list(np.arange(count + 1) / count)
            ids = ids + [ids[0]]
        else:
            ids_t = list(np.arange(count) / (count - 1))
        inner_ids, inner_t = prev_ids, prev_t
        if closed and k > 1:
            inner_ids = prev_ids + [prev_ids[0]]
            inner_t = prev_t + [1.0]
        if k == 1 and not closed:
            # fan from the center onto the first arc
            triangles.extend((0, ids[a], ids[a + 1]) for a in range(count - 1))
        else:
            triangles.extend(_stitch(inner_ids, inner_t, ids, ids_t))
        if closed:
            prev_ids, prev_t = ids[:-1], ids_t[:-1]
        else:
            prev_ids, prev_t = ids, ids_t
    return np.array(coords), np.array(triangles)


def _ball_octant(center, radius, layers, signs):
    """Freudenthal split of the corner simplex, pushed radially onto the ball octant"""
    index = {}
    lattice = []
    for y0 in range(layers + 1):
        for y1 in range(y0 + 1):
            for y2 in range(y1 + 1):
                index[(y0, y1, y2)] = len(lattice)
                lattice.append((y0, y1, y2))

    tets = []
    unit = np.eye(3, dtype=int)
    for v in np.ndindex(layers, layers, layers):
        for perm in permutations(range(3)):
            path = [np.array(v)]
            for axis in perm:
                path.append(path[-1] + unit[axis])
            keys = [tuple(int(c) for c in p) for p in path]
            if all(key in index for key in keys):
                tets.append([index[key] for key in keys])

    y = np.array(lattice, dtype=float)
    q = np.column_stack([y[:, 0] - y[:, 1], y[:, 1] - y[:, 2], y[:, 2]]) / layers
    l1 = q.sum(axis=1)
    l2 = np.linalg.norm(q, axis=1)
    scale = np.divide(l1, l2, out=np.zeros_like(l1), where=l2 > 0.0)
    coords = center + radius * np.asarray(signs, dtype=float) * q * scale[:, None]
    return coords, np.array(tets)


def build_solid_mesh(shape, center, radius, target_h, octant_signs=(1, 1, 1)):
    """Generate a solid mesh with element size close to target_h.

    disc: 1 + 3K(K+1) nodes and 6K^2 triangles for K = ceil(radius / target_h).
    quarter_disc: the first quadrant about `center`, 1 + K(K+2) nodes, 2K^2 triangles.
    ball_octant: the octant selected by `octant_signs`, (K+1)(K+2)(K+3)/6 nodes
    and K^3 tetrahedra.
    """
    if shape not in SOLID_SHAPES:
        raise MeshError(f"Unknown solid shape: {shape}")
    center = np.asarray(center, dtype=float)
    rings = _ring_count(radius, target_h)
    if shape in ('disc', 'quarter_disc'):
        if center.shape != (2,):
            raise MeshError(f"{shape} needs a 2D center")
        coords, conn = _disc(center, radius, rings, closed=(shape == 'disc'))
    else:
        if center.shape != (3,):
            raise MeshError("ball_octant needs a 3D center")
        if len(octant_signs) != 3 or any(s not in (-1, 1) for s in octant_signs):
            raise MeshError(f"Octant signs must be three of +1/-1, got {octant_signs}")
        coords, conn = _ball_octant(center, radius, rings, octant_signs)

    mesh = make_solid_mesh(coords, conn, center=center)
    logger.info("Generated %s %s with %d rings", shape, mesh, rings)
    return mesh


def apply_stretch(mesh, stretch):
    """Apply the area-preserving stretch diag(s, 1/s) about the mesh center.

    Reference coordinates are left alone, so the stretched state is a
    pre-stressed initial configuration. In 3D the third axis is unchanged.
    """
    if stretch <= 0.0:
        raise MeshError(f"Stretch factor must be positive, got {stretch}")
    center = mesh.center if mesh.center is not None else mesh.reference_coords.mean(axis=0)
    factors = np.ones(mesh.dim)
    factors[0], factors[1] = stretch, 1.0 / stretch
    initial = center + (mesh.initial_coords - center) * factors
    initial.setflags(write=False)
    current = center + (mesh.current_coords - center) * factors
    current.setflags(write=False)
    return replace(mesh, initial_coords=initial, current_coords=current)


def solid_measure(mesh, configuration='current'):
    """Total area/volume of the solid in the given configuration"""
    measures = signed_measures(mesh.coords(configuration), mesh.connectivity)
    if np.any(measures <= 0.0):
        element = int(np.flatnonzero(measures <= 0.0)[0])
        raise InvertedElementError(
            f"Solid element {element} is inverted in the {configuration} configuration",
            element=element,
        )
    return float(measures.sum())
