"""
Structured Eulerian fluid grid of Q2 cells with Q1(+P0) pressure lattice.

Lattice and cell numbering is lexicographic with the x axis running fastest
(Fortran order on the per-axis shape), so a Q2 cell's nine (or 27) velocity
nodes appear in the same order as the reference element nodes.
"""

from dataclasses import dataclass, field
import logging

import numpy as np

from fsi_lab.exceptions import MeshError, PointLocationError

logger = logging.getLogger(__name__)

AXES = 'xyz'
BOUNDARY_TAGS = ('wall', 'periodic', 'symmetry')
DEFAULT_BOUNDARY_EPS = 1e-12


def face_names(dim):
    """Boundary face labels for a box of the given dimension"""
    return [f'{AXES[a]}{side}' for a in range(dim) for side in ('-', '+')]


def partner_face(face):
    return face[0] + ('+' if face[1] == '-' else '-')


@dataclass(frozen=True)
class FluidGrid:
    """Fixed structured grid of identical axis-aligned boxes"""
    dim: int
    lower: np.ndarray
    upper: np.ndarray
    cells_per_axis: tuple
    boundary_tags: dict
    boundary_eps: float = DEFAULT_BOUNDARY_EPS
    velocity_nodes: np.ndarray = field(repr=False, default=None)
    pressure_vertex_nodes: np.ndarray = field(repr=False, default=None)
    velocity_connectivity: np.ndarray = field(repr=False, default=None)
    pressure_connectivity: np.ndarray = field(repr=False, default=None)

    def __str__(self):
        cells = 'x'.join(str(n) for n in self.cells_per_axis)
        return f"FluidGrid {cells} on {self.lower.tolist()}-{self.upper.tolist()}"

    @property
    def spacing(self):
        return (self.upper - self.lower) / np.asarray(self.cells_per_axis)

    @property
    def velocity_shape(self):
        return tuple(2 * n + 1 for n in self.cells_per_axis)

    @property
    def pressure_shape(self):
        return tuple(n + 1 for n in self.cells_per_axis)

    @property
    def n_cells(self):
        return int(np.prod(self.cells_per_axis))

    @property
    def n_velocity_nodes(self):
        return int(np.prod(self.velocity_shape))

    @property
    def n_pressure_vertices(self):
        return int(np.prod(self.pressure_shape))

    @property
    def cell_measure(self):
        return float(np.prod(self.spacing))

    @property
    def size(self):
        """Largest extent, the length scale for boundary clamping"""
        return float(np.max(self.upper - self.lower))

    @property
    def periodic_axes(self):
        return [a for a in range(self.dim)
                if self.boundary_tags[f'{AXES[a]}-'] == 'periodic']

    def cell_index(self, multi_index):
        """Flat cell number from a per-axis cell index"""
        return int(np.ravel_multi_index(tuple(multi_index), self.cells_per_axis, order='F'))

    def cell_multi_index(self, cell):
        return tuple(int(i) for i in np.unravel_index(cell, self.cells_per_axis, order='F'))

    def face_nodes(self, face, lattice='velocity'):
        """Flat indices of the lattice nodes lying on a boundary face"""
        shape = self.velocity_shape if lattice == 'velocity' else self.pressure_shape
        axis = AXES.index(face[0])
        idx = np.indices(shape)
        position = 0 if face[1] == '-' else shape[axis] - 1
        mask = idx[axis] == position
        flat = np.ravel_multi_index(tuple(i[mask] for i in idx), shape, order='F')
        return np.sort(flat)

    def to_global(self, cells, local):
        """Map local coordinates in [-1, 1]^d of the given flat cells to space"""
        cells = np.atleast_1d(cells)
        local = np.atleast_2d(local)
        multi = np.stack(np.unravel_index(cells, self.cells_per_axis, order='F'), axis=-1)
        return self.lower + (multi + 0.5 * (local + 1.0)) * self.spacing


def _lattice_coords(lower, spacing, shape):
    idx = np.indices(shape).reshape(len(shape), -1, order='F').T
    return lower + idx * spacing


def _cell_connectivity(cells_per_axis, lattice_shape, stride, per_axis):
    dim = len(cells_per_axis)
    n_cells = int(np.prod(cells_per_axis))
    cell_multi = np.stack(np.unravel_index(np.arange(n_cells), cells_per_axis, order='F'), axis=-1)
    local_shape = (per_axis,) * dim
    local = np.stack(np.unravel_index(np.arange(per_axis ** dim), local_shape, order='F'), axis=-1)
    nodes = stride * cell_multi[:, None, :] + local[None, :, :]
    return np.ravel_multi_index(tuple(nodes[..., a] for a in range(dim)),
                                lattice_shape, order='F')


def _resolve_boundary_spec(dim, boundary_spec):
    faces = face_names(dim)
    if boundary_spec is None:
        boundary_spec = 'wall'
    if isinstance(boundary_spec, str):
        tags = {face: boundary_spec for face in faces}
    else:
        unknown = set(boundary_spec) - set(faces)
        if unknown:
            raise MeshError(f"Unknown boundary faces for {dim}D grid: {sorted(unknown)}")
        tags = {face: boundary_spec.get(face, 'wall') for face in faces}

    for face, tag in tags.items():
        if tag not in BOUNDARY_TAGS:
            raise MeshError(f"Unknown boundary tag '{tag}' on face {face}")
        if tag == 'periodic' and tags[partner_face(face)] != 'periodic':
            raise MeshError(
                f"Periodic face {face} needs its partner {partner_face(face)} "
                f"tagged periodic as well"
            )
    return tags


def build_fluid_grid(extents, cells_per_axis, boundary_spec='wall',
                     boundary_eps=DEFAULT_BOUNDARY_EPS):
    """Build the structured Q2 grid.

    extents: per-axis (lower, upper) pairs; cells_per_axis: cell count per axis;
    boundary_spec: one tag for every face or a {face: tag} mapping
    (missing faces default to 'wall').
    """
    extents = np.asarray(extents, dtype=float)
    if extents.ndim != 2 or extents.shape[1] != 2 or extents.shape[0] not in (2, 3):
        raise MeshError("Extents must be (lower, upper) pairs for 2 or 3 axes")
    dim = extents.shape[0]
    cells = tuple(int(n) for n in np.atleast_1d(cells_per_axis))
    if len(cells) == 1:
        cells = cells * dim
    if len(cells) != dim:
        raise MeshError(f"Expected {dim} cell counts, got {len(cells)}")
    if any(n < 2 for n in cells):
        raise MeshError(f"Cell counts must be at least 2 per axis, got {cells}")
    lower, upper = extents[:, 0], extents[:, 1]
    if np.any(upper - lower <= 0.0) or not np.all(np.isfinite(extents)):
        raise MeshError(f"Degenerate grid extents {extents.tolist()}")

    tags = _resolve_boundary_spec(dim, boundary_spec)
    spacing = (upper - lower) / np.asarray(cells)
    velocity_shape = tuple(2 * n + 1 for n in cells)
    pressure_shape = tuple(n + 1 for n in cells)

    grid = FluidGrid(
        dim=dim,
        lower=lower,
        upper=upper,
        cells_per_axis=cells,
        boundary_tags=tags,
        boundary_eps=float(boundary_eps),
        velocity_nodes=_lattice_coords(lower, spacing / 2.0, velocity_shape),
        pressure_vertex_nodes=_lattice_coords(lower, spacing, pressure_shape),
        velocity_connectivity=_cell_connectivity(cells, velocity_shape, 2, 3),
        pressure_connectivity=_cell_connectivity(cells, pressure_shape, 1, 2),
    )
    for arr in (grid.velocity_nodes, grid.pressure_vertex_nodes,
                grid.velocity_connectivity, grid.pressure_connectivity):
        arr.setflags(write=False)
    logger.debug(
        "Built %s: %d velocity nodes, %d pressure vertices",
        grid, grid.n_velocity_nodes, grid.n_pressure_vertices,
    )
    return grid


def locate_points(grid, points):
    """Vectorised point location.

    Returns flat cell indices (N,) and local coordinates (N, d) in [-1, 1]^d.
    Points within `boundary_eps * grid.size` outside the box are clamped onto
    it; anything further out raises PointLocationError naming the point.
    """
    pts = np.atleast_2d(np.asarray(points, dtype=float))
    if pts.shape[1] != grid.dim:
        raise PointLocationError(f"Expected {grid.dim}D points, got {pts.shape[1]}D")
    eps = grid.boundary_eps * grid.size
    outside = np.any((pts < grid.lower - eps) | (pts > grid.upper + eps), axis=1)
    if np.any(outside):
        node = int(np.flatnonzero(outside)[0])
        raise PointLocationError(
            f"Point {node} at {pts[node].tolist()} lies outside the fluid grid",
            node=node,
        )
    pts = np.clip(pts, grid.lower, grid.upper)

    spacing = grid.spacing
    n = np.asarray(grid.cells_per_axis)
    rel = (pts - grid.lower) / spacing
    multi = np.clip(np.floor(rel).astype(int), 0, n - 1)
    local = 2.0 * (rel - multi) - 1.0
    cells = np.ravel_multi_index(tuple(multi.T), grid.cells_per_axis, order='F')
    return cells, local


def locate_point(grid, p):
    """Cell (per-axis index) containing p and p's local coordinates in that cell"""
    cells, local = locate_points(grid, np.asarray(p, dtype=float)[None, :])
    return grid.cell_multi_index(int(cells[0])), local[0]
