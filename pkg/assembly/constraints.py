"""
Boundary, periodic and pressure-gauge constraints by elimination.

Constraints are collected into a sparse prolongation T from free unknowns to
the full layout: wall nodes lose every velocity component, symmetry faces
lose the normal component, periodic slaves share their master's unknowns and
pinned pressures are dropped. The constrained operator is T^T K T.
"""

from dataclasses import dataclass, field
import logging

import numpy as np
import scipy.sparse as sp

from fsi_lab.exceptions import ConstraintConflictError
from meshing.grids import AXES, face_names
from .system import GlobalSystem

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class ConstraintInfo:
    prolongation: sp.csr_matrix = field(repr=False)
    n_velocity_free: int
    pinned_pressures: tuple
    vertex_weights: np.ndarray = field(repr=False, default=None)
    cell_weight: float = 0.0

    def expand(self, y):
        return self.prolongation @ y


def _periodic_masters(shape, periodic_axes):
    """Index of the master node for every lattice node (itself if not a slave)"""
    idx = np.indices(shape)
    for axis in periodic_axes:
        idx[axis] = np.where(idx[axis] == shape[axis] - 1, 0, idx[axis])
    flat = np.ravel_multi_index(tuple(idx), shape, order='F')
    return flat.reshape(-1, order='F')


def velocity_constraints(grid):
    """Per (component, node) master dof, -1 where the dof is fixed to zero"""
    shape = grid.velocity_shape
    n = grid.n_velocity_nodes
    fixed = np.zeros((grid.dim, n), dtype=bool)
    for face in face_names(grid.dim):
        tag = grid.boundary_tags[face]
        nodes = grid.face_nodes(face)
        if tag == 'wall':
            fixed[:, nodes] = True
        elif tag == 'symmetry':
            fixed[AXES.index(face[0]), nodes] = True

    masters = _periodic_masters(shape, grid.periodic_axes)
    slaves = np.flatnonzero(masters != np.arange(n))
    for component in range(grid.dim):
        clash = fixed[component, slaves] != fixed[component, masters[slaves]]
        if np.any(clash):
            node = int(slaves[np.flatnonzero(clash)[0]])
            raise ConstraintConflictError(
                f"Velocity component {component} of node {node} is constrained "
                f"differently from its periodic partner {int(masters[node])}"
            )

    dofs = np.arange(grid.dim)[:, None] * n + masters[None, :]
    dofs[fixed] = -1
    return dofs.ravel()


def _prolongation(master_of, n_full):
    """Sparse 0/1 map from free unknowns to the full vector"""
    kept = master_of >= 0
    free_ids, inverse = np.unique(master_of[kept], return_inverse=True)
    rows = np.flatnonzero(kept)
    T = sp.csr_matrix((np.ones(len(rows)), (rows, inverse)), shape=(n_full, len(free_ids)))
    return T


def vertex_weights(grid):
    """int psi_v over the grid for each Q1 vertex function"""
    counts = np.bincount(grid.pressure_connectivity.ravel(), minlength=grid.n_pressure_vertices)
    return counts * grid.cell_measure / 2 ** grid.dim


def constraint_map(grid, dof_map, with_pressure=True):
    """Full-layout master index per unknown (-1 when eliminated) and pinned pressures"""
    velocity = velocity_constraints(grid)
    if not np.any(velocity >= 0):
        raise ConstraintConflictError("Boundary conditions leave no free velocity unknowns")
    if not with_pressure:
        return velocity, ()

    vertex_master = _periodic_masters(grid.pressure_shape, grid.periodic_axes)
    pinned = [int(vertex_master[0])]
    pressure = dof_map.n_velocity + vertex_master
    pressure[vertex_master == pinned[0]] = -1
    parts = [velocity, pressure]
    if dof_map.enriched:
        cells = dof_map.n_velocity + dof_map.n_pressure_vertices + np.arange(dof_map.n_pressure_cells)
        cells[0] = -1
        pinned.append(dof_map.n_pressure_vertices)
        parts.append(cells)
    return np.concatenate(parts), tuple(pinned)


def apply_constraints(system, grid):
    """Restrict the system to free unknowns.

    Fixed velocities are zero, so eliminating them equals identity rows with
    zero right-hand side. Pressure is pinned at one vertex (and one cell with
    the enriched space); `remove_pressure_mean` restores zero mean afterwards.
    """
    dof_map = system.dof_map
    with_pressure = system.size == dof_map.n_total
    master_of, pinned = constraint_map(grid, dof_map, with_pressure)
    if len(master_of) != system.size:
        raise ConstraintConflictError(
            f"Constraint layout has {len(master_of)} unknowns, system has {system.size}"
        )
    T = _prolongation(master_of, system.size)
    n_velocity_free = len(np.unique(master_of[:dof_map.n_velocity][master_of[:dof_map.n_velocity] >= 0]))
    reduced = (T.T @ system.matrix @ T).tocsr()
    rhs = T.T @ system.rhs
    info = ConstraintInfo(
        prolongation=T,
        n_velocity_free=n_velocity_free,
        pinned_pressures=pinned,
        vertex_weights=vertex_weights(grid) if with_pressure else None,
        cell_weight=grid.cell_measure,
    )
    logger.debug(
        "Constrained system: %d of %d unknowns free, pinned pressures %s",
        reduced.shape[0], system.size, pinned,
    )
    return GlobalSystem(matrix=reduced, rhs=rhs, dof_map=dof_map, constraint_info=info)


def remove_pressure_mean(p, dof_map, info):
    """Shift the vertex pressures so the total discrete pressure has zero mean"""
    p = np.array(p, dtype=float)
    nv = dof_map.n_pressure_vertices
    weights = info.vertex_weights
    total = weights @ p[:nv]
    if dof_map.enriched:
        total += info.cell_weight * p[nv:].sum()
    p[:nv] -= total / weights.sum()
    return p
