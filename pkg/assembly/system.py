"""
Global saddle-point system: degree-of-freedom layout and the fluid/solid merge.

Unknown ordering is [velocity (component-major), vertex pressures, cell
pressures]; the cell block is empty unless the pressure space is enriched.
"""

from dataclasses import dataclass, field
import logging

import numpy as np
import scipy.sparse as sp

from coupling.interpolation import gather_to_fluid
from fsi_lab.exceptions import DimensionMismatchError

logger = logging.getLogger(__name__)

PRESSURE_SPACES = ('p1', 'p1_p0')


@dataclass(frozen=True)
class DofMap:
    dim: int
    n_velocity_nodes: int
    n_pressure_vertices: int
    n_pressure_cells: int = 0

    @classmethod
    def for_grid(cls, grid, pressure_space='p1'):
        if pressure_space not in PRESSURE_SPACES:
            raise ValueError(f"Unknown pressure space: {pressure_space}")
        cells = grid.n_cells if pressure_space == 'p1_p0' else 0
        return cls(grid.dim, grid.n_velocity_nodes, grid.n_pressure_vertices, cells)

    @property
    def n_velocity(self):
        return self.dim * self.n_velocity_nodes

    @property
    def n_pressure(self):
        return self.n_pressure_vertices + self.n_pressure_cells

    @property
    def n_total(self):
        return self.n_velocity + self.n_pressure

    @property
    def enriched(self):
        return self.n_pressure_cells > 0

    def velocity_dof(self, component, node):
        return component * self.n_velocity_nodes + node

    def flatten_velocity(self, u):
        """(N^u, d) nodal vectors to the component-major coefficient vector"""
        return np.asarray(u, dtype=float).ravel(order='F')

    def unflatten_velocity(self, flat):
        return np.asarray(flat).reshape((self.n_velocity_nodes, self.dim), order='F')

    def split(self, x):
        """Full solution vector to ((N^u, d) velocity, pressure coefficients)"""
        if len(x) != self.n_total:
            raise DimensionMismatchError(
                f"Solution has {len(x)} entries, layout expects {self.n_total}"
            )
        return self.unflatten_velocity(x[:self.n_velocity]), np.array(x[self.n_velocity:])


@dataclass(frozen=True)
class GlobalSystem:
    """Sparse saddle-point operator [[A, B^T], [B, 0]] with its right-hand side.

    After `apply_constraints` the matrix and rhs act on free unknowns only and
    `constraint_info` carries the map back to the full layout.
    """
    matrix: sp.csr_matrix = field(repr=False)
    rhs: np.ndarray = field(repr=False)
    dof_map: DofMap
    constraint_info: object = None

    @property
    def size(self):
        return self.matrix.shape[0]


def merge_systems(fluid, dof_map, solid=None, P=None):
    """Add the coupled solid block P^T A_s P and load P^T b_s to the fluid blocks"""
    A = fluid.A
    rhs_u = fluid.rhs
    if A.shape != (dof_map.n_velocity, dof_map.n_velocity):
        raise DimensionMismatchError(
            f"Fluid block {A.shape} does not match {dof_map.n_velocity} velocity unknowns"
        )
    if fluid.B.shape != (dof_map.n_pressure, dof_map.n_velocity):
        raise DimensionMismatchError(
            f"Divergence block {fluid.B.shape} does not match the pressure layout"
        )
    if solid is not None:
        if P is None:
            raise DimensionMismatchError("Merging a solid block needs a coupling matrix")
        if P.n_fluid != dof_map.n_velocity_nodes:
            raise DimensionMismatchError(
                f"Coupling has {P.n_fluid} fluid nodes, layout has {dof_map.n_velocity_nodes}"
            )
        A = A + gather_to_fluid(P, solid.A)
        solid_rhs = solid.rhs.reshape((P.n_solid, P.dim), order='F')
        rhs_u = rhs_u + dof_map.flatten_velocity(gather_to_fluid(P, solid_rhs))

    matrix = sp.bmat([[A, fluid.B.T], [fluid.B, None]], format='csr')
    rhs = np.concatenate([rhs_u, np.zeros(dof_map.n_pressure)])
    logger.debug("Global system %d x %d, %d nonzeros", *matrix.shape, matrix.nnz)
    return GlobalSystem(matrix=matrix, rhs=rhs, dof_map=dof_map)
