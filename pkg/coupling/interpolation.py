"""
Interpolation of the fluid velocity onto solid nodes.

Row i of the coupling matrix holds the fluid basis functions evaluated at
solid node i, so P u gives the solid nodal velocities and P^T carries solid
dual quantities (loads, matrix blocks) back to fluid velocity coefficients.

Vector fields are (N, d) arrays. Flattened velocity vectors are
component-major: entry i * N + node holds component i of that node.
"""

from dataclasses import dataclass, field
import logging

import numpy as np
import scipy.sparse as sp

from fem.elements import reference_element, shape_values
from fsi_lab.exceptions import DimensionMismatchError
from meshing.grids import locate_points

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class CouplingMatrix:
    """Scalar interpolation operator, shape (solid nodes, fluid velocity nodes)"""
    matrix: sp.csr_matrix = field(repr=False)
    dim: int
    cells: np.ndarray = field(repr=False)
    local_coords: np.ndarray = field(repr=False)

    @property
    def shape(self):
        return self.matrix.shape

    @property
    def n_solid(self):
        return self.matrix.shape[0]

    @property
    def n_fluid(self):
        return self.matrix.shape[1]

    def vector_operator(self):
        """Componentwise operator on flattened (component-major) vector fields"""
        return sp.kron(sp.identity(self.dim, format='csr'), self.matrix, format='csr')


def build_coupling(grid, solid_coords):
    """Evaluate the Q2 basis of the containing cell at every solid node.

    `solid_coords` is an (N^s, d) array or a SolidMesh, whose current
    coordinates are used. Raises PointLocationError for nodes outside the grid.
    """
    coords = getattr(solid_coords, 'current_coords', solid_coords)
    coords = np.asarray(coords, dtype=float)
    if coords.ndim != 2 or coords.shape[1] != grid.dim:
        raise DimensionMismatchError(
            f"Solid nodes must be {grid.dim}D, got array of shape {coords.shape}"
        )
    cells, local = locate_points(grid, coords)
    elem = reference_element('q2_quad' if grid.dim == 2 else 'q2_hex')
    values, _ = shape_values(elem, local)

    rows = np.repeat(np.arange(len(coords)), elem.node_count)
    cols = grid.velocity_connectivity[cells].ravel()
    matrix = sp.csr_matrix(
        (values.ravel(), (rows, cols)),
        shape=(len(coords), grid.n_velocity_nodes),
    )
    matrix.sum_duplicates()
    logger.debug("Coupling matrix %s with %d nonzeros", matrix.shape, matrix.nnz)
    return CouplingMatrix(matrix=matrix, dim=grid.dim, cells=cells, local_coords=local)


def interpolate_to_solid(P, fluid_field):
    """Fluid nodal vectors (N^u, d) to solid nodal vectors (N^s, d)"""
    field_ = np.asarray(fluid_field, dtype=float)
    if field_.shape[0] != P.n_fluid:
        raise DimensionMismatchError(
            f"Fluid field has {field_.shape[0]} nodes, coupling expects {P.n_fluid}"
        )
    return P.matrix @ field_


def gather_to_fluid(P, solid_dual):
    """Transpose application.

    Nodal arrays (N^s, d) return (N^u, d). A sparse matrix block acting on
    flattened solid vectors, (d N^s, d N^s), returns the triple product
    P^T A P of shape (d N^u, d N^u); a scalar block (N^s, N^s) returns
    the scalar triple product.
    """
    if sp.issparse(solid_dual):
        block = solid_dual.tocsr()
        if block.shape == (P.n_solid, P.n_solid):
            op = P.matrix
        elif block.shape == (P.dim * P.n_solid, P.dim * P.n_solid):
            op = P.vector_operator()
        else:
            raise DimensionMismatchError(
                f"Solid block of shape {block.shape} does not match coupling {P.shape}"
            )
        return (op.T @ block @ op).tocsr()

    dual = np.asarray(solid_dual, dtype=float)
    if dual.shape[0] != P.n_solid:
        raise DimensionMismatchError(
            f"Solid data has {dual.shape[0]} nodes, coupling expects {P.n_solid}"
        )
    return P.matrix.T @ dual
