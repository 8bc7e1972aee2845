"""
Fluid operator blocks on the structured Q2 grid.

All cells are translates of one box, so shape function gradients and
jacobians are computed once and the per-cell element matrices are scattered
into the global sparse blocks with one COO construction per block.
"""

from dataclasses import dataclass, field
import logging

import numpy as np
import scipy.sparse as sp

from fem.elements import reference_element, shape_values
from fem.mapping import physical_gradients
from fem.quadrature import quadrature_rule
from fsi_lab.exceptions import DimensionMismatchError

logger = logging.getLogger(__name__)

CONVECTION_FORMS = ('picard', 'skew')
QUADRATURE_ORDER = 5


@dataclass(frozen=True)
class CellTables:
    """Basis data at the quadrature points of one grid cell"""
    values: np.ndarray
    gradients: np.ndarray
    weights: np.ndarray  # quadrature weight times jacobian determinant
    pressure_values: np.ndarray


@dataclass(frozen=True)
class FluidBlocks:
    A: sp.csr_matrix = field(repr=False)
    B: sp.csr_matrix = field(repr=False)
    rhs: np.ndarray = field(repr=False)


def cell_tables(grid):
    dim = grid.dim
    elem = reference_element('q2_quad' if dim == 2 else 'q2_hex')
    rule = quadrature_rule(elem.kind, QUADRATURE_ORDER)
    values, ref_grads = shape_values(elem, rule.points)
    coords = grid.velocity_nodes[grid.velocity_connectivity[0]]
    grads, det = physical_gradients(coords[None], ref_grads)
    pressure_elem = reference_element('q1_quad' if dim == 2 else 'q1_hex')
    pressure_values, _ = shape_values(pressure_elem, rule.points)
    return CellTables(
        values=values,
        gradients=grads[0],
        weights=rule.weights * det[0],
        pressure_values=pressure_values,
    )


def _vector_indices(grid):
    """Global component-major dof of local (component, node) pairs, (E, d * 3^d)"""
    conn = grid.velocity_connectivity
    offsets = np.arange(grid.dim)[:, None] * grid.n_velocity_nodes
    return (offsets[None, :, :] + conn[:, None, :]).reshape(len(conn), -1)


def _scatter(row_idx, col_idx, blocks, shape):
    E, m = row_idx.shape
    n = col_idx.shape[1]
    blocks = np.broadcast_to(blocks, (E, m, n))
    rows = np.broadcast_to(row_idx[:, :, None], (E, m, n)).ravel()
    cols = np.broadcast_to(col_idx[:, None, :], (E, m, n)).ravel()
    return sp.coo_matrix((blocks.ravel(), (rows, cols)), shape=shape).tocsr()


def _vectorize(scalar, dim):
    return sp.kron(sp.identity(dim, format='csr'), scalar, format='csr')


def mass_matrix(grid, tables=None):
    """Scalar Q2 mass matrix M[a, b] = int phi_a phi_b"""
    t = tables or cell_tables(grid)
    local = np.einsum('q,qa,qb->ab', t.weights, t.values, t.values)
    conn = grid.velocity_connectivity
    n = grid.n_velocity_nodes
    return _scatter(conn, conn, local, (n, n))


def viscous_matrix(grid, tables=None):
    """Vector operator K_D with u^T K_D v = int D(u) : D(v), D(u) = grad u + grad u^T"""
    t = tables or cell_tables(grid)
    d = grid.dim
    G = t.gradients
    lap = np.einsum('q,qad,qbd->ab', t.weights, G, G)
    cross = np.einsum('q,qaj,qbi->iajb', t.weights, G, G)
    local = 2.0 * (np.einsum('ij,ab->iajb', np.eye(d), lap) + cross)
    idx = _vector_indices(grid)
    n = d * grid.n_velocity_nodes
    return _scatter(idx, idx, local.reshape(idx.shape[1], idx.shape[1]), (n, n))


def divergence_matrix(grid, pressure_space='p1', tables=None):
    """B[p, (i, b)] = -int psi_p d_i phi_b over vertex (and optionally cell) pressures"""
    t = tables or cell_tables(grid)
    vertex_local = -np.einsum('q,qp,qbi->pib', t.weights, t.pressure_values, t.gradients)
    idx = _vector_indices(grid)
    width = idx.shape[1]
    n_cols = grid.dim * grid.n_velocity_nodes
    B = _scatter(grid.pressure_connectivity, idx, vertex_local.reshape(-1, width),
                 (grid.n_pressure_vertices, n_cols))
    if pressure_space == 'p1_p0':
        cell_local = -np.einsum('q,qbi->ib', t.weights, t.gradients).reshape(1, width)
        cells = np.arange(grid.n_cells)[:, None]
        B_cell = _scatter(cells, idx, cell_local, (grid.n_cells, n_cols))
        B = sp.vstack([B, B_cell], format='csr')
    elif pressure_space != 'p1':
        raise ValueError(f"Unknown pressure space: {pressure_space}")
    return B


def convection_matrix(grid, u_advect, form='skew', tables=None):
    """Scalar convection operator N[a, b] = int phi_a (w . grad phi_b).

    The skew form returns (N - N^T) / 2, for which u^T C u = 0 for every u.
    """
    if form not in CONVECTION_FORMS:
        raise ValueError(f"Unknown convection form: {form}")
    t = tables or cell_tables(grid)
    w_nodes = np.asarray(u_advect, dtype=float)
    if w_nodes.shape != (grid.n_velocity_nodes, grid.dim):
        raise DimensionMismatchError(
            f"Advecting field must have shape {(grid.n_velocity_nodes, grid.dim)}, "
            f"got {w_nodes.shape}"
        )
    conn = grid.velocity_connectivity
    w = np.einsum('qc,ecd->eqd', t.values, w_nodes[conn])
    local = np.einsum('q,qa,eqd,qbd->eab', t.weights, t.values, w, t.gradients)
    n = grid.n_velocity_nodes
    N = _scatter(conn, conn, local, (n, n))
    if form == 'skew':
        N = (0.5 * (N - N.T)).tocsr()
    return N


def assemble_fluid_operator(grid, params, dt, u_n, u_advect, pressure_space='p1',
                            convection='skew'):
    """A_f = (rho/dt) M + rho C(u_advect) + (mu/2) K_D, B, rhs_f = (rho/dt) M u_n"""
    if not dt > 0.0:
        raise ValueError(f"Time step must be positive, got {dt}")
    tables = cell_tables(grid)
    d = grid.dim
    M = _vectorize(mass_matrix(grid, tables), d)
    C = _vectorize(convection_matrix(grid, u_advect, convection, tables), d)
    K = viscous_matrix(grid, tables)
    A = (params.rho_f / dt) * M + params.rho_f * C + (0.5 * params.mu_f) * K
    B = divergence_matrix(grid, pressure_space, tables)
    u_flat = np.asarray(u_n, dtype=float).ravel(order='F')
    if len(u_flat) != M.shape[0]:
        raise DimensionMismatchError(
            f"Velocity has {len(u_flat)} coefficients, grid has {M.shape[0]}"
        )
    rhs = (params.rho_f / dt) * (M @ u_flat)
    logger.debug("Fluid blocks: A %s nnz=%d, B %s", A.shape, A.nnz, B.shape)
    return FluidBlocks(A=A.tocsr(), B=B, rhs=rhs)


def mass_only_operator(grid, params, dt, u_n, u_advect, convection='skew'):
    """Velocity block of the convection substep: (rho/dt) M + rho C(u_advect)"""
    tables = cell_tables(grid)
    d = grid.dim
    M = _vectorize(mass_matrix(grid, tables), d)
    C = _vectorize(convection_matrix(grid, u_advect, convection, tables), d)
    u_flat = np.asarray(u_n, dtype=float).ravel(order='F')
    return ((params.rho_f / dt) * M + params.rho_f * C).tocsr(), (params.rho_f / dt) * (M @ u_flat)
