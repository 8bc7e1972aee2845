"""
Solid operator and load on the reference mesh.

P1 velocity makes every material gradient constant per element, so the
deformation gradient F is stored as one (d, d) tensor per element and the
J^{-1} divergence term over the current configuration is evaluated on the
reference mesh as int tr(grad_X v F^{-1}) dX.
"""

from dataclasses import dataclass, field
import logging

import numpy as np
import scipy.sparse as sp

from fem.elements import reference_element, shape_values
from fem.mapping import physical_gradients
from fem.quadrature import quadrature_rule
from fsi_lab.exceptions import DimensionMismatchError, InvertedElementError

logger = logging.getLogger(__name__)

J_TERM_MODES = ('lagged', 'linearized')


@dataclass(frozen=True)
class SolidBlocks:
    """Solid block acting on flattened (component-major) solid nodal vectors"""
    A: sp.csr_matrix = field(repr=False)
    rhs: np.ndarray = field(repr=False)


def _simplex_kind(dim):
    return 'p1_triangle' if dim == 2 else 'p1_tetrahedron'


def reference_gradients(mesh):
    """Per-element P1 gradients with respect to X, shape (E, d+1, d)"""
    elem = reference_element(_simplex_kind(mesh.dim))
    _, ref = shape_values(elem, np.full(mesh.dim, 1.0 / (mesh.dim + 1)))
    grads, _ = physical_gradients(mesh.reference_coords[mesh.connectivity], ref)
    return grads


def material_gradient(mesh, u_solid, grads=None):
    """grad_X u per element, (E, d, d) with [e, i, a] = d u_i / d X_a"""
    u = np.asarray(u_solid, dtype=float)
    if u.shape != (mesh.n_nodes, mesh.dim):
        raise DimensionMismatchError(
            f"Solid field must have shape {(mesh.n_nodes, mesh.dim)}, got {u.shape}"
        )
    G = reference_gradients(mesh) if grads is None else grads
    return np.einsum('eni,ena->eia', u[mesh.connectivity], G)


def check_deformation(F, label='F'):
    """Raise InvertedElementError on the first element with det F <= 0"""
    det = np.linalg.det(F)
    bad = np.flatnonzero(det <= 0.0)
    if len(bad):
        element = int(bad[0])
        raise InvertedElementError(
            f"det({label}) = {det[element]:.3e} on solid element {element}",
            element=element,
        )
    return det


def _vector_indices(mesh):
    conn = mesh.connectivity
    offsets = np.arange(mesh.dim)[:, None] * mesh.n_nodes
    return (offsets[None, :, :] + conn[:, None, :]).reshape(len(conn), -1)


def _scatter(idx, blocks, size):
    E, m = idx.shape
    rows = np.broadcast_to(idx[:, :, None], (E, m, m)).ravel()
    cols = np.broadcast_to(idx[:, None, :], (E, m, m)).ravel()
    return sp.coo_matrix((np.asarray(blocks).ravel(), (rows, cols)), shape=(size, size)).tocsr()


def solid_mass_matrix(mesh):
    """Scalar mass matrix on the reference mesh, exact order-2 quadrature"""
    elem = reference_element(_simplex_kind(mesh.dim))
    rule = quadrature_rule(elem.kind, 2)
    values, _ = shape_values(elem, rule.points)
    ref_measure = rule.weights.sum()
    local = np.einsum('q,qa,qb->ab', rule.weights, values, values) / ref_measure
    blocks = mesh.reference_measures[:, None, None] * local
    return _scatter(mesh.connectivity, blocks, mesh.n_nodes)


def solid_stiffness_matrix(mesh, grads=None):
    """Scalar reference Laplacian K_X[a, b] = int grad_X phi_a . grad_X phi_b dX"""
    G = reference_gradients(mesh) if grads is None else grads
    blocks = mesh.reference_measures[:, None, None] * np.einsum('ead,ebd->eab', G, G)
    return _scatter(mesh.connectivity, blocks, mesh.n_nodes)


def j_term_matrix(mesh, F, grads=None):
    """Vector matrix G[v, u] = int tr(grad_X v F^{-1} grad_X u F^{-1}) dX"""
    G = reference_gradients(mesh) if grads is None else grads
    g = np.einsum('ena,eaj->enj', G, np.linalg.inv(F))
    blocks = np.einsum('e,eaj,ebi->eiajb', mesh.reference_measures, g, g)
    idx = _vector_indices(mesh)
    return _scatter(idx, blocks.reshape(len(G), idx.shape[1], idx.shape[1]),
                    mesh.dim * mesh.n_nodes)


def stress_load(mesh, S, grads=None):
    """Flattened load L[(i, a)] = int S : grad_X (phi_a e_i) dX for per-element S"""
    G = reference_gradients(mesh) if grads is None else grads
    local = np.einsum('e,eil,enl->ein', mesh.reference_measures, S, G)
    load = np.zeros(mesh.dim * mesh.n_nodes)
    np.add.at(load, _vector_indices(mesh).ravel(), local.reshape(-1))
    return load


def assemble_solid_operator(mesh, F_n, params, dt, u_n_solid, F_iterate,
                            j_term='lagged', u_iterate_solid=None):
    """Solid block and load for one linear solve.

    A_s = (rho_delta/dt) M_s + c1 dt K_X, plus c1 dt G(F_iterate) when the
    J^{-1} term is linearized about the iterate.
    rhs_s = (rho_delta/dt) M_s u_n + c1 int (F_iterate^{-T} - F_n) : grad_X v dX,
    plus c1 dt G(F_iterate) u_iterate when linearized.
    """
    if not dt > 0.0:
        raise ValueError(f"Time step must be positive, got {dt}")
    if j_term not in J_TERM_MODES:
        raise ValueError(f"Unknown J-term mode: {j_term}")
    F_n = np.asarray(F_n, dtype=float)
    F_iterate = np.asarray(F_iterate, dtype=float)
    expected = (mesh.n_elements, mesh.dim, mesh.dim)
    if F_n.shape != expected or F_iterate.shape != expected:
        raise DimensionMismatchError(f"Deformation gradients must have shape {expected}")
    check_deformation(F_iterate)

    d = mesh.dim
    grads = reference_gradients(mesh)
    identity = sp.identity(d, format='csr')
    M = sp.kron(identity, solid_mass_matrix(mesh), format='csr')
    K = sp.kron(identity, solid_stiffness_matrix(mesh, grads), format='csr')
    A = (params.rho_delta / dt) * M + (params.c1 * dt) * K

    u_n_flat = np.asarray(u_n_solid, dtype=float).ravel(order='F')
    if len(u_n_flat) != d * mesh.n_nodes:
        raise DimensionMismatchError("Solid velocity does not match the solid mesh")
    S = np.transpose(np.linalg.inv(F_iterate), (0, 2, 1)) - F_n
    rhs = (params.rho_delta / dt) * (M @ u_n_flat) + params.c1 * stress_load(mesh, S, grads)

    if j_term == 'linearized' and params.c1 > 0.0:
        Gj = j_term_matrix(mesh, F_iterate, grads)
        A = A + (params.c1 * dt) * Gj
        if u_iterate_solid is not None:
            rhs = rhs + (params.c1 * dt) * (Gj @ np.asarray(u_iterate_solid, dtype=float).ravel(order='F'))
    return SolidBlocks(A=A.tocsr(), rhs=rhs)
