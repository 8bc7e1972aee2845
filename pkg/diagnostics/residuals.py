"""
Residual terms of the discrete energy balance.
"""

from dataclasses import dataclass

import numpy as np

from assembly.fluid import convection_matrix
from assembly.solid import check_deformation


@dataclass(frozen=True)
class ResidualTerms:
    R_im: float = 0.0
    R_ex: float = 0.0
    R_split: float = 0.0

    @property
    def total(self):
        return self.R_im + self.R_ex + self.R_split


def residual_implicit(F_next, grad_u, reference_measures, c1, dt):
    """(c1 dt^2 / 2) int (|F_next^{-1} grad_u|^2 - |grad_u|^2) dX"""
    F_next = np.asarray(F_next, dtype=float)
    grad_u = np.asarray(grad_u, dtype=float)
    check_deformation(F_next, 'F_next')
    pulled = np.linalg.solve(F_next, grad_u)
    density = np.sum(pulled ** 2, axis=(1, 2)) - np.sum(grad_u ** 2, axis=(1, 2))
    return 0.5 * c1 * dt ** 2 * float(density @ np.asarray(reference_measures))


def divergence_gap(F_prev, F_next, grad_u, reference_measures, c1, dt):
    """c1 dt int (tr(grad_u F_prev^{-1}) - tr(grad_u F_next^{-1})) dX"""
    before = np.einsum('eij,eji->e', grad_u, np.linalg.inv(F_prev))
    after = np.einsum('eij,eji->e', grad_u, np.linalg.inv(F_next))
    return c1 * dt * float((before - after) @ np.asarray(reference_measures))


def splitting_residual(grid, u_half, u_next, rho_f, dt):
    """-dt rho int (u_half . grad) u_half . u_next dx"""
    N = convection_matrix(grid, u_half, 'picard')
    u_half = np.asarray(u_half)
    u_next = np.asarray(u_next)
    value = sum(u_next[:, i] @ (N @ u_half[:, i]) for i in range(grid.dim))
    return -dt * rho_f * float(value)


def residual_explicit_terms(state_pre, state_post, grid, params, dt):
    """(R_im, R_ex, R_split) for a step taken with the splitting scheme"""
    record = state_post.last_step
    if record is None or record.u_half is None:
        raise ValueError("Explicit residuals need the convection substep field")
    measures = state_post.solid.reference_measures
    return ResidualTerms(
        R_im=residual_implicit(state_post.F, record.grad_u, measures, params.c1, dt),
        R_ex=divergence_gap(state_pre.F, state_post.F, record.grad_u, measures, params.c1, dt),
        R_split=splitting_residual(grid, record.u_half, state_post.u, params.rho_f, dt),
    )


def step_residuals(state_pre, state_post, grid, params, dt):
    """Residual terms of the step that produced state_post"""
    record = state_post.last_step
    if record is None:
        return ResidualTerms()
    if record.scheme == 'explicit':
        return residual_explicit_terms(state_pre, state_post, grid, params, dt)
    return ResidualTerms(R_im=residual_implicit(
        state_post.F, record.grad_u, state_post.solid.reference_measures, params.c1, dt))
