"""
Implicit scheme: one coupled solve per fixed-point iteration, with the solid
configuration at the end of the step found by iterating on the velocity.
"""

from dataclasses import replace
import logging

import numpy as np

from assembly.constraints import apply_constraints
from assembly.fluid import assemble_fluid_operator, viscous_matrix
from assembly.solid import assemble_solid_operator, material_gradient, reference_gradients
from assembly.system import DofMap, merge_systems
from coupling.interpolation import build_coupling, interpolate_to_solid
from fsi_lab.exceptions import FixedPointDivergenceError
from .kinematics import update_solid_configuration
from .solver import solve_saddle_point
from .state import StepOptions, StepRecord

logger = logging.getLogger(__name__)


def relative_increment(new, old):
    diff = np.linalg.norm(np.asarray(new) - np.asarray(old))
    scale = np.linalg.norm(new)
    return diff / scale if scale > 0.0 else diff


def dissipation_increment(grid, params, dt, u):
    """(dt mu / 2) int D(u):D(u)"""
    flat = np.asarray(u).ravel(order='F')
    return 0.5 * dt * params.mu_f * float(flat @ (viscous_matrix(grid) @ flat))


def step_implicit(state, grid, params, dt, options=None):
    """Advance one step with the implicit scheme.

    Each iteration rebuilds the coupling on the iterate's solid configuration,
    assembles with the iterate velocity as advecting field, solves, and moves
    the iterate solid to x_n + dt P u. Stops when the relative velocity
    increment drops below fp_tol; raises FixedPointDivergenceError after
    fp_max iterations unless the options are lenient.
    """
    options = options or StepOptions()
    if not dt > 0.0:
        raise ValueError(f"Time step must be positive, got {dt}")
    dof_map = DofMap.for_grid(grid, options.pressure_space)
    grads = reference_gradients(state.solid)

    u_iter = state.u
    u_solid_iter = state.u_solid
    solid_iter, F_iter = update_solid_configuration(state.solid, state.F, u_solid_iter, dt, grads)
    p = state.p
    history = []
    converged = False

    for iteration in range(1, options.fp_max + 1):
        P = build_coupling(grid, solid_iter)
        fluid = assemble_fluid_operator(grid, params, dt, state.u, u_iter,
                                        options.pressure_space, options.convection)
        solid = assemble_solid_operator(state.solid, state.F, params, dt, state.u_solid,
                                        F_iter, options.j_term, u_solid_iter)
        system = apply_constraints(merge_systems(fluid, dof_map, solid, P), grid)
        u_new, p = solve_saddle_point(system, options.solver_tol)

        u_solid_new = interpolate_to_solid(P, u_new)
        solid_iter, F_iter = update_solid_configuration(
            state.solid, state.F, u_solid_new, dt, grads)
        increment = relative_increment(u_new, u_iter)
        history.append(increment)
        logger.debug("Step %d iteration %d: increment %.3e",
                     state.step_index + 1, iteration, increment)
        u_iter, u_solid_iter = u_new, u_solid_new
        if increment < options.fp_tol:
            converged = True
            break

    if not converged:
        message = (f"Fixed point did not reach {options.fp_tol:.1e} in "
                   f"{options.fp_max} iterations (last increment {history[-1]:.3e})")
        if not options.lenient:
            raise FixedPointDivergenceError(message, history=history)
        logger.warning(message)

    dissipation = dissipation_increment(grid, params, dt, u_iter)
    record = StepRecord(
        scheme='implicit',
        F_prev=state.F,
        grad_u=material_gradient(state.solid, u_solid_iter, grads),
        dissipation=dissipation,
        fp_history=tuple(history),
    )
    return replace(
        state,
        t=state.t + dt,
        u=u_iter,
        p=p,
        solid=solid_iter,
        F=F_iter,
        u_solid=u_solid_iter,
        E_d_accum=state.E_d_accum + dissipation,
        step_index=state.step_index + 1,
        last_step=record,
    )
