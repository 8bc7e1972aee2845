"""
Two-step splitting scheme: a convection substep on the velocity alone, then a
coupled diffusion solve with every solid term taken on the known
configuration, so no fixed-point loop is needed.
"""

from dataclasses import replace
import logging

import numpy as np
import scipy.sparse as sp

from assembly.constraints import apply_constraints
from assembly.fluid import assemble_fluid_operator, mass_only_operator
from assembly.solid import assemble_solid_operator, material_gradient, reference_gradients
from assembly.system import DofMap, GlobalSystem, merge_systems
from coupling.interpolation import build_coupling, interpolate_to_solid
from .implicit import dissipation_increment
from .kinematics import update_solid_configuration
from .solver import solve_saddle_point
from .state import StepOptions, StepRecord

logger = logging.getLogger(__name__)


def convection_substep(state, grid, params, dt, options, dof_map):
    """rho (u_half - u_n)/dt + rho (u_n . grad) u_half = 0 under the velocity constraints"""
    A, rhs = mass_only_operator(grid, params, dt, state.u, state.u, options.convection)
    system = GlobalSystem(matrix=sp.csr_matrix(A), rhs=rhs, dof_map=dof_map)
    u_half, _ = solve_saddle_point(apply_constraints(system, grid), options.solver_tol)
    return u_half


def step_explicit(state, grid, params, dt, options=None):
    options = options or StepOptions()
    if not dt > 0.0:
        raise ValueError(f"Time step must be positive, got {dt}")
    dof_map = DofMap.for_grid(grid, options.pressure_space)
    grads = reference_gradients(state.solid)

    u_half = convection_substep(state, grid, params, dt, options, dof_map)

    P = build_coupling(grid, state.solid)
    zero = np.zeros_like(u_half)
    fluid = assemble_fluid_operator(grid, params, dt, u_half, zero,
                                    options.pressure_space, options.convection)
    solid = assemble_solid_operator(state.solid, state.F, params, dt, state.u_solid,
                                    state.F, 'lagged')
    system = apply_constraints(merge_systems(fluid, dof_map, solid, P), grid)
    u_new, p = solve_saddle_point(system, options.solver_tol)

    u_solid_new = interpolate_to_solid(P, u_new)
    solid_new, F_new = update_solid_configuration(state.solid, state.F, u_solid_new, dt, grads)
    dissipation = dissipation_increment(grid, params, dt, u_new)
    logger.debug("Explicit step %d done", state.step_index + 1)

    record = StepRecord(
        scheme='explicit',
        F_prev=state.F,
        grad_u=material_gradient(state.solid, u_solid_new, grads),
        dissipation=dissipation,
        u_half=u_half,
    )
    return replace(
        state,
        t=state.t + dt,
        u=u_new,
        p=p,
        solid=solid_new,
        F=F_new,
        u_solid=u_solid_new,
        E_d_accum=state.E_d_accum + dissipation,
        step_index=state.step_index + 1,
        last_step=record,
    )
