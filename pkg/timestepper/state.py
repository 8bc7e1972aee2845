"""
Simulation state passed from step to step, and initial conditions.
"""

from dataclasses import dataclass, field
import logging
import math

import numpy as np

from assembly.system import DofMap
from coupling.interpolation import build_coupling, interpolate_to_solid
from fsi_lab.exceptions import DimensionMismatchError

logger = logging.getLogger(__name__)

INITIAL_KINDS = ('zero', 'stream_function', 'stretched')


@dataclass(frozen=True)
class StepOptions:
    """Discretization and solver switches shared by both steppers"""
    pressure_space: str = 'p1'
    convection: str = 'skew'
    j_term: str = 'linearized'
    fp_tol: float = 1e-8
    fp_max: int = 25
    solver_tol: float = 1e-10
    lenient: bool = False


@dataclass(frozen=True)
class StepRecord:
    """What the last step produced besides the new state, for residual bookkeeping"""
    scheme: str
    F_prev: np.ndarray = field(repr=False)
    grad_u: np.ndarray = field(repr=False)
    dissipation: float = 0.0
    u_half: np.ndarray = field(repr=False, default=None)
    fp_history: tuple = ()

    @property
    def fp_iterations(self):
        return len(self.fp_history)


@dataclass(frozen=True)
class SimulationState:
    t: float
    u: np.ndarray = field(repr=False)
    p: np.ndarray = field(repr=False)
    solid: object = field(repr=False)
    F: np.ndarray = field(repr=False)
    u_solid: np.ndarray = field(repr=False)
    E_d_accum: float = 0.0
    step_index: int = 0
    last_step: StepRecord = None

    def __str__(self):
        return f"State step={self.step_index} t={self.t:.6g}"


@dataclass(frozen=True)
class InitialCondition:
    kind: str = 'zero'
    psi0: float = 0.05
    a: float = 2.0 * math.pi
    b: float = 2.0 * math.pi
    stretch: float = 1.0

    def __post_init__(self):
        if self.kind not in INITIAL_KINDS:
            raise ValueError(f"Unknown initial condition: {self.kind}")


def stream_function_velocity(points, psi0, a, b):
    """u = (dPsi/dy, -dPsi/dx) for Psi = psi0 sin(a x) sin(b y); zero z-component in 3D"""
    pts = np.atleast_2d(points)
    x, y = pts[:, 0], pts[:, 1]
    u = np.zeros_like(pts, dtype=float)
    u[:, 0] = psi0 * b * np.sin(a * x) * np.cos(b * y)
    u[:, 1] = -psi0 * a * np.cos(a * x) * np.sin(b * y)
    return u


def initial_state(grid, solid, params, init=None, pressure_space='p1'):
    """State at t = 0 for the given initial condition.

    'stretched' expects a solid whose initial coordinates were already
    stretched and sets F = diag(s, 1/s) on every element.
    """
    init = init or InitialCondition()
    if solid.dim != grid.dim:
        raise DimensionMismatchError(f"{solid.dim}D solid in a {grid.dim}D grid")
    if init.kind == 'stream_function':
        u = stream_function_velocity(grid.velocity_nodes, init.psi0, init.a, init.b)
    else:
        u = np.zeros((grid.n_velocity_nodes, grid.dim))

    F = np.tile(np.eye(solid.dim), (solid.n_elements, 1, 1))
    if init.kind == 'stretched':
        F[:, 0, 0] = init.stretch
        F[:, 1, 1] = 1.0 / init.stretch

    P = build_coupling(grid, solid)
    dof_map = DofMap.for_grid(grid, pressure_space)
    state = SimulationState(
        t=0.0,
        u=u,
        p=np.zeros(dof_map.n_pressure),
        solid=solid,
        F=F,
        u_solid=interpolate_to_solid(P, u),
        E_d_accum=0.0,
        step_index=0,
    )
    logger.info("Initial state (%s) on %s with %s", init.kind, grid, solid)
    return state
