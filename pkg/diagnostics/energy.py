"""
Energy bookkeeping: kinetic, dissipated and stored elastic energy.
"""

from dataclasses import dataclass, fields
import logging

import numpy as np

from assembly.fluid import mass_matrix
from assembly.solid import check_deformation, solid_mass_matrix
from meshing.solids import solid_measure

logger = logging.getLogger(__name__)

TIMESERIES_COLUMNS = (
    't', 'E_k_fluid', 'E_k_solid_delta', 'E_d', 'E_p', 'E_total', 'E_ratio',
    'R_step', 'mass_variation',
)


@dataclass(frozen=True)
class EnergyReport:
    t: float
    E_k_fluid: float
    E_k_solid_delta: float
    E_d: float
    E_p: float
    E_total: float
    E_ratio: float  # None when the initial total is zero
    R_step: float
    mass_variation: float
    mass_solid: float
    R_im: float = 0.0
    R_ex: float = 0.0
    R_split: float = 0.0

    def as_row(self):
        """Values in timeseries column order"""
        return [getattr(self, name) for name in TIMESERIES_COLUMNS]

    def as_dict(self):
        return {f.name: getattr(self, f.name) for f in fields(self)}


def potential_energy(F, reference_measures, c1, dim):
    """sum_e |e| ((c1/2)(tr(F F^T) - d) - c1 ln det F)"""
    F = np.asarray(F, dtype=float)
    det = check_deformation(F)
    density = 0.5 * c1 * (np.sum(F * F, axis=(1, 2)) - dim) - c1 * np.log(det)
    return float(density @ np.asarray(reference_measures))


def kinetic_energy_fluid(grid, u, rho_f):
    M = mass_matrix(grid)
    u = np.asarray(u)
    return 0.5 * rho_f * float(sum(u[:, i] @ (M @ u[:, i]) for i in range(u.shape[1])))


def kinetic_energy_solid(solid, u_solid, rho_delta):
    """(rho_delta/2) int |u|^2 dX over the reference mesh"""
    M = solid_mass_matrix(solid)
    u = np.asarray(u_solid)
    return 0.5 * rho_delta * float(sum(u[:, i] @ (M @ u[:, i]) for i in range(u.shape[1])))


def mass_variation(solid):
    """Relative change of the solid measure from the initial configuration"""
    initial = solid_measure(solid, 'initial')
    return (solid_measure(solid, 'current') - initial) / initial


def energy_report(state, grid, params, E_total_t0=None, residuals=None):
    """Energy components of a state.

    With E_total_t0 omitted the state is taken as the initial one (ratio 1).
    `residuals` are the step's residual terms, or None at t = 0.
    """
    E_k_fluid = kinetic_energy_fluid(grid, state.u, params.rho_f)
    E_k_solid = kinetic_energy_solid(state.solid, state.u_solid, params.rho_delta)
    E_p = potential_energy(state.F, state.solid.reference_measures, params.c1, state.solid.dim)
    E_total = E_k_fluid + E_k_solid + state.E_d_accum + E_p
    reference = E_total if E_total_t0 is None else E_total_t0
    ratio = E_total / reference if reference != 0.0 else None

    R_im = R_ex = R_split = 0.0
    if residuals is not None:
        R_im, R_ex, R_split = residuals.R_im, residuals.R_ex, residuals.R_split
    return EnergyReport(
        t=state.t,
        E_k_fluid=E_k_fluid,
        E_k_solid_delta=E_k_solid,
        E_d=state.E_d_accum,
        E_p=E_p,
        E_total=E_total,
        E_ratio=ratio,
        R_step=R_im + R_ex + R_split,
        mass_variation=mass_variation(state.solid),
        mass_solid=params.rho_s * solid_measure(state.solid, 'current'),
        R_im=R_im,
        R_ex=R_ex,
        R_split=R_split,
    )
