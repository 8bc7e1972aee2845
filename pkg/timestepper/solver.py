"""
Direct solution of the constrained saddle-point system.
"""

import logging
import warnings

import numpy as np
import scipy.sparse.linalg as spla

from assembly.constraints import remove_pressure_mean
from fsi_lab.exceptions import SingularSystemError

logger = logging.getLogger(__name__)

REFINEMENT_STEPS = 2


def solve_saddle_point(system, tol=1e-10):
    """Solve a constrained system and expand to (velocity (N^u, d), pressure).

    Pressure is None for velocity-only systems. The reduced residual must
    satisfy |A y - b| <= tol |b|; up to two steps of iterative refinement are
    taken before giving up with SingularSystemError.
    """
    info = system.constraint_info
    if info is None:
        raise SingularSystemError("System must be constrained before solving")
    A = system.matrix.tocsc()
    b = system.rhs
    b_norm = np.linalg.norm(b)
    if b_norm == 0.0:
        y = np.zeros_like(b)
    else:
        try:
            with warnings.catch_warnings():
                warnings.simplefilter('error', spla.MatrixRankWarning)
                lu = spla.splu(A)
        except (RuntimeError, spla.MatrixRankWarning) as exc:
            raise SingularSystemError(f"Factorization failed: {exc}")

        y = lu.solve(b)
        residual = np.linalg.norm(A @ y - b)
        for _ in range(REFINEMENT_STEPS):
            if residual <= tol * b_norm:
                break
            y = y + lu.solve(b - A @ y)
            residual = np.linalg.norm(A @ y - b)
        if not np.isfinite(residual) or residual > tol * b_norm:
            raise SingularSystemError(
                f"Linear residual {residual:.3e} exceeds {tol:.1e} x |b| = {tol * b_norm:.3e}"
            )
        logger.debug("Solved %d unknowns, relative residual %.2e", len(b), residual / b_norm)

    x = info.expand(y)
    dof_map = system.dof_map
    u = dof_map.unflatten_velocity(x[:dof_map.n_velocity])
    if len(x) == dof_map.n_velocity:
        return u, None
    p = remove_pressure_mean(x[dof_map.n_velocity:], dof_map, info)
    return u, p
