"""
Solid configuration and deformation gradient updates.
"""

import numpy as np

from assembly.solid import check_deformation, material_gradient, reference_gradients
from fsi_lab.exceptions import DimensionMismatchError


def advance_deformation(F, grad_u, dt):
    """F_{n+1} = F_n + dt grad_X u"""
    return np.asarray(F) + dt * np.asarray(grad_u)


def update_solid_configuration(solid, F, u_solid, dt, grads=None):
    """Move the solid nodes by dt * u and advance F with the material gradient of u.

    Returns the solid with new current coordinates and the new per-element F.
    Raises InvertedElementError if any det(F') <= 0.
    """
    if not dt > 0.0:
        raise ValueError(f"Time step must be positive, got {dt}")
    u = np.asarray(u_solid, dtype=float)
    if u.shape != solid.current_coords.shape:
        raise DimensionMismatchError(
            f"Solid velocity must have shape {solid.current_coords.shape}, got {u.shape}"
        )
    grad_u = material_gradient(solid, u, grads)
    F_next = advance_deformation(F, grad_u, dt)
    check_deformation(F_next)
    return solid.with_current(solid.current_coords + dt * u), F_next


def deformation_from_coordinates(solid, configuration='current'):
    """F = grad_X x computed from the node positions of a configuration"""
    G = reference_gradients(solid)
    x = solid.coords(configuration)
    return np.einsum('eni,ena->eia', x[solid.connectivity], G)
