"""
Reference-to-physical mapping of shape function gradients.
"""

import numpy as np

from fsi_lab.exceptions import InvertedElementError


def physical_gradients(elem_coords, ref_gradients):
    """Shape function gradients in global coordinates and the jacobian determinant.

    elem_coords: (n, d) or (E, n, d); ref_gradients: (n, d) or (q, n, d).
    Outputs carry the element and point axes only when the inputs do.
    Raises InvertedElementError (with the offending element index) if any
    determinant is not positive.
    """
    coords = np.asarray(elem_coords, dtype=float)
    grads = np.asarray(ref_gradients, dtype=float)
    batched_e = coords.ndim == 3
    batched_q = grads.ndim == 3
    c = coords if batched_e else coords[None]
    g = grads if batched_q else grads[None]

    jac = np.einsum('ena,qnb->eqab', c, g)
    det = np.linalg.det(jac)
    bad = np.argwhere(det <= 0.0)
    if len(bad):
        element = int(bad[0, 0])
        raise InvertedElementError(
            f"Non-positive jacobian determinant {det[tuple(bad[0])]:.3e} "
            f"on element {element}",
            element=element,
        )
    inv = np.linalg.inv(jac)
    phys = np.einsum('qnb,eqba->eqna', g, inv)

    if not batched_q:
        phys, det = phys[:, 0], det[:, 0]
    if not batched_e:
        phys, det = phys[0], det[0]
    return phys, det
