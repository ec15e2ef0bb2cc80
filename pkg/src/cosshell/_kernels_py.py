"""Pure-numpy nodal shell kernel (fallback for the compiled extension)."""

import numpy as np

from .constitutive import Geometry, stress_resultants_cart, w_shell_cart


def shell_kernel(E, K, geo: Geometry, mat, variant="harmonic"):
    """Energy density and rotated resultants at a batch of nodes.

    Parameters
    ----------
    E, K : ndarray, shape (n, 3, 3)
        Cartesian strain and bending curvature.
    geo : Geometry
        Nodal geometry with leading shape ``(n,)``.

    Returns
    -------
    w : ndarray, shape (n,)
    P, R : ndarray, shape (n, 3, 3)
    """
    w = w_shell_cart(E, K, geo, mat, variant)
    P, R = stress_resultants_cart(E, K, geo, mat, variant)
    return np.asarray(w, dtype=float), P, R
