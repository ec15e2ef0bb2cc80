"""Selection of the nodal kernel implementation.

The compiled extension is used when it imports; setting the environment
variable ``COSSHELL_BACKEND=python`` forces the numpy fallback.
"""

import os
from concurrent.futures import ThreadPoolExecutor

import numpy as np

from . import _kernels_py
from .constitutive import Geometry

_compiled = None
if os.environ.get("COSSHELL_BACKEND", "").lower() != "python":
    try:
        from . import _kernels as _compiled
    except ImportError:  # extension not built
        _compiled = None

BACKEND = "cython" if _compiled is not None else "python"


def get_kernel(name=None):
    """Return the ``shell_kernel`` callable of backend ``name`` (default: active one)."""
    name = name or BACKEND
    if name == "cython":
        if _compiled is None:
            raise ImportError("compiled kernels are not available")
        return _compiled.shell_kernel
    if name == "python":
        return _kernels_py.shell_kernel
    raise ValueError(f"unknown backend {name!r}")


def _slice_geo(geo: Geometry, sl):
    return Geometry(geo.n0[sl], geo.b[sl], geo.c[sl], geo.bstar[sl], geo.K[sl], geo.H[sl])


def shell_kernel(E, K, geo: Geometry, mat, variant="harmonic", threads=1, backend=None):
    """Evaluate the nodal kernel over flat node arrays, optionally in parallel chunks.

    Chunks are contiguous and results are written back in node order, so the
    output does not depend on the thread count.
    """
    kern = get_kernel(backend)
    n = E.shape[0]
    if threads <= 1 or n < 2 * threads:
        return kern(E, K, geo, mat, variant)
    bounds = np.linspace(0, n, threads + 1).astype(int)
    slices = [slice(bounds[i], bounds[i + 1]) for i in range(threads)]
    w = np.empty(n)
    P = np.empty((n, 3, 3))
    R = np.empty((n, 3, 3))

    def run(sl):
        w[sl], P[sl], R[sl] = kern(E[sl], K[sl], _slice_geo(geo, sl), mat, variant)

    with ThreadPoolExecutor(max_workers=threads) as pool:
        list(pool.map(run, slices))
    return w, P, R
