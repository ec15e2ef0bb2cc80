"""Timing of the nodal shell kernel: compiled extension vs numpy fallback.

Usage::

    python benchmarks/bench_kernels.py [--nodes 20000] [--repeat 5] [--threads 1]

Also times one energy-and-gradient evaluation of a cylinder problem.
"""

import argparse
import time

import numpy as np

from cosshell import backend
from cosshell.constitutive import Geometry, MaterialConstants
from cosshell.geometry import CylinderChart
from cosshell.kinematics import Discretization, MidsurfaceConfiguration
from cosshell.solver import BoundaryConditions, LoadSpec, ShellProblem


def _best(fn, repeat):
    times = []
    for _ in range(repeat):
        t0 = time.perf_counter()
        fn()
        times.append(time.perf_counter() - t0)
    return min(times)


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--nodes", type=int, default=20000)
    ap.add_argument("--repeat", type=int, default=5)
    ap.add_argument("--threads", type=int, default=1)
    args = ap.parse_args()

    rng = np.random.default_rng(0)
    n = int(np.sqrt(args.nodes))
    disc = Discretization(CylinderChart(1.0, (0.0, 1.0), (0.0, 1.0)), n, n)
    fr = disc.frame
    geo = Geometry(fr.n0.reshape(-1, 3), fr.b_cart.reshape(-1, 3, 3), fr.c_cart.reshape(-1, 3, 3),
                   fr.bstar_cart.reshape(-1, 3, 3), fr.K.reshape(-1), fr.H.reshape(-1))
    a = fr.a_cart.reshape(-1, 3, 3)
    E = 0.01 * rng.standard_normal(a.shape) @ a
    K = 0.01 * rng.standard_normal(a.shape) @ a
    mat = MaterialConstants(1.0, 1.0, 0.5, L_c=0.2, h=0.05)

    print(f"nodes: {E.shape[0]}, threads: {args.threads}")
    results = {}
    for name in ("python", "cython"):
        try:
            backend.get_kernel(name)
        except ImportError:
            print(f"{name:>7}: not available")
            continue
        t = _best(lambda: backend.shell_kernel(E, K, geo, mat, threads=args.threads, backend=name), args.repeat)
        results[name] = t
        print(f"{name:>7}: {t * 1e3:8.2f} ms  ({t / E.shape[0] * 1e9:7.1f} ns/node)")
    if len(results) == 2:
        w0, P0, R0 = backend.shell_kernel(E, K, geo, mat, backend="python")
        w1, P1, R1 = backend.shell_kernel(E, K, geo, mat, backend="cython")
        diff = max(np.abs(w0 - w1).max(), np.abs(P0 - P1).max(), np.abs(R0 - R1).max())
        print(f"speedup: {results['python'] / results['cython']:.1f}x, max difference {diff:.1e}")

    bcs = BoundaryConditions.from_edges(disc, {"u0": "clamped"})
    loads = LoadSpec.normal_pressure(disc, 0.05)
    cfg = MidsurfaceConfiguration.reference(disc)
    for name in results:
        prob = ShellProblem(disc, mat, bcs, loads, threads=args.threads, backend_name=name)
        t = _best(lambda: prob.energy_and_gradient(cfg), args.repeat)
        print(f"energy+gradient ({name}): {t * 1e3:.1f} ms")


if __name__ == "__main__":
    main()
