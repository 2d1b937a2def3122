#!/usr/bin/env python3
"""Benchmark the compiled Euler-Maruyama kernel against the Python fallback.

Runs the same workload (drift, noise, quadrature projection) through both
backends, checks they agree, and reports steps/second and the speedup.

    python3 bench/benchmark_em.py [--steps N] [--thetas K] [--repeat R]
"""

import argparse
import math
import time

import numpy as np

from kerrpol import _em_fallback

try:
    from kerrpol import _em_core
except ImportError:
    _em_core = None


def workload(steps, n_theta, seed=1234):
    rng = np.random.default_rng(seed)
    dt = 0.005
    noise = (rng.standard_normal(steps)
             + 1j * rng.standard_normal(steps)) * (0.5 * math.sqrt(dt))
    thetas = np.linspace(0.0, math.pi, n_theta, endpoint=False)
    return dict(m11=-1.0 - 1.31j, m12=0.58j, kappa=1.0, dt=dt, noise=noise,
                cos_theta=np.cos(thetas), sin_theta=np.sin(thetas))


def time_backend(kernel, w, repeat):
    best = math.inf
    result = None
    for _ in range(repeat):
        start = time.perf_counter()
        result = kernel.integrate_em(w["m11"], w["m12"], w["kappa"], w["dt"],
                                     w["noise"], w["cos_theta"],
                                     w["sin_theta"], 0j, False)
        best = min(best, time.perf_counter() - start)
    return best, result


def main():
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--steps", type=int, default=2_000_000)
    parser.add_argument("--thetas", type=int, default=2)
    parser.add_argument("--repeat", type=int, default=3)
    args = parser.parse_args()

    w = workload(args.steps, args.thetas)
    t_py, r_py = time_backend(_em_fallback, w, args.repeat)
    print(f"python fallback : {args.steps / t_py:12.3e} steps/s "
          f"({t_py:.3f} s for {args.steps} steps, {args.thetas} thetas)")

    if _em_core is None:
        print("compiled kernel : not built (install with Cython available)")
        return

    t_c, r_c = time_backend(_em_core, w, args.repeat)
    print(f"compiled kernel : {args.steps / t_c:12.3e} steps/s "
          f"({t_c:.3f} s)")
    print(f"speedup         : {t_py / t_c:.1f}x")

    if not np.allclose(r_py[0], r_c[0], rtol=1e-9, atol=1e-9):
        raise SystemExit("backend outputs disagree beyond rounding noise")
    print("backends agree to rounding noise")


if __name__ == "__main__":
    main()
