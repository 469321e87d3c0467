"""Throughput comparison of the compiled and pure RK4 kernels.

Run from the repository root:

    python benchmarks/bench_integrator.py
"""

import time

import numpy as np

from roaqc import _simpure
from roaqc.monomials import bundled_system

try:
    from roaqc import _simcore
except ImportError:
    _simcore = None


def bench(kernel, system, X0, steps, repeats=3):
    args = (np.ascontiguousarray(system.A), np.ascontiguousarray(system.B),
            system.basis._pi, system.basis._pj,
            np.ascontiguousarray(X0), 1e-3, steps, 1e3, 0.0)
    best = np.inf
    for _ in range(repeats):
        t0 = time.perf_counter()
        kernel.integrate_batch(*args)
        best = min(best, time.perf_counter() - t0)
    return best


def main():
    rng = np.random.default_rng(0)
    print(f"{'system':>8} {'batch':>6} {'steps':>6} {'pure':>10} "
          f"{'compiled':>10} {'speedup':>8}")
    for name in ("eq15", "eq16"):
        system = bundled_system(name)
        for batch, steps in ((16, 20000), (256, 2000), (1024, 500)):
            # keep initial conditions small so nothing exits early
            X0 = 0.05 * rng.standard_normal((batch, system.n))
            t_pure = bench(_simpure, system, X0, steps)
            if _simcore is None:
                print(f"{name:>8} {batch:>6} {steps:>6} {t_pure:>9.4f}s "
                      f"{'n/a':>10} {'n/a':>8}")
                continue
            t_comp = bench(_simcore, system, X0, steps)
            print(f"{name:>8} {batch:>6} {steps:>6} {t_pure:>9.4f}s "
                  f"{t_comp:>9.4f}s {t_pure / t_comp:>7.1f}x")


if __name__ == "__main__":
    main()
