"""Time the compiled and numpy stencil kernels on the same workload.

    python benchmarks/bench_kernels.py [--nodes 7500] [--steps 2000] [--repeat 3]

Prints seconds per step for each available backend, the speedup, and the
largest difference between the two final states.
"""
import argparse
import time

import numpy as np

from nlw_morawetz.kernels import get_backend
from nlw_morawetz.initial_data import critical_exponent


def workload(module, size, steps, lam, n_dim=3, dr=0.02, cfl=0.5):
    r = np.arange(size) * dr
    u = 0.5 * np.exp(-(r / 2.0) ** 2)
    ut = np.zeros_like(u)
    acc = np.empty_like(u)
    nl_exp = critical_exponent(n_dim) - 2.0
    dt = cfl * dr
    module.radial_accel(u, acc, n_dim, dr, lam, nl_exp)
    t0 = time.perf_counter()
    for _ in range(steps):
        module.verlet_step(u, ut, acc, n_dim, dr, dt, lam, nl_exp)
    return time.perf_counter() - t0, u


def bench(name, size, steps, repeat, lam):
    try:
        module = get_backend(name)
    except ImportError:
        return None
    best, u = min((workload(module, size, steps, lam) for _ in range(repeat)), key=lambda p: p[0])
    return best / steps, u


def main(argv=None):
    p = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    p.add_argument("--nodes", type=int, default=7501)
    p.add_argument("--steps", type=int, default=2000)
    p.add_argument("--repeat", type=int, default=3)
    p.add_argument("--lam", type=float, default=1.0)
    args = p.parse_args(argv)
    results = {}
    for name in ("python", "cython"):
        res = bench(name, args.nodes, args.steps, args.repeat, args.lam)
        if res is None:
            print(f"{name:8s} unavailable")
            continue
        results[name] = res
        print(f"{name:8s} {res[0] * 1e6:10.2f} us/step  ({args.nodes} nodes, lambda={args.lam:g})")
    if len(results) == 2:
        (tp, up), (tc, uc) = results["python"], results["cython"]
        print(f"speedup  {tp / tc:10.2f}x")
        print(f"max |u_python - u_cython| = {np.max(np.abs(up - uc)):.3e}")


if __name__ == "__main__":
    main()
