"""Compare the compiled and numpy implementations of the nodal integration kernel.

Usage: python3 benchmarks/bench_kernels.py [--nodes N ...] [--repeat R]

Prints the best-of-R wall time per call for each backend, the speed-up, and
the max relative difference between the two results (they should agree to rounding).
"""
import argparse
import sys
import timeit

import numpy as np

from creepdam import _kernels_py, kernels
from creepdam.evolution import material_tuple
from creepdam.material import MaterialParams


def make_inputs(n_nodes: int, seed: int = 0):
    rng = np.random.default_rng(seed)
    params = MaterialParams(A=1e-3, n=3, B=1.0, m=2, qd=1)
    eps0 = 1e-3 * rng.standard_normal((n_nodes, 3))
    eps1 = eps0 + 1e-5 * rng.standard_normal((n_nodes, 3))
    epscr = 1e-5 * rng.standard_normal((n_nodes, 3))
    omega = rng.uniform(0.0, 0.5, n_nodes)
    return material_tuple(params), eps0, eps1, epscr, omega


def bench(fn, args, repeat: int) -> float:
    number = max(1, int(2e5 // len(args[1])))
    times = timeit.repeat(lambda: fn(*args), number=number, repeat=repeat)
    return min(times) / number


def main(argv=None) -> int:
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--nodes", type=int, nargs="+", default=[100, 1000, 10000, 100000])
    ap.add_argument("--repeat", type=int, default=5)
    args = ap.parse_args(argv)
    if not kernels.compiled_available():
        print("compiled kernel not built; only the numpy backend is available", file=sys.stderr)
        return 1
    from creepdam import _kernels_c

    print(f"{'nodes':>8} {'method':>6} {'numpy [s]':>12} {'cython [s]':>12} {'speed-up':>9} "
          f"{'max rel diff':>12}")
    for n in args.nodes:
        mat, eps0, eps1, epscr, omega = make_inputs(n)
        for name, method in (("euler", kernels.EULER), ("rk4", kernels.RK4)):
            call = (mat, eps0, eps1, epscr, omega, 1e-3, method, 0.975, 1e-9)
            t_py = bench(_kernels_py.integrate_nodes, call, args.repeat)
            t_c = bench(_kernels_c.integrate_nodes, call, args.repeat)
            ec_p, om_p, _ = _kernels_py.integrate_nodes(*call)
            ec_c, om_c, _ = _kernels_c.integrate_nodes(*call)
            diff = max(float(np.max(np.abs(ec_p - ec_c)) / np.max(np.abs(ec_p))),
                       float(np.max(np.abs(om_p - om_c)) / np.max(np.abs(om_p))))
            print(f"{n:>8} {name:>6} {t_py:>12.3e} {t_c:>12.3e} {t_py / t_c:>8.1f}x {diff:>12.2e}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
