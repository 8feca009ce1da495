"""Compare the compiled and pure-numpy kernels.

Usage::

    python benchmarks/bench_kernels.py [--n 256] [--modes 4096] [--repeat 3]

Reports the best wall time per call of ``field_matrix`` (one spectral
field realization) and ``gc_table`` for both backends and the largest
absolute difference between their results.
"""

import argparse
import time

import numpy as np

from landaudos import kernels


def best_time(func, repeat):
    best = float("inf")
    for _ in range(repeat):
        t0 = time.perf_counter()
        out = func()
        best = min(best, time.perf_counter() - t0)
    return best, out


def main(argv=None):
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--n", type=int, default=256)
    parser.add_argument("--modes", type=int, default=4096)
    parser.add_argument("--nodes", type=int, default=64, help="quadrature nodes for gc_table")
    parser.add_argument("--repeat", type=int, default=3)
    args = parser.parse_args(argv)

    rng = np.random.default_rng(0)
    s = rng.exponential(1.0, args.modes)
    psi = rng.uniform(0, 2 * np.pi, args.modes)
    u = rng.normal(size=args.modes)
    v = rng.normal(size=args.modes)
    nodes = np.sort(rng.exponential(4.0, args.nodes))

    compiled = kernels.compiled_backend()
    backends = [("python", kernels.python_backend)]
    if compiled is None:
        print("compiled backend not built; timing the numpy version only")
    else:
        backends.insert(0, ("cython", compiled))

    results = {}
    print(f"n={args.n} modes={args.modes} nodes={args.nodes} repeat={args.repeat}")
    for name, mod in backends:
        t_field, field = best_time(lambda: mod.field_matrix(s, psi, u, v, args.n), args.repeat)
        t_table, table = best_time(lambda: mod.gc_table(nodes, args.n), args.repeat)
        results[name] = (field, table)
        print(f"{name:>7}: field_matrix {t_field:8.4f} s   gc_table {t_table:8.4f} s")
        results[name + "_t"] = (t_field, t_table)
    if compiled is not None:
        fc, tc = results["cython"]
        fp, tp = results["python"]
        print(f"max |difference|: field_matrix {np.max(np.abs(fc - fp)):.2e}, gc_table {np.max(np.abs(tc - tp)):.2e}")
        sf = results["python_t"][0] / results["cython_t"][0]
        st = results["python_t"][1] / results["cython_t"][1]
        print(f"speedup: field_matrix {sf:.1f}x, gc_table {st:.1f}x")


if __name__ == "__main__":
    main()
