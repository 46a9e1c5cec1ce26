"""Time the compiled and pure-Python kernels on the same inputs.

    python benchmarks/bench_kernels.py [--a 200] [--b 200] [--samples 2000]
"""

import argparse
import math
import time

import numpy as np

from qshape import _pykernels

try:
    from qshape import _ckernels
except ImportError:
    _ckernels = None


def best_of(fn, repeat):
    times = []
    for _ in range(repeat):
        t0 = time.perf_counter()
        fn()
        times.append(time.perf_counter() - t0)
    return min(times)


def main():
    p = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    p.add_argument("--a", type=int, default=200)
    p.add_argument("--b", type=int, default=200)
    p.add_argument("--samples", type=int, default=2000)
    p.add_argument("--repeat", type=int, default=3)
    args = p.parse_args()

    n = (args.a + args.b) // 2
    logq = -1.0 / n
    u = np.random.default_rng(0).random((args.samples, args.a + args.b))
    table = _pykernels.logz_table(args.a, args.b, logq)
    backends = {"python": _pykernels}
    if _ckernels is None:
        print("compiled extension not built; timing the Python backend only")
    else:
        backends["cython"] = _ckernels

    results = {}
    for name, mod in backends.items():
        t_table = best_of(lambda: mod.logz_table(args.a, args.b, logq), args.repeat)
        t_paths = best_of(lambda: mod.sample_paths(table, logq, u), args.repeat)
        results[name] = (t_table, t_paths)
        print(f"{name:>7}: table {t_table * 1e3:9.2f} ms   {args.samples} paths {t_paths * 1e3:9.2f} ms")

    if len(results) == 2:
        same = np.array_equal(_ckernels.sample_paths(table, logq, u), _pykernels.sample_paths(table, logq, u))
        (pt, pp), (ct, cp) = results["python"], results["cython"]
        print(f"speedup: table x{pt / ct:.0f}, paths x{pp / cp:.0f}; identical paths: {same}")
    print(f"box {args.a}x{args.b}, q = exp({logq:.4g}) = {math.exp(logq):.6f}")


if __name__ == "__main__":
    main()
