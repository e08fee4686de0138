"""Compare the compiled and numpy orbit kernels.

Usage::

    python benchmarks/bench_kernels.py [--n 1000] [--trials 20000] [--repeat 3]

Prints wall time per backend and the speed-up for each reference map.
"""

import argparse
import time

from inner_dyn import kernels
from inner_dyn.inner import InnerFunctionSpec
from inner_dyn.twisted import Observable, birkhoff_sample

MAPS = {
    "doubling": InnerFunctionSpec(1.0, ((0j, 2),), ()),
    "boole": InnerFunctionSpec(1.0, ((0j, 1),), ((0.0, 1.0),)),
}


def best_time(spec, n, trials, backend, threads, repeat):
    best = float("inf")
    for _ in range(repeat):
        t0 = time.perf_counter()
        birkhoff_sample(spec, Observable.cos(), n, trials, seed=7, backend=backend, threads=threads)
        best = min(best, time.perf_counter() - t0)
    return best


def main(argv=None):
    p = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    p.add_argument("--n", type=int, default=1000)
    p.add_argument("--trials", type=int, default=20_000)
    p.add_argument("--threads", type=int, default=None)
    p.add_argument("--repeat", type=int, default=3)
    args = p.parse_args(argv)
    backends = kernels.available_backends()
    print(f"backends {backends}, n = {args.n}, trials = {args.trials}")
    for name, spec in MAPS.items():
        times = {b: best_time(spec, args.n, args.trials, b, args.threads, args.repeat) for b in backends}
        line = ", ".join(f"{b} {t:.3f} s" for b, t in times.items())
        if "cython" in times:
            line += f", speed-up {times['python'] / times['cython']:.1f}x"
        print(f"{name:9s} {line}")


if __name__ == "__main__":
    main()
