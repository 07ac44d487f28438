"""Compare the compiled and numpy kernel backends on the same workloads.

Run with ``python benchmarks/bench_backends.py``. Prints median seconds per call
and the speed-up of the compiled backend for each kernel.
"""

from __future__ import annotations

import argparse
import statistics
import time

import numpy as np

from heston_xpand import _backend
from heston_xpand.bench import sample_params, timing_batch
from heston_xpand.reference import gauss_legendre


def _median_time(fn, repeats: int) -> float:
    fn()
    runs = []
    for _ in range(repeats):
        start = time.perf_counter()
        fn()
        runs.append(time.perf_counter() - start)
    return statistics.median(runs)


def workloads(n_sets: int):
    params = [p.as_tuple() for p in sample_params(n_sets, seed=0)]
    strikes, taus = timing_batch()
    nodes, weights = gauss_legendre(128)
    rng = np.random.default_rng(0)
    n_paths = 200_000
    z1, z2 = rng.standard_normal(n_paths), rng.standard_normal(n_paths)

    def approx(kern, code):
        return lambda: [kern.approx_prices(code, p, strikes, taus) for p in params]

    def reference(kern):
        return lambda: [kern.reference_prices(p, strikes, taus, nodes, weights, 4.0, 200.0) for p in params[:5]]

    def mc(kern):
        x, v = np.full(n_paths, 4.6), np.full(n_paths, 0.2)
        return lambda: kern.mc_step(x, v, z1, z2, 1.5, 0.2, 0.5, -0.7, 0.01, 0.005)

    return {
        f"o2 x{n_sets} sets": lambda k: approx(k, 0),
        f"o4 x{n_sets} sets": lambda k: approx(k, 2),
        "ref x5 sets": reference,
        f"mc_step {n_paths} paths": mc,
    }


def main() -> None:
    ap = argparse.ArgumentParser()
    ap.add_argument("--sets", type=int, default=100)
    ap.add_argument("--repeats", type=int, default=5)
    args = ap.parse_args()
    names = _backend.available()
    if "cython" not in names:
        print("compiled backend not built; only the numpy backend is available")
    print(f"{'kernel':<26}" + "".join(f"{n:>12}" for n in names) + ("     speedup" if len(names) == 2 else ""))
    for label, make in workloads(args.sets).items():
        times = [_median_time(make(_backend.get(n)), args.repeats) for n in names]
        line = f"{label:<26}" + "".join(f"{t:>12.4g}" for t in times)
        if len(times) == 2:
            line += f"{times[1] / times[0]:>12.1f}"
        print(line)


if __name__ == "__main__":
    main()
