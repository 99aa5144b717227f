"""Compare the compiled and pure-Python kernel backends.

    python3 benchmarks/bench_kernels.py [--repeat 3]

Each kernel runs on identical inputs under both backends; the script prints
the best wall time of each and checks that the outputs agree.
"""

import argparse
import time

import numpy as np

from ruin_lab import _kernels


def _cases(rng):
    paths, steps = 4096, 256
    incr = rng.standard_normal((paths, steps)) - 0.05

    def scan(k):
        csum = np.zeros(paths)
        cmax = np.full(paths, -np.inf)
        hit = np.full(paths, -1, dtype=np.int64)
        val = np.full(paths, np.nan)
        k.scan_paths(incr, csum, cmax, hit, val, 3.0, False, 0)
        return np.concatenate([csum, cmax, hit, np.nan_to_num(val)])

    def spitzer(k):
        csum = np.zeros(paths)
        y = np.zeros(paths)
        counts = np.zeros(steps, dtype=np.int64)
        k.spitzer_accumulate(incr, csum, y, counts, 0)
        return np.concatenate([csum, y, counts])

    u = rng.random((paths, steps))
    base = np.array([-1.0])
    thr = np.array([[0.5, 2.0]])
    jump = np.array([[2.0, 0.0]])

    def lattice(k):
        csum = np.zeros(paths)
        cmax = np.full(paths, -np.inf)
        hit = np.full(paths, -1, dtype=np.int64)
        val = np.full(paths, np.nan)
        k.scan_lattice(u, base, thr, jump, csum, cmax, hit, val, 30.0, False, 0)
        return np.concatenate([csum, cmax, hit, np.nan_to_num(val)])

    pmfs = np.array([[0.5, 0.0, 0.5]])

    def dp(k):
        return np.asarray(k.dp_ruin_curve(pmfs, 1, 0, 2000, False))

    f = rng.random(2000)
    f /= f.sum() * 1.01

    def conv(k):
        return np.asarray(k.truncated_convolve(f, f, 2000))

    def panjer(k):
        return np.asarray(k.panjer_geometric(f, 0.8, 2000))

    return {"scan_paths": scan, "scan_lattice": lattice, "spitzer_accumulate": spitzer, "dp_ruin_curve": dp,
            "truncated_convolve": conv, "panjer_geometric": panjer}


def best_time(fn, k, repeat):
    best = float("inf")
    out = None
    for _ in range(repeat):
        t0 = time.perf_counter()
        out = fn(k)
        best = min(best, time.perf_counter() - t0)
    return best, out


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--repeat", type=int, default=3)
    args = ap.parse_args()
    py = _kernels.load("python")
    has_cy = "cython" in _kernels.available()
    if not has_cy:
        print("compiled backend not built; only timing the python backend")
    cy = _kernels.load("cython") if has_cy else None
    print(f"{'kernel':<22}{'python [s]':>12}{'cython [s]':>12}{'speedup':>10}  agree")
    for name, fn in _cases(np.random.default_rng(0)).items():
        tp, op = best_time(fn, py, args.repeat)
        if cy is None:
            print(f"{name:<22}{tp:>12.4f}")
            continue
        tc, oc = best_time(fn, cy, args.repeat)
        agree = np.allclose(op, oc, rtol=1e-12, atol=1e-14)
        print(f"{name:<22}{tp:>12.4f}{tc:>12.4f}{tp / tc:>10.1f}  {agree}")


if __name__ == "__main__":
    main()
