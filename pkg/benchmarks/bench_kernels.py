"""Time the compiled and numpy stepping kernels on identical problems.

    python3 benchmarks/bench_kernels.py [--repeat 5]

Prints one line per (d, N, m, backend) with the best wall time and the
largest difference between the two backends' final fields.
"""
import argparse
import time

import numpy as np

from pmecontract import _backend
from pmecontract.grid import TorusGrid

CASES = [(1, 256, 2.0), (1, 256, 1.7), (1, 512, 0.5), (2, 64, 2.0), (2, 64, 1.7)]


def initial(grid):
    vals = 1.0 + 0.3 * sum(np.cos(x) for x in grid.coords()) / grid.d
    return vals.reshape(-1).astype(float)


def time_kernel(kernel, grid, m, duration, repeat):
    best, out = np.inf, None
    for _ in range(repeat):
        U = initial(grid)
        t0 = time.perf_counter()
        steps, status, _ = kernel(U, m, grid.h, grid.d, grid.N, 0.4, duration)
        best = min(best, time.perf_counter() - t0)
        if status != _backend.STATUS_OK:
            raise RuntimeError(f"kernel returned status {status}")
        out = U
    return best, steps, out


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--repeat", type=int, default=5)
    ap.add_argument("--duration", type=float, default=0.2)
    args = ap.parse_args()
    names = sorted(_backend.KERNELS)
    if "cython" not in names:
        print("compiled kernel not built; timing the numpy fallback only")
    print(f"{'d':>2} {'N':>5} {'m':>4} {'steps':>7} " + " ".join(f"{n:>10}" for n in names)
          + "  speedup  max|diff|")
    for d, N, m in CASES:
        grid = TorusGrid(d, N)
        res = {n: time_kernel(_backend.KERNELS[n], grid, m, args.duration, args.repeat)
               for n in names}
        steps = res[names[0]][1]
        times = " ".join(f"{res[n][0]:10.4f}" for n in names)
        if len(names) > 1:
            speed = res["python"][0] / res["cython"][0]
            diff = np.abs(res["python"][2] - res["cython"][2]).max()
            print(f"{d:>2} {N:>5} {m:>4} {steps:>7} {times}  {speed:7.1f}  {diff:.2e}")
        else:
            print(f"{d:>2} {N:>5} {m:>4} {steps:>7} {times}")


if __name__ == "__main__":
    main()
