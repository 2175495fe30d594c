"""Compare the compiled and pure-Python permanent kernels.

    python benchmarks/bench_permanent.py [--max-n 14] [--repeat 3]

Prints per-size timings of both backends and the time of one default
temporal scan with each backend (the scan runs in a subprocess so the
backend is chosen at import).
"""
import argparse
import os
import subprocess
import sys
import timeit

import numpy as np

from noonsim._kernels import compiled_permanent, python_permanent

SCAN = ("import time; from noonsim.scenarios import Experiment, run_temporal_scan; "
        "e = Experiment(); t = time.perf_counter(); run_temporal_scan(e); "
        "print(time.perf_counter() - t)")


def best_time(fn, a, repeat):
    number = 1
    while timeit.timeit(lambda: fn(a), number=number) < 0.05:
        number *= 4
    return min(timeit.repeat(lambda: fn(a), number=number, repeat=repeat)) / number


def scan_time(pure: bool) -> float:
    env = dict(os.environ)
    env.pop("NOONSIM_PURE_PYTHON", None)
    if pure:
        env["NOONSIM_PURE_PYTHON"] = "1"
    out = subprocess.run([sys.executable, "-c", SCAN], env=env, capture_output=True, text=True, check=True)
    return float(out.stdout)


def main():
    ap = argparse.ArgumentParser(description=__doc__.split("\n")[0])
    ap.add_argument("--max-n", type=int, default=14)
    ap.add_argument("--repeat", type=int, default=3)
    args = ap.parse_args()
    if compiled_permanent is None:
        sys.exit("compiled kernel not built; run `pip install -e . --no-build-isolation` first")

    rng = np.random.default_rng(0)
    print(f"{'n':>3} {'cython [s]':>12} {'python [s]':>12} {'speedup':>9}")
    for n in range(2, args.max_n + 1, 2):
        a = rng.normal(size=(n, n)) + 1j * rng.normal(size=(n, n))
        assert abs(compiled_permanent(a) - python_permanent(a)) <= 1e-9 * max(1.0, abs(python_permanent(a)))
        tc = best_time(compiled_permanent, a, args.repeat)
        tp = best_time(python_permanent, a, args.repeat)
        print(f"{n:>3} {tc:>12.3e} {tp:>12.3e} {tp / tc:>9.1f}")

    tc, tp = scan_time(False), scan_time(True)
    print(f"\ntemporal scan (73 points, 4 panels): cython {tc:.3f} s, python {tp:.3f} s, speedup {tp / tc:.2f}")


if __name__ == "__main__":
    main()
