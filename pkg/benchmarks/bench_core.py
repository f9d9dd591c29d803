"""Compare the compiled core against the numpy fallback.

    python benchmarks/bench_core.py [--quick]

Kernel-level timings call both implementations in-process; the end-to-end
calibration run is repeated in a subprocess with ``KRRPM_PURE_PYTHON=1``.
"""
import argparse
import os
import subprocess
import sys
import timeit

import numpy as np

from krrpm import _fallback

try:
    from krrpm import _core
except ImportError:
    sys.exit("compiled core not built; run `pip install -e . --no-build-isolation` first")

E2E = (
    "import time; from krrpm.validation import calibration_suite; from krrpm import BACKEND;"
    "t=time.perf_counter(); calibration_suite('trig', 20, trials={trials}, seed=0);"
    "print(BACKEND, time.perf_counter()-t)"
)


def bench(fn, *args, repeat=5):
    number = max(1, int(0.2 / max(timeit.timeit(lambda: fn(*args), number=1), 1e-6)))
    return min(timeit.repeat(lambda: fn(*args), number=number, repeat=repeat)) / number


def end_to_end(trials, pure):
    env = dict(os.environ, KRRPM_PURE_PYTHON="1" if pure else "0")
    out = subprocess.run([sys.executable, "-c", E2E.format(trials=trials)], env=env,
                         capture_output=True, text=True, check=True).stdout.split()
    return out[0], float(out[1])


def main():
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--quick", action="store_true")
    args = parser.parse_args()
    rng = np.random.default_rng(0)
    n = 800 if args.quick else 2000
    X = rng.uniform(-1, 1, (n, 2))
    Z = rng.uniform(-1, 1, (64, 2))
    m = 10_000 if args.quick else 100_000
    resid, mm, omh = rng.normal(size=m), 0.01 * rng.normal(size=m), rng.uniform(0.5, 1, m)
    keys = np.sort(np.round(rng.normal(size=m) * 1e6))
    ys = np.round(rng.normal(size=m) * 1e6)
    cases = [
        (f"laplacian_gram_sym n={n}", "laplacian_gram_sym", (X, 1.0)),
        (f"laplacian_gram {n}x64", "laplacian_gram", (X, Z, 1.0)),
        (f"trig2d_gram_sym n={n}", "trig2d_gram_sym", (X,)),
        (f"critical_values m={m}", "critical_values", (resid, mm, omh, 0.9, 0.1, 0.5)),
        (f"step_counts m={m}", "step_counts", (keys, ys)),
    ]
    print(f"{'kernel':32s} {'compiled':>12s} {'numpy':>12s} {'speedup':>8s}")
    for label, name, fargs in cases:
        tc = bench(getattr(_core, name), *fargs)
        tf = bench(getattr(_fallback, name), *fargs)
        print(f"{label:32s} {tc * 1e3:10.3f}ms {tf * 1e3:10.3f}ms {tf / tc:7.2f}x")
    trials = 300 if args.quick else 2000
    (_, tc), (_, tf) = end_to_end(trials, False), end_to_end(trials, True)
    print(f"{f'calibration n=20 M={trials}':32s} {tc:11.2f}s {tf:11.2f}s {tf / tc:7.2f}x")


if __name__ == "__main__":
    main()
