"""Benchmark the S-TISP kernel: numba backend vs pure-numpy fallback.

Usage:
    python3 benchmarks/bench_stisp.py

The script times warm-started path fits with whatever backend is active,
then re-executes itself in a subprocess with GSRL_PURE_NUMPY=1 to collect
the fallback numbers, and prints both side by side.
"""

import json
import os
import subprocess
import sys
import time

import numpy as np


CASES = [
    # (n, p, group_size, repeats)
    (50, 25, 1, 5),
    (50, 200, 1, 3),
    (100, 60, 3, 3),
    (100, 600, 3, 1),
]


def run_cases():
    import gsrl
    from gsrl import sim

    results = {"backend": gsrl.BACKEND, "cases": []}
    for n, p, size, repeats in CASES:
        rng = np.random.default_rng(0)
        X = sim.toeplitz_sample(n, p, 0.5, rng)
        beta = np.zeros(p)
        beta[: 3 * size] = 2.5
        Y = X @ beta + rng.standard_normal(n)
        prob = gsrl.GsrlProblem(X, Y, gsrl.GroupPartition.contiguous(p, size))
        grid = gsrl.PathConfig(gsrl.default_path_grid(prob))
        gsrl.fit_path(prob, grid)  # warm-up (JIT compile / cache load)
        times = []
        for _ in range(repeats):
            t0 = time.perf_counter()
            gsrl.fit_path(prob, grid)
            times.append(time.perf_counter() - t0)
        results["cases"].append({
            "n": n, "p": p, "group_size": size,
            "seconds": min(times),
        })
    return results


def main():
    if os.environ.get("GSRL_BENCH_INNER"):
        print(json.dumps(run_cases()))
        return

    here = run_cases()
    env = dict(os.environ, GSRL_PURE_NUMPY="1", GSRL_BENCH_INNER="1")
    out = subprocess.run([sys.executable, os.path.abspath(__file__)],
                         env=env, capture_output=True, text=True, check=True)
    other = json.loads(out.stdout.strip().splitlines()[-1])

    a, b = here, other
    if a["backend"] == b["backend"]:
        print(f"both runs used the {a['backend']} backend "
              f"(numba not installed?); timings below are a self-comparison")
    print(f"{'case':>20}  {a['backend']:>10}  {b['backend']:>10}  speedup")
    for ca, cb in zip(a["cases"], b["cases"]):
        label = f"n={ca['n']} p={ca['p']} T={ca['group_size']}"
        ratio = cb["seconds"] / ca["seconds"]
        print(f"{label:>20}  {ca['seconds']:>9.4f}s  {cb['seconds']:>9.4f}s  "
              f"{ratio:>6.1f}x")


if __name__ == "__main__":
    main()
