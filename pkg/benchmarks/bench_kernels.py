"""Compare the compiled kernels with the numpy fallback.

    python benchmarks/bench_kernels.py [--repeat N]

Times each kernel on the heptagon and on a larger random framework, then a
full four-bar and heptagon search under both backends (each search runs in
a fresh interpreter so the backend is picked at import).
"""
import argparse
import os
import subprocess
import sys
import timeit

import numpy as np

from flexsaddle import _kernels_py
from flexsaddle.fixtures import heptagon_1

try:
    from flexsaddle import _kernels_c
except ImportError:
    _kernels_c = None

SEARCH = """
import time
from flexsaddle.fixtures import load_fixture
from flexsaddle.search import SearchConfig, run_search
from flexsaddle import kernels
fw, _, opts = load_fixture({name!r})
t = time.perf_counter()
res = run_search(fw, SearchConfig(**opts))
print(kernels.BACKEND, res.iterations, time.perf_counter() - t)
"""


def _cases():
    hept = heptagon_1()
    rng = np.random.default_rng(0)
    n, d = 60, 3
    pairs = [(i, j) for i in range(n) for j in range(i + 1, n)]
    big = np.array([pairs[k] for k in rng.choice(len(pairs), 300, replace=False)], dtype=np.intp)
    xb = rng.normal(size=n * d)
    yield "heptagon", hept.config.coords, hept.topology.edge_array, 7, 2
    yield "random n=60 d=3 m=300", xb, big, n, d


def bench_kernels(repeat):
    impls = [("python", _kernels_py)] + ([("cython", _kernels_c)] if _kernels_c else [])
    print(f"{'case':24s} {'kernel':18s} " + " ".join(f"{name:>12s}" for name, _ in impls) + "   speedup")
    for label, x, edges, n, d in _cases():
        w = np.linspace(-1.0, 1.0, len(edges))
        basis = np.linalg.qr(np.random.default_rng(1).normal(size=(n * d, 2)))[0]
        calls = {
            "rigidity_rows": lambda k: k.rigidity_rows(x, edges, d),
            "squared_lengths": lambda k: k.squared_lengths(x, edges, d),
            "laplacian_hessian": lambda k: k.laplacian_hessian(edges, w, n, d),
            "stress_forms": lambda k: k.stress_forms(basis, edges, w[None, :], d),
        }
        for name, fn in calls.items():
            times = [min(timeit.repeat(lambda: fn(k), number=200, repeat=repeat)) / 200 for _, k in impls]
            speed = f"{times[0] / times[1]:8.1f}x" if len(times) == 2 else ""
            print(f"{label:24s} {name:18s} " + " ".join(f"{t * 1e6:10.2f}us" for t in times) + f"  {speed}")


def bench_search():
    print("\nfull search")
    for name in ("four-bar", "heptagon-1"):
        for forced in ("1", "0"):
            env = dict(os.environ, FLEXSADDLE_PURE_PYTHON=forced)
            out = subprocess.run([sys.executable, "-c", SEARCH.format(name=name)], env=env,
                                 capture_output=True, text=True, check=True).stdout.split()
            print(f"  {name:12s} backend={out[0]:7s} iterations={out[1]:>6s} time={float(out[2]):.2f}s")


if __name__ == "__main__":
    ap = argparse.ArgumentParser()
    ap.add_argument("--repeat", type=int, default=5)
    args = ap.parse_args()
    bench_kernels(args.repeat)
    bench_search()
