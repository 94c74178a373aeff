"""Time the compiled and pure-Python kernels on the same inputs.

    python benchmarks/bench_kernels.py [--quick]

Prints one row per (kernel, backend) with the best of several repeats and
the speedup of the compiled backend.
"""

from __future__ import annotations

import argparse
import time

import numpy as np

from restrictml import _kernels
from restrictml.enzymedb import bundled_catalog
from restrictml.fixtures import random_dna
from restrictml.sitescan import build_scanner
from restrictml.svm import KernelSpec, svm_train


def best_of(fn, repeats: int) -> float:
    times = []
    for _ in range(repeats):
        t0 = time.perf_counter()
        fn()
        times.append(time.perf_counter() - t0)
    return min(times)


def bench_scan(backend: str, seqs: list[str]) -> callable:
    scanner = build_scanner(bundled_catalog(), backend)
    return lambda: [scanner.raw_scan(s) for s in seqs]


def bench_smo(backend: str, X, y, kind: str) -> callable:
    return lambda: svm_train(X, y, KernelSpec(kind), backend=backend)


def main(argv=None) -> None:
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--quick", action="store_true", help="smaller inputs, one repeat")
    args = ap.parse_args(argv)
    repeats = 1 if args.quick else 3
    n_seq, seq_len, n_rows = (20, 2000, 300) if args.quick else (200, 2000, 1500)

    rng = np.random.default_rng(0)
    seqs = [str(random_dna(seq_len, rng=rng)) for _ in range(n_seq)]
    y = np.where(rng.random(n_rows) < 0.5, 1, -1)
    X = rng.normal(size=(n_rows, 3)) + 0.7 * y[:, None]

    cases = [(f"scan {n_seq} x {seq_len} bp", lambda b: bench_scan(b, seqs))]
    for kind in ("linear", "rbf", "polynomial"):
        cases.append((f"smo {kind} n={n_rows}", lambda b, k=kind: bench_smo(b, X, y, k)))

    backends = sorted(_kernels.BACKENDS)
    print(f"backends available: {', '.join(backends)}")
    print(f"{'case':<28}" + "".join(f"{b:>12}" for b in backends) + f"{'speedup':>10}")
    for label, make in cases:
        t = {b: best_of(make(b), repeats) for b in backends}
        speed = f"{t['python'] / t['native']:9.1f}x" if "native" in t else "        -"
        print(f"{label:<28}" + "".join(f"{t[b]:11.3f}s" for b in backends) + speed)


if __name__ == "__main__":
    main()
