"""Compiled vs pure-Python path kernels.

    python3 benchmarks/bench_kernels.py [--steps N] [--repeat R]

Runs both backends on the same uniforms, checks that they return the same
path, and prints the best-of-R wall time per backend.
"""
import argparse
import time

import numpy as np

from gmeasure import kernels
from gmeasure.gfunctions import markov, spin
from gmeasure.seqspace import Context


def best_time(fn, repeat):
    best = float("inf")
    for _ in range(repeat):
        t0 = time.perf_counter()
        out = fn()
        best = min(best, time.perf_counter() - t0)
    return best, out


def cases(steps):
    rng = np.random.default_rng(0)
    t = rng.dirichlet(np.ones(3), size=27)
    g = markov(t, 3, 3)
    u = rng.random(steps)
    yield "table S=3 k=3", "table_pair_path", (g.table, 3, 0, 13, u)

    s = spin("pow1.5")
    n = steps // 10  # the linear kernel is O(N^2) in the path length
    fb = s.init_fields(Context.const(-1), n)
    delta = s.init_fields(Context.const(1), n) - fb
    yield f"spin pow1.5 N={n}", "linear_pair_path", (s.a.first(n), fb, delta, u[:n])


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--steps", type=int, default=50_000)
    ap.add_argument("--repeat", type=int, default=3)
    args = ap.parse_args()

    backends = kernels.available_backends()
    if "compiled" not in backends:
        print("compiled extension not built; only the Python fallback is available")
    print(f"{'case':<22}{'backend':<10}{'seconds':>10}{'speedup':>10}")
    for label, name, argv in cases(args.steps):
        ref = base = None
        for b in ("python", "compiled"):
            if b not in backends:
                continue
            secs, out = best_time(lambda: getattr(backends[b], name)(*argv), args.repeat)
            if ref is None:
                ref, base = out, secs
            else:
                assert np.array_equal(ref[0], out[0]), "backends disagree"
            speed = base / secs if base else float("nan")
            print(f"{label:<22}{b:<10}{secs:>10.3f}{speed:>9.1f}x")


if __name__ == "__main__":
    main()
