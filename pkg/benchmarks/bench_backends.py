"""Throughput comparison: compiled Cython kernels vs pure-Python twins.

Usage: python benchmarks/bench_backends.py [--mesh N] [--replicas R]

Both backends produce bit-identical output (see
tests/test_backend_parity.py); this script only measures speed.
"""

import argparse
import time

import numpy as np

from loopfield import backend
from loopfield.graph import build_domain, return_probabilities


def timeit(fn, repeats):
    t0 = time.perf_counter()
    for _ in range(repeats):
        fn()
    return (time.perf_counter() - t0) / repeats


def main():
    parser = argparse.ArgumentParser()
    parser.add_argument("--mesh", type=int, default=16)
    parser.add_argument("--replicas", type=int, default=5)
    args = parser.parse_args()

    kernels = {"pure": backend.get_backend("pure")}
    try:
        kernels["compiled"] = backend.get_backend("compiled")
    except RuntimeError:
        print("compiled backend unavailable; benchmarking pure only")

    dom = build_domain("disc", args.mesh)
    rets = return_probabilities(dom)
    print(f"domain: disc N={args.mesh} ({dom.n_vertices} vertices), "
          f"{args.replicas} replicas per measurement\n")

    rows = []
    for name, kern in kernels.items():
        counter = iter(range(10**9))
        seed_state = backend.seed_state

        def soup():
            state = seed_state(1000 + next(counter))
            kern.sample_soup(state, dom.nbr, rets, 0.5)

        def besq():
            state = seed_state(2000 + next(counter))
            kern.besq_path(state, 0.3, 1000, 1e-3)

        def normals():
            state = seed_state(3000 + next(counter))
            kern.normals(state, 100_000)

        rows.append((name,
                     timeit(soup, args.replicas),
                     timeit(besq, args.replicas),
                     timeit(normals, max(1, args.replicas // 2))))

    print(f"{'backend':<10} {'soup sample':>14} {'besq 1k steps':>14} "
          f"{'100k normals':>14}")
    for name, a, b, c in rows:
        print(f"{name:<10} {a*1e3:>11.2f} ms {b*1e3:>11.2f} ms "
              f"{c*1e3:>11.2f} ms")
    if len(rows) == 2:
        pure = rows[0] if rows[0][0] == "pure" else rows[1]
        comp = rows[0] if rows[0][0] == "compiled" else rows[1]
        print(f"\nspeedup (pure/compiled): soup {pure[1]/comp[1]:.0f}x, "
              f"besq {pure[2]/comp[2]:.0f}x, normals {pure[3]/comp[3]:.0f}x")


if __name__ == "__main__":
    main()
