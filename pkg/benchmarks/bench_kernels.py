#!/usr/bin/env python3
"""Compare the compiled and pure-Python kernel backends.

Runs cut-set minimization and Shannon-decomposition probability on random
DNFs of increasing size and reports wall-clock times for both backends.

Usage: python3 benchmarks/bench_kernels.py [--repeat N] [--seed S]
"""

from __future__ import annotations

import argparse
import random
import time

from safeline import _kernels
from safeline._kernels import pure


def make_dnf(rng: random.Random, n_vars: int, n_terms: int) -> tuple[list[int], list[float]]:
    masks = []
    for _ in range(n_terms):
        width = rng.randint(1, max(1, n_vars // 3))
        bits = rng.sample(range(n_vars), width)
        masks.append(sum(1 << b for b in bits))
    probs = [rng.uniform(0.001, 0.2) for _ in range(n_vars)]
    return masks, probs


def bench(fn, *args, repeat: int) -> float:
    best = float("inf")
    for _ in range(repeat):
        start = time.perf_counter()
        fn(*args)
        best = min(best, time.perf_counter() - start)
    return best


def main() -> None:
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--repeat", type=int, default=5)
    ap.add_argument("--seed", type=int, default=1)
    args = ap.parse_args()
    rng = random.Random(args.seed)

    if _kernels.BACKEND != "cython":
        print("warning: compiled backend unavailable; comparing pure against itself")

    print(f"compiled backend: {_kernels.BACKEND}")
    print(f"{'case':<28} {'compiled':>12} {'pure':>12} {'speedup':>9}")

    for n_vars, n_terms in ((16, 200), (24, 1000), (32, 4000), (48, 12000)):
        masks, probs = make_dnf(rng, n_vars, n_terms)
        t_fast = bench(_kernels.minimize_cut_sets, masks, repeat=args.repeat)
        t_pure = bench(pure.minimize_cut_sets, masks, repeat=args.repeat)
        label = f"minimize {n_terms}x{n_vars}"
        print(f"{label:<28} {t_fast * 1e3:>10.2f}ms {t_pure * 1e3:>10.2f}ms {t_pure / t_fast:>8.1f}x")

    for n_vars, n_terms in ((14, 60), (18, 120), (22, 200)):
        masks, probs = make_dnf(rng, n_vars, n_terms)
        minimal = pure.minimize_cut_sets(masks)
        t_fast = bench(_kernels.dnf_probability, minimal, probs, repeat=args.repeat)
        t_pure = bench(pure.dnf_probability, minimal, probs, repeat=args.repeat)
        label = f"probability {len(minimal)}x{n_vars}"
        print(f"{label:<28} {t_fast * 1e3:>10.2f}ms {t_pure * 1e3:>10.2f}ms {t_pure / t_fast:>8.1f}x")


if __name__ == "__main__":
    main()
