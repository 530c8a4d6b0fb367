"""Benchmark the compiled objective kernel against the pure-Python fallback.

The heuristic calls objective_components once per candidate move, so per-call
time is the number that matters. Run from the repository root after an
editable install:

    python3 benchmarks/bench_kernels.py --n 240 --rounds 2000
"""
from __future__ import annotations

import argparse
import statistics
import time

import numpy as np

from ccobft.kernels import pure

try:
    from ccobft.kernels import _speedups as compiled
except ImportError:
    compiled = None


def random_problem(seed: int, n: int, p: int, f: int = 1):
    rng = np.random.default_rng(seed)
    d = rng.integers(1, 50_000, size=(n, n), dtype=np.int64)
    np.fill_diagonal(d, 0)
    rtt = d + d.T
    to_v = rng.integers(1, 50_000, size=n, dtype=np.int64)
    from_v = rng.integers(1, 50_000, size=n, dtype=np.int64)
    tee = (rng.random(n) < 0.2).astype(np.uint8)
    leaders = rng.choice(n, size=p, replace=False).astype(np.int64)
    assign = np.empty(n, dtype=np.int64)
    others = [i for i in range(n) if i not in set(leaders.tolist())]
    for c, leader in enumerate(leaders):
        assign[leader] = c
    for k, node in enumerate(others):
        assign[node] = k % p
    return rtt, to_v, from_v, tee, leaders, assign, f


def time_per_call_us(fn, problems, rounds: int) -> float:
    # One warmup pass keeps allocator and cache effects out of the numbers.
    for problem in problems:
        fn(*problem)
    started = time.perf_counter()
    for i in range(rounds):
        fn(*problems[i % len(problems)])
    return (time.perf_counter() - started) / rounds * 1e6


def main() -> int:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--n", type=int, default=240, help="nodes per problem")
    parser.add_argument("--problems", type=int, default=25,
                        help="distinct random problems to cycle through")
    parser.add_argument("--rounds", type=int, default=2000,
                        help="kernel calls per implementation")
    parser.add_argument("--seed", type=int, default=0)
    args = parser.parse_args()

    p = args.n // 4
    problems = [
        random_problem(args.seed + i, args.n, p) for i in range(args.problems)
    ]
    print(f"n={args.n} committees={p} problems={args.problems} rounds={args.rounds}")

    if compiled is not None:
        disagreements = sum(
            1 for prob in problems if pure.objective_components(*prob)
            != compiled.objective_components(*prob)
        )
        print(f"equivalence: {len(problems) - disagreements}/{len(problems)} identical")
        if disagreements:
            return 1

    pure_us = time_per_call_us(pure.objective_components, problems, args.rounds)
    print(f"pure python: {pure_us:10.1f} us/call")
    if compiled is None:
        print("compiled extension not built; only the fallback was timed")
        return 0
    compiled_us = time_per_call_us(compiled.objective_components, problems, args.rounds)
    print(f"compiled:    {compiled_us:10.1f} us/call")
    print(f"speedup:     {pure_us / compiled_us:10.1f}x")
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
