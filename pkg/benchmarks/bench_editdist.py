"""Benchmark: compiled edit-distance kernel vs the pure-Python fallback.

The pool scan in pseudo labeling is the hot path, so besides the raw
kernel we also time a realistic max-similarity scan (one query against a
labeled utterance pool, with the length-band prefilter active).

    python benchmarks/bench_editdist.py [--pairs 2000] [--pool 2000]
"""

from __future__ import annotations

import argparse
import random
import time

from dialogforge.editdist import available_kernels

ALPHABET = "头痛发烧咳嗽嗓子疼医生药片好的谢谢您每天早晚饭后服用再来复查abcdefgh "


def make_strings(n: int, max_len: int, seed: int) -> list[str]:
    rng = random.Random(seed)
    return [
        "".join(rng.choice(ALPHABET) for _ in range(rng.randrange(5, max_len)))
        for _ in range(n)
    ]


def bench_kernel(kernel, pairs) -> float:
    start = time.perf_counter()
    for a, b in pairs:
        kernel(a, b)
    return time.perf_counter() - start


def bench_pool_scan(kernel, queries, pool) -> float:
    """Same shortcut structure as the production pool scan."""
    start = time.perf_counter()
    for q in queries:
        ql = len(q)
        eta = -1.0
        for text in pool:
            total = ql + len(text)
            if total == 0:
                eta = max(eta, 1.0)
                continue
            if eta >= 0.0:
                if 1.0 - abs(ql - len(text)) / total <= eta:
                    continue
                bound = int((1.0 - eta) * total) + 2
                while bound > 0 and 1.0 - bound / total <= eta:
                    bound -= 1
                d = kernel(q, text, bound)
                if d > bound:
                    continue
            else:
                d = kernel(q, text)
            score = 1.0 - d / total
            if score > eta:
                eta = score
    return time.perf_counter() - start


def main() -> None:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--pairs", type=int, default=2000)
    parser.add_argument("--pool", type=int, default=2000)
    parser.add_argument("--max-len", type=int, default=40)
    args = parser.parse_args()

    kernels = available_kernels()
    strings = make_strings(2 * args.pairs, args.max_len, seed=7)
    pairs = list(zip(strings[::2], strings[1::2]))
    pool = make_strings(args.pool, args.max_len, seed=8)
    queries = make_strings(50, args.max_len, seed=9)

    print(f"{'kernel':<8} {'pairs/s':>12} {'pool scans/s':>14}")
    base: dict[str, float] = {}
    for name, kernel in sorted(kernels.items()):
        pair_t = bench_kernel(kernel, pairs)
        scan_t = bench_pool_scan(kernel, queries, pool)
        base[name] = (pair_t, scan_t)
        print(f"{name:<8} {args.pairs / pair_t:>12.0f} {len(queries) / scan_t:>14.1f}")
    if {"python", "cython"} <= set(base):
        print(
            f"speedup (cython/python): "
            f"{base['python'][0] / base['cython'][0]:.1f}x raw, "
            f"{base['python'][1] / base['cython'][1]:.1f}x pool scan"
        )


if __name__ == "__main__":
    main()
