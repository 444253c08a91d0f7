#!/usr/bin/env python3
"""Compare the compiled ZUE decoding kernel against the numpy bitset fallback.

    python benchmarks/bench_kernels.py --reads 200000 --repeat 3
"""
import argparse
import time

import numpy as np

from shortmol import _kernels_py, kernels
from shortmol.channel import make_erasure_channel, make_typewriter_channel, sequence_batch
from shortmol.inner import sample_generator

CASES = [
    ("BEC(0.3) K=3 L=6", make_erasure_channel(2, 0.3), 2, 3, 6),
    ("BEC(0.1) K=7 L=16", make_erasure_channel(2, 0.1), 2, 7, 16),
    ("BEC(0.2) K=10 L=20", make_erasure_channel(2, 0.2), 2, 10, 20),
    ("typewriter(0.5) K=3 L=16", make_typewriter_channel(0.5), 3, 3, 16),
]


def best_of(fn, repeat):
    best = float("inf")
    out = None
    for _ in range(repeat):
        t0 = time.perf_counter()
        out = fn()
        best = min(best, time.perf_counter() - t0)
    return best, out


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--reads", type=int, default=200_000)
    ap.add_argument("--repeat", type=int, default=3)
    ap.add_argument("--seed", type=int, default=0)
    args = ap.parse_args()

    rng = np.random.default_rng(args.seed)
    print(f"compiled kernel available: {kernels._compiled is not None}")
    print(f"{'case':28s} {'T':>6s} {'compiled Mreads/s':>18s} {'numpy Mreads/s':>15s} {'speedup':>8s}")
    for name, ch, q, K, L in CASES:
        code = sample_generator(q, K, L, rng, require_full_rank=True)
        sent = rng.integers(0, code.size, args.reads)
        y = sequence_batch(ch, code.codewords[sent], rng)
        sup8 = ch.support.astype(np.uint8)
        t_py, out_py = best_of(lambda: _kernels_py.zue_decode_batch(ch.support, code.codewords, y), args.repeat)
        if kernels._compiled is not None:
            t_c, out_c = best_of(lambda: np.asarray(kernels._compiled.zue_decode_batch(sup8, code.codewords, y)),
                                 args.repeat)
            assert np.array_equal(out_c, out_py)
            c_rate, speed = f"{args.reads / t_c / 1e6:18.3f}", f"{t_py / t_c:8.2f}"
        else:
            c_rate, speed = f"{'n/a':>18s}", f"{'n/a':>8s}"
        print(f"{name:28s} {code.size:6d} {c_rate} {args.reads / t_py / 1e6:15.3f} {speed}")


if __name__ == "__main__":
    main()
