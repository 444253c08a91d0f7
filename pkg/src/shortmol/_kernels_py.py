"""Pure numpy fallback for the decoding kernel.

Feasible codewords are tracked as bitsets: for every position i and output
symbol y, ``masks[i, y]`` has bit t set iff codeword t may emit y at i.  A
read's feasible set is the AND of its L masks, so a read costs L * ceil(T/64)
word operations instead of T * L comparisons.
"""
from __future__ import annotations

import numpy as np

_CHUNK_WORDS = 1 << 20


def position_masks(support: np.ndarray, codewords: np.ndarray) -> np.ndarray:
    T, L = codewords.shape
    n_out = support.shape[1]
    words = (T + 63) // 64
    bits = np.zeros((L, n_out, words * 64), dtype=bool)
    # bits[i, y, t] = support[codewords[t, i], y]
    bits[:, :, :T] = support[codewords.T].transpose(0, 2, 1)
    packed = np.packbits(bits.reshape(L, n_out, words, 64), axis=-1, bitorder="little")
    return packed.view(np.uint64).reshape(L, n_out, words)


def zue_decode_batch(support: np.ndarray, codewords: np.ndarray, reads: np.ndarray) -> np.ndarray:
    support = np.asarray(support, dtype=bool)
    codewords = np.asarray(codewords, dtype=np.int64)
    reads = np.asarray(reads, dtype=np.int64)
    n, L = reads.shape
    masks = position_masks(support, codewords)
    words = masks.shape[2]
    out = np.empty(n, dtype=np.int64)
    step = max(1, _CHUNK_WORDS // max(1, words))
    pos = np.arange(L)
    for start in range(0, n, step):
        r = reads[start:start + step]
        feas = np.bitwise_and.reduce(masks[pos, r], axis=1)  # (chunk, words)
        pop = np.bitwise_count(feas).sum(axis=1, dtype=np.int64)
        one = pop == 1
        res = np.full(r.shape[0], -1, dtype=np.int64)
        if one.any():
            f = feas[one]
            w = np.argmax(f != 0, axis=1)
            v = f[np.arange(f.shape[0]), w]
            # v is a power of two below 2**64, exactly representable as a float
            res[one] = w * 64 + np.log2(v.astype(np.float64)).astype(np.int64)
        out[start:start + step] = res
    return out
