# cython: boundscheck=False, wraparound=False, initializedcheck=False, cdivision=True
"""Compiled zero-undetected-error decoding kernel.

Same bitset scheme as the numpy fallback: bit t of ``masks[i, y]`` is set iff
codeword t may emit y at position i.  A read's feasible set is the AND of its
L masks; the scan over words stops as soon as two feasible codewords are seen.
"""
import numpy as np

from libc.stdint cimport int64_t, uint8_t, uint64_t


cdef extern from *:
    int __builtin_popcountll(unsigned long long) nogil
    int __builtin_ctzll(unsigned long long) nogil


def zue_decode_batch(const uint8_t[:, ::1] support,
                     const int64_t[:, ::1] codewords,
                     const int64_t[:, ::1] reads):
    """Index of the unique feasible codeword for each read, or -1 (erasure)."""
    cdef Py_ssize_t n = reads.shape[0]
    cdef Py_ssize_t T = codewords.shape[0]
    cdef Py_ssize_t L = codewords.shape[1]
    cdef Py_ssize_t n_out = support.shape[1]
    cdef Py_ssize_t W = (T + 63) // 64
    cdef Py_ssize_t r, t, i, y, w
    cdef uint64_t acc
    cdef int64_t found
    cdef int count
    masks_arr = np.zeros((L, n_out, W), dtype=np.uint64)
    cdef uint64_t[:, :, ::1] masks = masks_arr
    out = np.empty(n, dtype=np.int64)
    cdef int64_t[::1] o = out
    with nogil:
        for t in range(T):
            for i in range(L):
                for y in range(n_out):
                    if support[codewords[t, i], y]:
                        masks[i, y, t >> 6] |= (<uint64_t>1) << (t & 63)
        for r in range(n):
            found = -1
            count = 0
            for w in range(W):
                acc = masks[0, reads[r, 0], w]
                i = 1
                while acc and i < L:
                    acc &= masks[i, reads[r, i], w]
                    i += 1
                if acc:
                    count += __builtin_popcountll(acc)
                    if count >= 2:
                        break
                    found = w * 64 + __builtin_ctzll(acc)
            o[r] = found if count == 1 else -1
    return out
