"""Kernel backend selection.

The compiled extension is used when it was built; setting the environment
variable ``SHORTMOL_PURE_PYTHON=1`` forces the numpy fallback.  Both backends
consume no randomness, so results are identical whichever one is active.
"""
from __future__ import annotations

import os

import numpy as np

from . import _kernels_py

_compiled = None
if not os.environ.get("SHORTMOL_PURE_PYTHON"):
    try:
        from . import _kernels as _compiled
    except ImportError:
        _compiled = None

BACKEND = "cython" if _compiled is not None else "python"


def zue_decode_batch(support: np.ndarray, codewords: np.ndarray, reads: np.ndarray) -> np.ndarray:
    support = np.ascontiguousarray(support, dtype=np.uint8)
    codewords = np.ascontiguousarray(codewords, dtype=np.int64)
    reads = np.ascontiguousarray(reads, dtype=np.int64)
    if reads.ndim != 2 or reads.shape[1] != codewords.shape[1]:
        raise ValueError(f"reads must have shape (n, {codewords.shape[1]}), got {reads.shape}")
    # the compiled kernel does no bounds checking
    if reads.size and (reads.min() < 0 or reads.max() >= support.shape[1]):
        raise ValueError("read symbols outside the output alphabet")
    if codewords.size and (codewords.min() < 0 or codewords.max() >= support.shape[0]):
        raise ValueError("codeword symbols outside the input alphabet")
    if _compiled is not None:
        return np.asarray(_compiled.zue_decode_batch(support, codewords, reads))
    return _kernels_py.zue_decode_batch(support, codewords, reads)
