"""Counter-based random substreams.

Every stochastic quantity in a run is drawn from a generator keyed by
``(master_seed, stream_tag, index...)``.  Results therefore do not depend on
execution order or on how trials are split across workers.
"""
from __future__ import annotations

import numpy as np

# stream tags; fixed integers so that on-disk results stay reproducible
STREAM_CODE = 1
STREAM_CODEBOOK = 2
STREAM_TRIAL = 3
STREAM_ENSEMBLE = 4
STREAM_SELFCHECK = 5


def substream(seed: int, *keys: int) -> np.random.Generator:
    if seed < 0:
        raise ValueError("seed must be non-negative")
    ss = np.random.SeedSequence(int(seed), spawn_key=tuple(int(k) for k in keys))
    return np.random.Generator(np.random.PCG64(ss))


def child_seed(rng: np.random.Generator) -> int:
    """Draw a 63-bit seed from ``rng`` for deriving further substreams."""
    return int(rng.integers(0, 2**63 - 1))


def as_generator(rng) -> np.random.Generator:
    if isinstance(rng, np.random.Generator):
        return rng
    return np.random.default_rng(rng)
