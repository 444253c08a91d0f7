"""Linear block codes over Z_q with zero-undetected-error (ZUE) decoding."""
from __future__ import annotations

import math
import threading
from dataclasses import dataclass, field
from typing import NamedTuple, Optional

import numpy as np

from . import kernels
from .channel import Channel, require_symmetric, sequence_batch
from .errors import CapabilityError, InputDomainError, UndetectedErrorDetected
from .exponents import RHO_MAX, erasure_exponent
from .rng import STREAM_ENSEMBLE, child_seed, substream

ENUMERATION_BUDGET = 10**7
Z95 = 1.959963984540054


def is_prime(n: int) -> bool:
    if n < 2:
        return False
    return all(n % d for d in range(2, math.isqrt(n) + 1))


def rank_mod_p(a: np.ndarray, p: int) -> int:
    """Rank of an integer matrix over the field Z_p (p prime)."""
    m = np.array(a, dtype=np.int64) % p
    rows, cols = m.shape
    rank = 0
    for c in range(cols):
        pivot = next((r for r in range(rank, rows) if m[r, c]), None)
        if pivot is None:
            continue
        m[[rank, pivot]] = m[[pivot, rank]]
        m[rank] = (m[rank] * pow(int(m[rank, c]), -1, p)) % p
        for r in range(rows):
            if r != rank and m[r, c]:
                m[r] = (m[r] - m[r, c] * m[rank]) % p
        rank += 1
        if rank == rows:
            break
    return rank


def message_digits(q: int, K: int, messages) -> np.ndarray:
    """Little-endian base-q digits of message indices, shape (..., K)."""
    m = np.asarray(messages, dtype=np.int64)
    return (m[..., None] // q ** np.arange(K, dtype=np.int64)) % q


@dataclass(frozen=True, eq=False)
class LinearCode:
    q: int
    generator: np.ndarray
    codewords: np.ndarray = field(init=False, repr=False)
    full_rank: bool = field(init=False)

    def __post_init__(self):
        g = np.array(self.generator, dtype=np.int64)
        if g.ndim != 2:
            raise InputDomainError("generator must be a K x L matrix")
        if self.q < 2:
            raise InputDomainError("q must be >= 2")
        K, L = g.shape
        if not 1 <= K <= L:
            raise InputDomainError(f"need 1 <= K <= L, got K={K}, L={L}")
        if g.min() < 0 or g.max() >= self.q:
            raise InputDomainError(f"generator entries must lie in [0, {self.q})")
        if self.q ** K > ENUMERATION_BUDGET:
            raise CapabilityError(f"q^K = {self.q ** K} codewords is too many to materialise")
        g.setflags(write=False)
        cw = (message_digits(self.q, K, np.arange(self.q ** K)) @ g) % self.q
        cw.setflags(write=False)
        object.__setattr__(self, "generator", g)
        object.__setattr__(self, "codewords", cw)
        # injective encoding; for prime q this is rank K over Z_q
        object.__setattr__(self, "full_rank", len(np.unique(cw, axis=0)) == cw.shape[0])

    @property
    def K(self) -> int:
        return self.generator.shape[0]

    @property
    def L(self) -> int:
        return self.generator.shape[1]

    @property
    def size(self) -> int:
        return self.q ** self.K

    @property
    def rate(self) -> float:
        """K log q / L, nats per channel use."""
        return self.K * math.log(self.q) / self.L

    def to_config(self) -> dict:
        return {"q": self.q, "K": self.K, "L": self.L,
                "generator": [int(v) for v in self.generator.ravel()]}

    @classmethod
    def from_config(cls, spec: dict) -> "LinearCode":
        try:
            q, K, L = int(spec["q"]), int(spec["K"]), int(spec["L"])
            flat = [int(v) for v in spec["generator"]]
        except (KeyError, TypeError, ValueError) as exc:
            raise InputDomainError(f"bad code spec: {exc}") from None
        if len(flat) != K * L:
            raise InputDomainError(f"generator has {len(flat)} entries, expected K*L = {K * L}")
        return cls(q, np.array(flat, dtype=np.int64).reshape(K, L))


def sample_generator(q: int, K: int, L: int, rng: np.random.Generator,
                     require_full_rank: bool = False) -> LinearCode:
    if q < 2:
        raise InputDomainError("q must be >= 2")
    if not 1 <= K <= L:
        raise InputDomainError(f"need 1 <= K <= L, got K={K}, L={L}")
    if require_full_rank and not is_prime(q):
        raise InputDomainError(f"full-rank sampling needs prime q (rank over Z_{q} is not a field rank)")
    while True:
        g = rng.integers(0, q, size=(K, L))
        if not require_full_rank or rank_mod_p(g, q) == K:
            return LinearCode(q, g)


def encode(code: LinearCode, message: int) -> np.ndarray:
    if not 0 <= message < code.size:
        raise InputDomainError(f"message {message} outside [0, {code.size})")
    return code.codewords[message]


class ZueOutcome(NamedTuple):
    """Decoded message index, or ``None`` for an erasure."""

    index: Optional[int]

    @property
    def erased(self) -> bool:
        return self.index is None


ERASURE = ZueOutcome(None)


def _check_pair(code: LinearCode, channel: Channel):
    if channel.q != code.q:
        raise InputDomainError(f"channel input alphabet {channel.q} != code alphabet {code.q}")


def zue_decode(code: LinearCode, channel: Channel, y_vec) -> ZueOutcome:
    """Decode one read by scanning codewords, stopping at the second feasible one."""
    _check_pair(code, channel)
    y = np.asarray(y_vec, dtype=np.int64)
    if y.shape != (code.L,) or y.min() < 0 or y.max() >= channel.output_size:
        raise InputDomainError("read must be a length-L sequence of valid output symbols")
    sup = channel.support
    found = None
    for m, x in enumerate(code.codewords):
        if all(sup[x[i], y[i]] for i in range(code.L)):
            if found is not None:
                return ERASURE
            found = m
    return ZueOutcome(found)


def zue_decode_many(code: LinearCode, channel: Channel, reads: np.ndarray) -> np.ndarray:
    """Batched decode: message index per read, -1 for erasure."""
    _check_pair(code, channel)
    return kernels.zue_decode_batch(channel.support, code.codewords, reads)


class DecodeTally:
    """Process-wide count of inner decodes with a known transmitted codeword."""

    def __init__(self):
        self._lock = threading.Lock()
        self.decodes = 0
        self.undetected = 0

    def add(self, decodes: int, undetected: int):
        with self._lock:
            self.decodes += int(decodes)
            self.undetected += int(undetected)


TALLY = DecodeTally()


def check_decisions(decoded: np.ndarray, transmitted) -> int:
    """Count wrong (non-erasure) decisions, record them, and raise if any."""
    wrong = int(np.count_nonzero((decoded >= 0) & (decoded != transmitted)))
    TALLY.add(decoded.size, wrong)
    if wrong:
        raise UndetectedErrorDetected(f"{wrong} reads decoded to a wrong codeword")
    return wrong


def output_chunks(n_out: int, L: int, chunk: int = 1 << 16):
    """Yield all of Y^L in lexicographic blocks of at most ``chunk`` rows."""
    total = n_out ** L
    if total > ENUMERATION_BUDGET:
        raise CapabilityError(f"|Y|^L = {n_out}^{L} exceeds the enumeration budget {ENUMERATION_BUDGET}")
    powers = n_out ** np.arange(L - 1, -1, -1, dtype=np.int64)
    for start in range(0, total, chunk):
        idx = np.arange(start, min(total, start + chunk), dtype=np.int64)
        yield (idx[:, None] // powers) % n_out


def conditional_erasure_probs(code: LinearCode, channel: Channel) -> np.ndarray:
    """Exact P_er|m for every message m by summing over all of Y^L."""
    _check_pair(code, channel)
    probs = np.zeros(code.size)
    w = channel.matrix
    for ys in output_chunks(channel.output_size, code.L):
        ye = ys[zue_decode_many(code, channel, ys) < 0]
        if ye.size == 0:
            continue
        for m, x in enumerate(code.codewords):
            probs[m] += np.prod(w[x, ye], axis=1).sum()
    return probs


def erasure_prob_exact(code: LinearCode, channel: Channel, transmitted: int) -> float:
    """Exact P_er|m: total probability of the erasure region given codeword m."""
    _check_pair(code, channel)
    x = encode(code, transmitted)
    total = 0.0
    for ys in output_chunks(channel.output_size, code.L):
        ye = ys[zue_decode_many(code, channel, ys) < 0]
        if ye.size:
            total += float(np.prod(channel.matrix[x, ye], axis=1).sum())
    return total


def wilson_interval(k: int, n: int, z: float = Z95) -> tuple[float, float]:
    if n <= 0:
        raise InputDomainError("need at least one trial")
    p = k / n
    den = 1.0 + z * z / n
    center = (p + z * z / (2 * n)) / den
    half = z * math.sqrt(p * (1 - p) / n + z * z / (4 * n * n)) / den
    return center - half, center + half


class McEstimate(NamedTuple):
    estimate: float
    half_width: float


def _simulate_erasures(code: LinearCode, channel: Channel, transmitted: int, trials: int,
                       rng: np.random.Generator) -> int:
    x = encode(code, transmitted)
    erasures = 0
    chunk = 1 << 16
    for start in range(0, trials, chunk):
        n = min(chunk, trials - start)
        y = sequence_batch(channel, np.broadcast_to(x, (n, code.L)), rng)
        dec = zue_decode_many(code, channel, y)
        check_decisions(dec, transmitted)
        erasures += int(np.count_nonzero(dec < 0))
    return erasures


def erasure_prob_mc(code: LinearCode, channel: Channel, transmitted: int, trials: int,
                    rng: np.random.Generator) -> McEstimate:
    """Monte Carlo erasure rate with a Wilson 95% half-width.

    Raises UndetectedErrorDetected if any trial decodes to a wrong codeword.
    """
    if trials < 1:
        raise InputDomainError("trials must be >= 1")
    k = _simulate_erasures(code, channel, transmitted, trials, rng)
    lo, hi = wilson_interval(k, trials)
    return McEstimate(k / trials, (hi - lo) / 2)


@dataclass(frozen=True)
class EnsembleEstimate:
    mean: float
    std_error: float
    per_code: np.ndarray

    @property
    def n_codes(self) -> int:
        return self.per_code.size


def ensemble_erasure_prob(q: int, K: int, L: int, channel: Channel, n_codes: int,
                          trials_per_code: int, rng: np.random.Generator, threads: int = 1,
                          exact: bool = False, require_full_rank: bool = False) -> EnsembleEstimate:
    """Average ZUE erasure probability over the i.i.d. uniform generator ensemble.

    Rank-deficient generators are kept unless ``require_full_rank``.  Message 0 is transmitted, which is
    representative for symmetric channels only, so asymmetric channels are
    refused.  With ``exact=True`` each code's probability is computed by full
    enumeration of Y^L instead of simulation.
    """
    require_symmetric(channel)
    if channel.q != q:
        raise InputDomainError(f"channel input alphabet {channel.q} != q = {q}")
    if n_codes < 1 or (trials_per_code < 1 and not exact):
        raise InputDomainError("n_codes and trials_per_code must be >= 1")
    base = child_seed(rng)

    def one(c: int) -> float:
        sub = substream(base, STREAM_ENSEMBLE, c)
        code = sample_generator(q, K, L, sub, require_full_rank)
        if exact:
            return erasure_prob_exact(code, channel, 0)
        return _simulate_erasures(code, channel, 0, trials_per_code, sub) / trials_per_code

    if threads > 1:
        from concurrent.futures import ThreadPoolExecutor
        with ThreadPoolExecutor(threads) as pool:
            vals = list(pool.map(one, range(n_codes)))
    else:
        vals = [one(c) for c in range(n_codes)]
    per_code = np.array(vals)
    se = float(per_code.std(ddof=1) / math.sqrt(n_codes)) if n_codes > 1 else 0.0
    return EnsembleEstimate(float(per_code.mean()), se, per_code)


def theorem2_bound(channel: Channel, L: int, rate: float, rho_max: float = RHO_MAX) -> float:
    """exp(-L * E(rate)) clamped to [0, 1]: ensemble-average ZUE erasure bound.

    The exponent is maximised over 0 < rho <= rho_max.  Only rho_max <= 1
    yields a guaranteed upper bound, since (sum of probabilities)^rho bounds
    the probability of a union only for rho <= 1.
    """
    if L < 0:
        raise InputDomainError("L must be >= 0")
    if L == 0:
        return 1.0
    e = erasure_exponent(channel, rate, rho_max).exponent
    return min(1.0, max(0.0, math.exp(-L * e)))


def message_independence_check(code: LinearCode, channel: Channel) -> float:
    """Largest gap between exact conditional erasure probabilities of two messages."""
    require_symmetric(channel)
    p = conditional_erasure_probs(code, channel)
    return float(p.max() - p.min())
