"""Histogram (outer) codebooks over T molecule types and minimum-KL decoding."""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import NamedTuple, Optional

import numpy as np

from .channel import Channel
from .errors import InputDomainError
from .exponents import r_max
from .rng import STREAM_CODEBOOK, substream


def sample_dirichlet_uniform(T: int, rng: np.random.Generator) -> np.ndarray:
    """Uniform point on the (T-1)-simplex: normalised i.i.d. Exp(1) draws."""
    if T < 2:
        raise InputDomainError(f"T must be >= 2, got {T}")
    x = rng.standard_exponential(T)
    return x / x.sum()


@dataclass(frozen=True, eq=False)
class OuterCodeword:
    counts: np.ndarray
    pmf: np.ndarray

    @property
    def total(self) -> int:
        return int(self.counts.sum())


def quantize(p, M: int) -> OuterCodeword:
    """floor(M p) copies of each type, renormalised to an empirical PMF."""
    p = np.asarray(p, dtype=np.float64)
    T = p.size
    if M <= T:
        raise InputDomainError(f"need M > T so that the pool is non-empty (M={M}, T={T})")
    if np.any(p < 0) or abs(p.sum() - 1.0) > 1e-9:
        raise InputDomainError("p must be a probability vector")
    counts = np.floor(M * p).astype(np.int64)
    counts.setflags(write=False)
    pmf = counts / counts.sum()
    pmf.setflags(write=False)
    return OuterCodeword(counts, pmf)


@dataclass(frozen=True, eq=False)
class OuterCodebook:
    codewords: tuple
    M: int
    T: int
    seed: Optional[int]

    def __len__(self):
        return len(self.codewords)

    def __post_init__(self):
        pm = np.array([c.pmf for c in self.codewords])
        pm.setflags(write=False)
        object.__setattr__(self, "_pmfs", pm)

    @property
    def pmfs(self) -> np.ndarray:
        """(size, T) matrix of empirical PMFs."""
        return self._pmfs

    def to_config(self) -> dict:
        return {"M": self.M, "T": self.T, "seed": self.seed,
                "counts": [[int(v) for v in c.counts] for c in self.codewords]}

    @classmethod
    def from_config(cls, spec: dict) -> "OuterCodebook":
        M, T = int(spec["M"]), int(spec["T"])
        words = []
        for row in spec["counts"]:
            counts = np.array(row, dtype=np.int64)
            if counts.shape != (T,) or counts.min() < 0 or not 0 < counts.sum() <= M:
                raise InputDomainError(f"bad codeword counts {row!r} for T={T}, M={M}")
            counts.setflags(write=False)
            pmf = counts / counts.sum()
            pmf.setflags(write=False)
            words.append(OuterCodeword(counts, pmf))
        return cls(tuple(words), M, T, spec.get("seed"))


def build_codebook(size: int, T: int, M: int, seed: int) -> OuterCodebook:
    """``size`` independent Dirichlet(1,...,1) draws quantised to pools of at most M.

    The draws depend on ``seed`` only, so codebooks for different M with the
    same seed share the same underlying simplex points.
    """
    if size < 1:
        raise InputDomainError("codebook size must be >= 1")
    if M <= T:
        raise InputDomainError(f"need M > T (M={M}, T={T})")
    rng = substream(seed, STREAM_CODEBOOK)
    words = tuple(quantize(sample_dirichlet_uniform(T, rng), M) for _ in range(size))
    return OuterCodebook(words, M, T, seed)


def _pair(a, b):
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    if a.shape != b.shape:
        raise InputDomainError(f"length mismatch: {a.shape} vs {b.shape}")
    return a, b


def kl_divergence(Q, P) -> float:
    """D(Q||P) in nats; +inf when Q puts mass where P has none."""
    Q, P = _pair(Q, P)
    s = Q > 0
    if np.any(P[s] == 0):
        return math.inf
    return float(np.sum(Q[s] * np.log(Q[s] / P[s])))


def chi_square(Q, P) -> float:
    """sum (Q - P)^2 / P over the support of P; +inf on a support violation."""
    Q, P = _pair(Q, P)
    s = P > 0
    if np.any(Q[~s] > 0):
        return math.inf
    return float(np.sum((Q[s] - P[s]) ** 2 / P[s]))


def chi_square_rows(Q: np.ndarray, P: np.ndarray) -> np.ndarray:
    """chi_square of every row of Q against a strictly positive P."""
    P = np.asarray(P, dtype=np.float64)
    return ((np.asarray(Q) - P) ** 2 / P).sum(axis=-1)


class KlDecision(NamedTuple):
    index: int
    divergence: float
    tie_count: int


def kl_divergences(pmfs: np.ndarray, q_hat: np.ndarray) -> np.ndarray:
    """D(q_hat || row) for every row of ``pmfs``."""
    s = q_hat > 0
    qs = q_hat[s]
    with np.errstate(divide="ignore"):
        logp = np.log(pmfs[:, s])
    # row-wise sum keeps identical rows bit-identical (no BLAS blocking),
    # and a row equal to q_hat gives exactly 0
    return (qs * (np.log(qs) - logp)).sum(axis=1)


def kl_decode(codebook: OuterCodebook, q_hat) -> KlDecision:
    """argmin_m D(q_hat || P_m); ties go to the lowest index and are counted.

    If every codeword misses part of q_hat's support the divergence returned
    is +inf (index 0, tie_count = size - 1).
    """
    q_hat = np.asarray(q_hat, dtype=np.float64)
    if q_hat.shape != (codebook.T,):
        raise InputDomainError(f"q_hat must have length T={codebook.T}")
    d = kl_divergences(codebook.pmfs, q_hat)
    best = int(np.argmin(d))
    dmin = float(d[best])
    return KlDecision(best, dmin, int(np.count_nonzero(d == dmin)) - 1)


def theorem3_codebook_size(M: float, T: float, sigma: float) -> float:
    """log |C_M| = (1/2 - sigma) T log(M/T), in nats."""
    if not 0 < sigma < 0.5:
        raise InputDomainError(f"sigma must lie in (0, 1/2), got {sigma}")
    if not M > T:
        raise InputDomainError(f"need M > T (M={M}, T={T})")
    return (0.5 - sigma) * T * math.log(M / T)


def psi_lower_bound(M: float, beta: float, channel: Channel) -> float:
    """Achievable log-cardinality scaling (1 - b R)/2 * M^(b R) * log M with R = r_max."""
    if not 0 < beta < 1 / math.log(channel.q):
        raise InputDomainError(f"beta must lie in (0, 1/log q) = (0, {1 / math.log(channel.q):.6g})")
    if M < 2:
        raise InputDomainError("M must be >= 2")
    br = beta * r_max(channel)
    return (1.0 - br) / 2.0 * M ** br * math.log(M)
