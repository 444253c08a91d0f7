"""End-to-end storage and retrieval simulation.

A message selects an outer codeword (a pool of molecule counts over the T
inner codewords).  Retrieval samples N reads from the pool, sequences each
read through the channel, ZUE-decodes it, and feeds the survivor frequencies
to the minimum-KL outer decoder.  No survivors (S = 0) is a decoding error.
"""
from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace
from typing import NamedTuple, Optional

import numpy as np

from .channel import Channel, channel_from_config, sequence_batch
from .errors import InputDomainError
from .inner import (
    ENUMERATION_BUDGET,
    LinearCode,
    TALLY,
    erasure_prob_exact,
    erasure_prob_mc,
    is_prime,
    sample_generator,
    wilson_interval,
    zue_decode_many,
)
from .outer import OuterCodebook, build_codebook, chi_square_rows, kl_decode
from .rng import STREAM_CODE, STREAM_SELFCHECK, STREAM_TRIAL, substream

TRIAL_CHUNK = 64


@dataclass(frozen=True)
class SimulationConfig:
    channel: Channel
    q: int
    K: int
    L: int
    M: int
    xi: float
    codebook_size: int
    trials: int
    seed: int = 0
    sigma: float = 0.25
    generator: Optional[tuple] = None

    def __post_init__(self):
        if self.channel.q != self.q:
            raise InputDomainError(f"channel has {self.channel.q} inputs but q = {self.q}")
        if not 1 <= self.K <= self.L:
            raise InputDomainError(f"need 1 <= K <= L, got K={self.K}, L={self.L}")
        if self.T >= self.M:
            raise InputDomainError(f"T = q^K = {self.T} must be below the pool bound M = {self.M}")
        if not self.xi > 0 or self.N < 1:
            raise InputDomainError(f"coverage depth xi={self.xi} gives N={self.N} reads; need N >= 1")
        if self.trials < 1:
            raise InputDomainError("trials must be >= 1")
        if self.codebook_size < 1:
            raise InputDomainError("codebook_size must be >= 1")
        if self.seed < 0:
            raise InputDomainError("seed must be non-negative")

    @property
    def T(self) -> int:
        return self.q ** self.K

    @property
    def N(self) -> int:
        return int(round(self.xi * self.M))

    @property
    def rate(self) -> float:
        return self.K * math.log(self.q) / self.L

    @property
    def beta_implied(self) -> float:
        return self.L / math.log(self.M)

    @classmethod
    def from_dict(cls, spec: dict, **overrides) -> "SimulationConfig":
        """Build from a parsed config mapping; ``overrides`` replace fields.

        ``L`` may be omitted when ``beta`` is given, in which case
        L = floor(beta * ln M).
        """
        spec = {**spec, **overrides}
        try:
            channel = spec["channel"]
            if not isinstance(channel, Channel):
                channel = channel_from_config(channel)
            M = int(spec["M"])
            generator = spec.get("generator")
            K = int(spec["K"])
            if "L" in spec:
                L = int(spec["L"])
            elif "beta" in spec:
                L = max(1, int(math.floor(float(spec["beta"]) * math.log(M))))
            else:
                raise InputDomainError("config needs L or beta")
            if generator is not None:
                generator = tuple(int(v) for v in generator)
                if len(generator) != K * L:
                    raise InputDomainError(f"generator has {len(generator)} entries, expected K*L = {K * L}")
            return cls(
                channel=channel,
                q=int(spec.get("q", channel.q)),
                K=K,
                L=L,
                M=M,
                xi=float(spec["xi"]),
                codebook_size=int(spec["codebook_size"]),
                trials=int(spec["trials"]),
                seed=int(spec.get("seed", 0)),
                sigma=float(spec.get("sigma", 0.25)),
                generator=generator,
            )
        except KeyError as exc:
            raise InputDomainError(f"config missing field {exc.args[0]!r}") from None
        except (TypeError, ValueError) as exc:
            if isinstance(exc, InputDomainError):
                raise
            raise InputDomainError(f"bad config value: {exc}") from None


def build_inner_code(config: SimulationConfig) -> LinearCode:
    """The inner code used by a run: explicit generator, or a full-rank draw."""
    if config.generator is not None:
        code = LinearCode(config.q, np.array(config.generator).reshape(config.K, config.L))
        if not code.full_rank:
            raise InputDomainError("explicit generator has duplicate codewords; T distinct molecule types are needed")
        return code
    if not is_prime(config.q):
        raise InputDomainError(f"q = {config.q} is not prime; supply an explicit generator")
    return sample_generator(config.q, config.K, config.L, substream(config.seed, STREAM_CODE),
                            require_full_rank=True)


def sample_reads(counts, N: int, rng: np.random.Generator) -> np.ndarray:
    """Per-type read counts U ~ Multinomial(N, counts / sum(counts))."""
    counts = np.asarray(counts, dtype=np.float64)
    total = counts.sum()
    if total <= 0:
        raise InputDomainError("pool is empty")
    return rng.multinomial(N, counts / total)


class TrialRecord(NamedTuple):
    transmitted: int
    survivors: int
    erased: int
    decoded: Optional[int]
    tie: bool
    undetected: int

    @property
    def pipeline_error(self) -> bool:
        return self.survivors == 0

    @property
    def correct(self) -> bool:
        return self.decoded == self.transmitted


def run_trial(config: SimulationConfig, codebook: OuterCodebook, code: LinearCode,
              rng: np.random.Generator) -> TrialRecord:
    m = int(rng.integers(len(codebook)))
    U = sample_reads(codebook.codewords[m].counts, config.N, rng)
    types = np.repeat(np.arange(code.size), U)
    y = sequence_batch(config.channel, code.codewords[types], rng)
    dec = zue_decode_many(code, config.channel, y)
    wrong = int(np.count_nonzero((dec >= 0) & (dec != types)))
    TALLY.add(dec.size, wrong)
    V = np.bincount(dec[dec >= 0], minlength=code.size)
    S = int(V.sum())
    if S == 0:
        return TrialRecord(m, 0, config.N, None, False, wrong)
    decision = kl_decode(codebook, V / S)
    return TrialRecord(m, S, config.N - S, decision.index, decision.tie_count > 0, wrong)


@dataclass
class SimulationReport:
    config: SimulationConfig
    trials: int
    errors: int
    err_rate: float
    err_ci: float
    mean_erasure_frac: float
    s_zero_frac: float
    s_min: int
    s_mean: float
    s_max: int
    ties: int
    undetected: int
    records: list = field(default_factory=list, repr=False)


def _run_trials(config, codebook, code, indices) -> list:
    return [run_trial(config, codebook, code, substream(config.seed, STREAM_TRIAL, t)) for t in indices]


def simulate(config: SimulationConfig, codebook: OuterCodebook, code: LinearCode,
             threads: int = 1) -> list:
    """All trial records, in trial order, independent of ``threads``."""
    chunks = [range(s, min(config.trials, s + TRIAL_CHUNK)) for s in range(0, config.trials, TRIAL_CHUNK)]
    if threads > 1:
        with ThreadPoolExecutor(threads) as pool:
            parts = list(pool.map(lambda c: _run_trials(config, codebook, code, c), chunks))
    else:
        parts = [_run_trials(config, codebook, code, c) for c in chunks]
    return [r for part in parts for r in part]


def summarize(config: SimulationConfig, records: list) -> SimulationReport:
    n = len(records)
    errors = sum(not r.correct for r in records)
    lo, hi = wilson_interval(errors, n)
    S = np.array([r.survivors for r in records])
    return SimulationReport(
        config=config,
        trials=n,
        errors=errors,
        err_rate=errors / n,
        err_ci=(hi - lo) / 2,
        mean_erasure_frac=float(np.mean([r.erased for r in records])) / config.N,
        s_zero_frac=float(np.mean(S == 0)),
        s_min=int(S.min()),
        s_mean=float(S.mean()),
        s_max=int(S.max()),
        ties=sum(r.tie for r in records),
        undetected=sum(r.undetected for r in records),
        records=records,
    )


def run_experiment(config: SimulationConfig, threads: int = 1) -> SimulationReport:
    code = build_inner_code(config)
    codebook = build_codebook(config.codebook_size, config.T, config.M, config.seed)
    return summarize(config, simulate(config, codebook, code, threads))


def inner_success_prob(config: SimulationConfig, code: LinearCode) -> float:
    """P_c = 1 - P_er of the inner code (exact when Y^L is enumerable)."""
    if config.channel.output_size ** code.L <= ENUMERATION_BUDGET:
        return 1.0 - erasure_prob_exact(code, config.channel, 0)
    est = erasure_prob_mc(code, config.channel, 0, 200_000, substream(config.seed, STREAM_SELFCHECK))
    return 1.0 - est.estimate


class ChernoffCheck(NamedTuple):
    empirical: float
    bound: float
    threshold: float
    p_c: float
    passed: bool


def chernoff_s_bound_check(config: SimulationConfig, trials: int, kappa: float,
                           threads: int = 1) -> ChernoffCheck:
    """Compare P[S <= N P_c (1 - kappa)] with the Chernoff bound exp(-kappa^2 N P_c / 2)."""
    if not 0 < kappa < 1:
        raise InputDomainError(f"kappa must lie in (0, 1), got {kappa}")
    cfg = replace(config, trials=trials)
    code = build_inner_code(cfg)
    codebook = build_codebook(cfg.codebook_size, cfg.T, cfg.M, cfg.seed)
    p_c = inner_success_prob(cfg, code)
    records = simulate(cfg, codebook, code, threads)
    threshold = cfg.N * p_c * (1 - kappa)
    emp = float(np.mean([r.survivors <= threshold for r in records]))
    bound = math.exp(-0.5 * kappa ** 2 * cfg.N * p_c)
    sigma = math.sqrt(bound * (1 - bound) / trials)
    return ChernoffCheck(emp, bound, threshold, p_c, emp <= bound + 4 * sigma)


class Chi2MeanCheck(NamedTuple):
    empirical: float
    analytic: float
    std_error: float
    passed: bool


def multinomial_chi2_mean_check(T: int, N: int, trials: int, rng: np.random.Generator,
                                p=None) -> Chi2MeanCheck:
    """Mean of chi^2(U/N || p) for U ~ Multinomial(N, p) against (T - 1)/N."""
    if N < T:
        raise InputDomainError(f"need N >= T (N={N}, T={T})")
    p = np.full(T, 1.0 / T) if p is None else np.asarray(p, dtype=np.float64)
    if p.shape != (T,) or np.any(p <= 0):
        raise InputDomainError("p must be a strictly positive PMF of length T")
    U = rng.multinomial(N, p, size=trials)
    chi2 = chi_square_rows(U / N, p)
    se = float(chi2.std(ddof=1) / math.sqrt(trials))
    emp = float(chi2.mean())
    analytic = (T - 1) / N
    return Chi2MeanCheck(emp, analytic, se, abs(emp - analytic) <= 5 * se)
