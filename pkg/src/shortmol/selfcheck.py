"""Fast invariant suite behind ``shortmol selfcheck``."""
from __future__ import annotations

import math
from typing import Iterable, NamedTuple, Optional

import numpy as np

from .channel import (
    Channel,
    make_erasure_channel,
    make_identity_channel,
    make_typewriter_channel,
    verify_symmetry,
)
from .errors import ShortmolError
from .exponents import e0_tilde, r_max
from .inner import message_independence_check, sample_generator
from .outer import chi_square, kl_divergence
from .pipeline import multinomial_chi2_mean_check
from .rng import STREAM_SELFCHECK, substream


class CheckResult(NamedTuple):
    name: str
    passed: bool
    detail: str


def default_channels() -> list:
    return [
        make_erasure_channel(2, 0.2),
        make_erasure_channel(2, 0.6),
        make_erasure_channel(3, 0.4),
        make_typewriter_channel(0.5),
        make_identity_channel(3),
    ]


def _prop1(channel: Channel, rng) -> Iterable[CheckResult]:
    if channel.witness is None or not verify_symmetry(channel, channel.witness):
        yield CheckResult(f"prop1/witness[{channel.name}]", False, "bundled symmetry witness does not verify")
        return
    yield CheckResult(f"prop1/witness[{channel.name}]", True, "")
    worst = 0.0
    try:
        for L in (2, 3, 4):
            for K in (1, 2):
                for _ in range(4):
                    code = sample_generator(channel.q, K, L, rng, require_full_rank=True)
                    worst = max(worst, message_independence_check(code, channel))
    except ShortmolError as exc:
        yield CheckResult(f"prop1/independence[{channel.name}]", False, str(exc))
        return
    yield CheckResult(f"prop1/independence[{channel.name}]", worst <= 1e-12, f"max gap {worst:.3g}")


def _kl_chi2(rng) -> CheckResult:
    worst = -math.inf
    for _ in range(10_000):
        T = int(rng.integers(2, 10))
        a = rng.dirichlet(np.ones(T))
        b = rng.dirichlet(np.ones(T))
        worst = max(worst, kl_divergence(a, b) - chi_square(a, b))
    return CheckResult("kl<=chi2", worst <= 1e-12, f"max D - chi2 = {worst:.3g}")


def _e0(channel: Channel) -> Iterable[CheckResult]:
    rhos = np.round(np.arange(0.1, 64.0 + 1e-9, 0.1), 10)
    ratio = np.array([e0_tilde(channel, r) / r for r in rhos])
    rise = float(np.max(np.diff(ratio))) if ratio.size > 1 else 0.0
    lim = e0_tilde(channel, 1e-6) / 1e-6
    rm = r_max(channel)
    yield CheckResult(f"e0/zero[{channel.name}]", e0_tilde(channel, 0.0) == 0.0, "")
    yield CheckResult(f"e0/ratio-monotone[{channel.name}]", rise <= 1e-12, f"max rise {rise:.3g}")
    yield CheckResult(f"e0/small-rho[{channel.name}]", abs(lim - rm) <= 1e-4, f"{lim:.8g} vs r_max {rm:.8g}")


def run_selfcheck(channels: Optional[list] = None, seed: int = 0) -> list:
    channels = default_channels() if channels is None else channels
    rng = substream(seed, STREAM_SELFCHECK)
    results = []
    for ch in channels:
        results.extend(_prop1(ch, rng))
    for ch in channels:
        results.extend(_e0(ch))
    results.append(_kl_chi2(rng))
    for T, N in ((2, 100), (5, 50), (10, 500)):
        r = multinomial_chi2_mean_check(T, N, 10_000, rng)
        results.append(CheckResult(f"chi2-mean[T={T},N={N}]", r.passed,
                                   f"{r.empirical:.5g} vs {r.analytic:.5g} (se {r.std_error:.2g})"))
    return results
