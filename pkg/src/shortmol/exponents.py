"""Erasure exponent of random linear codes under zero-undetected-error decoding.

All quantities are in nats and use the uniform input distribution on Z_q.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import NamedTuple, Sequence

import numpy as np

from .channel import Channel
from .errors import InputDomainError

RHO_MAX = 64.0
RHO_TOL = 1e-10
_INVPHI = (math.sqrt(5.0) - 1.0) / 2.0


def _output_terms(channel: Channel) -> tuple[np.ndarray, np.ndarray]:
    """(PW)(y) and P(X(y)) for the outputs with positive probability."""
    pw = channel.matrix.sum(axis=0) / channel.q
    px = channel.support.sum(axis=0) / channel.q
    keep = pw > 0
    return pw[keep], px[keep]


def e0_tilde(channel: Channel, rho: float) -> float:
    """-log sum_y (PW)(y) P(X(y))^rho."""
    if not rho >= 0:
        raise InputDomainError(f"rho must be >= 0, got {rho}")
    if rho == 0:
        return 0.0
    pw, px = _output_terms(channel)
    return -math.log(float(np.sum(pw * px ** rho)))


def e0_tilde_many(channel: Channel, rhos: np.ndarray) -> np.ndarray:
    """Vectorised e0_tilde over an array of rho values (used by grid oracles)."""
    pw, px = _output_terms(channel)
    rhos = np.asarray(rhos, dtype=np.float64)
    # log-sum-exp over outputs keeps large rho stable
    logs = np.log(pw)[None, :] + rhos[:, None] * np.log(px)[None, :]
    top = logs.max(axis=1, keepdims=True)
    return -(top[:, 0] + np.log(np.exp(logs - top).sum(axis=1)))


def r_max(channel: Channel) -> float:
    """Largest inner rate with a positive erasure exponent."""
    pw, px = _output_terms(channel)
    return float(np.sum(pw * -np.log(px)))


class ExponentPoint(NamedTuple):
    exponent: float
    rho_star: float
    saturated: bool


def golden_section_max(f, lo: float, hi: float, tol: float = RHO_TOL, max_iter: int = 200):
    """Maximise a unimodal ``f`` on [lo, hi]; returns (x, f(x)).

    The endpoints are compared against the interior optimum so monotone
    objectives report the boundary.
    """
    a, b = lo, hi
    c = b - _INVPHI * (b - a)
    d = a + _INVPHI * (b - a)
    fc, fd = f(c), f(d)
    for _ in range(max_iter):
        if b - a <= tol:
            break
        if fc >= fd:
            b, d, fd = d, c, fc
            c = b - _INVPHI * (b - a)
            fc = f(c)
        else:
            a, c, fc = c, d, fd
            d = a + _INVPHI * (b - a)
            fd = f(d)
    # on a flat top prefer the larger x so a plateau reaching hi reports the cap
    cands = ((hi, f(hi)), (d, fd), (c, fc), (lo, f(lo)))
    return max(cands, key=lambda t: t[1])


def erasure_exponent(channel: Channel, rate: float, rho_max: float = RHO_MAX) -> ExponentPoint:
    """sup over 0 < rho <= rho_max of e0_tilde(rho) - rho * rate.

    Returns ``(0, 0, False)`` when the objective is never positive, which is the
    case exactly when ``rate >= r_max``.  ``saturated`` flags a maximiser on the
    rho_max cap, where the true supremum may only be approached as rho grows.
    """
    rate = float(rate)
    if not math.isfinite(rate):
        raise InputDomainError(f"rate must be finite, got {rate}")
    if rate < 0:
        raise InputDomainError(f"rate must be >= 0, got {rate}")
    if rate >= r_max(channel):
        return ExponentPoint(0.0, 0.0, False)
    pw, px = _output_terms(channel)
    logpw, logpx = np.log(pw), np.log(px)

    def objective(rho):
        logs = logpw + rho * logpx
        top = logs.max()
        return -(top + math.log(float(np.exp(logs - top).sum()))) - rho * rate

    rho, val = golden_section_max(objective, 0.0, rho_max)
    if val <= 0:
        return ExponentPoint(0.0, 0.0, False)
    return ExponentPoint(float(val), float(rho), rho >= rho_max - 10 * RHO_TOL)


@dataclass(frozen=True)
class ExponentCurve:
    rates: np.ndarray
    exponents: np.ndarray
    rho_star: np.ndarray
    saturated: np.ndarray

    def rows(self):
        for r, e, p, s in zip(self.rates, self.exponents, self.rho_star, self.saturated):
            yield float(r), float(e), float(p), bool(s)


def exponent_sweep(channel: Channel, rate_grid: Sequence[float], rho_max: float = RHO_MAX) -> ExponentCurve:
    rates = np.asarray(rate_grid, dtype=np.float64)
    if rates.size == 0:
        raise InputDomainError("rate grid is empty")
    if np.any(np.diff(rates) < 0):
        raise InputDomainError("rate grid must be sorted ascending")
    pts = [erasure_exponent(channel, r, rho_max) for r in rates]
    return ExponentCurve(
        rates=rates,
        exponents=np.array([p.exponent for p in pts]),
        rho_star=np.array([p.rho_star for p in pts]),
        saturated=np.array([p.saturated for p in pts]),
    )


def binary_entropy(t: float) -> float:
    """Natural-log binary entropy with 0 log 0 = 0."""
    return -sum(v * math.log(v) for v in (t, 1.0 - t) if v > 0)


def typewriter_c0u_lower_bound(eps: float) -> float:
    """log 2 - h(eps)/2, a lower bound on the typewriter channel's ZUE capacity."""
    eps = float(eps)
    if not 0.0 <= eps <= 1.0:
        raise InputDomainError(f"eps must lie in [0, 1], got {eps}")
    return math.log(2.0) - 0.5 * binary_entropy(eps)
