"""Discrete memoryless sequencing channels over the additive group Z_q.

Inputs are ``0..q-1``.  Outputs are ``0..output_size-1``; for erasure channels
the erasure symbol is output ``q``.  The support of the channel is taken from
the configured matrix (an entry is in the support iff it was configured
nonzero) and is never re-derived from computed probabilities.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from .errors import AsymmetricChannelError, CapabilityError, InputDomainError

ROW_SUM_TOL = 1e-12
WITNESS_SEARCH_MAX_OUTPUTS = 12


def _frozen(a: np.ndarray) -> np.ndarray:
    a = np.ascontiguousarray(a)
    a.setflags(write=False)
    return a


@dataclass(frozen=True, eq=False)
class SymmetryWitness:
    """Shift table ``table[y, x] -> y'`` realising channel symmetry."""

    table: np.ndarray

    def __post_init__(self):
        t = np.asarray(self.table)
        if t.ndim != 2 or not np.issubdtype(t.dtype, np.integer):
            raise InputDomainError("witness table must be a 2-D integer array")
        object.__setattr__(self, "table", _frozen(t.astype(np.int64)))

    def __call__(self, y: int, x: int) -> int:
        return int(self.table[y, x])


@dataclass(frozen=True, eq=False)
class Channel:
    """Row-stochastic transition matrix ``matrix[x, y] = W(y|x)``."""

    matrix: np.ndarray
    name: str = "custom"
    witness: Optional[SymmetryWitness] = None
    support: np.ndarray = field(init=False, repr=False)
    _cdf: np.ndarray = field(init=False, repr=False)

    def __post_init__(self):
        w = np.array(self.matrix, dtype=np.float64)
        if w.ndim != 2:
            raise InputDomainError("transition matrix must be 2-D")
        q, ny = w.shape
        if q < 2 or ny < 1:
            raise InputDomainError(f"need q >= 2 inputs and >= 1 output, got {w.shape}")
        if not np.all(np.isfinite(w)) or np.any(w < 0):
            raise InputDomainError("transition probabilities must be finite and >= 0")
        sums = w.sum(axis=1)
        bad = np.flatnonzero(np.abs(sums - 1.0) > ROW_SUM_TOL)
        if bad.size:
            raise InputDomainError(f"row {bad[0]} sums to {sums[bad[0]]!r}, not 1")
        object.__setattr__(self, "matrix", _frozen(w))
        object.__setattr__(self, "support", _frozen(w > 0))
        object.__setattr__(self, "_cdf", _frozen(_sampling_table(w)))
        if self.witness is not None and self.witness.table.shape != (ny, q):
            raise InputDomainError(
                f"witness shape {self.witness.table.shape} does not match (|Y|, q) = {(ny, q)}")

    @property
    def q(self) -> int:
        return self.matrix.shape[0]

    @property
    def output_size(self) -> int:
        return self.matrix.shape[1]

    def __repr__(self):
        return f"Channel({self.name!r}, q={self.q}, outputs={self.output_size})"


def _sampling_table(w: np.ndarray) -> np.ndarray:
    """Thresholds for inverse-CDF sampling that can never emit a zero entry.

    For a uniform ``u`` the output is ``#{k : u >= thr[x, k]}``.  Thresholds at
    and beyond the last supported output are pushed above 1, so rounding in the
    cumulative sum cannot leak mass into unsupported trailing outputs; interior
    zeros give empty intervals exactly.
    """
    cdf = np.cumsum(w, axis=1)[:, :-1]
    for x in range(w.shape[0]):
        last = np.flatnonzero(w[x] > 0)[-1]
        cdf[x, last:] = 2.0
    return cdf


def _check_prob(name: str, v: float) -> float:
    v = float(v)
    if not 0.0 <= v <= 1.0:
        raise InputDomainError(f"{name} must lie in [0, 1], got {v}")
    return v


def _shift_witness(q: int, erasure: bool = False) -> SymmetryWitness:
    ny = q + 1 if erasure else q
    t = np.empty((ny, q), dtype=np.int64)
    for y in range(q):
        t[y] = (y + np.arange(q)) % q
    if erasure:
        t[q] = q
    return SymmetryWitness(t)


def make_erasure_channel(q: int, p: float) -> Channel:
    p = _check_prob("p", p)
    if q < 2:
        raise InputDomainError("q must be >= 2")
    w = np.zeros((q, q + 1))
    w[np.arange(q), np.arange(q)] = 1.0 - p
    w[:, q] = p
    return Channel(w, name=f"erasure(q={q},p={p:g})", witness=_shift_witness(q, erasure=True))


def make_typewriter_channel(eps: float) -> Channel:
    eps = _check_prob("eps", eps)
    w = np.zeros((3, 3))
    for x in range(3):
        w[x, x] = 1.0 - eps
        w[x, (x + 1) % 3] += eps
    return Channel(w, name=f"typewriter(eps={eps:g})", witness=_shift_witness(3))


def make_identity_channel(q: int) -> Channel:
    if q < 2:
        raise InputDomainError("q must be >= 2")
    return Channel(np.eye(q), name=f"identity(q={q})", witness=_shift_witness(q))


def make_qary_symmetric_channel(q: int, delta: float) -> Channel:
    """q-ary symmetric channel; full support (so useless for ZUE) when 0 < delta < 1."""
    delta = _check_prob("delta", delta)
    if q < 2:
        raise InputDomainError("q must be >= 2")
    w = np.full((q, q), delta / (q - 1))
    np.fill_diagonal(w, 1.0 - delta)
    return Channel(w, name=f"qary_symmetric(q={q},delta={delta:g})", witness=_shift_witness(q))


def sequence_molecule(channel: Channel, x_vec: Sequence[int], rng: np.random.Generator) -> np.ndarray:
    x = np.asarray(x_vec, dtype=np.int64)
    return sequence_batch(channel, x[None, :], rng)[0]


def sequence_batch(channel: Channel, x: np.ndarray, rng: np.random.Generator) -> np.ndarray:
    """Pass every row of ``x`` (reads x positions) through the channel independently."""
    x = np.asarray(x, dtype=np.int64)
    if x.size and (x.min() < 0 or x.max() >= channel.q):
        raise InputDomainError(f"input symbols must lie in [0, {channel.q})")
    u = rng.random(x.shape)
    if channel.output_size == 1:
        return np.zeros(x.shape, dtype=np.int64)
    thr = channel._cdf[x]
    return np.count_nonzero(u[..., None] >= thr, axis=-1).astype(np.int64)


def support_set(channel: Channel, y: int) -> frozenset:
    if not 0 <= y < channel.output_size:
        raise InputDomainError(f"output {y} outside [0, {channel.output_size})")
    return frozenset(int(x) for x in np.flatnonzero(channel.support[:, y]))


def verify_symmetry(channel: Channel, witness: SymmetryWitness) -> bool:
    """Exhaustive check of both symmetry properties (exact float equality)."""
    t = witness.table
    q, ny = channel.q, channel.output_size
    if t.shape != (ny, q):
        raise InputDomainError(f"witness shape {t.shape} does not match (|Y|, q) = {(ny, q)}")
    if t.min() < 0 or t.max() >= ny:
        return False
    for x in range(q):
        if len(np.unique(t[:, x])) != ny:
            return False
    w = channel.matrix
    for x1 in range(q):
        for x2 in range(q):
            d = (x2 - x1) % q
            if not np.array_equal(w[x1, :], w[x2, t[:, d]]):
                return False
    return True


def find_symmetry_witness(channel: Channel, max_outputs: int = WITNESS_SEARCH_MAX_OUTPUTS
                          ) -> Optional[SymmetryWitness]:
    """Search for a symmetry witness, with T(., 0) fixed to the identity.

    The symmetry condition splits over shifts ``d = x2 - x1``: the bijection
    ``T(., d)`` must send output y to some output whose column equals column y
    cyclically shifted by d.  So for each d the search reduces to matching
    outputs between equal column classes, and backtracking never has to revisit
    an earlier shift.
    """
    q, ny = channel.q, channel.output_size
    if ny > max_outputs:
        raise CapabilityError(
            f"witness search limited to {max_outputs} outputs (channel has {ny}); "
            "supply a witness explicitly")
    cols = [tuple(channel.matrix[:, y]) for y in range(ny)]
    table = np.empty((ny, q), dtype=np.int64)
    table[:, 0] = np.arange(ny)
    for d in range(1, q):
        # T(y, d) must satisfy W(T(y,d) | x + d) = W(y | x) for every x
        pool: dict = {}
        for y2 in range(ny):
            pool.setdefault(cols[y2], []).append(y2)
        for y in range(ny):
            target = tuple(cols[y][(x - d) % q] for x in range(q))
            cands = pool.get(target)
            if not cands:
                return None
            table[y, d] = cands.pop(0)
    witness = SymmetryWitness(table)
    assert verify_symmetry(channel, witness)
    return witness


def symmetry_witness_for(channel: Channel) -> tuple[Optional[SymmetryWitness], str]:
    """Return a verified witness and where it came from (bundled, search, none)."""
    if channel.witness is not None and verify_symmetry(channel, channel.witness):
        return channel.witness, "bundled"
    try:
        found = find_symmetry_witness(channel)
    except CapabilityError:
        return None, "none"
    return (found, "search") if found is not None else (None, "none")


def require_symmetric(channel: Channel) -> SymmetryWitness:
    witness, _ = symmetry_witness_for(channel)
    if witness is None:
        raise AsymmetricChannelError(
            f"{channel.name}: no symmetry witness found; conditional erasure "
            "probabilities may depend on the transmitted codeword, so this "
            "analysis is refused")
    return witness


BUILTINS = {
    "erasure": (make_erasure_channel, ("q", "p")),
    "typewriter": (make_typewriter_channel, ("eps",)),
    "identity": (make_identity_channel, ("q",)),
    "qary_symmetric": (make_qary_symmetric_channel, ("q", "delta")),
}


def channel_from_config(spec: dict) -> Channel:
    """Build a channel from a parsed config mapping.

    Either ``{"name": <builtin>, ...params}`` or
    ``{"q": int, "outputs": int, "rows": [[...], ...], "witness": [[...], ...]}``.
    Row entries may be numbers or decimal strings.
    """
    if not isinstance(spec, dict):
        raise InputDomainError("channel spec must be a mapping")
    if "name" in spec and "rows" not in spec:
        name = spec["name"]
        if name not in BUILTINS:
            raise InputDomainError(f"unknown built-in channel {name!r}; choose from {sorted(BUILTINS)}")
        fn, params = BUILTINS[name]
        missing = [p for p in params if p not in spec]
        if missing:
            raise InputDomainError(f"channel {name!r} needs parameter(s) {missing}")
        return fn(*(spec[p] for p in params))
    for key in ("q", "outputs", "rows"):
        if key not in spec:
            raise InputDomainError(f"channel spec missing field {key!r}")
    try:
        rows = np.array([[float(v) for v in row] for row in spec["rows"]], dtype=np.float64)
    except (TypeError, ValueError) as exc:
        raise InputDomainError(f"channel rows must be numeric: {exc}") from None
    if rows.shape != (int(spec["q"]), int(spec["outputs"])):
        raise InputDomainError(
            f"rows have shape {rows.shape}, expected (q, outputs) = ({spec['q']}, {spec['outputs']})")
    witness = None
    if spec.get("witness") is not None:
        witness = SymmetryWitness(np.array(spec["witness"], dtype=np.int64))
    return Channel(rows, name=spec.get("label", "custom"), witness=witness)


def channel_to_config(channel: Channel) -> dict:
    out = {
        "q": channel.q,
        "outputs": channel.output_size,
        "rows": [[repr(float(v)) for v in row] for row in channel.matrix],
        "label": channel.name,
    }
    if channel.witness is not None:
        out["witness"] = channel.witness.table.tolist()
    return out
