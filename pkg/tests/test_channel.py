import itertools
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from shortmol.channel import (
    BUILTINS,
    Channel,
    SymmetryWitness,
    channel_from_config,
    channel_to_config,
    find_symmetry_witness,
    make_erasure_channel,
    make_identity_channel,
    make_qary_symmetric_channel,
    make_typewriter_channel,
    require_symmetric,
    sequence_batch,
    sequence_molecule,
    support_set,
    symmetry_witness_for,
    verify_symmetry,
)
from shortmol.errors import AsymmetricChannelError, CapabilityError, InputDomainError

ASYM = [[0.9, 0.1], [0.5, 0.5]]


def builtin_channels():
    return [
        make_erasure_channel(2, 0.3),
        make_erasure_channel(4, 0.1),
        make_erasure_channel(3, 0.0),
        make_erasure_channel(2, 1.0),
        make_typewriter_channel(0.3),
        make_typewriter_channel(0.5),
        make_identity_channel(2),
        make_identity_channel(5),
        make_qary_symmetric_channel(2, 0.1),
        make_qary_symmetric_channel(4, 0.25),
    ]


def brute_force_symmetric(w):
    """Try every tuple of per-input permutations with T(., 0) = identity."""
    w = np.asarray(w)
    q, ny = w.shape
    perms = list(itertools.permutations(range(ny)))
    for rest in itertools.product(perms, repeat=q - 1):
        table = np.column_stack([np.arange(ny)] + [np.array(p) for p in rest])
        ok = all(np.array_equal(w[x1], w[x2, table[:, (x2 - x1) % q]])
                 for x1 in range(q) for x2 in range(q))
        if ok:
            return True
    return False


# construction ----------------------------------------------------------------

def test_typewriter_rows():
    ch = make_typewriter_channel(0.3)
    assert ch.matrix[0].tolist() == [0.7, 0.3, 0.0]
    assert ch.matrix[2].tolist() == [0.3, 0.0, 0.7]


def test_erasure_layout():
    ch = make_erasure_channel(4, 0.0)
    assert ch.output_size == 5
    assert np.array_equal(ch.matrix[:, :4], np.eye(4))
    assert not ch.support[:, 4].any()


def test_bsc_full_support():
    ch = make_qary_symmetric_channel(2, 0.1)
    assert ch.matrix.tolist() == [[0.9, 0.1], [0.1, 0.9]]
    assert ch.support.all()


@pytest.mark.parametrize("maker,args", [
    (make_erasure_channel, (2, -0.1)),
    (make_erasure_channel, (2, 1.5)),
    (make_typewriter_channel, (1.01,)),
    (make_qary_symmetric_channel, (3, -1)),
    (make_identity_channel, (1,)),
])
def test_parameter_domain(maker, args):
    with pytest.raises(InputDomainError):
        maker(*args)


def test_row_sum_validation():
    with pytest.raises(InputDomainError):
        Channel(np.array([[0.5, 0.4], [0.5, 0.5]]))
    with pytest.raises(InputDomainError):
        Channel(np.array([[1.5, -0.5], [0.5, 0.5]]))
    Channel(np.array([[0.5, 0.5 + 5e-13], [1.0, 0.0]]))


def test_matrix_is_read_only():
    ch = make_erasure_channel(2, 0.3)
    with pytest.raises(ValueError):
        ch.matrix[0, 0] = 0.5


# support -----------------------------------------------------------------------

def test_support_set_examples():
    ch = make_erasure_channel(4, 0.2)
    assert support_set(ch, 4) == frozenset(range(4))
    assert support_set(ch, 2) == frozenset({2})
    assert support_set(make_typewriter_channel(0.5), 1) == frozenset({0, 1})
    with pytest.raises(InputDomainError):
        support_set(ch, 5)


@settings(max_examples=60, deadline=None)
@given(st.integers(0, 2**32 - 1), st.floats(1e-3, 1e3))
def test_support_invariant_under_rescaling(seed, scale):
    rng = np.random.default_rng(seed)
    q, ny = 3, 4
    raw = rng.random((q, ny)) * (rng.random((q, ny)) < 0.6)
    raw[:, 0] += 0.1
    w = raw / raw.sum(axis=1, keepdims=True)
    scaled = raw * scale * (1 + rng.random((q, ny)))
    w2 = scaled / scaled.sum(axis=1, keepdims=True)
    a, b = Channel(w), Channel(w2)
    for y in range(ny):
        assert support_set(a, y) == support_set(b, y)


# sampling --------------------------------------------------------------------

def test_identity_and_full_erasure_sampling():
    rng = np.random.default_rng(0)
    x = np.array([0, 3, 1, 2, 2])
    assert np.array_equal(sequence_molecule(make_identity_channel(4), x, rng), x)
    assert sequence_molecule(make_erasure_channel(2, 1.0), [0, 1], rng).tolist() == [2, 2]


def test_sampling_rejects_bad_symbols():
    rng = np.random.default_rng(0)
    with pytest.raises(InputDomainError):
        sequence_molecule(make_erasure_channel(2, 0.5), [0, 2], rng)


@pytest.mark.parametrize("ch", builtin_channels(), ids=lambda c: c.name)
def test_sampling_frequencies(ch):
    n = 100_000
    rng = np.random.default_rng(12345)
    for x in range(ch.q):
        y = sequence_batch(ch, np.full(n, x), rng)
        freq = np.bincount(y, minlength=ch.output_size) / n
        w = ch.matrix[x]
        tol = 4 * np.sqrt(w * (1 - w) / n)
        assert np.all(np.abs(freq - w) <= tol + 1e-15), (x, freq, w)
        # zero-probability outputs are never produced
        assert np.all(freq[~ch.support[x]] == 0)


def test_bec_half_three_sigma():
    n = 100_000
    y = sequence_batch(make_erasure_channel(2, 0.5), np.zeros(n, dtype=int), np.random.default_rng(3))
    f = np.mean(y == 2)
    assert abs(f - 0.5) <= 3 * math.sqrt(0.25 / n)
    assert set(np.unique(y)) <= {0, 2}


def test_tiny_probability_outputs_still_reachable():
    w = np.array([[1 - 1e-3, 1e-3], [0.0, 1.0]])
    y = sequence_batch(Channel(w), np.zeros(200_000, dtype=int), np.random.default_rng(1))
    assert 100 < np.count_nonzero(y == 1) < 320


# symmetry ------------------------------------------------------------------------

@pytest.mark.parametrize("ch", builtin_channels(), ids=lambda c: c.name)
def test_bundled_witness_verifies(ch):
    assert verify_symmetry(ch, ch.witness)
    assert np.array_equal(ch.witness.table[:, 0], np.arange(ch.output_size))


@pytest.mark.parametrize("p", [0.1, 0.5, 0.9])
@pytest.mark.parametrize("q", [2, 3, 4])
def test_identity_witness_fails_on_erasure(p, q):
    ch = make_erasure_channel(q, p)
    ident = SymmetryWitness(np.tile(np.arange(q + 1)[:, None], (1, q)))
    assert not verify_symmetry(ch, ident)
    # a concrete violating triple exists
    w = ch.matrix
    bad = [(x1, x2, y) for x1 in range(q) for x2 in range(q) for y in range(q + 1)
           if w[x1, y] != w[x2, ident(y, (x2 - x1) % q)]]
    assert bad


def test_verify_rejects_non_bijection_and_shape():
    ch = make_identity_channel(3)
    t = ch.witness.table.copy()
    t[1, 1] = t[0, 1]
    assert not verify_symmetry(ch, SymmetryWitness(t))
    with pytest.raises(InputDomainError):
        verify_symmetry(ch, SymmetryWitness(np.zeros((2, 3), dtype=int)))


@pytest.mark.parametrize("ch", builtin_channels(), ids=lambda c: c.name)
def test_search_finds_verified_witness(ch):
    w = find_symmetry_witness(ch)
    assert w is not None
    assert verify_symmetry(ch, w)
    assert np.array_equal(w.table[:, 0], np.arange(ch.output_size))


def test_asymmetric_channel_has_no_witness():
    ch = Channel(np.array(ASYM))
    assert find_symmetry_witness(ch) is None
    assert not brute_force_symmetric(ASYM)
    assert symmetry_witness_for(ch) == (None, "none")
    with pytest.raises(AsymmetricChannelError):
        require_symmetric(ch)


def test_search_budget():
    ch = Channel(np.full((2, 13), 1 / 13))
    with pytest.raises(CapabilityError):
        find_symmetry_witness(ch)


@settings(max_examples=80, deadline=None)
@given(st.integers(0, 2**32 - 1), st.sampled_from([(2, 2), (2, 3), (3, 3), (2, 4), (3, 4)]))
def test_search_matches_brute_force(seed, shape):
    # entries from a small value set so that symmetric channels actually occur
    rng = np.random.default_rng(seed)
    q, ny = shape
    base = rng.choice([0.0, 1.0, 2.0], size=ny)
    base[0] = 1.0
    if rng.random() < 0.5:
        rows = np.array([np.roll(base, x) for x in range(q)])[:, :ny]
    else:
        rows = rng.choice([0.0, 1.0, 2.0], size=(q, ny))
        rows[:, 0] += 1.0
    w = rows / rows.sum(axis=1, keepdims=True)
    ch = Channel(w)
    found = find_symmetry_witness(ch)
    assert (found is not None) == brute_force_symmetric(ch.matrix)


def test_broken_bundled_witness_falls_back_to_search():
    good = make_typewriter_channel(0.4)
    bad = SymmetryWitness(np.tile(np.arange(3)[:, None], (1, 3)))
    ch = Channel(good.matrix, name="tw", witness=bad)
    w, source = symmetry_witness_for(ch)
    assert source == "search" and verify_symmetry(ch, w)


# config round trip -----------------------------------------------------------

def test_config_builtin_and_custom():
    ch = channel_from_config({"name": "erasure", "q": 3, "p": 0.25})
    assert ch.output_size == 4
    spec = {"q": 2, "outputs": 3, "rows": [["0.7", "0", "0.3"], ["0", "0.7", "0.3"]],
            "witness": [[0, 1], [1, 0], [2, 2]]}
    custom = channel_from_config(spec)
    assert verify_symmetry(custom, custom.witness)
    back = channel_from_config(channel_to_config(custom))
    assert np.array_equal(back.matrix, custom.matrix)
    assert np.array_equal(back.witness.table, custom.witness.table)


@pytest.mark.parametrize("spec", [
    {"name": "nope"},
    {"name": "erasure", "q": 2},
    {"q": 2, "outputs": 2},
    {"q": 2, "outputs": 2, "rows": [["a", "b"], ["0", "1"]]},
    {"q": 2, "outputs": 3, "rows": [[1, 0], [0, 1]]},
])
def test_config_errors(spec):
    with pytest.raises(InputDomainError):
        channel_from_config(spec)


def test_builtin_registry():
    assert set(BUILTINS) == {"erasure", "typewriter", "identity", "qary_symmetric"}
