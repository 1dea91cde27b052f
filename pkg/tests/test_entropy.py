from __future__ import annotations

import itertools
import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from thsynergy.entropy import (
    AXIS_ORDER, Axis, CategoryAxis, ContingencyTensor, entropy, entropy_terms, marginalize,
    transmission2, transmission3,
)
from thsynergy.errors import AllZero, BadCounts, EmptySubset

import oracle


def tensor(cells, shape=(2, 2, 2)):
    return ContingencyTensor.from_dense(_dense(cells, shape))


def _dense(cells, shape):
    arr = np.zeros(shape, dtype=np.int64)
    for idx, c in cells.items():
        arr[idx] = c
    return arr


XOR = {(0, 0, 0): 1, (0, 1, 1): 1, (1, 0, 1): 1, (1, 1, 0): 1}
IDENTICAL = {(0, 0, 0): 1, (1, 1, 1): 1}


# examples -------------------------------------------------------------------

@pytest.mark.parametrize("counts, expected", [([1], 0.0), ([1, 1, 1, 1], 2000.0), ([2, 1, 1], 1500.0)])
def test_entropy_examples(counts, expected):
    assert entropy(counts) == pytest.approx(expected, abs=1e-9)


def test_entropy_errors():
    with pytest.raises(AllZero):
        entropy([0, 0])
    with pytest.raises(BadCounts):
        entropy([1, -1])


def test_marginalize_identity():
    t = tensor({(0, 0, 0): 2, (1, 0, 1): 3, (1, 1, 1): 1})
    assert marginalize(t, AXIS_ORDER) == t.cells


def test_marginalize_single_point():
    t = tensor({(0, 0, 0): 5})
    assert marginalize(t, [Axis.GEOGRAPHY]) == {(0,): 5}


def test_marginalize_drop_size():
    t = tensor({(0, 0, 0): 2, (0, 1, 0): 3})
    assert marginalize(t, [Axis.GEOGRAPHY, Axis.TECHNOLOGY]) == {(0, 0): 5}


def test_marginalize_empty_keep():
    with pytest.raises(EmptySubset):
        marginalize(tensor({(0, 0, 0): 1}), [])


@pytest.mark.parametrize("grid, expected", [
    ([[1, 1], [1, 1]], 0.0),
    ([[2, 0], [0, 2]], 1000.0),
    ([[4, 0], [0, 4]], 1000.0),
])
def test_transmission2_examples(grid, expected):
    arr = np.asarray(grid)[:, :, None]
    t = ContingencyTensor.from_dense(arr)
    assert transmission2(t, (Axis.GEOGRAPHY, Axis.SIZE)) == pytest.approx(expected, abs=1e-9)


def test_transmission3_independent_product():
    px, py, pz = [1, 2], [3, 1, 2], [1, 1]
    arr = np.einsum("i,j,k->ijk", px, py, pz)
    assert abs(transmission3(ContingencyTensor.from_dense(arr))) < 1e-9


def test_transmission3_xor():
    terms = entropy_terms(tensor(XOR))
    assert [round(h) for h in terms] == [1000, 1000, 1000, 2000, 2000, 2000, 2000]
    assert transmission3(tensor(XOR)) == pytest.approx(-1000.0, abs=1e-6)


def test_transmission3_identical():
    terms = entropy_terms(tensor(IDENTICAL))
    assert [round(h) for h in terms] == [1000] * 7
    assert transmission3(tensor(IDENTICAL)) == pytest.approx(1000.0, abs=1e-6)


def test_tensor_invariants():
    t = ContingencyTensor.from_cells(
        [CategoryAxis(a, ("a", "b", "c")) for a in AXIS_ORDER],
        {(0, 1, 2): 2, (0, 1, 2): 0, (2, 2, 2): 3, (1, 0, 0): 0})
    assert t.cells == {(2, 2, 2): 3}
    assert t.total == 3
    with pytest.raises(IndexError):
        ContingencyTensor.from_cells([CategoryAxis(a, ("a",)) for a in AXIS_ORDER], {(1, 0, 0): 1})
    with pytest.raises(ValueError):
        CategoryAxis(Axis.SIZE, ("a", "a"))


def test_merge_and_codes_agree():
    axes = [CategoryAxis(a, ("0", "1", "2")) for a in AXIS_ORDER]
    codes = np.array([[0, 1, 2], [0, 1, 2], [2, 0, 1]])
    a = ContingencyTensor.from_codes(axes, codes[:2])
    b = ContingencyTensor.from_codes(axes, codes[2:])
    assert a.merge(b) == ContingencyTensor.from_codes(axes, codes)
    assert a.merge(b).cells == {(0, 1, 2): 2, (2, 0, 1): 1}


def test_sparse_path_matches_dense_path():
    # a key space far larger than the data goes through the sort-based path
    axes = [CategoryAxis(a, tuple(str(i) for i in range(40))) for a in AXIS_ORDER]
    rng = np.random.default_rng(3)
    codes = rng.integers(0, 40, size=(500, 3))
    codes[:50] = codes[0]
    t = ContingencyTensor.from_codes(axes, codes)
    assert t.total == 500
    assert t.cells[tuple(codes[0])] >= 50
    triples = [tuple(r) for r in codes.tolist()]
    assert transmission3(t) == pytest.approx(oracle.dense_t3(triples), abs=1e-9)


# properties -----------------------------------------------------------------

dims = st.tuples(*[st.integers(1, 5)] * 3)


@st.composite
def dense_arrays(draw, max_total=50):
    shape = draw(dims)
    size = math.prod(shape)
    values = draw(st.lists(st.integers(0, 6), min_size=size, max_size=size))
    arr = np.array(values, dtype=np.int64).reshape(shape)
    if arr.sum() == 0:
        arr.flat[draw(st.integers(0, size - 1))] = 1
    while arr.sum() > max_total:
        arr = arr // 2
        if arr.sum() == 0:
            arr.flat[0] = 1
    return arr


def _triples(arr):
    out = []
    for idx in itertools.product(*map(range, arr.shape)):
        out += [idx] * int(arr[idx])
    return out


@settings(max_examples=150, deadline=None)
@given(dense_arrays())
def test_oracle_equivalence(arr):
    t = ContingencyTensor.from_dense(arr)
    cats = [list(range(n)) for n in arr.shape]
    ref = oracle.dense_terms(_triples(arr), cats)
    got = entropy_terms(t)
    for name, value in zip(("x", "y", "z", "xy", "xz", "yz", "xyz"), got):
        assert value == pytest.approx(ref[name], abs=1e-9)
    assert transmission3(t) == pytest.approx(oracle.dense_t3(_triples(arr), cats), abs=1e-9)


@settings(max_examples=100, deadline=None)
@given(dense_arrays(), st.integers(2, 50))
def test_count_scaling_invariance(arr, k):
    t = ContingencyTensor.from_dense(arr)
    s = t.scaled(k)
    assert transmission3(s) == pytest.approx(transmission3(t), abs=1e-9)
    assert transmission2(s, (0, 2)) == pytest.approx(transmission2(t, (0, 2)), abs=1e-9)
    assert entropy(s.counts) == pytest.approx(entropy(t.counts), abs=1e-9)


@settings(max_examples=100, deadline=None)
@given(dense_arrays(), st.permutations([0, 1, 2]))
def test_axis_permutation_invariance(arr, order):
    t = ContingencyTensor.from_dense(arr)
    assert transmission3(t.permuted(order)) == pytest.approx(transmission3(t), abs=1e-9)


@settings(max_examples=100, deadline=None)
@given(dense_arrays(), st.sampled_from([(0, 1), (0, 2), (1, 2)]))
def test_transmission2_nonnegative(arr, pair):
    assert transmission2(ContingencyTensor.from_dense(arr), pair) >= -1e-6


@settings(max_examples=100, deadline=None)
@given(dense_arrays())
def test_entropy_bounds(arr):
    t = ContingencyTensor.from_dense(arr)
    for pos, h in enumerate(entropy_terms(t)[:3]):
        assert 0.0 <= h <= 1000.0 * math.log2(arr.shape[pos]) + 1e-9


@settings(max_examples=100, deadline=None)
@given(st.lists(st.integers(0, 20), min_size=2, max_size=8).filter(lambda c: sum(c) > 0),
       st.data())
def test_grouping_never_increases_entropy(counts, data):
    i = data.draw(st.integers(0, len(counts) - 2))
    merged = counts[:i] + [counts[i] + counts[i + 1]] + counts[i + 2:]
    assert entropy(merged) <= entropy(counts) + 1e-9


@settings(max_examples=60, deadline=None)
@given(dense_arrays(), dense_arrays())
def test_merge_commutative(a, b):
    shape = tuple(max(x, y) for x, y in zip(a.shape, b.shape))
    pa, pb = np.zeros(shape, np.int64), np.zeros(shape, np.int64)
    pa[tuple(slice(0, n) for n in a.shape)] = a
    pb[tuple(slice(0, n) for n in b.shape)] = b
    ta, tb = ContingencyTensor.from_dense(pa), ContingencyTensor.from_dense(pb)
    assert ta.merge(tb) == tb.merge(ta)
    assert np.array_equal(ta.merge(tb).dense(), pa + pb)


@settings(max_examples=60, deadline=None)
@given(dense_arrays(), st.randoms(use_true_random=False))
def test_summation_order_independent(arr, rnd):
    triples = _triples(arr)
    rnd.shuffle(triples)
    axes = [CategoryAxis(a, tuple(map(str, range(n)))) for a, n in zip(AXIS_ORDER, arr.shape)]
    t = ContingencyTensor.from_codes(axes, np.array(triples).reshape(-1, 3))
    assert transmission3(t) == transmission3(ContingencyTensor.from_dense(arr))
