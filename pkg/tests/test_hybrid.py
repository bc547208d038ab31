import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from hypothesis.extra import numpy as hnp

from minplus_traffic.hybrid import (
    MP, STD, HybridMatrix, NON_ASSOCIATIVE_WITNESS, apply_stages, block, format_hybrid, hplus,
    htimes_mat, htimes_vec, is_homogeneous, is_monotone, null, parse_hybrid,
)

INF = np.inf


def test_rowwise_product():
    M = HybridMatrix([[0.5, 0.5], [1.0, INF]], (STD, MP), (STD, MP))
    assert htimes_vec(M, [2.0, 4.0]).tolist() == [3.0, 3.0]


def test_witness_values():
    W, x = NON_ASSOCIATIVE_WITNESS
    assert htimes_vec(htimes_mat(W, W), x).tolist() == [0.25, 1.0]
    assert htimes_vec(W, htimes_vec(W, x)).tolist() == [0.75, 1.0]


def test_null_is_hplus_identity():
    M = HybridMatrix([[0.2, 0.8], [1.0, -3.0]], (STD, MP), (MP, STD))
    assert hplus(M, null(M.row_kinds, M.col_kinds)) == M


def test_partition_mismatch():
    A = HybridMatrix(np.eye(2), (STD, STD))
    B = HybridMatrix(np.eye(2), (MP, MP))
    with pytest.raises(ValueError):
        hplus(A, B)
    with pytest.raises(ValueError):
        htimes_mat(A, B)
    with pytest.raises(ValueError):
        HybridMatrix(np.eye(2), (STD,), (STD, STD))
    with pytest.raises(ValueError):
        HybridMatrix([[np.nan]], (STD,))


def test_block_fills_null():
    A = HybridMatrix([[1.0]], (STD,))
    M = block([[A, None], [None, A]], [(STD,), (MP,)], [(STD,), (MP,)])
    assert M.entries.tolist() == [[1.0, 0.0], [INF, 1.0]]


def test_homogeneous_and_monotone():
    M = HybridMatrix([[1.5, -0.5], [0.0, 2.0]], (STD, MP), (STD, STD))
    assert is_homogeneous(M)
    assert not is_monotone(M)
    assert not is_homogeneous(HybridMatrix([[0.5, 0.4]], (STD,), (STD, STD)))


def test_text_roundtrip():
    M = HybridMatrix([[0.5, 0.5], [1.0, INF]], (STD, MP), (STD, MP))
    assert parse_hybrid(format_hybrid(M)) == M
    with pytest.raises(ValueError):
        parse_hybrid("rows: s\n1 2\n3")


@st.composite
def homogeneous_matrices(draw):
    r = draw(st.integers(1, 5))
    c = draw(st.integers(1, 5))
    rk = tuple(draw(st.sampled_from([STD, MP])) for _ in range(r))
    ck = tuple(draw(st.sampled_from([STD, MP])) for _ in range(c))
    rows = []
    for k in rk:
        v = draw(hnp.arrays(float, c, elements=st.floats(-10, 10)))
        if k == STD:
            v[-1] = 1.0 - v[:-1].sum()
        else:
            mask = draw(hnp.arrays(bool, c))
            mask[draw(st.integers(0, c - 1))] = False
            v[mask] = INF
        rows.append(v)
    return HybridMatrix(np.array(rows), rk, ck)


@settings(max_examples=200, deadline=None)
@given(homogeneous_matrices(), hnp.arrays(float, 5, elements=st.floats(-100, 100)), st.floats(-100, 100))
def test_shift_equivariance(M, x, c):
    x = x[: M.shape[1]]
    assert np.allclose(htimes_vec(M, x + c), htimes_vec(M, x) + c, atol=1e-8)


@settings(max_examples=100, deadline=None)
@given(homogeneous_matrices(), hnp.arrays(float, 5, elements=st.floats(-100, 100)),
       hnp.arrays(float, 5, elements=st.floats(0, 50)))
def test_monotone_matrices_preserve_order(M, x, dx):
    if not is_monotone(M):
        M = HybridMatrix(np.where(M.std_rows[:, None], np.abs(M.entries), M.entries), M.row_kinds, M.col_kinds)
    k = M.shape[1]
    assert np.all(htimes_vec(M, x[:k] + dx[:k]) >= htimes_vec(M, x[:k]) - 1e-9)


def test_apply_stages_order():
    S1 = HybridMatrix([[1.0, 0.0]], (MP,), (STD, STD))
    S2 = HybridMatrix([[2.0]], (STD,), (MP,))
    assert apply_stages([S1, S2], [3.0, 5.0]).tolist() == [8.0]
