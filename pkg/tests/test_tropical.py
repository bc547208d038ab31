from fractions import Fraction
import itertools

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from minplus_traffic.tropical import (
    ClosureDiverges, NotStronglyConnected, closure_plus, cycle_mean, eigen_residual, eigenvector_linear,
    identity, is_strongly_connected, mat_add, mat_mul, mat_vec, min_mean_cycle, precedence_graph, vec_mat,
)

INF = float("inf")


def test_two_cycle_example():
    A = np.array([[INF, 3], [1, INF]], dtype=object)
    st_ = min_mean_cycle(A)
    assert st_.mean_weight == 2
    assert st_.cycle == (0, 1)


def test_fractional_mean_is_exact():
    A = np.array([[INF, INF, 1], [1, INF, INF], [INF, 0, INF]], dtype=object)
    assert min_mean_cycle(A).mean_weight == Fraction(2, 3)


def test_float_entries():
    A = np.array([[0.5, 3.0], [1.0, INF]])
    assert min_mean_cycle(A).mean_weight == pytest.approx(0.5)


def test_not_strongly_connected():
    A = np.array([[0.0, INF], [1.0, 0.0]])
    assert not is_strongly_connected(A)
    with pytest.raises(NotStronglyConnected):
        min_mean_cycle(A)


def test_matrix_ops():
    A = np.array([[0.0, 2.0], [INF, 1.0]])
    assert np.array_equal(mat_mul(identity(2), A), A)
    assert np.array_equal(mat_add(A, identity(2)), [[0.0, 2.0], [INF, 0.0]])
    assert mat_vec(A, [1.0, 0.0]).tolist() == [1.0, 1.0]
    assert vec_mat([1.0, 0.0], A).tolist() == [1.0, 1.0]


def test_precedence_graph_direction():
    A = np.array([[INF, 3.0], [1.0, INF]])
    g = precedence_graph(A)
    assert g[0] == [(1, 1.0)]
    assert g[1] == [(0, 3.0)]


def test_closure_negative_cycle():
    with pytest.raises(ClosureDiverges):
        closure_plus(np.array([[INF, -1.0], [0.0, INF]]))


def test_wrong_eigenvalue_has_no_critical_node():
    A = np.array([[INF, 3.0], [1.0, INF]])
    with pytest.raises(ClosureDiverges):
        eigenvector_linear(A, 3.0)


@st.composite
def sc_matrices(draw):
    n = draw(st.integers(1, 6))
    vals = st.one_of(st.integers(-20, 20), st.just(None))
    W = [[draw(vals) for _ in range(n)] for _ in range(n)]
    perm = draw(st.permutations(range(n)))
    for i in range(n):
        u, v = perm[i], perm[(i + 1) % n]
        if W[v][u] is None:
            W[v][u] = draw(st.integers(-20, 20))
    return np.array([[INF if w is None else w for w in row] for row in W], dtype=object)


@settings(max_examples=150, deadline=None)
@given(sc_matrices())
def test_eigenpair_property(A):
    stats = min_mean_cycle(A)
    lam = stats.mean_weight
    assert cycle_mean(A, stats.cycle) == lam
    X = eigenvector_linear(A, lam)
    assert X[0] == 0
    # A ⊗ X = λ ⊗ X, exactly on integer data
    for i in range(len(X)):
        assert min(A[i, j] + X[j] for j in range(len(X))) == lam + X[i]
    assert eigen_residual(A, lam, X) <= 1e-12


@settings(max_examples=100, deadline=None)
@given(sc_matrices(), st.integers(-10, 10))
def test_eigenvalue_shifts_with_matrix(A, c):
    shifted = np.array([[v + c for v in row] for row in A], dtype=object)
    assert min_mean_cycle(shifted).mean_weight == min_mean_cycle(A).mean_weight + c


def test_power_growth_matches_eigenvalue():
    A = np.array([[2.0, 5.0, INF], [INF, 3.0, 1.0], [0.0, INF, 4.0]])
    lam = float(min_mean_cycle(A).mean_weight)
    x = np.zeros(3)
    for _ in range(300):
        x = mat_vec(A, x)
    assert x[0] / 300 == pytest.approx(lam, abs=0.05)
