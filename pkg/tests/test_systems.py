import numpy as np
import pytest

from minplus_traffic.hybrid import MP, STD, HybridMatrix, is_homogeneous
from minplus_traffic.petri import Arc, NetStructureError, PetriNet, Place, simulate
from minplus_traffic.systems import (
    IOPetriSystem, SignatureMismatch, SystemDyn, feedback, feedback_initial_state, format_system,
    null_system, parallel, parse_system, road_chain, run_feedback, series,
)
from minplus_traffic.traffic import RoadConfig, road_net

INF = np.inf


def delay_system():
    """``x' = u``, ``y = x``: a one-step delay in minplus."""
    k = (MP,)
    return SystemDyn(HybridMatrix([[INF]], k), HybridMatrix([[0.0]], k), HybridMatrix([[0.0]], k))


def averaging_system():
    k = (STD,)
    return SystemDyn(HybridMatrix([[0.5]], k), HybridMatrix([[0.5]], k), HybridMatrix([[1.0]], k))


def test_delay_feedback_counts():
    S = delay_system()
    plus_one = SystemDyn(S.A, HybridMatrix([[1.0]], (MP,)), S.C)
    F = feedback(plus_one)
    _, Y = F.simulate(np.full((5, 1), INF), feedback_initial_state(plus_one, [0.0], [0.0]))
    # y^{k+1} = x^{k+1}, x^{k+1} = 1 + y^k with a one-step lag through the state
    assert Y[:, 0].tolist() == [0.0, 0.0, 1.0, 1.0, 2.0, 2.0]


def test_series_of_delays():
    S = delay_system()
    U = np.arange(6.0)[:, None]
    _, Y = series(S, S).simulate(U)
    # each block delays by two steps: u -> x -> y
    assert Y[4:, 0].tolist() == [0.0, 1.0, 2.0]


def test_parallel_min():
    S1, S2 = delay_system(), SystemDyn(*(HybridMatrix(M, (MP,)) for M in ([[INF]], [[2.0]], [[-1.0]])))
    _, Y = parallel(S1, S2).simulate(np.array([[5.0], [5.0]]))
    assert Y[-1, 0] == 5.0


def test_null_system_outputs_null():
    S = null_system((STD, MP), (MP,), (STD, MP))
    _, Y = S.simulate(np.zeros((3, 1)))
    assert Y[-1].tolist() == [0.0, INF]


def test_signature_checks():
    with pytest.raises(SignatureMismatch):
        parallel(delay_system(), averaging_system())
    with pytest.raises(SignatureMismatch):
        series(delay_system(), averaging_system())
    mixed = SystemDyn(HybridMatrix([[INF]], (MP,)), HybridMatrix([[1.0]], (MP,), (STD,)),
                      HybridMatrix([[0.0]], (STD,), (MP,)))
    with pytest.raises(SignatureMismatch):
        feedback(mixed)


def test_homogeneity_preserved():
    S = averaging_system()
    assert S.is_homogeneous()
    # the closed loop is homogeneous in the state; the open input adds to Y
    F = feedback(S)
    assert is_homogeneous(F.A)
    assert not F.is_homogeneous()
    assert series(S, S).is_homogeneous()
    assert parallel(S, S).C.entries.sum() == 2.0  # ⊞ adds standard outputs


@pytest.mark.parametrize("word", ["1010000", "1110100", "1100", "100000"])
def test_road_chain_closes_to_circular_road(word):
    a = [int(c) for c in word]
    m = len(a)
    ch = road_chain(a)
    x0 = np.zeros(m - 1)
    K = 336  # the window K/2 is a multiple of every period here
    U = np.full((K, 1), INF)
    Y = run_feedback(ch, U, x0, np.zeros(1))
    _, Yb = feedback(ch).simulate(U, feedback_initial_state(ch, x0, np.zeros(1)))
    assert np.array_equal(Y, Yb)
    _, Q = simulate(road_net(RoadConfig.from_word(word)), K)
    assert np.array_equal(Y[:, 0], Q[:, 0])
    n = sum(a)
    assert (Y[K, 0] - Y[K // 2, 0]) / (K - K // 2) == pytest.approx(min(n, m - n) / m, abs=1e-9)


def io_net():
    # v -> p1 -> q -> y ; u -> q
    return PetriNet(
        (Place("p1", 1.0, ("q",)), Place("u", 0.0, ("q",)), Place("y", 0.0, ())),
        ("v", "q"),
        (Arc("v", "p1"), Arc("q", "y")),
    )


def test_io_petri_partition_and_run():
    s = IOPetriSystem.from_net(io_net())
    assert (s.V, s.Q, s.Z, s.U, s.P, s.Y) == (("v",), ("q",), (), ("u",), ("p1",), ("y",))
    K = 6
    Vin = np.arange(K, dtype=float)[:, None]
    Uin = np.full((K, 1), 3.0)
    P, Q, Y, Z = s.simulate(Uin, Vin)
    assert Q[:, 0].tolist() == [1.0, 2.0, 3.0, 3.0, 3.0, 3.0]
    assert Y[1:, 0].tolist() == Q[:-1, 0].tolist()


def test_io_petri_rejects_zero_delay():
    net = PetriNet((Place("p", 0.0, ("q",)),), ("v", "q"), (Arc("v", "p", delay=0),))
    with pytest.raises(NetStructureError):
        IOPetriSystem.from_net(net)


def test_text_roundtrip():
    S = averaging_system()
    back = parse_system(format_system(S))
    assert back.A == S.A and back.B == S.B and back.C == S.C
    with pytest.raises(ValueError):
        parse_system("state: s\nA\n1\n")
