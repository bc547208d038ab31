"""Hybrid input/output systems and their composition.

A system ``S = (A, B, C)`` maps an input stream ``U`` to an output stream::

    X^{k+1} = A ⊠ X^k  combined with  B ⊠ U^k   (row algebra of X)
    Y^{k+1} = C ⊠ X^k

i.e. ``[X'; Y'] = [[A, B], [C, null]] ⊠ [X; U]``.  Each state, input and
output coordinate is standard (``"s"``) or minplus (``"p"``).

``Y^0`` is not fixed by the recursion.  By default it is ``C ⊠ X^0``;
``simulate`` and ``feedback`` accept an explicit value instead.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .extended import minplus_matvec, std_matvec
from .hybrid import MP, STD, HybridMatrix, block, format_grid, htimes_vec, is_homogeneous, parse_grid
from .petri import NetStructureError, PetriNet


class SignatureMismatch(ValueError):
    pass


@dataclass(frozen=True)
class SystemDyn:
    A: HybridMatrix
    B: HybridMatrix
    C: HybridMatrix

    def __post_init__(self):
        xk = self.A.row_kinds
        if self.A.col_kinds != xk:
            raise SignatureMismatch("A must map the state space to itself")
        if self.B.row_kinds != xk:
            raise SignatureMismatch("B rows must follow the state kinds")
        if self.C.col_kinds != xk:
            raise SignatureMismatch("C columns must follow the state kinds")

    @property
    def state_kinds(self) -> tuple[str, ...]:
        return self.A.row_kinds

    @property
    def input_kinds(self) -> tuple[str, ...]:
        return self.B.col_kinds

    @property
    def output_kinds(self) -> tuple[str, ...]:
        return self.C.row_kinds

    @property
    def matrix(self) -> HybridMatrix:
        xk, uk, yk = self.state_kinds, self.input_kinds, self.output_kinds
        return block([[self.A, self.B], [self.C, None]], [xk, yk], [xk, uk])

    def step(self, x, u):
        """``(X^{k+1}, Y^{k+1})`` from ``(X^k, U^k)``."""
        nx = len(self.state_kinds)
        z = htimes_vec(self.matrix, np.concatenate([np.asarray(x, dtype=float), np.asarray(u, dtype=float)]))
        return z[:nx], z[nx:]

    def initial_output(self, x0) -> np.ndarray:
        return htimes_vec(self.C, np.asarray(x0, dtype=float))

    def simulate(self, U, x0=None, y0=None) -> tuple[np.ndarray, np.ndarray]:
        """States ``X^0..X^K`` and outputs ``Y^0..Y^K`` for ``K = len(U)``."""
        U = np.asarray(U, dtype=float).reshape(len(U), len(self.input_kinds))
        x = np.zeros(len(self.state_kinds)) if x0 is None else np.asarray(x0, dtype=float)
        y = self.initial_output(x) if y0 is None else np.asarray(y0, dtype=float)
        M = self.matrix
        nx = len(x)
        X, Y = [x], [y]
        for u in U:
            z = htimes_vec(M, np.concatenate([x, u]))
            x = z[:nx]
            X.append(x)
            Y.append(z[nx:])
        return np.stack(X), np.stack(Y)

    def is_homogeneous(self) -> bool:
        return is_homogeneous(self.matrix)


def null_system(state_kinds: Sequence[str], input_kinds: Sequence[str], output_kinds: Sequence[str]) -> SystemDyn:
    xk, uk, yk = tuple(state_kinds), tuple(input_kinds), tuple(output_kinds)
    M = block([[None, None], [None, None]], [xk, yk], [xk, uk])
    nx = len(xk)
    return SystemDyn(HybridMatrix(M.entries[:nx, :nx], xk, xk), HybridMatrix(M.entries[:nx, nx:], xk, uk),
                     HybridMatrix(M.entries[nx:, :nx], yk, xk))


def _sub(M: HybridMatrix, rows, cols, rk, ck) -> HybridMatrix:
    return HybridMatrix(M.entries[rows][:, cols], rk, ck)


def parallel(S1: SystemDyn, S2: SystemDyn) -> SystemDyn:
    """Same inputs, outputs combined with ⊞."""
    if S1.input_kinds != S2.input_kinds or S1.output_kinds != S2.output_kinds:
        raise SignatureMismatch("parallel composition needs identical input and output signatures")
    x1, x2 = S1.state_kinds, S2.state_kinds
    A = block([[S1.A, None], [None, S2.A]], [x1, x2], [x1, x2])
    B = block([[S1.B], [S2.B]], [x1, x2], [S1.input_kinds])
    C = block([[S1.C, S2.C]], [S1.output_kinds], [x1, x2])
    return SystemDyn(A, B, C)


def series(S1: SystemDyn, S2: SystemDyn) -> SystemDyn:
    """``S(U) = S1(S2(U))`` on the state ``[X1; X2; Y2]``."""
    if S2.output_kinds != S1.input_kinds:
        raise SignatureMismatch("outputs of the inner system must match the inputs of the outer one")
    x1, x2, y2 = S1.state_kinds, S2.state_kinds, S2.output_kinds
    rk = [x1, x2, y2]
    A = block([[S1.A, None, S1.B], [None, S2.A, None], [None, S2.C, None]], rk, rk)
    B = block([[None], [S2.B], [None]], rk, [S2.input_kinds])
    C = block([[S1.C, None, None]], [S1.output_kinds], rk)
    return SystemDyn(A, B, C)


def _kind_consistent(B: HybridMatrix) -> bool:
    # each state row may only read inputs of its own algebra
    E = B.entries
    for i, rk in enumerate(B.row_kinds):
        for j, ck in enumerate(B.col_kinds):
            if rk != ck and E[i, j] != (0.0 if rk == STD else np.inf):
                return False
    return True


def feedback(S: SystemDyn) -> SystemDyn:
    """Solution in ``Y`` of ``Y = S(U ⊞ Y)`` on the state ``[X; Y]``.

    The block form equals that loop only when no state row mixes algebras
    with its inputs; other systems are rejected.
    """
    if S.output_kinds != S.input_kinds:
        raise SignatureMismatch("feedback needs the output signature to equal the input signature")
    if not _kind_consistent(S.B):
        raise SignatureMismatch("feedback needs B to pair standard rows with standard inputs and minplus rows with minplus inputs")
    xk, yk = S.state_kinds, S.output_kinds
    A = block([[S.A, S.B], [S.C, None]], [xk, yk], [xk, yk])
    B = block([[S.B], [None]], [xk, yk], [S.input_kinds])
    C = block([[S.C, None]], [yk], [xk, yk])
    return SystemDyn(A, B, C)


def hsum_vec(kinds: Sequence[str], a, b) -> np.ndarray:
    """⊞ of two signals: standard coordinates add, minplus coordinates take the min."""
    s = np.array([k == STD for k in kinds], dtype=bool)
    return np.where(s, a + b, np.minimum(a, b))


# ---------------------------------------------------------------------------
# reference loops used to check the block formulas


def run_parallel(S1: SystemDyn, S2: SystemDyn, U, x1=None, x2=None) -> np.ndarray:
    _, Y1 = S1.simulate(U, x1)
    _, Y2 = S2.simulate(U, x2)
    return np.array([hsum_vec(S1.output_kinds, a, b) for a, b in zip(Y1, Y2)])


def run_series(S1: SystemDyn, S2: SystemDyn, U, x1=None, x2=None) -> np.ndarray:
    _, Y2 = S2.simulate(U, x2)
    _, Y = S1.simulate(Y2[:-1], x1)
    return Y


def run_feedback(S: SystemDyn, U, x0=None, y0=None) -> np.ndarray:
    x = np.zeros(len(S.state_kinds)) if x0 is None else np.asarray(x0, dtype=float)
    y = S.initial_output(x) if y0 is None else np.asarray(y0, dtype=float)
    Y = [y]
    for u in np.asarray(U, dtype=float):
        x, y = S.step(x, hsum_vec(S.input_kinds, np.asarray(u), y))
        Y.append(y)
    return np.stack(Y)


def series_initial_state(S1: SystemDyn, S2: SystemDyn, x1=None, x2=None) -> np.ndarray:
    x1 = np.zeros(len(S1.state_kinds)) if x1 is None else np.asarray(x1, dtype=float)
    x2 = np.zeros(len(S2.state_kinds)) if x2 is None else np.asarray(x2, dtype=float)
    return np.concatenate([x1, x2, S2.initial_output(x2)])


def feedback_initial_state(S: SystemDyn, x0=None, y0=None) -> np.ndarray:
    x0 = np.zeros(len(S.state_kinds)) if x0 is None else np.asarray(x0, dtype=float)
    y0 = S.initial_output(x0) if y0 is None else np.asarray(y0, dtype=float)
    return np.concatenate([x0, y0])


# ---------------------------------------------------------------------------
# open road chain: states q_2..q_m, input q_1, output q_1^{k+1}


def road_chain(a: Sequence[float]) -> SystemDyn:
    """Circular road cut open at section 1.

    Closing it with :func:`feedback` (zero input ε, ``y0 = q_1^0``)
    gives back the circular road dynamics.
    """
    a = np.asarray(a, dtype=float)
    m = len(a)
    if m < 2:
        raise ValueError("need at least two sections")
    ab = 1.0 - a
    n = m - 1  # states q_2..q_m at positions 0..m-2
    A = np.full((n, n), np.inf)
    B = np.full((n, 1), np.inf)
    C = np.full((1, n), np.inf)
    for s in range(2, m + 1):
        i = s - 2
        # q_s' = min(a_{s-1} + q_{s-1}, ā_s + q_{s+1})
        if s - 1 == 1:
            B[i, 0] = min(B[i, 0], a[0])
        else:
            A[i, i - 1] = min(A[i, i - 1], a[s - 2])
        if s + 1 > m:
            B[i, 0] = min(B[i, 0], ab[s - 1])
        else:
            A[i, i + 1] = min(A[i, i + 1], ab[s - 1])
    C[0, 0] = ab[0]
    C[0, n - 1] = min(C[0, n - 1], a[m - 1])
    xk = (MP,) * n
    return SystemDyn(HybridMatrix(A, xk, xk), HybridMatrix(B, xk, (MP,)), HybridMatrix(C, (MP,), xk))


# ---------------------------------------------------------------------------
# input-output Petri systems
#
#   P^{k+1} = A Q^k + B V^k
#   Q^{k+1} = C ⊗ P^{k+1} ⊕ D ⊗ U^{k+1}
#   Y^{k+1} = E Q^k
#   Z^{k+1} = F ⊗ P^{k+1}
#
# V: source transitions, U: places with no producing arc, Z: transitions
# feeding no place, Y: places feeding no transition.


@dataclass(frozen=True)
class IOPetriSystem:
    net: PetriNet
    V: tuple[str, ...]
    Q: tuple[str, ...]
    Z: tuple[str, ...]
    U: tuple[str, ...]
    P: tuple[str, ...]
    Y: tuple[str, ...]

    @classmethod
    def from_net(cls, net: PetriNet) -> "IOPetriSystem":
        if net.has_zero_delay:
            raise NetStructureError("input-output form needs an explicit place equation (delay-1 arcs only)")
        produced = {a.place for a in net.arcs}
        producing = {a.transition for a in net.arcs}
        V = tuple(q for q in net.transitions if not net.inputs_of(q))
        Z = tuple(q for q in net.transitions if q not in V and q not in producing)
        Qs = tuple(q for q in net.transitions if q not in V and q not in Z)
        U = tuple(p.name for p in net.places if p.name not in produced)
        Y = tuple(p.name for p in net.places if p.name in produced and not p.downstream)
        P = tuple(p.name for p in net.places if p.name not in U and p.name not in Y)
        sysm = cls(net, V, Qs, Z, U, P, Y)
        for z in Z:
            for j in net.inputs_of(z):
                if net.places[j].name in U:
                    raise NetStructureError(f"output transition {z!r} is fed by input place {net.places[j].name!r}")
        return sysm

    def _rows(self, names, index):
        return [index[x] for x in names]

    def blocks(self) -> dict[str, np.ndarray]:
        net = self.net
        pi, ti = net.place_index, net.transition_index
        H, D = net.H1, net.D
        P, U, Y = self._rows(self.P, pi), self._rows(self.U, pi), self._rows(self.Y, pi)
        V, Q, Z = self._rows(self.V, ti), self._rows(self.Q, ti), self._rows(self.Z, ti)
        return {
            "A": H[np.ix_(P, Q)], "B": H[np.ix_(P, V)],
            "C": D[np.ix_(Q, P)], "D": D[np.ix_(Q, U)],
            "E": H[np.ix_(Y, Q)], "F": D[np.ix_(Z, P)],
        }

    def simulate(self, Uin, Vin, q0=None):
        """Run with input streams ``U^1..U^K`` (places) and ``V^0..V^{K-1}`` (transitions).

        Returns ``(P, Q, Y, Z)`` for steps ``1..K``.
        """
        b = self.blocks()
        Uin = np.asarray(Uin, dtype=float).reshape(-1, len(self.U))
        Vin = np.asarray(Vin, dtype=float).reshape(-1, len(self.V))
        if len(Uin) != len(Vin):
            raise ValueError("input streams differ in length")
        q = np.zeros(len(self.Q)) if q0 is None else np.asarray(q0, dtype=float)
        out = {"P": [], "Q": [], "Y": [], "Z": []}
        for u_next, v in zip(Uin, Vin):
            p = std_matvec(b["A"], q) + std_matvec(b["B"], v)
            y = std_matvec(b["E"], q)
            q_next = np.minimum(minplus_matvec(b["C"], p), minplus_matvec(b["D"], u_next))
            z = minplus_matvec(b["F"], p)
            out["P"].append(p)
            out["Q"].append(q_next)
            out["Y"].append(y)
            out["Z"].append(z)
            q = q_next
        return tuple(np.array(out[k]).reshape(len(Uin), -1) for k in "PQYZ")


# ---------------------------------------------------------------------------
# text format
#
#   state: p p
#   input: p
#   output: p
#   A
#   ...rows...
#   B
#   ...
#   C
#   ...


def parse_system(text: str) -> SystemDyn:
    kinds: dict[str, tuple[str, ...]] = {}
    blocks: dict[str, list[str]] = {}
    current = None
    for raw in text.splitlines():
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if ":" in line:
            key, _, val = line.partition(":")
            kinds[key.strip()] = tuple(val.split())
            continue
        if line in ("A", "B", "C"):
            current = line
            blocks[current] = []
            continue
        if current is None:
            raise ValueError(f"matrix row before any block header: {raw!r}")
        blocks[current].append(line)
    for key in ("state", "input", "output"):
        if key not in kinds:
            raise ValueError(f"missing '{key}:' signature")
    xk, uk, yk = kinds["state"], kinds["input"], kinds["output"]
    shapes = {"A": (xk, xk), "B": (xk, uk), "C": (yk, xk)}
    mats = {}
    for name, (rk, ck) in shapes.items():
        M = parse_grid(blocks.get(name, []), len(ck))
        if M.size == 0:
            M = M.reshape(len(rk), len(ck))
        if M.shape != (len(rk), len(ck)):
            raise ValueError(f"block {name} has shape {M.shape}, expected {(len(rk), len(ck))}")
        mats[name] = HybridMatrix(M, rk, ck)
    return SystemDyn(mats["A"], mats["B"], mats["C"])


def format_system(S: SystemDyn) -> str:
    lines = [f"state: {' '.join(S.state_kinds)}", f"input: {' '.join(S.input_kinds)}",
             f"output: {' '.join(S.output_kinds)}"]
    for name, M in (("A", S.A), ("B", S.B), ("C", S.C)):
        lines.append(name)
        if M.entries.size:
            lines.append(format_grid(M.entries))
    return "\n".join(lines) + "\n"
