"""Minplus matrices, precedence graphs and the linear eigenvalue problem.

Matrices are plain 2-D arrays (float64 with ``inf`` for ε, or object arrays
of ``Fraction``/``int`` for exact work).  The precedence graph of ``A`` has
an edge ``i -> j`` with weight ``A[j, i]`` whenever that entry is not ε.

For a strongly connected graph the unique eigenvalue is the minimum cycle
mean; :func:`min_mean_cycle` computes it with Karp's recurrence and returns
the lexicographically smallest optimal cycle as a witness.
"""
from __future__ import annotations

import math
import warnings
from dataclasses import dataclass
from fractions import Fraction
from typing import Sequence

import numpy as np

from .extended import minplus_matmul, minplus_matvec

INF = math.inf


class NotStronglyConnected(ValueError):
    """The precedence graph has a node pair with no connecting path."""

    def __init__(self, source: int, target: int):
        self.source = source
        self.target = target
        super().__init__(f"precedence graph is not strongly connected: no path from node {source} to node {target}")


class ClosureDiverges(ArithmeticError):
    pass


@dataclass(frozen=True)
class CycleStats:
    mean_weight: float | Fraction
    cycle: tuple[int, ...]

    @property
    def length(self) -> int:
        return len(self.cycle)


def as_matrix(A) -> np.ndarray:
    """Coerce to a 2-D float array, keeping object arrays (exact entries) as is."""
    arr = np.asarray(A)
    if arr.dtype != object:
        arr = arr.astype(float)
    if arr.ndim != 2:
        raise ValueError(f"expected a 2-D matrix, got shape {arr.shape}")
    if arr.dtype != object and np.any(arr == -np.inf):
        warnings.warn("-inf entry in a minplus matrix", RuntimeWarning, stacklevel=2)
    return arr


def _is_eps(x) -> bool:
    return isinstance(x, float) and x == INF


def identity(n: int) -> np.ndarray:
    I = np.full((n, n), INF)
    np.fill_diagonal(I, 0.0)
    return I


def mat_add(A, B) -> np.ndarray:
    """Elementwise minimum."""
    A, B = as_matrix(A), as_matrix(B)
    if A.shape != B.shape:
        raise ValueError(f"shape mismatch {A.shape} vs {B.shape}")
    return np.minimum(A, B)


def mat_mul(A, B) -> np.ndarray:
    """``(A ⊗ B)_ik = min_j (A_ij + B_jk)``."""
    A, B = as_matrix(A), as_matrix(B)
    if A.shape[1] != B.shape[0]:
        raise ValueError(f"inner dimensions differ: {A.shape} ⊗ {B.shape}")
    if A.dtype == object or B.dtype == object:
        out = np.empty((A.shape[0], B.shape[1]), dtype=object)
        for i in range(A.shape[0]):
            for k in range(B.shape[1]):
                out[i, k] = min((A[i, j] + B[j, k] for j in range(A.shape[1])), default=INF)
        return out
    return minplus_matmul(A, B)


def mat_vec(A, x) -> np.ndarray:
    A = as_matrix(A)
    x = np.asarray(x, dtype=float)
    if A.shape[1] != x.shape[-1]:
        raise ValueError(f"dimension mismatch: {A.shape} ⊗ {x.shape}")
    return minplus_matvec(A, x)


def vec_mat(x, A) -> np.ndarray:
    """Row vector times matrix: ``(x ⊗ A)_k = min_j (x_j + A_jk)``."""
    A = as_matrix(A)
    return mat_mul(np.asarray(x, dtype=float)[None, :], A)[0]


def precedence_graph(A) -> dict[int, list[tuple[int, object]]]:
    """Adjacency lists ``{i: [(j, weight), ...]}`` of the graph of ``A``."""
    A = as_matrix(A)
    n = A.shape[0]
    if A.shape != (n, n):
        raise ValueError("precedence graph needs a square matrix")
    adj: dict[int, list] = {i: [] for i in range(n)}
    for j in range(n):
        for i in range(n):
            if not _is_eps(A[j, i]):
                adj[i].append((j, A[j, i]))
    return adj


def _reachable(adj, start: int) -> set[int]:
    seen = {start}
    stack = [start]
    while stack:
        u = stack.pop()
        for v, _ in adj[u]:
            if v not in seen:
                seen.add(v)
                stack.append(v)
    return seen


def check_strongly_connected(A) -> None:
    """Raise :class:`NotStronglyConnected` naming a disconnected pair."""
    adj = precedence_graph(A)
    n = len(adj)
    if n == 0:
        raise ValueError("empty matrix")
    fwd = _reachable(adj, 0)
    if len(fwd) < n:
        raise NotStronglyConnected(0, min(set(range(n)) - fwd))
    rev: dict[int, list] = {i: [] for i in range(n)}
    for u, edges in adj.items():
        for v, w in edges:
            rev[v].append((u, w))
    back = _reachable(rev, 0)
    if len(back) < n:
        raise NotStronglyConnected(min(set(range(n)) - back), 0)


def is_strongly_connected(A) -> bool:
    try:
        check_strongly_connected(A)
    except NotStronglyConnected:
        return False
    return True


def _ratio(num, den: int):
    if isinstance(num, (int, Fraction)):
        return Fraction(num) / den
    return num / den


def _karp_value(adj, n: int):
    # D[k][v]: least weight of a k-edge walk from node 0 to v
    D = [[INF] * n for _ in range(n + 1)]
    D[0][0] = 0
    for k in range(1, n + 1):
        prev, cur = D[k - 1], D[k]
        for u in range(n):
            du = prev[u]
            if du == INF:
                continue
            for v, w in adj[u]:
                c = du + w
                if c < cur[v]:
                    cur[v] = c
    best = None
    for v in range(n):
        if D[n][v] == INF:
            continue
        worst = None
        for k in range(n):
            if D[k][v] == INF:
                continue
            r = _ratio(D[n][v] - D[k][v], n - k)
            if worst is None or r > worst:
                worst = r
        if worst is not None and (best is None or worst < best):
            best = worst
    return best


def _critical_cycle(adj, n: int, lam) -> tuple[int, ...]:
    """Lexicographically smallest simple cycle of mean ``lam``."""
    exact = isinstance(lam, Fraction)
    scale = 1.0
    if not exact:
        scale = 1.0 + max((abs(float(w)) for es in adj.values() for _, w in es), default=0.0)
    tol = 0 if exact else 1e-9 * scale

    # potentials = shortest distances for weights w - lam (no negative cycles)
    pi = [0] * n
    for _ in range(n):
        changed = False
        for u in range(n):
            for v, w in adj[u]:
                c = pi[u] + (w - lam)
                if c < pi[v] - tol:
                    pi[v] = c
                    changed = True
        if not changed:
            break
    crit = {u: sorted(v for v, w in adj[u] if abs(w - lam + pi[u] - pi[v]) <= tol) for u in range(n)}

    def reaches(src, dst, allowed):
        seen, stack = {src}, [src]
        while stack:
            u = stack.pop()
            if u == dst:
                return True
            for v in crit[u]:
                if v in allowed and v not in seen:
                    seen.add(v)
                    stack.append(v)
        return False

    for s in range(n):
        allowed = set(range(s, n))
        if not any(v in allowed and reaches(v, s, allowed) for v in crit[s]):
            continue
        path = [s]
        visited = {s}
        u = s
        while True:
            if s in crit[u]:
                return tuple(path)
            ok = allowed - visited
            for v in crit[u]:
                if v in ok and reaches(v, s, ok | {s}):
                    break
            else:  # pragma: no cover - unreachable when lam is optimal
                raise RuntimeError("critical graph lost its cycle")
            path.append(v)
            visited.add(v)
            u = v
    raise RuntimeError("no critical cycle found")  # pragma: no cover


def min_mean_cycle(A) -> CycleStats:
    """Eigenvalue of a strongly connected minplus matrix (minimum cycle mean).

    Exact when the entries are ints or Fractions.  The witness cycle is the
    lexicographically smallest optimal node sequence, starting at its
    smallest node, following edge direction ``i -> j`` for ``A[j, i]``.
    """
    check_strongly_connected(A)
    adj = precedence_graph(A)
    n = len(adj)
    lam = _karp_value(adj, n)
    if isinstance(lam, Fraction) and lam.denominator == 1:
        lam = Fraction(lam.numerator)
    cycle = _critical_cycle(adj, n, lam)
    return CycleStats(lam, cycle)


def cycle_mean(A, cycle: Sequence[int]):
    """Mean weight of ``cycle`` (node sequence, closing edge implied)."""
    A = as_matrix(A)
    total = 0
    for u, v in zip(cycle, list(cycle[1:]) + [cycle[0]]):
        w = A[v, u]
        if _is_eps(w):
            raise ValueError(f"no edge {u} -> {v}")
        total = total + w
    return _ratio(total, len(cycle))


def closure_plus(B) -> np.ndarray:
    """``B⁺ = B ⊕ B² ⊕ ...`` by Floyd-Warshall; raises on a negative cycle."""
    B = as_matrix(B)
    n = B.shape[0]
    S = B.copy()
    for k in range(n):
        S = np.minimum(S, np.add.outer(S[:, k], S[k, :]) if S.dtype != object
                       else np.array([[S[i, k] + S[k, j] for j in range(n)] for i in range(n)], dtype=object))
    diag = [S[i, i] for i in range(n)]
    tol = 0 if S.dtype == object else 1e-9 * (1.0 + np.nanmax(np.abs(np.where(np.isfinite(S), S, 0.0))))
    if any(d < -tol for d in diag):
        raise ClosureDiverges("closure diverges: negative cycle after normalisation")
    return S


def eigenvector_linear(A, lam) -> np.ndarray:
    """An eigenvector for ``lam`` from a critical column of ``(A - lam)⁺``.

    Normalised so the first entry is ``e = 0``.
    """
    A = as_matrix(A)
    check_strongly_connected(A)
    if A.dtype == object:
        B = np.array([[x if _is_eps(x) else x - lam for x in row] for row in A], dtype=object)
    else:
        B = np.where(np.isinf(A), A, A - float(lam))
    S = closure_plus(B)
    n = S.shape[0]
    if S.dtype == object:
        crit = [j for j in range(n) if S[j, j] == 0]
    else:
        tol = 1e-9 * (1.0 + float(np.max(np.abs(S[np.isfinite(S)]))))
        crit = [j for j in range(n) if abs(S[j, j]) <= tol]
    if not crit:
        raise ClosureDiverges(f"no critical node: {lam!r} is not the eigenvalue")
    j = crit[0]
    X = S[:, j].copy()
    X[j] = 0 if S.dtype == object else 0.0
    return X - X[0]


def eigen_residual(A, lam, X) -> float:
    """``max_i |(A ⊗ X)_i - (lam + X_i)|``."""
    A = as_matrix(A)
    X = np.asarray(X, dtype=float)
    lhs = minplus_matvec(A.astype(float), X)
    return float(np.max(np.abs(lhs - (float(lam) + X))))
