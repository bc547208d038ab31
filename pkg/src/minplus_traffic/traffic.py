"""Traffic models: the circular road and the two-road junction.

Indices are 0-based throughout.  For a junction with road sizes ``n`` and
``m`` (``N = n + m``), road 1 is ``0..n-1`` and road 2 is ``n..N-1``;
cells ``n-1`` and ``N-1`` share the junction, and cells ``0`` and ``n``
are the exits of the junction.  In 1-based model notation these are
``q_n``, ``q_{n+m}``, ``q_1`` and ``q_{n+1}``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Iterable, Sequence

import numpy as np

from .homogeneous import HomogeneousMap
from .hybrid import MP, STD, HybridMatrix
from .petri import Arc, PetriNet, Place

PHASES = ("free", "saturation", "recession", "freeze")


# ---------------------------------------------------------------------------
# circular road


@dataclass(frozen=True)
class RoadConfig:
    occupancy: tuple

    def __post_init__(self):
        occ = tuple(self.occupancy)
        if any(not 0 <= v <= 1 for v in occ):
            raise ValueError("occupancy entries must lie in [0, 1]")
        object.__setattr__(self, "occupancy", occ)

    @classmethod
    def from_word(cls, word: str) -> "RoadConfig":
        if set(word) - {"0", "1"}:
            raise ValueError(f"not a binary word: {word!r}")
        return cls(tuple(int(c) for c in word))

    @property
    def m(self) -> int:
        return len(self.occupancy)

    @property
    def n(self):
        return sum(self.occupancy)

    @property
    def rho(self) -> Fraction | float:
        return Fraction(self.n, self.m) if all(isinstance(v, int) for v in self.occupancy) else self.n / self.m

    @property
    def word(self) -> str:
        return "".join(str(int(v)) for v in self.occupancy)


def exclusion_step(w: RoadConfig) -> RoadConfig:
    """Parallel update: every car whose next cell is empty moves forward."""
    occ = w.occupancy
    m = len(occ)
    if any(v not in (0, 1) for v in occ):
        raise ValueError("exclusion process needs a boolean word")
    out = list(occ)
    for s in range(m):
        t = (s + 1) % m
        if occ[s] == 1 and occ[t] == 0:
            out[s], out[t] = 0, 1
    return RoadConfig(tuple(out))


class PeriodNotFound(RuntimeError):
    pass


def exclusion_flow(w0: RoadConfig, horizon: int | None = None) -> Fraction:
    """Cars moved per step per section, averaged over the eventual cycle."""
    m = w0.m
    horizon = max(m * m, 16) if horizon is None else horizon
    seen: dict[tuple, int] = {}
    moves: list[int] = []
    w = w0
    for t in range(horizon + 1):
        if w.occupancy in seen:
            t0 = seen[w.occupancy]
            return Fraction(sum(moves[t0:t]), (t - t0) * m)
        seen[w.occupancy] = t
        nxt = exclusion_step(w)
        moves.append(sum(1 for a, b in zip(w.occupancy, nxt.occupancy) if a == 1 and b == 0))
        w = nxt
    raise PeriodNotFound(f"no recurrence within {horizon} steps")


def road_event_graph(cfg: RoadConfig) -> np.ndarray:
    """``A`` with ``q_s' = min(a_{s-1} + q_{s-1}, (1 - a_s) + q_{s+1})``, indices mod m."""
    m = cfg.m
    exact = all(isinstance(v, int) for v in cfg.occupancy)
    A = np.full((m, m), math.inf, dtype=object if exact else float)
    for s in range(m):
        prev, nxt = (s - 1) % m, (s + 1) % m
        A[s, prev] = min(A[s, prev], cfg.occupancy[prev])
        A[s, nxt] = min(A[s, nxt], 1 - cfg.occupancy[s])
    return A


def road_net(cfg: RoadConfig) -> PetriNet:
    """Event graph of the circular road: a car place and a free-space place per section."""
    m = cfg.m
    names = tuple(f"q{s + 1}" for s in range(m))
    places, arcs = [], []
    for s in range(m):
        prev, nxt = (s - 1) % m, (s + 1) % m
        car = f"car{prev + 1}>{s + 1}"
        free = f"free{s + 1}<{nxt + 1}"
        places += [Place(car, float(cfg.occupancy[prev]), (names[s],)),
                   Place(free, float(1 - cfg.occupancy[s]), (names[s],))]
        arcs += [Arc(names[prev], car), Arc(names[nxt], free)]
    return PetriNet(tuple(places), names, tuple(arcs))


# ---------------------------------------------------------------------------
# junction configuration


@dataclass(frozen=True, eq=False)
class JunctionConfig:
    n: int
    m: int
    a: np.ndarray

    def __post_init__(self):
        if self.n < 2 or self.m < 2:
            raise ValueError("each road needs at least two sections")
        a = np.array(self.a, dtype=float)
        if a.shape != (self.n + self.m,):
            raise ValueError(f"marking must have length {self.n + self.m}")
        tol = 1e-12
        if np.any(a < -tol) or np.any(a > 1 + tol):
            raise ValueError("markings must lie in [0, 1]")
        if a[self.n - 1] + a[-1] > 1 + tol:
            raise ValueError("the junction holds at most one car")
        a.setflags(write=False)
        object.__setattr__(self, "a", a)

    @property
    def N(self) -> int:
        return self.n + self.m

    @property
    def abar_junction(self) -> float:
        return 1.0 - self.a[self.n - 1] - self.a[-1]

    @property
    def abar(self) -> np.ndarray:
        ab = 1.0 - self.a
        ab[self.n - 1] = ab[-1] = self.abar_junction
        return ab

    @property
    def d(self) -> float:
        return float(self.a.sum()) / (self.N - 1)

    @property
    def rho(self) -> float:
        return 1.0 / self.N

    @property
    def r(self) -> float:
        return self.m / self.N

    @property
    def b_n(self) -> float:
        return float(self.a[: self.n - 1].sum())

    @property
    def b_m(self) -> float:
        return float(self.a[self.n: self.N - 1].sum())

    @property
    def bbar_n(self) -> float:
        return float((1.0 - self.a[: self.n - 1]).sum())

    @property
    def bbar_m(self) -> float:
        return float((1.0 - self.a[self.n: self.N - 1]).sum())


def marking_from_density(n: int, m: int, d: float, policy: str = "even", seed: int = 0) -> JunctionConfig:
    """A marking with ``sum(a) = d (N - 1)``.

    ``even`` puts ``d`` in every ordinary cell and ``d/2`` on each junction
    cell.  ``random`` visits the ordinary cells and the junction (as one
    unit-capacity slot) in a seeded random order, filling each to capacity
    until the mass is used up; the junction share goes to one road.
    """
    if not 0 <= d <= 1:
        raise ValueError(f"density {d} outside [0, 1]")
    N = n + m
    a = np.zeros(N)
    if policy == "even":
        a[:] = d
        a[n - 1] = a[N - 1] = d / 2
    elif policy == "random":
        rng = np.random.default_rng(seed)
        slots = [i for i in range(N) if i not in (n - 1, N - 1)] + [-1]
        order = rng.permutation(len(slots))
        rem = d * (N - 1)
        side = n - 1 if rng.integers(0, 2) == 0 else N - 1
        for k in order:
            x = min(1.0, rem)
            rem -= x
            if slots[k] == -1:
                a[side] = x
            else:
                a[slots[k]] = x
            if rem <= 0:
                break
    else:
        raise ValueError(f"unknown placement policy {policy!r}")
    return JunctionConfig(n, m, a)


# ---------------------------------------------------------------------------
# junction dynamics


def junction_step(q, a, n: int):
    """One step of the junction recursion; ``q`` and ``a`` may carry batch axes.

    The entry of road 2 into the junction reads the freshly computed entry
    of road 1, and each exit reads the standard half-sum of the two
    junction counters.

    With ``T = abar_n + q_1 + q_{n+1}`` and ``u = a_{n-1} + q_{n-1}`` the
    road-1 entry is ``min(T - q_{n+m}, u)``, so ``T - q_n^{new}`` equals
    ``max(q_{n+m}, T - u)``.  That form is used below: it is the same
    function but cannot round below the old ``q_{n+m}``.
    """
    N = a.shape[-1]
    ab = 1 - a
    abj = 1 - a[..., n - 1] - a[..., N - 1]
    new = np.empty_like(q)
    if n > 2:
        new[..., 1:n - 1] = np.minimum(a[..., 0:n - 2] + q[..., 0:n - 2], ab[..., 1:n - 1] + q[..., 2:n])
    if N - 1 > n + 1:
        new[..., n + 1:N - 1] = np.minimum(a[..., n:N - 2] + q[..., n:N - 2], ab[..., n + 1:N - 1] + q[..., n + 2:N])
    T = abj + (q[..., 0] + q[..., n])
    up = a[..., n - 2] + q[..., n - 2]
    new[..., n - 1] = np.minimum(T - q[..., N - 1], up)
    new[..., N - 1] = np.minimum(np.maximum(q[..., N - 1], T - up), a[..., N - 2] + q[..., N - 2])
    half = (q[..., n - 1] + q[..., N - 1]) / 2
    new[..., 0] = np.minimum(a[..., n - 1] + half, ab[..., 0] + q[..., 1])
    new[..., n] = np.minimum(a[..., N - 1] + half, ab[..., n] + q[..., n + 1])
    return new


def junction_stages(cfg: JunctionConfig) -> tuple[HybridMatrix, ...]:
    """The junction step as four hybrid stages.

    1. standard: copies of ``q``, the half-sum and ``q_1 + q_{n+1} - q_{n+m}``
    2. minplus: every new coordinate except ``q_{n+m}``, which holds only its
       upstream term, plus copies of ``q_1`` and ``q_{n+1}``
    3. standard: copies and ``q_1 + q_{n+1} - q_n^{new}``
    4. minplus: finish ``q_{n+m}``
    """
    n, N = cfg.n, cfg.N
    a, ab, abj = cfg.a, cfg.abar, cfg.abar_junction
    INF = np.inf
    # stage 1: rows 0..N-1 copies, N half-sum, N+1 junction term
    S1 = np.zeros((N + 2, N))
    S1[:N] = np.eye(N)
    S1[N, n - 1] = S1[N, N - 1] = 0.5
    S1[N + 1, 0] = S1[N + 1, n] = 1.0
    S1[N + 1, N - 1] = -1.0
    # stage 2: rows 0..N-1 new values, N and N+1 copies of q_1 and q_{n+1}
    S2 = np.full((N + 2, N + 2), INF)
    for i in list(range(1, n - 1)) + list(range(n + 1, N - 1)):
        S2[i, i - 1] = a[i - 1]
        S2[i, i + 1] = ab[i]
    S2[n - 1, N + 1] = abj
    S2[n - 1, n - 2] = a[n - 2]
    S2[N - 1, N - 2] = a[N - 2]
    S2[0, N] = a[n - 1]
    S2[0, 1] = ab[0]
    S2[n, N] = a[N - 1]
    S2[n, n + 1] = ab[n]
    S2[N, 0] = 0.0
    S2[N + 1, n] = 0.0
    # stage 3: copies, then q_1 + q_{n+1} - q_n^{new}
    S3 = np.zeros((N + 1, N + 2))
    S3[:N, :N] = np.eye(N)
    S3[N, N] = S3[N, N + 1] = 1.0
    S3[N, n - 1] = -1.0
    # stage 4
    S4 = np.full((N, N + 1), INF)
    for i in range(N):
        S4[i, i] = 0.0
    S4[N - 1, N] = abj
    s, p = STD, MP
    return (
        HybridMatrix(S1, (s,) * (N + 2), (p,) * N),
        HybridMatrix(S2, (p,) * (N + 2), (s,) * (N + 2)),
        HybridMatrix(S3, (s,) * (N + 1), (p,) * (N + 2)),
        HybridMatrix(S4, (p,) * N, (s,) * (N + 1)),
    )


def junction_dynamics(cfg: JunctionConfig) -> HomogeneousMap:
    a = cfg.a
    n = cfg.n

    def evaluate(q):
        if isinstance(q, np.ndarray):
            return junction_step(q.astype(float, copy=False), a, n)
        return tuple(junction_step(np.array(q, dtype=object), a.astype(object), n))

    return HomogeneousMap(cfg.N, evaluate, f"junction(n={cfg.n}, m={cfg.m})", junction_stages(cfg))


def junction_net(cfg: JunctionConfig) -> PetriNet:
    """Deterministic Petri net of the junction.

    The car place of each junction cell is split between the two exits in
    half proportions (all its tokens routed to its own road), and the free
    space of the junction is shared by giving road 1 priority over road 2:
    the road-1 copy subtracts road-2 entries of the previous step, the
    road-2 copy subtracts road-1 entries of the current step.
    """
    n, N = cfg.n, cfg.N
    a, ab, abj = cfg.a, cfg.abar, cfg.abar_junction
    q = [f"q{i + 1}" for i in range(N)]
    places, arcs = [], []

    def add(name, marking, target, producers):
        places.append(Place(name, float(marking), (q[target],)))
        for src, w, dl in producers:
            arcs.append(Arc(q[src], name, w, dl))

    for i in list(range(1, n - 1)) + list(range(n + 1, N - 1)):
        add(f"car{i}", a[i - 1], i, [(i - 1, 1.0, 1)])
        add(f"free{i + 1}", ab[i], i, [(i + 1, 1.0, 1)])
    add(f"car{n - 1}", a[n - 2], n - 1, [(n - 2, 1.0, 1)])
    add(f"car{N - 1}", a[N - 2], N - 1, [(N - 2, 1.0, 1)])
    add(f"junction[{q[n - 1]}]", abj, n - 1, [(0, 1.0, 1), (n, 1.0, 1), (N - 1, -1.0, 1)])
    add(f"junction[{q[N - 1]}]", abj, N - 1, [(0, 1.0, 1), (n, 1.0, 1), (n - 1, -1.0, 0)])
    add(f"car{n}[{q[0]}]", a[n - 1], 0, [(n - 1, 0.5, 1), (N - 1, 0.5, 1)])
    add(f"car{N}[{q[n]}]", a[N - 1], n, [(n - 1, 0.5, 1), (N - 1, 0.5, 1)])
    add("free1", ab[0], 0, [(1, 1.0, 1)])
    add(f"free{n + 1}", ab[n], n, [(n + 1, 1.0, 1)])
    return PetriNet(tuple(places), tuple(q), tuple(arcs))


# ---------------------------------------------------------------------------
# phases and eigenvalues


@dataclass(frozen=True)
class PhaseBoundaries:
    alpha: float
    beta: float
    gamma: float

    @classmethod
    def of(cls, n: int, m: int) -> "PhaseBoundaries":
        N = n + m
        rho, r = 1.0 / N, m / N
        return cls(1 / (4 * (1 - rho)), (r + 0.5 - rho) / (2 * (1 - rho)), r / (1 - rho))

    def phases_at(self, d: float, tol: float = 1e-12) -> list[str]:
        """Every phase whose density interval contains ``d``."""
        out = []
        if d <= self.alpha + tol:
            out.append("free")
        if self.alpha - tol <= d <= self.beta + tol:
            out.append("saturation")
        lo, hi = min(self.beta, self.gamma), max(self.beta, self.gamma)
        if lo + tol < d < hi - tol:
            out.append("recession")
        if d >= self.gamma - tol:
            out.append("freeze")
        return out


def phase_boundaries(n: int, m: int) -> PhaseBoundaries:
    return PhaseBoundaries.of(n, m)


def phase_of(cfg: JunctionConfig) -> tuple[PhaseBoundaries, str]:
    """Boundaries and the phase label; at a boundary the lower-density phase is named."""
    pb = PhaseBoundaries.of(cfg.n, cfg.m)
    phases = pb.phases_at(cfg.d)
    if not phases:
        raise ValueError(f"density {cfg.d} falls outside every phase")
    return pb, phases[0]


def lambda_recession_table(n: int, m: int, d: float) -> float:
    N = n + m
    rho, r = 1.0 / N, m / N
    return (r - (1 - rho) * d) / (2 * r - 1 + 2 * rho)


def lambda_recession_alt(n: int, m: int, d: float) -> float | None:
    """Second recession candidate: ``lam (2 + n - m) + m - 1 = (N - 1) d`` solved for ``lam``.

    Kept so the verifier can report both candidates; it does not survive
    the eigenvector check.
    """
    den = n - m + 2
    if den == 0:
        return None
    return ((n + m - 1) * d - m + 1) / den


def lambda_of_phase(n: int, m: int, d: float, phase: str) -> float:
    N = n + m
    if phase == "free":
        return (1 - 1 / N) * d
    if phase == "saturation":
        return 0.25
    if phase == "recession":
        return lambda_recession_table(n, m, d)
    if phase == "freeze":
        return 0.0
    raise ValueError(f"unknown phase {phase!r}")


def junction_lambda_approx(d: float, r: float) -> float:
    """``max(min(d, 1/4, (r - d)/(2r - 1)), 0)`` for ``r > 1/2``."""
    if not r > 0.5:
        raise ValueError("the approximation needs r > 1/2")
    if not 0 <= d <= 1:
        raise ValueError(f"density {d} outside [0, 1]")
    return max(min(d, 0.25, (r - d) / (2 * r - 1)), 0.0)


@dataclass
class EigenPairJunction:
    phase: str
    lam: float
    reduced: tuple[float, float, float, float]  # (U, V, X, Y)
    q: np.ndarray
    formula: str = "table"
    residual: float = math.nan
    passed: bool = False


@dataclass
class VerifyReport:
    residuals: np.ndarray
    max_residual: float
    worst: int
    lam_ok: bool
    passed: bool


def verify_eigenpair(cfg: JunctionConfig, lam: float, q, tol: float = 1e-9) -> VerifyReport:
    """Residuals ``f_i(q) - lam - q_i`` of the eigenvalue equations.

    In the second junction equation the updated ``q_n`` is ``lam + q_n``.
    """
    q = np.asarray(q, dtype=float)
    n, N = cfg.n, cfg.N
    a, ab, abj = cfg.a, cfg.abar, cfg.abar_junction
    rhs = junction_step(q, a, n)
    through = q[0] + q[n]
    rhs[N - 1] = min(abj + through - (lam + q[n - 1]), a[N - 2] + q[N - 2])
    res = rhs - lam - q
    worst = int(np.argmax(np.abs(res)))
    mx = float(np.abs(res[worst]))
    lam_ok = lam <= 0.25 + tol
    return VerifyReport(res, mx, worst, lam_ok, bool(mx < tol and lam_ok))


def reduced_eigenvector(cfg: JunctionConfig, lam: float, phase: str) -> tuple[float, float, float, float]:
    """``(U, V, X, Y) = (q_n, q_{n+m}, q_1, q_{n+1})`` with ``X = 0``."""
    n = cfg.n
    an, anm = cfg.a[n - 1], cfg.a[-1]
    if phase == "freeze":
        abj, bbm = cfg.abar_junction, cfg.bbar_m
        return (abj + bbm, -2 * an - abj - bbm, 0.0, -2 * an - abj)
    U = cfg.b_n - (n - 1) * lam
    V = (n + 1) * lam - 2 * an - cfg.b_n
    Y = anm - an
    if phase == "recession":
        Y += 4 * lam - 1
    elif phase not in ("free", "saturation"):
        raise ValueError(f"unknown phase {phase!r}")
    return (U, V, 0.0, Y)


def expand_eigenvector(cfg: JunctionConfig, reduced, lam: float) -> np.ndarray:
    """Fill the interior of both roads from the junction values.

    Each interior cell takes the cheaper of the path from the road exit
    (cumulated ``a_j - lam``) and the path back from the junction
    (cumulated ``abar_j - lam``).
    """
    if lam >= 0.5:
        raise ValueError("interior elimination needs lam < 1/2")
    U, V, X, Y = reduced
    n, N = cfg.n, cfg.N
    a, ab = cfg.a, cfg.abar
    q = np.empty(N)
    q[0], q[n - 1], q[n], q[N - 1] = X, U, Y, V
    for start, end in ((0, n - 1), (n, N - 1)):
        for i in range(start + 1, end):
            fwd = q[start] + float(np.sum(a[start:i] - lam))
            back = float(np.sum(ab[i:end] - lam)) + q[end]
            q[i] = min(fwd, back)
    return q


def junction_eigenpairs(cfg: JunctionConfig, tol: float = 1e-9) -> list[EigenPairJunction]:
    """Closed-form eigenpairs for every phase valid at the density.

    In the recession band both candidate eigenvalue formulas are built
    and verified.
    """
    pb = PhaseBoundaries.of(cfg.n, cfg.m)
    out = []
    for ph in pb.phases_at(cfg.d):
        cands = [("table", lambda_of_phase(cfg.n, cfg.m, cfg.d, ph))]
        if ph == "recession":
            alt = lambda_recession_alt(cfg.n, cfg.m, cfg.d)
            if alt is not None:
                cands.append(("alt", alt))
        for formula, lam in cands:
            if lam >= 0.5:
                out.append(EigenPairJunction(ph, lam, (math.nan,) * 4, np.full(cfg.N, math.nan), formula, math.inf, False))
                continue
            red = reduced_eigenvector(cfg, lam, ph)
            q = expand_eigenvector(cfg, red, lam)
            rep = verify_eigenpair(cfg, lam, q, tol)
            out.append(EigenPairJunction(ph, lam, red, q, formula, rep.max_residual, rep.passed))
    return out


def junction_eigvec_table(cfg: JunctionConfig, phase: str | None = None) -> list[EigenPairJunction]:
    pairs = junction_eigenpairs(cfg)
    if phase is None:
        return pairs
    sel = [p for p in pairs if p.phase == phase]
    if not sel:
        raise ValueError(f"phase {phase!r} is not valid at density {cfg.d}")
    return sel


def junction_lambda_exact(cfg: JunctionConfig) -> float:
    """Eigenvalue of the primary phase; in recession, the verified candidate."""
    _, phase = phase_of(cfg)
    pairs = [p for p in junction_eigenpairs(cfg) if p.phase == phase]
    passing = [p for p in pairs if p.passed]
    best = passing[0] if passing else min(pairs, key=lambda p: p.residual)
    return float(best.lam)


# ---------------------------------------------------------------------------
# trajectories


@dataclass
class TrajectoryCheck:
    nondecreasing: np.ndarray
    spread_early: np.ndarray
    spread_max: np.ndarray
    sum_increment_max: np.ndarray
    chi: np.ndarray
    chi_spread: np.ndarray


def simulate_junctions(n: int, markings: np.ndarray, K: int, K0: int,
                       early: int = 1000) -> TrajectoryCheck:
    """Run a batch of junctions from ``q = 0`` and track the trajectory invariants.

    ``markings`` has shape ``(B, N)``.
    """
    a = np.asarray(markings, dtype=float)
    B, N = a.shape
    q = np.zeros((B, N))
    mono = np.ones(B, dtype=bool)
    spread_early = np.zeros(B)
    spread_max = np.zeros(B)
    inc_max = np.full(B, -np.inf)
    key = [0, n - 1, n, N - 1]
    start = q.copy()
    for k in range(1, K + 1):
        new = junction_step(q, a, n)
        mono &= np.all(new >= q, axis=1)
        inc = (new[:, key] - q[:, key]).sum(axis=1)
        np.maximum(inc_max, inc, out=inc_max)
        sp = new.max(axis=1) - new.min(axis=1)
        np.maximum(spread_max, sp, out=spread_max)
        if k <= early:
            np.maximum(spread_early, sp, out=spread_early)
        q = new
        if k == K0:
            start = q.copy()
    per = (q - start) / (K - K0)
    return TrajectoryCheck(mono, spread_early, spread_max, inc_max, per[:, 0], per.max(axis=1) - per.min(axis=1))


def junction_growth_rates(n: int, markings: np.ndarray, K: int, K0: int) -> tuple[np.ndarray, np.ndarray]:
    """``(chi, spread)`` per row of ``markings``, from ``q = 0``."""
    a = np.asarray(markings, dtype=float)
    q = np.zeros_like(a)
    start = q
    for k in range(1, K + 1):
        q = junction_step(q, a, n)
        if k == K0:
            start = q.copy()
    per = (q - start) / (K - K0)
    return per[:, 0], per.max(axis=1) - per.min(axis=1)


# ---------------------------------------------------------------------------
# fundamental diagram


@dataclass
class DiagramPoint:
    d: float
    lambda_exact: float
    lambda_approx: float | None
    chi_sim: float
    phase: str
    n: int
    m: int
    seed: int
    K0: int
    K: int
    placement: str = "even"
    error: str | None = None


CSV_COLUMNS = ("d", "lambda_exact", "lambda_approx", "chi_sim", "phase", "n", "m", "seed", "K0", "K")


def default_grid(points: int = 101) -> np.ndarray:
    return np.linspace(0.0, 1.0, points)


def diagram_sweep(n: int, m: int, grid: Iterable[float] | None = None, K0: int | None = None,
                  K: int | None = None, placement: str = "even", seed: int = 0) -> list[DiagramPoint]:
    """Eigenvalue, approximation and simulated growth rate along a density grid.

    A density sitting on a phase boundary yields one row per adjacent phase.
    """
    N = n + m
    grid = default_grid() if grid is None else np.asarray(list(grid), dtype=float)
    K0 = 200 * N if K0 is None else K0
    K = 2000 * N if K is None else K
    r = m / N
    pb = PhaseBoundaries.of(n, m)
    cfgs, errors = [], {}
    for idx, d in enumerate(grid):
        try:
            cfgs.append(marking_from_density(n, m, float(d), placement, seed + idx))
        except ValueError as exc:
            cfgs.append(None)
            errors[idx] = str(exc)
    ok = [i for i, c in enumerate(cfgs) if c is not None]
    chis = np.full(len(grid), np.nan)
    if ok:
        with np.errstate(invalid="ignore", over="ignore"):
            chi, _ = junction_growth_rates(n, np.stack([cfgs[i].a for i in ok]), K, K0)
        chis[ok] = chi
    points = []
    for idx, d in enumerate(grid):
        d = float(d)
        approx = junction_lambda_approx(d, r) if r > 0.5 and 0 <= d <= 1 else None
        cfg = cfgs[idx]
        if cfg is None:
            points.append(DiagramPoint(d, math.nan, approx, math.nan, "", n, m, seed + idx, K0, K, placement, errors[idx]))
            continue
        err = None if np.isfinite(chis[idx]) else "non-finite growth rate"
        for ph in pb.phases_at(cfg.d):
            lam = lambda_of_phase(n, m, cfg.d, ph)
            if ph == "recession":
                lam = junction_lambda_exact(cfg)
            points.append(DiagramPoint(d, lam, approx, float(chis[idx]), ph, n, m, seed + idx, K0, K, placement, err))
    points.sort(key=lambda p: (p.d, PHASES.index(p.phase) if p.phase in PHASES else -1))
    return points


def _fmt(x) -> str:
    if x is None:
        return ""
    if isinstance(x, float):
        return repr(x)
    return str(x)


def diagram_csv(points: Sequence[DiagramPoint]) -> str:
    lines = [",".join(CSV_COLUMNS)]
    for p in points:
        lines.append(",".join(_fmt(getattr(p, c)) for c in CSV_COLUMNS))
    return "\n".join(lines) + "\n"
