"""Additively 1-homogeneous maps: trajectories, growth rates, eigenproblems.

A map ``f`` is homogeneous when ``f(x + c) = f(x) + c`` for every scalar
shift ``c``.  Writing ``y = x[1:] - x[0]`` the dynamics split into a
non-homogeneous recursion ``y -> g(y)`` and an increment
``h(y) = f_1(0, y)``; eigenpairs of ``f`` are the fixed points of ``g``
and the growth rate is the long-run average of ``h`` along the orbit.

Maps evaluate either float arrays (with optional leading batch axes) or
plain tuples of ``Fraction`` for exact work.
"""
from __future__ import annotations

import itertools
import math
from collections import Counter
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Callable, Iterator, Sequence

import numpy as np

from .hybrid import HybridMatrix, MP, STD, apply_stages, is_homogeneous


class DivergenceError(ArithmeticError):
    def __init__(self, step: int, coord: int, value):
        self.step, self.coord, self.value = step, coord, value
        super().__init__(f"state coordinate {coord} became {value} at step {step}")


class UnboundedTrajectory(ValueError):
    pass


@dataclass(frozen=True)
class HomogeneousMap:
    """``x -> f(x)`` on ``R^dim``.

    ``stages`` optionally exposes the map as successive hybrid products,
    which makes its affine pieces available to the region-enumeration
    fixed-point solver.
    """

    dim: int
    evaluate: Callable
    name: str = ""
    stages: tuple[HybridMatrix, ...] | None = None

    def __call__(self, x):
        return self.evaluate(x)


def from_stages(stages: Sequence[HybridMatrix], name: str = "") -> HomogeneousMap:
    stages = tuple(stages)
    for a, b in zip(stages, stages[1:]):
        if a.shape[0] != b.shape[1]:
            raise ValueError("consecutive stages do not chain")
    if stages[0].shape[1] != stages[-1].shape[0]:
        raise ValueError("staged map must return a state of the input dimension")
    return HomogeneousMap(stages[0].shape[1], lambda x: apply_stages(stages, x), name, stages)


def probe_homogeneity(f: HomogeneousMap, n_probes: int = 100, tol: float = 1e-9,
                      rng: np.random.Generator | None = None, scale: float = 10.0) -> bool:
    """Check ``f(x + c) = f(x) + c`` on random probes."""
    rng = np.random.default_rng(0) if rng is None else rng
    for _ in range(n_probes):
        x = rng.uniform(-scale, scale, f.dim)
        c = rng.uniform(-scale, scale)
        if np.max(np.abs(f(x + c) - (f(x) + c))) > tol * (1 + scale):
            return False
    return True


def stages_homogeneous(stages: Sequence[HybridMatrix]) -> bool:
    return all(is_homogeneous(M) for M in stages)


# ---------------------------------------------------------------------------
# trajectories


def _is_exact(x) -> bool:
    return not isinstance(x, np.ndarray)


@dataclass
class TrajectoryRecord:
    """States ``x^0, x^s, x^2s, ...`` (``s`` = stride)."""

    states: np.ndarray | list
    stride: int = 1
    bound: float = 1e6

    @property
    def exact(self) -> bool:
        return isinstance(self.states, list)

    def __len__(self):
        return len(self.states)

    def normalized(self):
        """``y^k_{i-1} = x^k_i - x^k_1``."""
        if self.exact:
            return [tuple(v - x[0] for v in x[1:]) for x in self.states]
        return self.states[..., 1:] - self.states[..., :1]

    def increments(self):
        """``h(y^k) = x_1^{k+1} - x_1^k`` (stride 1 only)."""
        if self.stride != 1:
            raise ValueError("increments need stride 1")
        if self.exact:
            return [b[0] - a[0] for a, b in zip(self.states, self.states[1:])]
        return np.diff(self.states[..., 0], axis=0)

    @property
    def bounded(self) -> bool:
        y = self.normalized()
        if self.exact:
            return all(abs(v) <= self.bound for row in y for v in row)
        return bool(np.all(np.abs(y) <= self.bound))


def _check_finite(x, step: int, finite_coords) -> None:
    if _is_exact(x):
        for i in finite_coords:
            if isinstance(x[i], float) and not math.isfinite(x[i]):
                raise DivergenceError(step, i, x[i])
        return
    sub = x[..., finite_coords]
    bad = ~np.isfinite(sub)
    if bad.any():
        idx = np.argwhere(bad)[0]
        raise DivergenceError(step, int(finite_coords[idx[-1]]), float(sub[tuple(idx)]))


def iterate(f: HomogeneousMap, x0, K: int, stride: int = 1, finite_coords=None,
            bound: float = 1e6) -> TrajectoryRecord:
    """Apply ``f`` ``K`` times from ``x0``, recording every ``stride``-th state."""
    exact = _is_exact(x0) and not isinstance(x0, (list,)) or (isinstance(x0, list) and any(isinstance(v, Fraction) for v in x0))
    x = tuple(x0) if exact else np.array(x0, dtype=float)
    finite_coords = list(range(f.dim)) if finite_coords is None else list(finite_coords)
    rec = [x] if exact else [x.copy()]
    for k in range(1, K + 1):
        x = f(x)
        if exact:
            x = tuple(x)
        _check_finite(x, k, finite_coords)
        if k % stride == 0:
            rec.append(x if exact else x.copy())
    states = rec if exact else np.stack(rec)
    return TrajectoryRecord(states, stride, bound)


@dataclass(frozen=True)
class GrowthRateEstimate:
    chi: object
    per_coord: object
    spread: object
    K0: int
    K: int
    coherent: object

    @property
    def flagged(self):
        return np.logical_not(self.coherent)


def growth_rate(f: HomogeneousMap, x0, K0: int | None = None, K: int | None = None,
                spread_tol: float = 1e-2, finite_coords=None) -> GrowthRateEstimate:
    """``chi_i = (x_i^K - x_i^{K0}) / (K - K0)``; the headline is coordinate 1.

    The horizon defaults to ``K0 = 10 n`` and ``K = 1000 n`` for ``n = f.dim``.

    A per-coordinate spread beyond ``spread_tol`` is reported through
    ``coherent=False`` rather than raised.
    """
    K0 = 10 * f.dim if K0 is None else K0
    K = 1000 * f.dim if K is None else K
    if not K > K0 >= 0:
        raise ValueError("need K > K0 >= 0")
    exact = not isinstance(x0, np.ndarray) and any(isinstance(v, Fraction) for v in x0)
    x = tuple(x0) if exact else np.array(x0, dtype=float)
    finite_coords = list(range(f.dim)) if finite_coords is None else list(finite_coords)
    start = x
    for k in range(1, K + 1):
        x = f(x)
        if exact:
            x = tuple(x)
        elif k % 64 == 0 or k == K:
            _check_finite(x, k, finite_coords)
        if k == K0:
            start = x
    if exact:
        per = tuple(Fraction(b - a) / (K - K0) for a, b in zip(start, x))
        spread = max(per) - min(per)
        return GrowthRateEstimate(per[0], per, spread, K0, K, spread <= spread_tol)
    per = (x - start) / (K - K0)
    spread = per.max(axis=-1) - per.min(axis=-1)
    return GrowthRateEstimate(per[..., 0], per, spread, K0, K, spread <= spread_tol)


# ---------------------------------------------------------------------------
# eigenproblem -> fixed point


def affine_pieces(stages: Sequence[HybridMatrix], max_pieces: int | None = None
                  ) -> Iterator[tuple[tuple, np.ndarray, np.ndarray]]:
    """Enumerate ``(selection, L, c)`` with ``f(x) = L x + c`` on each piece.

    Standard rows are linear; every minplus row picks one of its finite
    entries.  ``selection`` lists the chosen column for every minplus row,
    stage by stage.
    """
    n = stages[0].shape[1]
    counted = 0

    def rec(si, L, c, sel):
        nonlocal counted
        if si == len(stages):
            counted += 1
            if max_pieces is not None and counted > max_pieces:
                raise OverflowError(f"more than {max_pieces} affine pieces")
            yield sel, L, c
            return
        M = stages[si]
        E = M.entries
        std = M.std_rows
        if std.any() and not np.all(np.isfinite(E[std])):
            raise ValueError("piece enumeration needs finite standard coefficients")
        Ls = np.empty((M.shape[0], n))
        cs = np.empty(M.shape[0])
        Ls[std] = E[std] @ L
        cs[std] = E[std] @ c
        mp_rows = np.flatnonzero(~std)
        choices = [np.flatnonzero(np.isfinite(E[i])) for i in mp_rows]
        for combo in itertools.product(*choices):
            L2, c2 = Ls.copy(), cs.copy()
            for i, j in zip(mp_rows, combo):
                L2[i] = L[j]
                c2[i] = E[i, j] + c[j]
            yield from rec(si + 1, L2, c2, sel + tuple(int(j) for j in combo))

    yield from rec(0, np.eye(n), np.zeros(n), ())


@dataclass(frozen=True)
class ReducedMap:
    """``g(y) = f(0, y)[1:] - f(0, y)[0]`` and the readout ``lam(y) = f_1(0, y)``."""

    f: HomogeneousMap

    @property
    def dim(self) -> int:
        return self.f.dim - 1

    def _lift(self, y):
        if isinstance(y, np.ndarray) or isinstance(y, float):
            y = np.atleast_1d(np.asarray(y, dtype=float))
            return np.concatenate([np.zeros(y.shape[:-1] + (1,)), y], axis=-1)
        return (Fraction(0),) + tuple(y)

    def g(self, y):
        fx = self.f(self._lift(y))
        if isinstance(fx, np.ndarray):
            return fx[..., 1:] - fx[..., :1]
        return tuple(v - fx[0] for v in fx[1:])

    def lam(self, y):
        fx = self.f(self._lift(y))
        return fx[..., 0] if isinstance(fx, np.ndarray) else fx[0]

    # the increment h(y) of the growth-rate formula is the same readout
    h = lam

    def pieces(self, max_pieces: int | None = None):
        if self.f.stages is None:
            raise ValueError(f"map {self.f.name!r} exposes no affine structure")
        for sel, L, c in affine_pieces(self.f.stages, max_pieces):
            G = L[1:, 1:] - L[:1, 1:]
            h = c[1:] - c[0]
            yield sel, G, h, L, c


def reduce_eigenproblem(f: HomogeneousMap) -> ReducedMap:
    return ReducedMap(f)


@dataclass
class FixedPoint:
    y: object
    lam: object
    regions: list = field(default_factory=list)
    spectral_radius: float | None = None

    @property
    def stable(self) -> bool | None:
        if self.spectral_radius is None:
            return None
        return self.spectral_radius < 1

    @property
    def eigenvector(self):
        if isinstance(self.y, np.ndarray):
            return np.concatenate([[0.0], self.y])
        return (Fraction(0),) + tuple(self.y)


@dataclass
class FixedPointReport:
    points: list[FixedPoint]
    complete: bool
    strategy: str
    singular_regions: int = 0
    note: str = ""


def _solve_exact(A: list[list[Fraction]], b: list[Fraction]) -> list[Fraction] | None:
    n = len(b)
    M = [row[:] + [bv] for row, bv in zip(A, b)]
    for col in range(n):
        piv = next((r for r in range(col, n) if M[r][col] != 0), None)
        if piv is None:
            return None
        M[col], M[piv] = M[piv], M[col]
        p = M[col][col]
        M[col] = [v / p for v in M[col]]
        for r in range(n):
            if r != col and M[r][col] != 0:
                fac = M[r][col]
                M[r] = [a - fac * b_ for a, b_ in zip(M[r], M[col])]
    return [M[r][n] for r in range(n)]


def _spectral_radius(G: np.ndarray) -> float:
    if G.size == 0:
        return 0.0
    return float(np.max(np.abs(np.linalg.eigvals(G))))


def fixed_point_solve(rm: ReducedMap, strategy: str = "auto", max_dim: int = 4, exact: bool = False,
                      tol: float = 1e-9, y0=None, damping: float = 1.0, max_iter: int = 100_000,
                      max_pieces: int | None = 1 << 16) -> FixedPointReport:
    """Fixed points of the reduced map.

    ``enumerate`` solves the affine system of every piece and keeps the
    solutions that really are fixed points of ``g``; ``iterate`` runs the
    damped recursion ``y <- (1-θ) y + θ g(y)`` with cycle detection.
    ``auto`` enumerates when the dimension is at most ``max_dim`` and the
    map exposes its pieces, and iterates otherwise (reporting the result
    as incomplete).
    """
    if strategy == "auto":
        strategy = "enumerate" if rm.dim <= max_dim and rm.f.stages is not None else "iterate"
        if strategy == "iterate":
            rep = _iterate_fixed_point(rm, tol, y0, damping, max_iter)
            rep.note = (rep.note + "; " if rep.note else "") + "region enumeration skipped, result may be incomplete"
            return rep
    if strategy == "iterate":
        return _iterate_fixed_point(rm, tol, y0, damping, max_iter)
    if strategy != "enumerate":
        raise ValueError(f"unknown strategy {strategy!r}")
    return _enumerate_fixed_points(rm, exact, tol, max_pieces)


def _enumerate_fixed_points(rm: ReducedMap, exact: bool, tol: float, max_pieces) -> FixedPointReport:
    d = rm.dim
    found: list[FixedPoint] = []
    singular = 0
    for sel, G, h, L, c in rm.pieces(max_pieces):
        A = np.eye(d) - G
        if exact:
            y = _solve_exact([[Fraction(v) for v in row] for row in A], [Fraction(v) for v in h])
            if y is None:
                singular += 1
                continue
            y = tuple(y)
            gy = rm.g(y)
            if any(a != b for a, b in zip(gy, y)):
                continue
            yf = np.array([float(v) for v in y])
        else:
            if np.linalg.matrix_rank(A) < d:
                singular += 1
                continue
            yf = np.linalg.solve(A, h)
            if np.max(np.abs(rm.g(yf) - yf), initial=0.0) >= tol:
                continue
            y = yf
        # the piece must reproduce f at the eigenvector to count as a touching region
        x = np.concatenate([[0.0], yf])
        if np.max(np.abs(L @ x + c - rm.f(x))) > tol:
            continue
        rho = _spectral_radius(G)
        for fp in found:
            if np.max(np.abs(np.asarray(fp.y, dtype=float) - yf), initial=0.0) < tol:
                fp.regions.append(sel)
                fp.spectral_radius = max(fp.spectral_radius, rho)
                break
        else:
            found.append(FixedPoint(y, rm.lam(y), [sel], rho))
    found.sort(key=lambda p: tuple(float(v) for v in p.y))
    return FixedPointReport(found, True, "enumerate", singular)


def _iterate_fixed_point(rm: ReducedMap, tol, y0, damping, max_iter) -> FixedPointReport:
    y = np.zeros(rm.dim) if y0 is None else np.array(y0, dtype=float)
    seen: dict[bytes, int] = {}
    for it in range(max_iter):
        gy = rm.g(y)
        if np.max(np.abs(gy - y), initial=0.0) < tol:
            return FixedPointReport([FixedPoint(gy, rm.lam(gy))], False, "iterate")
        y = (1 - damping) * y + damping * gy
        key = np.round(y / tol).tobytes()
        if key in seen:
            return FixedPointReport([], False, "iterate", note=f"entered a cycle of period {it - seen[key]}")
        seen[key] = it
    return FixedPointReport([], False, "iterate", note="no convergence")


# ---------------------------------------------------------------------------
# empirical measures


@dataclass(frozen=True)
class EmpiricalMeasure:
    """Uniform weights ``1/N`` on the recorded normalized states."""

    points: object
    weights: np.ndarray

    def atoms(self) -> dict:
        pts = self.points
        keys = [tuple(p) for p in (pts if isinstance(pts, list) else pts.tolist())]
        N = len(keys)
        return {k: Fraction(c, N) for k, c in Counter(keys).items()}


def empirical_measure(traj: TrajectoryRecord, burn_in: int = 0) -> EmpiricalMeasure:
    """Cesàro measure on ``y^{burn_in}, ..., y^{K-1}``."""
    if not traj.bounded:
        raise UnboundedTrajectory("normalized trajectory exceeds its bound")
    y = traj.normalized()
    pts = y[burn_in:-1]
    N = len(pts)
    if N == 0:
        raise ValueError("trajectory too short")
    return EmpiricalMeasure(pts, np.full(N, 1.0 / N))


def measure_average(meas: EmpiricalMeasure, h: Callable) -> object:
    """``∫ h dQ`` for the empirical measure (exact for exact points)."""
    if isinstance(meas.points, list):
        return sum((h(p) for p in meas.points), Fraction(0)) / len(meas.points)
    vals = np.array([float(h(np.asarray(p))) for p in meas.points])
    return float(vals @ meas.weights)


def ks_distance_uniform(samples) -> float:
    """Kolmogorov distance between the empirical law of ``samples`` and U[0, 1]."""
    s = np.sort(np.asarray(samples, dtype=float))
    n = len(s)
    cdf = np.clip(s, 0.0, 1.0)
    up = np.arange(1, n + 1) / n - cdf
    down = cdf - np.arange(n) / n
    return float(max(up.max(), down.max()))


# ---------------------------------------------------------------------------
# affine standard dynamics f(x) = A x + b


def eigen_affine_standard(A, b, tol: float = 1e-10) -> float:
    """``lam = p . b`` with ``p`` the normalised left 1-eigenvector of ``A``.

    ``A`` must have unit row sums and a one-dimensional kernel of ``A - I``.
    """
    A = np.asarray(A, dtype=float)
    b = np.asarray(b, dtype=float)
    n = A.shape[0]
    if A.shape != (n, n) or b.shape != (n,):
        raise ValueError("A must be square and match b")
    if np.max(np.abs(A.sum(axis=1) - 1.0)) > tol:
        raise ValueError("rows of A must sum to 1 for a homogeneous map")
    sv = np.linalg.svd(A - np.eye(n), compute_uv=False)
    kernel = int(np.sum(sv <= tol * max(1.0, sv.max(initial=0.0))))
    if kernel != 1:
        raise ValueError(f"kernel of A - I has dimension {kernel}; the eigenvalue is not unique")
    lhs = np.vstack([(A - np.eye(n)).T, np.ones((1, n))])
    rhs = np.concatenate([np.zeros(n), [1.0]])
    p, *_ = np.linalg.lstsq(lhs, rhs, rcond=None)
    return float(p @ b)


# ---------------------------------------------------------------------------
# the chaotic tent example
#   x1' = x2
#   x2' = min(3 x2 - 2 x1, 2 + 2 x1 - x2)
# so that y = x2 - x1 follows the tent map y' = min(2y, 2 - 2y).


def _tent_eval(x):
    if isinstance(x, np.ndarray):
        x1, x2 = x[..., 0], x[..., 1]
        return np.stack([x2, np.minimum(3 * x2 - 2 * x1, 2 + 2 * x1 - x2)], axis=-1)
    x1, x2 = x
    return (x2, min(3 * x2 - 2 * x1, 2 + 2 * x1 - x2))


TENT_STAGES = (
    HybridMatrix(np.array([[0.0, 1.0], [-2.0, 3.0], [2.0, -1.0]]), (STD, STD, STD), (MP, MP)),
    HybridMatrix(np.array([[0.0, np.inf, np.inf], [np.inf, 0.0, 2.0]]), (MP, MP), (STD, STD, STD)),
)


def tent_system() -> HomogeneousMap:
    return HomogeneousMap(2, _tent_eval, "tent", TENT_STAGES)


def tent_map(y):
    return min(2 * y, 2 - 2 * y)


def tent_growth_rate_exact(y0: Fraction, K: int = 1000, K0: int = 0) -> Fraction:
    """Growth rate of the tent system from ``(0, y0)`` in rational arithmetic."""
    return growth_rate(tent_system(), (Fraction(0), Fraction(y0)), K0, K).chi


def tent_monte_carlo(K: int = 100_000, seed: int = 0, resolution: int = 100_000) -> tuple[float, Fraction]:
    """Growth rate from ``y0`` drawn uniformly on ``{i / resolution}``.

    The orbit is computed in exact rationals: float iterates of the tent map
    collapse onto the unstable fixed point 0 within about 53 steps.
    Returns ``(chi, y0)``.
    """
    rng = np.random.default_rng(seed)
    y0 = Fraction(int(rng.integers(0, resolution)), resolution)
    chi = growth_rate(tent_system(), (Fraction(0), y0), 0, K).chi
    return float(chi), y0
