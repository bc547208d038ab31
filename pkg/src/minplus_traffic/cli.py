"""Command-line front end.

Exit codes: 0 ok, 1 verification failure, 2 parse error, 3 structure
error (e.g. a disconnected precedence graph), 4 nondeterministic net.
"""
from __future__ import annotations

import argparse
import dataclasses
import hashlib
import json
import logging
import os
import sys
from fractions import Fraction
from pathlib import Path

import numpy as np

from . import __version__
from .homogeneous import (fixed_point_solve, iterate, reduce_eigenproblem, tent_growth_rate_exact,
                          tent_monte_carlo, tent_system)
from .hybrid import parse_grid
from .petri import NetStructureError, NondeterministicNet, load_net, simulate as simulate_net, validate_deterministic
from .systems import SignatureMismatch, feedback, format_system, parallel, parse_system, series
from .traffic import (RoadConfig, diagram_csv, diagram_sweep, junction_eigenpairs, junction_net,
                      marking_from_density, road_net, verify_eigenpair)
from .tropical import NotStronglyConnected, eigen_residual, eigenvector_linear, min_mean_cycle

EXIT_OK, EXIT_VERIFY, EXIT_PARSE, EXIT_STRUCTURE, EXIT_NONDET = 0, 1, 2, 3, 4
OUT_ENV = "MINPLUS_TRAFFIC_OUT"

log = logging.getLogger("minplus_traffic")


@dataclasses.dataclass
class RunConfig:
    subcommand: str
    model: str
    params: dict
    out: str

    def to_json(self) -> str:
        return json.dumps(dataclasses.asdict(self), indent=2, sort_keys=True) + "\n"

    @classmethod
    def from_json(cls, text: str) -> "RunConfig":
        return cls(**json.loads(text))

    def digest(self) -> str:
        body = json.dumps({"subcommand": self.subcommand, "model": self.model, "params": self.params}, sort_keys=True)
        return hashlib.sha1(body.encode()).hexdigest()[:10]


class RunWriter:
    """Single writer for one run directory; the config snapshot goes first."""

    def __init__(self, cfg: RunConfig):
        self.dir = Path(cfg.out)
        self.dir.mkdir(parents=True, exist_ok=True)
        (self.dir / "config.json").write_text(cfg.to_json())
        self._log = open(self.dir / "run.log", "w")
        self.log(f"minplus-traffic {__version__}")

    def write(self, name: str, text: str) -> Path:
        path = self.dir / name
        path.write_text(text)
        self.log(f"wrote {name}")
        return path

    def log(self, msg: str) -> None:
        self._log.write(msg + "\n")
        self._log.flush()

    def close(self):
        self._log.close()


def _out_dir(args, sub: str, params: dict, model: str) -> RunConfig:
    cfg = RunConfig(sub, model, params, "")
    root = Path(os.environ.get(OUT_ENV, "runs"))
    cfg.out = str(Path(args.out) if args.out else root / f"{sub}-{cfg.digest()}")
    return cfg


# ---------------------------------------------------------------------------
# eigen


def read_matrix(path: str) -> np.ndarray:
    lines = []
    for raw in Path(path).read_text().splitlines():
        line = raw.split("#", 1)[0]
        for tok in ("ε", "eps", "EPS"):
            line = line.replace(tok, "inf")
        lines.append(line)
    M = parse_grid(lines)
    if M.ndim != 2 or M.shape[0] != M.shape[1] or M.size == 0:
        raise ValueError(f"expected a non-empty square matrix, got shape {M.shape}")
    return M


def _num(x) -> str:
    if isinstance(x, Fraction):
        return str(x) if x.denominator != 1 else str(x.numerator)
    x = float(x)
    return "eps" if x == np.inf else (str(int(x)) if x.is_integer() else repr(x))


def cmd_eigen(args) -> int:
    try:
        A = read_matrix(args.matrix)
    except (OSError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_PARSE
    exact = np.all((A == np.inf) | (A == np.round(A)))
    M = np.array([[np.inf if v == np.inf else int(v) for v in row] for row in A], dtype=object) if exact else A
    try:
        stats = min_mean_cycle(M)
    except NotStronglyConnected as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_STRUCTURE
    X = eigenvector_linear(M, stats.mean_weight)
    print(f"lambda = {_num(stats.mean_weight)}")
    print("cycle = " + " -> ".join(str(i + 1) for i in stats.cycle + stats.cycle[:1]))
    print("eigenvector = " + " ".join(_num(v) for v in X))
    print(f"residual = {eigen_residual(A, float(stats.mean_weight), np.asarray(X, dtype=float)):.3g}")
    return EXIT_OK


# ---------------------------------------------------------------------------
# diagram


def _grid(args) -> list[float]:
    if args.density is not None:
        return [float(v) for v in args.density]
    if args.density_grid is not None:
        return [float(v) for v in np.linspace(0.0, 1.0, args.density_grid)]
    return [float(v) for v in np.linspace(0.0, 1.0, 101)]


def diagram_svg(points, width: int = 640, height: int = 400) -> str:
    """λ(d) and χ(d) as two polylines on the unit-density axis."""
    pad = 50
    ymax = 0.3

    def xy(d, v):
        return (pad + d * (width - 2 * pad), height - pad - (v / ymax) * (height - 2 * pad))

    def poly(vals, color, dash=""):
        pts = " ".join(f"{x:.2f},{y:.2f}" for x, y in (xy(d, v) for d, v in vals if np.isfinite(v)))
        extra = f' stroke-dasharray="{dash}"' if dash else ""
        return f'<polyline fill="none" stroke="{color}" stroke-width="1.5"{extra} points="{pts}"/>'

    seen = {}
    for p in points:
        seen.setdefault(p.d, p)
    pts = sorted(seen.values(), key=lambda p: p.d)
    parts = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}" font-family="sans-serif" font-size="11">',
        f'<rect width="{width}" height="{height}" fill="white"/>',
        f'<line x1="{pad}" y1="{height - pad}" x2="{width - pad}" y2="{height - pad}" stroke="black"/>',
        f'<line x1="{pad}" y1="{pad}" x2="{pad}" y2="{height - pad}" stroke="black"/>',
    ]
    for t in (0.0, 0.25, 0.5, 0.75, 1.0):
        x, y = xy(t, 0)
        parts.append(f'<text x="{x:.1f}" y="{y + 15:.1f}" text-anchor="middle">{t}</text>')
    for t in (0.0, 0.1, 0.2, 0.25):
        x, y = xy(0, t)
        parts.append(f'<text x="{x - 6:.1f}" y="{y + 4:.1f}" text-anchor="end">{t}</text>')
    parts.append(poly([(p.d, p.lambda_exact) for p in pts], "#1f5fbf"))
    parts.append(poly([(p.d, p.chi_sim) for p in pts], "#d0402b", "4 3"))
    if any(p.lambda_approx is not None for p in pts):
        parts.append(poly([(p.d, p.lambda_approx) for p in pts if p.lambda_approx is not None], "#3a9a3a", "1 3"))
    parts.append(f'<text x="{width / 2:.0f}" y="{height - 12}" text-anchor="middle">density d</text>')
    parts.append(f'<text x="{width - pad}" y="{pad - 20}" text-anchor="end" fill="#1f5fbf">lambda exact</text>')
    parts.append(f'<text x="{width - pad}" y="{pad - 6}" text-anchor="end" fill="#d0402b">chi simulated</text>')
    parts.append("</svg>")
    return "\n".join(parts) + "\n"


def cmd_diagram(args) -> int:
    N = args.n + args.m
    K0 = args.burn_in if args.burn_in is not None else 200 * N
    K = args.horizon if args.horizon is not None else 2000 * N
    grid = _grid(args)
    params = {"n": args.n, "m": args.m, "grid": grid, "K0": K0, "K": K, "seed": args.seed,
              "placement": args.placement, "svg": bool(args.svg)}
    cfg = _out_dir(args, "diagram", params, "junction")
    w = RunWriter(cfg)
    try:
        points = diagram_sweep(args.n, args.m, grid, K0, K, args.placement, args.seed)
        w.write("diagram.csv", diagram_csv(points))
        if args.svg:
            w.write("diagram.svg", diagram_svg(points))
        failed = sorted({p.d for p in points if p.error})
        for d in failed:
            w.log(f"point d={d!r} failed")
        print(f"wrote {len(points)} rows to {w.dir / 'diagram.csv'}")
        if failed and len(failed) > 0.1 * len(grid):
            print(f"error: {len(failed)} of {len(grid)} points failed", file=sys.stderr)
            return EXIT_VERIFY
        return EXIT_OK
    finally:
        w.close()


# ---------------------------------------------------------------------------
# verify


DEFAULT_SIZES = ((2, 10), (3, 9), (5, 7), (4, 4))


def verify_rows(sizes, grid, placements, seed: int, perturb: float, tol: float):
    rows = []
    for n, m in sizes:
        for placement in placements:
            for idx, d in enumerate(grid):
                cfg = marking_from_density(n, m, d, placement, seed + idx)
                pairs = junction_eigenpairs(cfg, tol)
                by_phase: dict[str, list] = {}
                for p in pairs:
                    if perturb:
                        rep = verify_eigenpair(cfg, p.lam + perturb, p.q, tol)
                        p.residual, p.passed = rep.max_residual, rep.passed
                    by_phase.setdefault(p.phase, []).append(p)
                for phase, ps in by_phase.items():
                    ok = any(p.passed for p in ps)
                    rows.append({
                        "n": n, "m": m, "placement": placement, "d": cfg.d, "phase": phase,
                        "candidates": [(p.formula, p.lam, p.residual, p.passed) for p in ps],
                        "verdict": "PASS" if ok else "FAIL",
                    })
    return rows


def cmd_verify(args) -> int:
    sizes = [(args.n, args.m)] if args.n is not None and args.m is not None else list(DEFAULT_SIZES)
    grid = _grid(args) if (args.density is not None or args.density_grid is not None) else \
        [float(v) for v in np.linspace(0, 1, 26)]
    placements = [args.placement] if args.placement else ["even", "random"]
    rows = verify_rows(sizes, grid, placements, args.seed, args.perturb, args.tolerance)
    bad = 0
    print(f"{'n':>3} {'m':>3} {'placement':>9} {'d':>8} {'phase':>10}  candidates  verdict")
    for r in rows:
        cands = "; ".join(f"{f}: lam={lam:.6g} res={res:.2g} {'ok' if ok else 'no'}" for f, lam, res, ok in r["candidates"])
        print(f"{r['n']:>3} {r['m']:>3} {r['placement']:>9} {r['d']:>8.4f} {r['phase']:>10}  {cands}  {r['verdict']}")
        bad += r["verdict"] == "FAIL"
    print(f"{len(rows) - bad} PASS, {bad} FAIL")
    return EXIT_OK if bad == 0 else EXIT_VERIFY


# ---------------------------------------------------------------------------
# simulate


def cmd_simulate(args) -> int:
    try:
        if args.net:
            net = load_net(args.net)
            model = str(args.net)
        elif args.model == "road":
            net = road_net(RoadConfig.from_word(args.word))
            model = f"road:{args.word}"
        elif args.model == "junction":
            net = junction_net(marking_from_density(args.n, args.m, args.density[0] if args.density else 0.5,
                                                    args.placement or "even", args.seed))
            model = "junction"
        else:
            print("error: give a net file or --model", file=sys.stderr)
            return EXIT_PARSE
    except (OSError, ValueError) as exc:
        if isinstance(exc, NetStructureError):
            print(f"error: {exc}", file=sys.stderr)
            return EXIT_STRUCTURE
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_PARSE
    rep = validate_deterministic(net)
    if not rep:
        print(f"error: nondeterministic net, conflicting places: {', '.join(rep.offending)}", file=sys.stderr)
        return EXIT_NONDET
    K = args.horizon if args.horizon is not None else 100
    params = {"model": model, "K": K, "n": args.n, "m": args.m, "word": args.word, "seed": args.seed}
    cfg = _out_dir(args, "simulate", params, model)
    w = RunWriter(cfg)
    try:
        try:
            _, Q = simulate_net(net, K)
        except (NondeterministicNet, NetStructureError) as exc:
            print(f"error: {exc}", file=sys.stderr)
            return EXIT_STRUCTURE
        head = ["k"] + list(net.transitions) + ["flow"]
        lines = [",".join(head)]
        for k in range(K + 1):
            flow = "" if k == 0 else repr(float(np.mean(Q[k] - Q[k - 1])))
            lines.append(",".join([str(k)] + [repr(float(v)) for v in Q[k]] + [flow]))
        w.write("trajectory.csv", "\n".join(lines) + "\n")
        print(f"wrote {K + 1} rows to {w.dir / 'trajectory.csv'}")
        if K > 0:
            print(f"mean flow over the run = {float(np.mean(Q[K] - Q[0])) / K:.6g}")
        return EXIT_OK
    finally:
        w.close()


# ---------------------------------------------------------------------------
# tent


def cmd_tent(args) -> int:
    mode = args.mode
    K = args.horizon if args.horizon is not None else 100_000
    params = {"mode": mode, "K": K, "seed": args.seed}
    cfg = _out_dir(args, "tent", params, "tent")
    w = RunWriter(cfg)
    try:
        rm = reduce_eigenproblem(tent_system())
        rep = fixed_point_solve(rm, "enumerate", exact=True)
        fps = ", ".join(str(p.y[0]) for p in rep.points)
        print(f"fixed points of g: {{{fps}}}")
        for p in rep.points:
            print(f"  y* = {p.y[0]}: eigenvalue {p.lam}, {'stable' if p.stable else 'unstable'} (slope radius {p.spectral_radius:g})")
        if mode in ("exact", "all"):
            chi = tent_growth_rate_exact(Fraction(2, 5), K=1000)
            print(f"growth rate from y0 = 2/5 (exact): {chi}")
        if mode in ("mc", "all"):
            chi, y0 = tent_monte_carlo(K=K, seed=args.seed)
            print(f"growth rate from y0 = {y0} over {K} steps: {chi:.6f}")
            traj = iterate(tent_system(), (Fraction(0), y0), K)
            ys = sorted(float(y[0]) for y in traj.normalized())
            stride = max(1, len(ys) // 1000)
            lines = ["rank,y"] + [f"{i},{ys[i]!r}" for i in range(0, len(ys), stride)]
            w.write("tent_sorted.csv", "\n".join(lines) + "\n")
        return EXIT_OK
    finally:
        w.close()


# ---------------------------------------------------------------------------
# compose


def cmd_compose(args) -> int:
    try:
        S1 = parse_system(Path(args.system1).read_text())
        S2 = parse_system(Path(args.system2).read_text()) if args.system2 else None
    except (OSError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_PARSE
    try:
        if args.op == "feedback":
            S = feedback(S1)
        elif S2 is None:
            print(f"error: {args.op} needs two systems", file=sys.stderr)
            return EXIT_PARSE
        else:
            S = parallel(S1, S2) if args.op == "parallel" else series(S1, S2)
    except SignatureMismatch as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_STRUCTURE
    text = format_system(S)
    if args.out:
        Path(args.out).write_text(text)
    else:
        sys.stdout.write(text)
    return EXIT_OK


# ---------------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="minplus-traffic", description="Minplus traffic models workbench")
    ap.add_argument("--version", action="version", version=__version__)
    sub = ap.add_subparsers(dest="command", required=True)

    def common(p, sizes=True):
        if sizes:
            p.add_argument("--n", type=int, default=None, help="sections on road 1 (priority road)")
            p.add_argument("--m", type=int, default=None, help="sections on road 2")
        p.add_argument("--seed", type=int, default=0)
        p.add_argument("--out", default=None, help="run directory (default: $%s or ./runs, plus a config digest)" % OUT_ENV)

    p = sub.add_parser("eigen", help="eigenvalue of a minplus matrix file")
    p.add_argument("matrix")
    p.set_defaults(func=cmd_eigen)

    p = sub.add_parser("diagram", help="fundamental diagram of the junction")
    common(p)
    p.add_argument("--density", type=float, nargs="+", default=None)
    p.add_argument("--density-grid", type=int, default=None, help="number of evenly spaced densities on [0, 1]")
    p.add_argument("--burn-in", type=int, default=None)
    p.add_argument("--horizon", type=int, default=None)
    p.add_argument("--placement", choices=("even", "random"), default="even")
    p.add_argument("--svg", action="store_true")
    p.set_defaults(func=cmd_diagram)

    p = sub.add_parser("verify", help="check the closed-form junction eigenpairs")
    common(p)
    p.add_argument("--density", type=float, nargs="+", default=None)
    p.add_argument("--density-grid", type=int, default=None)
    p.add_argument("--placement", choices=("even", "random"), default=None)
    p.add_argument("--tolerance", type=float, default=1e-9)
    p.add_argument("--perturb", type=float, default=0.0, help="add this to every eigenvalue before checking")
    p.set_defaults(func=cmd_verify)

    p = sub.add_parser("simulate", help="simulate a Petri net")
    common(p)
    p.add_argument("net", nargs="?", default=None, help="JSON net description")
    p.add_argument("--model", choices=("road", "junction"), default=None)
    p.add_argument("--word", default="1101001001", help="initial occupancy for --model road")
    p.add_argument("--density", type=float, nargs=1, default=None)
    p.add_argument("--placement", choices=("even", "random"), default=None)
    p.add_argument("--horizon", type=int, default=None)
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("tent", help="the chaotic tent example")
    common(p, sizes=False)
    p.add_argument("--mode", choices=("exact", "mc", "all"), default="all")
    p.add_argument("--horizon", type=int, default=None)
    p.set_defaults(func=cmd_tent)

    p = sub.add_parser("compose", help="compose system description files")
    p.add_argument("op", choices=("parallel", "series", "feedback"))
    p.add_argument("system1")
    p.add_argument("system2", nargs="?", default=None)
    p.add_argument("--out", default=None)
    p.set_defaults(func=cmd_compose)
    return ap


def main(argv=None) -> int:
    ap = build_parser()
    try:
        args = ap.parse_args(argv)
    except SystemExit as exc:
        return EXIT_PARSE if exc.code else EXIT_OK
    if args.command in ("diagram", "simulate"):
        args.n, args.m = args.n or 2, args.m or 10
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
