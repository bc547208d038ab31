"""Continuous timed Petri nets with real (possibly negative) production weights.

Places hold a real initial marking and feed at most one downstream
transition in a deterministic net.  Production arcs ``q -> p`` carry a
weight and a delay: delay 1 is the usual one-tick holding time, delay 0
lets a place see the firing of the *current* step, which is how a
priority rule reads the count of the transition that already fired.

With ``Q^k`` the cumulated firings and ``P^k`` the cumulated tokens that
arrived in each place::

    P^{k+1} = H1 Q^k + H0 Q^{k+1}
    Q^{k+1}_q = min_{p -> q} (a_p + P^{k+1}_p)

Transitions are evaluated in a topological order of the delay-0 arcs.
"""
from __future__ import annotations

import json
from dataclasses import dataclass, field
from functools import cached_property
from typing import Mapping, Sequence

import numpy as np

from .extended import minplus_matvec, std_matvec
from .hybrid import MP, STD, HybridMatrix, block, htimes_vec


class NetStructureError(ValueError):
    pass


class NondeterministicNet(ValueError):
    pass


@dataclass(frozen=True)
class Place:
    name: str
    marking: float = 0.0
    downstream: tuple[str, ...] = ()


@dataclass(frozen=True)
class Arc:
    """Production edge: each firing of ``transition`` puts ``weight`` tokens in ``place``."""

    transition: str
    place: str
    weight: float = 1.0
    delay: int = 1


@dataclass(frozen=True, eq=False)
class PetriNet:
    places: tuple[Place, ...]
    transitions: tuple[str, ...]
    arcs: tuple[Arc, ...] = ()

    def __post_init__(self):
        object.__setattr__(self, "places", tuple(self.places))
        object.__setattr__(self, "transitions", tuple(self.transitions))
        object.__setattr__(self, "arcs", tuple(self.arcs))
        tnames = set(self.transitions)
        if len(tnames) != len(self.transitions):
            raise NetStructureError("duplicate transition name")
        pnames = [p.name for p in self.places]
        if len(set(pnames)) != len(pnames):
            raise NetStructureError("duplicate place name")
        for p in self.places:
            for q in p.downstream:
                if q not in tnames:
                    raise NetStructureError(f"place {p.name!r} feeds unknown transition {q!r}")
            if not np.isfinite(p.marking):
                raise NetStructureError(f"place {p.name!r} has a non-finite marking")
        for a in self.arcs:
            if a.transition not in tnames:
                raise NetStructureError(f"arc from unknown transition {a.transition!r}")
            if a.place not in pnames:
                raise NetStructureError(f"arc into unknown place {a.place!r}")
            if a.delay not in (0, 1):
                raise NetStructureError("arc delays must be 0 or 1")
        if self.has_zero_delay:
            self.firing_order  # raises on a cycle of delay-0 arcs

    # -- indexing ---------------------------------------------------------

    @cached_property
    def place_index(self) -> dict[str, int]:
        return {p.name: i for i, p in enumerate(self.places)}

    @cached_property
    def transition_index(self) -> dict[str, int]:
        return {q: i for i, q in enumerate(self.transitions)}

    def place(self, name: str) -> Place:
        try:
            return self.places[self.place_index[name]]
        except KeyError:
            raise NetStructureError(f"unknown place {name!r}") from None

    @property
    def markings(self) -> np.ndarray:
        return np.array([p.marking for p in self.places], dtype=float)

    def _production(self, delay: int) -> np.ndarray:
        H = np.zeros((len(self.places), len(self.transitions)))
        for a in self.arcs:
            if a.delay == delay:
                H[self.place_index[a.place], self.transition_index[a.transition]] += a.weight
        return H

    @cached_property
    def H1(self) -> np.ndarray:
        return self._production(1)

    @cached_property
    def H0(self) -> np.ndarray:
        return self._production(0)

    @property
    def H(self) -> np.ndarray:
        return self.H1 + self.H0

    @cached_property
    def D(self) -> np.ndarray:
        """Synchronization matrix, ``D[q, p] = a_p`` if ``p`` feeds ``q`` else ε."""
        D = np.full((len(self.transitions), len(self.places)), np.inf)
        for j, p in enumerate(self.places):
            for q in p.downstream:
                D[self.transition_index[q], j] = p.marking
        return D

    def inputs_of(self, q: str) -> list[int]:
        return [j for j, p in enumerate(self.places) if q in p.downstream]

    @cached_property
    def sources(self) -> tuple[str, ...]:
        return tuple(q for q in self.transitions if not self.inputs_of(q))

    @cached_property
    def has_zero_delay(self) -> bool:
        return any(a.delay == 0 for a in self.arcs)

    @cached_property
    def firing_order(self) -> tuple[int, ...]:
        """Transitions sorted so delay-0 producers fire before their consumers."""
        deps: dict[int, set[int]] = {i: set() for i in range(len(self.transitions))}
        for a in self.arcs:
            if a.delay != 0:
                continue
            src = self.transition_index[a.transition]
            for q in self.place(a.place).downstream:
                deps[self.transition_index[q]].add(src)
        order, state = [], {}

        def visit(u, trail):
            if state.get(u) == 2:
                return
            if state.get(u) == 1:
                names = [self.transitions[i] for i in trail[trail.index(u):]]
                raise NetStructureError(f"cycle of delay-0 arcs through {names}")
            state[u] = 1
            for v in sorted(deps[u]):
                visit(v, trail + [v])
            state[u] = 2
            order.append(u)

        for u in range(len(self.transitions)):
            visit(u, [u])
        return tuple(order)


@dataclass
class NetState:
    P: np.ndarray
    Q: np.ndarray
    k: int = 0

    @classmethod
    def zero(cls, net: PetriNet) -> "NetState":
        return cls(np.zeros(len(net.places)), np.zeros(len(net.transitions)), 0)


@dataclass(frozen=True)
class DeterminismReport:
    deterministic: bool
    offending: tuple[str, ...] = field(default_factory=tuple)

    def __bool__(self):
        return self.deterministic


def validate_deterministic(net: PetriNet) -> DeterminismReport:
    """True iff no place feeds more than one transition."""
    bad = tuple(p.name for p in net.places if len(p.downstream) > 1)
    return DeterminismReport(not bad, bad)


def _require_deterministic(net: PetriNet) -> None:
    rep = validate_deterministic(net)
    if not rep:
        raise NondeterministicNet(f"places with several downstream transitions: {', '.join(rep.offending)}")


def _source_values(net: PetriNet, inputs: Mapping[str, float] | None) -> dict[int, float]:
    inputs = inputs or {}
    unknown = set(inputs) - set(net.sources)
    if unknown:
        raise NetStructureError(f"inputs given for non-source transitions {sorted(unknown)}")
    return {net.transition_index[q]: float(inputs.get(q, np.inf)) for q in net.sources}


def step(net: PetriNet, state: NetState, inputs: Mapping[str, float] | None = None) -> NetState:
    """One tick of the deterministic dynamics.

    Source transitions (no input place) fire ``inputs[name]`` cumulated
    times, or ε when absent.
    """
    _require_deterministic(net)
    src = _source_values(net, inputs)
    Q_old = np.asarray(state.Q, dtype=float)
    if not net.has_zero_delay and not src:
        # the plain block form [[0, H], [D, ε]]
        P_new = std_matvec(net.H1, Q_old)
        Q_new = minplus_matvec(net.D, P_new)
        return NetState(P_new, Q_new, state.k + 1)
    base = std_matvec(net.H1, Q_old)
    Q_new = np.full(len(net.transitions), np.inf)
    H0 = net.H0
    D = net.D
    for qi in net.firing_order:
        if qi in src:
            Q_new[qi] = src[qi]
            continue
        ins = np.flatnonzero(np.isfinite(D[qi]))
        vals = []
        for j in ins:
            nz = np.flatnonzero(H0[j])
            p = base[j] + (float(H0[j, nz] @ Q_new[nz]) if nz.size else 0.0)
            vals.append(D[qi, j] + p)
        Q_new[qi] = min(vals)
    P_new = base + std_matvec(H0, Q_new) if H0.any() else base
    return NetState(P_new, Q_new, state.k + 1)


def simulate(net: PetriNet, K: int, state: NetState | None = None,
             inputs: Sequence[Mapping[str, float]] | None = None) -> tuple[np.ndarray, np.ndarray]:
    """Run ``K`` steps; returns ``(P, Q)`` with ``K + 1`` rows each."""
    s = NetState.zero(net) if state is None else state
    Ps, Qs = [np.asarray(s.P, dtype=float)], [np.asarray(s.Q, dtype=float)]
    for k in range(K):
        s = step(net, s, None if inputs is None else inputs[k])
        Ps.append(s.P)
        Qs.append(s.Q)
    return np.stack(Ps), np.stack(Qs)


def dynamic_matrix(net: PetriNet) -> HybridMatrix:
    """``[[0, H], [D, ε]]`` with place rows standard and transition rows minplus."""
    if net.has_zero_delay:
        raise NetStructureError("the block form needs delay-1 arcs only")
    pk = (STD,) * len(net.places)
    qk = (MP,) * len(net.transitions)
    Hm = HybridMatrix(net.H1, pk, qk)
    Dm = HybridMatrix(net.D, qk, pk)
    return block([[None, Hm], [Dm, None]], [pk, qk], [pk, qk])


def step_block(net: PetriNet, state: NetState) -> NetState:
    """Same as :func:`step` through two ⊠ applications of :func:`dynamic_matrix`."""
    _require_deterministic(net)
    M = dynamic_matrix(net)
    nP = len(net.places)
    z = htimes_vec(M, np.concatenate([state.P, state.Q]))
    P_new = z[:nP]
    Q_new = htimes_vec(M, np.concatenate([P_new, state.Q]))[nP:]
    return NetState(P_new, Q_new, state.k + 1)


# ---------------------------------------------------------------------------
# eliminated recursions


@dataclass(frozen=True)
class Recursion:
    """``v -> next(v)`` on transitions (``Q``) or places (``P``)."""

    net: PetriNet
    on: str

    @property
    def stages(self) -> tuple[HybridMatrix, HybridMatrix]:
        """The recursion as two hybrid stages (standard then minplus, or the reverse)."""
        net = self.net
        pk = (STD,) * len(net.places)
        qk = (MP,) * len(net.transitions)
        if self.on == "Q":
            return (HybridMatrix(net.H1, pk, qk), HybridMatrix(net.D, qk, pk))
        return (HybridMatrix(net.D, qk, pk), HybridMatrix(net.H1, pk, qk))

    def __call__(self, v, inputs=None):
        if self.on == "Q":
            return step(self.net, NetState(np.zeros(len(self.net.places)), np.asarray(v, dtype=float)), inputs).Q
        net = self.net
        if net.sources:
            src = _source_values(net, inputs)
        Q = minplus_matvec(net.D, np.asarray(v, dtype=float))
        if net.sources:
            for qi, val in src.items():
                Q[qi] = val
        return std_matvec(net.H1, Q)


def eliminate_places(net: PetriNet) -> Recursion:
    """``Q^{k+1} = D ⊗ (H Q^k)``."""
    _require_deterministic(net)
    return Recursion(net, "Q")


def eliminate_transitions(net: PetriNet) -> Recursion:
    """``P^{k+1} = H (D ⊗ P^k)``; needs delay-1 arcs only."""
    _require_deterministic(net)
    if net.has_zero_delay:
        raise NetStructureError("place-only recursion needs delay-1 arcs only")
    return Recursion(net, "P")


def is_event_graph(net: PetriNet) -> bool:
    """Unit weights, delay 1, one upstream arc and one downstream transition per place."""
    up: dict[str, int] = {p.name: 0 for p in net.places}
    for a in net.arcs:
        if a.weight != 1 or a.delay != 1:
            return False
        up[a.place] += 1
    return all(up[p.name] == 1 and len(p.downstream) == 1 for p in net.places)


def event_graph_matrix(net: PetriNet) -> np.ndarray:
    """``A[q', q] = a_p`` for the place ``p`` between ``q`` and ``q'``."""
    if not is_event_graph(net):
        raise NetStructureError("not an event graph")
    n = len(net.transitions)
    A = np.full((n, n), np.inf)
    for a in net.arcs:
        p = net.place(a.place)
        i = net.transition_index[p.downstream[0]]
        j = net.transition_index[a.transition]
        A[i, j] = min(A[i, j], p.marking)
    return A


def constraint_residual(net: PetriNet, Q: np.ndarray) -> np.ndarray:
    """Residuals ``r[k-1, q]`` of the firing constraints for ``k = 1..K``.

    ``r = min_{p -> q} [a_p + Σ_{q'} m_{pq'} q'^{k-d} - Σ_{q'' ∈ p^out} q''^k]``
    where ``d`` is the arc delay.  Transitions without input places get 0.
    A valid trajectory of a deterministic net has all residuals zero.
    """
    Q = np.asarray(Q, dtype=float)
    K = Q.shape[0] - 1
    avail = Q[:-1] @ net.H1.T + Q[1:] @ net.H0.T + net.markings
    res = np.full((K, len(net.transitions)), np.inf)
    for j, p in enumerate(net.places):
        if not p.downstream:
            continue
        consumed = sum(Q[1:, net.transition_index[q]] for q in p.downstream)
        slack = avail[:, j] - consumed
        for q in p.downstream:
            qi = net.transition_index[q]
            res[:, qi] = np.minimum(res[:, qi], slack)
    res[np.isinf(res)] = 0.0
    return res


# ---------------------------------------------------------------------------
# conflict-resolution rewrites


def _conflict(net: PetriNet, place: str) -> Place:
    p = net.place(place)
    if len(p.downstream) < 2:
        raise NetStructureError(f"place {place!r} has no conflict to resolve")
    if len(p.downstream) > 2:
        raise NetStructureError(f"place {place!r} has {len(p.downstream)} downstream transitions; only two-way conflicts are supported")
    return p


def _split(net: PetriNet, p: Place, new_places: list[Place], new_arcs: list[Arc]) -> PetriNet:
    places = []
    for q in net.places:
        if q.name == p.name:
            places.extend(new_places)
        else:
            places.append(q)
    arcs = [a for a in net.arcs if a.place != p.name] + new_arcs
    return PetriNet(tuple(places), net.transitions, tuple(arcs))


def build_priority_resolution(net: PetriNet, place: str, priority: Sequence[str]) -> PetriNet:
    """Serve ``priority[0]`` first, the other transition gets what is left.

    The place is duplicated, one copy per consumer, each holding the full
    marking and all production arcs.  The high-priority copy subtracts the
    low-priority firings of the previous step; the low-priority copy
    subtracts the high-priority firings of the current step.
    """
    p = _conflict(net, place)
    hi, lo = priority
    if {hi, lo} != set(p.downstream):
        raise NetStructureError(f"priority order must list {sorted(p.downstream)}")
    inflow = [a for a in net.arcs if a.place == p.name]
    ph, pl = f"{p.name}[{hi}]", f"{p.name}[{lo}]"
    arcs = []
    for name in (ph, pl):
        arcs += [Arc(a.transition, name, a.weight, a.delay) for a in inflow]
    arcs += [Arc(lo, ph, -1.0, 1), Arc(hi, pl, -1.0, 0)]
    return _split(net, p, [Place(ph, p.marking, (hi,)), Place(pl, p.marking, (lo,))], arcs)


def build_routing_resolution(net: PetriNet, place: str, fractions: Mapping[str, float],
                             markings: Mapping[str, float] | None = None) -> PetriNet:
    """Route fixed fractions of the incoming tokens to each consumer.

    The initial marking goes by default entirely to the first listed
    transition.
    """
    p = _conflict(net, place)
    if set(fractions) != set(p.downstream):
        raise NetStructureError(f"fractions must cover exactly {sorted(p.downstream)}")
    if abs(sum(fractions.values()) - 1.0) > 1e-12:
        raise ValueError("routing fractions must sum to 1")
    names = list(fractions)
    if markings is None:
        markings = {q: (p.marking if i == 0 else 0.0) for i, q in enumerate(names)}
    elif abs(sum(markings.values()) - p.marking) > 1e-12:
        raise ValueError("split markings must add up to the original marking")
    inflow = [a for a in net.arcs if a.place == p.name]
    new_places, arcs = [], []
    for q in names:
        name = f"{p.name}[{q}]"
        new_places.append(Place(name, float(markings.get(q, 0.0)), (q,)))
        arcs += [Arc(a.transition, name, a.weight * fractions[q], a.delay) for a in inflow]
    return _split(net, p, new_places, arcs)


def homog_net(a: float = 1.0) -> PetriNet:
    """Two sources ``q1, q2`` filling one place that ``q3`` and ``q4`` both consume."""
    return PetriNet(
        (Place("p", a, ("q3", "q4")),),
        ("q1", "q2", "q3", "q4"),
        (Arc("q1", "p"), Arc("q2", "p")),
    )


# ---------------------------------------------------------------------------
# JSON description
#
# {"transitions": ["q1", ...],
#  "places": [{"id": "p", "marking": 1.0, "downstream": ["q3"]}, ...],
#  "arcs": [{"from": "q1", "to": "p", "weight": 1.0, "delay": 1}, ...]}


def net_from_dict(d: Mapping) -> PetriNet:
    try:
        places = []
        for p in d["places"]:
            ds = p.get("downstream", [])
            ds = (ds,) if isinstance(ds, str) else tuple(ds)
            places.append(Place(str(p["id"]), float(p.get("marking", 0.0)), ds))
        arcs = [Arc(str(a["from"]), str(a["to"]), float(a.get("weight", 1.0)), int(a.get("delay", 1)))
                for a in d.get("arcs", [])]
        transitions = tuple(str(q) for q in d["transitions"])
    except (KeyError, TypeError, ValueError) as exc:
        raise ValueError(f"malformed net description: {exc}") from exc
    return PetriNet(tuple(places), transitions, tuple(arcs))


def net_to_dict(net: PetriNet) -> dict:
    return {
        "transitions": list(net.transitions),
        "places": [{"id": p.name, "marking": p.marking, "downstream": list(p.downstream)} for p in net.places],
        "arcs": [{"from": a.transition, "to": a.place, "weight": a.weight, "delay": a.delay} for a in net.arcs],
    }


def load_net(path) -> PetriNet:
    with open(path) as fh:
        try:
            data = json.load(fh)
        except json.JSONDecodeError as exc:
            raise ValueError(f"{path}: {exc}") from exc
    return net_from_dict(data)


def dump_net(net: PetriNet, path) -> None:
    with open(path, "w") as fh:
        json.dump(net_to_dict(net), fh, indent=2)
        fh.write("\n")
