"""Exchange value, efficiency and motivation; multi-party chain search with
transformation and deferred payment; self-sustaining cycle detection.
"""
from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field
from typing import Any, Iterable, Iterator, Mapping, Sequence

from harmonia.calculus import assess
from harmonia.errors import InvalidChain, InvalidSpec, KeyCollision, KeyNotFound
from harmonia.model import Composition
from harmonia.system import System
from harmonia.transformation import TransformKind, TransformSpec, enrich, simplify

TOLERANCE = 1e-12


class ActionKind(str, enum.Enum):
    TRADE = "trade"
    TRANSFORM = "transform"
    DEFERRED = "deferred_obligation"
    SETTLE = "settle"


@dataclass(frozen=True)
class ExchangeAction:
    kind: ActionKind
    actor: str
    counterparty: str | None = None
    give: tuple[str, ...] = ()
    take: tuple[str, ...] = ()
    spec: TransformSpec | None = None
    produced: tuple[str, ...] = ()
    obligation: str | None = None

    def to_data(self) -> dict[str, Any]:
        d: dict[str, Any] = {"kind": self.kind.value, "actor": self.actor}
        if self.counterparty is not None:
            d["counterparty"] = self.counterparty
        if self.give:
            d["give"] = list(self.give)
        if self.take:
            d["take"] = list(self.take)
        if self.spec is not None:
            d["spec"] = self.spec.to_data()
            d["produced"] = list(self.produced)
        if self.obligation is not None:
            d["obligation"] = self.obligation
        return d

    def __str__(self):
        if self.kind is ActionKind.TRADE:
            return f"{self.actor} gives {self.give[0]} to {self.counterparty} for {self.take[0]}"
        if self.kind is ActionKind.TRANSFORM:
            return f"{self.actor} transforms {self.take[0]} -> {', '.join(self.produced)}"
        if self.kind is ActionKind.DEFERRED:
            return (f"{self.actor} takes {self.take[0]} from {self.counterparty} "
                    f"owing {self.obligation}")
        return f"{self.actor} settles {self.obligation} with {self.give[0]} to {self.counterparty}"


@dataclass(frozen=True)
class Chain:
    actions: tuple[ExchangeAction, ...]
    returns: Mapping[str, float]

    @property
    def parties(self) -> frozenset[str]:
        out = set()
        for a in self.actions:
            out.add(a.actor)
            if a.counterparty is not None:
                out.add(a.counterparty)
        return frozenset(out)

    def count(self, kind: ActionKind) -> int:
        return sum(1 for a in self.actions if a.kind is kind)

    def to_data(self) -> dict[str, Any]:
        return {"actions": [a.to_data() for a in self.actions],
                "parties": sorted(self.parties),
                "returns": {k: self.returns[k] for k in sorted(self.returns)}}


@dataclass(frozen=True)
class ExchangeOutcome:
    xv: float
    efficiency: float
    motivation: Mapping[str, float]
    after: tuple[System, ...] = field(default=(), compare=False)


def party_return(party: str, before_state: float, after_state: float) -> float:
    return after_state - before_state


def exchange_value(returns: Iterable[float]) -> float:
    """Total realised value divided by the number of parties."""
    rs = list(returns)
    if len(rs) < 2:
        raise InvalidChain("an exchange needs at least two parties")
    return math.fsum(rs) / len(rs)


def exchange_efficiency(outcome_xv: float, n_parties: int) -> float:
    if n_parties < 2:
        raise InvalidChain("an exchange needs at least two parties")
    return outcome_xv / n_parties


def direct_exchange(s1: System, s2: System, give1: Iterable[str], give2: Iterable[str]) -> ExchangeOutcome:
    give1, give2 = tuple(give1), tuple(give2)
    moved1 = [s1.holding(cid) for cid in give1]
    moved2 = [s2.holding(cid) for cid in give2]
    a1 = s1.giving(give1).receiving(moved2)
    a2 = s2.giving(give2).receiving(moved1)
    r1 = party_return(s1.id, s1.state, a1.state)
    r2 = party_return(s2.id, s2.state, a2.state)
    xv = exchange_value([r1, r2])
    return ExchangeOutcome(xv, exchange_efficiency(xv, 2), {s1.id: r1, s2.id: r2}, (a1, a2))


def pareto_acceptable(returns: Iterable[float]) -> bool:
    rs = list(returns)
    return all(r >= -TOLERANCE for r in rs) and any(r > TOLERANCE for r in rs)


# -- chain search ----------------------------------------------------------

def transform_outputs(c: Composition, spec: TransformSpec) -> list[Composition]:
    if spec.kind is TransformKind.SIMPLIFY:
        return simplify(c, spec)
    return [enrich([c], spec)]


class _World:
    """Mutable-free snapshot machinery for the search: holdings are id frozensets."""

    def __init__(self, systems: Sequence[System]):
        self.systems = {s.id: s for s in systems}
        self.order = [s.id for s in systems]
        self.registry: dict[str, Composition] = {}
        for s in systems:
            for c in s.holdings:
                self.registry[c.id] = c
        self._state_cache: dict[tuple[str, frozenset[str]], float] = {}
        self._transform_cache: dict[tuple[str, TransformSpec], tuple[str, ...] | None] = {}
        self.transforms = [tuple(s.transforms) for s in systems]
        self._sorted: dict[frozenset[str], list[str]] = {}
        self.initial = tuple(frozenset(c.id for c in s.holdings) for s in systems)
        self.initial_states = [self.state(i, h) for i, h in enumerate(self.initial)]

    def state(self, i: int, holding: frozenset[str]) -> float:
        sid = self.order[i]
        key = (sid, holding)
        if key not in self._state_cache:
            s = self.systems[sid]
            comps = [self.registry[cid] for cid in sorted(holding)]
            self._state_cache[key] = assess(comps, s.expression, s.context).state
        return self._state_cache[key]

    def sorted_ids(self, holding: frozenset[str]) -> list[str]:
        out = self._sorted.get(holding)
        if out is None:
            out = self._sorted[holding] = sorted(holding)
        return out

    def transform(self, cid: str, spec: TransformSpec) -> tuple[str, ...] | None:
        key = (cid, spec)
        if key not in self._transform_cache:
            try:
                out = transform_outputs(self.registry[cid], spec)
            except (KeyNotFound, KeyCollision, InvalidSpec):
                self._transform_cache[key] = None
            else:
                for c in out:
                    self.registry.setdefault(c.id, c)
                self._transform_cache[key] = tuple(c.id for c in out)
        return self._transform_cache[key]

    def returns(self, holdings: Sequence[frozenset[str]]) -> list[float]:
        return [party_return(self.order[i], self.initial_states[i], self.state(i, h))
                for i, h in enumerate(holdings)]


def _moves(world: _World, holdings: tuple[frozenset[str], ...],
           debts: tuple[tuple[int, int, int], ...], next_obligation: int) -> Iterator[tuple]:
    """Successor states in fixed order: deferrals, settlements, transforms, trades.

    Moves are plain tuples ``(kind, i, j, give, take, spec, produced, obligation)``;
    ``_action`` turns the ones on the final path into ``ExchangeAction``.
    """
    n = len(holdings)
    srt = world.sorted_ids
    owing = {(d, c) for d, c, _ in debts}
    for i in range(n):
        for j in range(n):
            if i == j or (i, j) in owing:
                continue
            for t in srt(holdings[j]):
                hs = list(holdings)
                hs[j] = hs[j] - {t}
                hs[i] = hs[i] | {t}
                yield ((ActionKind.DEFERRED, i, j, (), (t,), None, (), next_obligation),
                       tuple(hs), debts + ((i, j, next_obligation),))
    for k, (i, j, ob) in enumerate(debts):
        for g in srt(holdings[i]):
            hs = list(holdings)
            hs[i] = hs[i] - {g}
            hs[j] = hs[j] | {g}
            yield ((ActionKind.SETTLE, i, j, (g,), (), None, (), ob),
                   tuple(hs), debts[:k] + debts[k + 1:])
    for i in range(n):
        for spec in world.transforms[i]:
            for cid in srt(holdings[i]):
                out = world.transform(cid, spec)
                if out is None or any(o in h for o in out for h in holdings):
                    continue
                hs = list(holdings)
                hs[i] = (hs[i] - {cid}) | set(out)
                yield ((ActionKind.TRANSFORM, i, None, (), (cid,), spec, out, None),
                       tuple(hs), debts)
    for i in range(n):
        for j in range(i + 1, n):
            for g in srt(holdings[i]):
                for t in srt(holdings[j]):
                    hs = list(holdings)
                    hs[i] = (hs[i] - {g}) | {t}
                    hs[j] = (hs[j] - {t}) | {g}
                    yield ((ActionKind.TRADE, i, j, (g,), (t,), None, (), None),
                           tuple(hs), debts)


def _action(world: _World, move: tuple) -> ExchangeAction:
    kind, i, j, give, take, spec, produced, ob = move
    return ExchangeAction(kind, world.order[i], None if j is None else world.order[j],
                          give, take, spec, produced, None if ob is None else f"o{ob}")


def _accepts(world: _World, holdings: tuple[frozenset[str], ...], debts) -> list[float] | None:
    if debts:
        return None
    changed = sum(1 for h, h0 in zip(holdings, world.initial) if h != h0)
    if changed < 2:
        return None
    rs = world.returns(holdings)
    return rs if pareto_acceptable(rs) else None


def find_chain(systems: Sequence[System], max_depth: int = 6) -> Chain | None:
    """Shortest Pareto-acceptable exchange chain, by iterative deepening.

    A chain is accepted when no party loses, at least one gains, at least
    two systems end with different holdings, and every deferred obligation
    has been settled. Among chains of equal length the first in action
    order wins, so the result is a pure function of the input.
    """
    if max_depth < 1:
        raise ValueError("max_depth must be >= 1")
    if len(systems) < 2:
        return None
    world = _World(systems)

    for limit in range(1, max_depth + 1):
        seen: dict[tuple, int] = {}
        path: list[tuple] = []

        def dfs(holdings, debts, remaining, next_ob):
            if path:
                rs = _accepts(world, holdings, debts)
                if rs is not None:
                    return rs
            # every outstanding obligation needs a settlement step
            if remaining == 0 or len(debts) > remaining:
                return None
            left = remaining - 1
            for move, hs, ds in _moves(world, holdings, debts, next_ob):
                key = (hs, tuple(sorted((i, j) for i, j, _ in ds)) if ds else ())
                if seen.get(key, -1) >= left:
                    continue
                seen[key] = left
                path.append(move)
                found = dfs(hs, ds, left, next_ob + (move[0] is ActionKind.DEFERRED))
                if found is not None:
                    return found
                path.pop()
            return None

        seen[(world.initial, ())] = limit
        rs = dfs(world.initial, (), limit, 1)
        if rs is not None:
            actions = tuple(_action(world, m) for m in path)
            return Chain(actions, {sid: r for sid, r in zip(world.order, rs)})
    return None


def execute_chain(systems: Sequence[System], chain: Chain) -> list[System]:
    """Carry out a chain's actions, returning systems in input order."""
    by_id = {s.id: s for s in systems}
    debts: dict[str, tuple[str, str]] = {}
    for a in chain.actions:
        actor = by_id[a.actor]
        if a.kind is ActionKind.TRADE:
            other = by_id[a.counterparty]
            g, t = actor.holding(a.give[0]), other.holding(a.take[0])
            by_id[a.actor] = actor.giving([g.id]).receiving([t])
            by_id[a.counterparty] = other.giving([t.id]).receiving([g])
        elif a.kind is ActionKind.TRANSFORM:
            produced = transform_outputs(actor.holding(a.take[0]), a.spec)
            by_id[a.actor] = actor.giving([a.take[0]]).receiving(produced)
        elif a.kind is ActionKind.DEFERRED:
            other = by_id[a.counterparty]
            t = other.holding(a.take[0])
            by_id[a.counterparty] = other.giving([t.id])
            by_id[a.actor] = actor.receiving([t])
            debts[a.obligation] = (a.actor, a.counterparty)
        else:
            if debts.pop(a.obligation, None) != (a.actor, a.counterparty):
                raise InvalidChain(f"settlement of unknown obligation {a.obligation!r}")
            other = by_id[a.counterparty]
            g = actor.holding(a.give[0])
            by_id[a.actor] = actor.giving([g.id])
            by_id[a.counterparty] = other.receiving([g])
    if debts:
        raise InvalidChain(f"unsettled obligations: {sorted(debts)}")
    return [by_id[s.id] for s in systems]


def chain_outcome(systems: Sequence[System], chain: Chain) -> ExchangeOutcome:
    after = execute_chain(systems, chain)
    parties = [s.id for s in systems if s.id in chain.parties]
    returns = {s.id: party_return(s.id, s.state, a.state)
               for s, a in zip(systems, after) if s.id in chain.parties}
    xv = exchange_value(returns[p] for p in parties)
    return ExchangeOutcome(xv, exchange_efficiency(xv, len(parties)), returns, tuple(after))


# -- cycles ----------------------------------------------------------------

@dataclass(frozen=True)
class TradeEdge:
    giver: str
    receiver: str
    composition: str
    giver_delta: float = 0.0
    receiver_delta: float = 0.0


@dataclass(frozen=True)
class Cycle:
    edges: tuple[TradeEdge, ...]
    returns: Mapping[str, float]
    self_sustaining: bool

    @property
    def members(self) -> tuple[str, ...]:
        return tuple(e.giver for e in self.edges)

    def to_data(self) -> dict[str, Any]:
        return {"members": list(self.members),
                "compositions": [e.composition for e in self.edges],
                "returns": {k: self.returns[k] for k in sorted(self.returns)},
                "self_sustaining": self.self_sustaining}


def possible_trades(systems: Sequence[System]) -> list[TradeEdge]:
    """Edges giver -> receiver for every composition that would raise the receiver's state."""
    edges = []
    for giver in systems:
        for c in giver.holdings:
            for receiver in systems:
                if receiver.id == giver.id:
                    continue
                gain = receiver.receiving([c]).state - receiver.state
                if gain > TOLERANCE:
                    loss = giver.giving([c.id]).state - giver.state
                    edges.append(TradeEdge(giver.id, receiver.id, c.id, loss, gain))
    return edges


def cycle_returns(systems: Sequence[System], edges: Sequence[TradeEdge]) -> dict[str, float]:
    """Exact returns when every member gives its outgoing and receives its incoming composition."""
    by_id = {s.id: s for s in systems}
    out = {}
    for k, e in enumerate(edges):
        incoming = edges[k - 1]
        s = by_id[e.giver]
        after = s.giving([e.composition]).receiving([by_id[incoming.giver].holding(incoming.composition)])
        out[e.giver] = party_return(e.giver, s.state, after.state)
    return out


def _edge_sum_returns(edges: Sequence[TradeEdge]) -> dict[str, float]:
    out = {}
    for k, e in enumerate(edges):
        out[e.giver] = e.giver_delta + edges[k - 1].receiver_delta
    return out


def detect_cycles(edges: Iterable[TradeEdge], max_length: int | None = None,
                  systems: Sequence[System] | None = None) -> list[Cycle]:
    """All simple directed cycles up to ``max_length`` members.

    Each cycle is rotated to start at its smallest member. Returns come from
    ``systems`` when given, otherwise from the deltas carried on the edges.
    """
    adj: dict[str, list[TradeEdge]] = {}
    nodes = set()
    for e in edges:
        if e.giver == e.receiver:
            continue
        adj.setdefault(e.giver, []).append(e)
        nodes.update((e.giver, e.receiver))
    for out in adj.values():
        out.sort(key=lambda e: (e.receiver, e.composition))
    limit = max_length or len(nodes)
    found: list[tuple[TradeEdge, ...]] = []

    def extend(start, path, visited):
        node = path[-1].receiver if path else start
        for e in adj.get(node, ()):
            if e.receiver == start:
                found.append(tuple(path) + (e,))
            elif e.receiver > start and e.receiver not in visited and len(path) + 1 < limit:
                visited.add(e.receiver)
                path.append(e)
                extend(start, path, visited)
                path.pop()
                visited.discard(e.receiver)

    for start in sorted(nodes):
        extend(start, [], {start})

    cycles = []
    for cyc in found:
        rs = cycle_returns(systems, cyc) if systems is not None else _edge_sum_returns(cyc)
        ok = all(r >= -TOLERANCE for r in rs.values())
        cycles.append(Cycle(cyc, rs, ok))
    return cycles
