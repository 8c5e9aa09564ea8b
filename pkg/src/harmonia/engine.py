"""Deterministic tick loop and line-delimited JSON trace.

Per tick: apply scheduled events, gather the tick's observations, run each
system's priming loop and logic rules, re-evaluate every system, respond to
state transitions, then search for an exchange chain. Records are emitted
in system-id order. Records describing the state before the first tick
carry ``tick = -1``.
"""
from __future__ import annotations

import json
import random
from dataclasses import dataclass, field, replace
from typing import Any, Callable, Iterator

from harmonia.calculus import StateHistory, harmonic_status
from harmonia.exchange import (ActionKind, chain_outcome, detect_cycles, find_chain,
                               possible_trades)
from harmonia.helix import eval_and, eval_or
from harmonia.model import (CharacteristicModel, Composition, Environment, Expression,
                            classify_composition, model_from_data)
from harmonia.scenario import Scenario, SystemSpec
from harmonia.sensory import Observation, PrimingLoop, Source, virtual_observe
from harmonia.system import System
from harmonia.transformation import (TOLERANCE, PatternMemory, Proposal, ProposalKind,
                                     Transition, apply_proposal, record_application, respond)

INITIAL_TICK = -1


@dataclass(frozen=True)
class TraceRecord:
    tick: int
    kind: str
    system: str | None
    payload: dict[str, Any]
    source: str | None = None

    def to_json(self) -> str:
        d = {"tick": self.tick, "kind": self.kind, "system": self.system, "payload": self.payload}
        if self.source is not None:
            d["source"] = self.source
        return json.dumps(d, sort_keys=True, separators=(",", ":"))

    @classmethod
    def from_json(cls, line: str) -> TraceRecord:
        d = json.loads(line)
        return cls(d["tick"], d["kind"], d["system"], d["payload"], d.get("source"))


@dataclass
class _Live:
    spec: SystemSpec
    system: System
    memory: PatternMemory
    history: StateHistory = field(default_factory=StateHistory)
    loop: PrimingLoop | None = None
    last_state: float = 0.0
    last_match: dict[str, tuple[int, float]] = field(default_factory=dict)


@dataclass
class RunResult:
    systems: list[System]
    memories: dict[str, PatternMemory]
    histories: dict[str, StateHistory]
    resources: dict[str, dict[str, float]]
    records: list[TraceRecord]

    def trace_lines(self) -> list[str]:
        return [r.to_json() for r in self.records]

    def final_state(self) -> dict[str, Any]:
        return {
            "systems": [{
                "id": s.id,
                "expression": {"id": s.expression.id, "model": s.expression.model.to_data()},
                "compositions": [{"id": c.id, "model": c.model.to_data()} for c in s.holdings],
                "pattern_memory": self.memories[s.id].to_data(),
                "state": s.state,
            } for s in self.systems],
            "resources": self.resources,
        }


class Engine:
    def __init__(self, scenario: Scenario, seed: int | None = None, ticks: int | None = None):
        self.scenario = scenario
        self.seed = scenario.seed if seed is None else seed
        self.ticks = scenario.ticks if ticks is None else ticks
        self.rng = random.Random(self.seed)
        self.live: list[_Live] = []
        for spec in sorted(scenario.systems, key=lambda s: s.system.id):
            loop = None
            if spec.sensory is not None and spec.memory:
                loop = PrimingLoop(spec.memory, spec.system.context, spec.sensory)
            self.live.append(_Live(spec, spec.system, spec.pattern_memory, loop=loop))
        self.resources = {eid: dict(env.resources) for eid, env in scenario.environments.items()}
        self.records: list[TraceRecord] = []
        # systems for which the last chain search came back empty
        self._stalled: list[System] | None = None

    # -- helpers -----------------------------------------------------------

    def _rec(self, tick, kind, system, payload, source=None) -> TraceRecord:
        r = TraceRecord(tick, kind, system, payload, source)
        self.records.append(r)
        return r

    def _resources_for(self, system: System) -> dict[str, float] | None:
        return self.resources.get(system.environment) if system.environment else None

    def _state_records(self, tick: int, lv: _Live) -> Iterator[TraceRecord]:
        s = lv.system
        a = s.assess()
        env = Environment(s.environment or s.id, s.holdings)
        classes = {c.id: classify_composition(c, env, s.expression, s.context).value
                   for c in s.holdings}
        yield self._rec(tick, "selection", s.id, {
            "values": a.values, "significances": a.significances, "classes": classes,
            "selected": list(a.selected)})
        yield self._rec(tick, "state", s.id, {
            "state": a.state, "expression": s.expression.id, "context": s.context.id,
            "holdings": [c.id for c in s.holdings]})

    def _observations(self, tick: int) -> dict[str, list[Observation]]:
        window: dict[str, list[Observation]] = {lv.system.id: [] for lv in self.live}
        for sid, obs in self.scenario.observations:
            if obs.tick == tick and sid in window:
                if obs.source is Source.VIRTUAL and not self.scenario.virtual:
                    continue
                window[sid].append(obs)
        for st in self.scenario.streams:
            if tick < st.start or (st.stop is not None and tick > st.stop):
                continue
            if (tick - st.start) % st.every:
                continue
            if st.source is Source.VIRTUAL and not self.scenario.virtual:
                continue
            lv = next(lv for lv in self.live if lv.system.id == st.system)
            pattern = next(p for p in lv.spec.memory if p.id == st.pattern)
            if st.source is Source.VIRTUAL:
                obs = virtual_observe(pattern, tick)
            else:
                obs = Observation(tick, pattern.model, Source.REAL)
            if st.noise > 0:
                obs = replace(obs, model=CharacteristicModel(tuple(
                    replace(ch, value=ch.value + self.rng.gauss(0.0, st.noise))
                    for ch in obs.model)))
            window[st.system].append(obs)
        return window

    def _apply_event(self, tick: int, lv: _Live, ev) -> None:
        s = lv.system
        if ev.kind == "set_expression":
            lv.system = replace(s, expression=Expression(s.expression.id,
                                                         model_from_data(ev.data["model"])))
        elif ev.kind == "add_composition":
            lv.system = s.receiving([Composition(str(ev.data["id"]),
                                                 model_from_data(ev.data.get("model")), s.id)])
        elif ev.kind == "remove_composition":
            lv.system = s.giving([str(ev.data["id"])])
        self._rec(tick, "event", s.id, {k: v for k, v in ev.data.items()
                                        if k not in ("tick", "system")})

    def _sensory(self, tick: int, lv: _Live, window: list[Observation]) -> None:
        sid = lv.system.id
        if lv.loop is not None:
            primed, expansions = lv.loop.step(tick, window)
            self._rec(tick, "priming", sid, {
                "stubs": [s.pattern_id for s in primed], "frequency": lv.loop.frequency,
                "observations": len(window)})
            for e in expansions:
                lv.last_match[e.pattern_id] = (tick, e.score)
                self._rec(tick, "expansion", sid, {
                    "pattern": e.pattern_id, "score": e.score, "reprime": list(e.request)},
                    source=e.source.value)
        for rule in lv.spec.logic:
            scores = []
            for pid in rule.operands:
                hit = lv.last_match.get(pid)
                present = hit is not None and tick - hit[0] <= rule.window
                scores.append(hit[1] if present else -1.0)
            if rule.op == "and":
                outcome, expanded = eval_and(scores, rule.inject)
            else:
                outcome, expanded = eval_or(scores)
            self._rec(tick, "logic", sid, {"rule": rule.id, "op": rule.op, "scores": scores,
                                           "outcome": outcome, "expanded": expanded})

    def _respond(self, tick: int, lv: _Live, before: float) -> None:
        s = lv.system
        now = s.state
        transition = Transition(before, now, s.context.id)
        resources = self._resources_for(s)
        proposals = respond(s, transition, s.policy, lv.memory, resources)
        best: Proposal | None = next(
            (p for p in proposals if p.spec is not None and p.predicted_delta > TOLERANCE), None)
        if best is None:
            return
        lv.system = apply_proposal(s, best)
        after = lv.system.state
        if best.kind in (ProposalKind.ENRICH, ProposalKind.PATTERN) and resources is not None:
            for ch in best.spec.add:
                resources[ch.key] = resources.get(ch.key, 0.0) - 1.0
        lv.memory = record_application(lv.memory, s.context.id, s.expression.id, best.spec,
                                       now, after)
        self._rec(tick, "transform", s.id, {
            "proposal": best.to_data(), "hs_before": now, "hs_after": after,
            "candidates": len(proposals), "transition": [before, now]})

    def _exchange(self, tick: int) -> None:
        cfg = self.scenario.exchange
        if not cfg.enabled or tick % cfg.every:
            return
        systems = [lv.system for lv in self.live]
        for cyc in detect_cycles(possible_trades(systems), cfg.cycle_length, systems):
            self._rec(tick, "cycle", None, cyc.to_data())
        if systems == self._stalled:
            return
        chain = find_chain(systems, cfg.max_depth)
        if chain is None:
            self._stalled = systems
            return
        outcome = chain_outcome(systems, chain)
        for lv, s in zip(self.live, outcome.after):
            lv.system = s
        self._rec(tick, "exchange", None, {
            **chain.to_data(), "xv": outcome.xv, "efficiency": outcome.efficiency,
            "motivation": {k: outcome.motivation[k] for k in sorted(outcome.motivation)},
            "transforms": chain.count(ActionKind.TRANSFORM),
            "deferred": chain.count(ActionKind.DEFERRED)})

    # -- loop --------------------------------------------------------------

    def iter_records(self) -> Iterator[TraceRecord]:
        mark = 0

        def flush():
            nonlocal mark
            out = self.records[mark:]
            mark = len(self.records)
            return out

        for lv in self.live:
            list(self._state_records(INITIAL_TICK, lv))
            lv.last_state = lv.system.state
        yield from flush()

        for tick in range(self.ticks):
            by_system = {lv.system.id: lv for lv in self.live}
            for ev in sorted(self.scenario.events, key=lambda e: (e.system,)):
                if ev.tick == tick:
                    self._apply_event(tick, by_system[ev.system], ev)
            window = self._observations(tick)
            for lv in self.live:
                self._sensory(tick, lv, window[lv.system.id])
            for lv in self.live:
                list(self._state_records(tick, lv))
                a = lv.system.assess()
                lv.history.append(tick, list(a.values.values()), a.state)
            for lv in self.live:
                self._respond(tick, lv, lv.last_state)
            self._exchange(tick)
            for lv in self.live:
                lv.last_state = lv.system.state
            yield from flush()

        if self.ticks > 0:
            for lv in self.live:
                self._rec(self.ticks - 1, "status", lv.system.id, {
                    "interval": [0, self.ticks - 1],
                    "status": harmonic_status(lv.history, 0, self.ticks - 1)})
        for lv in self.live:
            if lv.memory.patterns:
                self._rec(max(self.ticks - 1, INITIAL_TICK), "memory", lv.system.id,
                          {"patterns": lv.memory.to_data()})
        yield from flush()

    def result(self) -> RunResult:
        return RunResult([lv.system for lv in self.live],
                         {lv.system.id: lv.memory for lv in self.live},
                         {lv.system.id: lv.history for lv in self.live},
                         self.resources, self.records)


def run(scenario: Scenario, seed: int | None = None, ticks: int | None = None,
        sink: Callable[[TraceRecord], None] | None = None) -> RunResult:
    """Run a scenario to completion. ``sink`` sees each record as soon as it exists."""
    engine = Engine(scenario, seed, ticks)
    for record in engine.iter_records():
        if sink is not None:
            sink(record)
    return engine.result()
