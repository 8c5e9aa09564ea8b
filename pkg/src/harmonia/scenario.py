"""Scenario documents: schema checks, parsing, loading.

Scenarios are YAML (JSON also parses). See docs/scenario.md for the schema.
"""
from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Mapping, Sequence

import yaml

from harmonia.errors import ParseError, ValidationError
from harmonia.model import (Composition, Context, Diagnostic, Environment, Expression,
                            check_context, check_model, context_from_data, model_from_data)
from harmonia.sensory import CycleConfig, MemoryPattern, Observation, Source, memory_from_data
from harmonia.system import Policy, System
from harmonia.transformation import PatternMemory, TransformSpec

SCHEMA_VERSION = 1
EVENT_KINDS = ("set_expression", "add_composition", "remove_composition")


@dataclass(frozen=True)
class LogicRule:
    id: str
    op: str
    operands: tuple[str, ...]
    inject: float = 0.0
    window: int = 0


@dataclass(frozen=True)
class Stream:
    """Seeded noisy replay of a memory pattern as observations."""

    system: str
    pattern: str
    every: int = 1
    start: int = 0
    stop: int | None = None
    noise: float = 0.0
    source: Source = Source.REAL


@dataclass(frozen=True)
class Event:
    tick: int
    system: str
    kind: str
    data: Mapping[str, Any]


@dataclass
class SystemSpec:
    system: System
    sensory: CycleConfig | None = None
    memory: list[MemoryPattern] = field(default_factory=list)
    pattern_memory: PatternMemory = field(default_factory=PatternMemory)
    logic: list[LogicRule] = field(default_factory=list)


@dataclass(frozen=True)
class ExchangeConfig:
    enabled: bool = False
    max_depth: int = 4
    cycle_length: int = 4
    every: int = 1


@dataclass
class Scenario:
    version: int
    seed: int
    ticks: int
    environments: dict[str, Environment]
    contexts: dict[str, Context]
    systems: list[SystemSpec]
    exchange: ExchangeConfig = field(default_factory=ExchangeConfig)
    observations: list[tuple[str, Observation]] = field(default_factory=list)
    streams: list[Stream] = field(default_factory=list)
    events: list[Event] = field(default_factory=list)
    virtual: bool = True
    name: str = "scenario"


# -- validation ------------------------------------------------------------

def _int_ge(x: Any, lo: int) -> bool:
    return isinstance(x, int) and not isinstance(x, bool) and x >= lo


def _pos(x: Any) -> bool:
    return isinstance(x, (int, float)) and not isinstance(x, bool) and math.isfinite(x) and x > 0


def _ids(items: Sequence[Any], path: str, what: str, out: list[Diagnostic]) -> list[str]:
    seen: list[str] = []
    for i, item in enumerate(items):
        if not isinstance(item, Mapping) or not item.get("id"):
            out.append(Diagnostic(f"{path}[{i}]", f"{what} needs an id"))
            continue
        cid = str(item["id"])
        if cid in seen:
            out.append(Diagnostic(f"{path}[{i}]", f"duplicate {what} id {cid!r}"))
        seen.append(cid)
    return seen


def _check_transform(data: Any, path: str) -> list[Diagnostic]:
    if not isinstance(data, Mapping):
        return [Diagnostic(path, "transform must be a mapping")]
    try:
        TransformSpec.from_data(data)
    except (ValueError, KeyError, TypeError) as exc:
        return [Diagnostic(path, f"bad transform spec: {exc}")]
    return []


def validate_document(doc: Any) -> list[Diagnostic]:
    """Every invariant violation in a raw scenario document, with its path."""
    if not isinstance(doc, Mapping):
        return [Diagnostic("$", "scenario must be a mapping")]
    out: list[Diagnostic] = []
    if doc.get("version", SCHEMA_VERSION) != SCHEMA_VERSION:
        out.append(Diagnostic("$.version", f"unsupported version {doc.get('version')!r}"))
    if not _int_ge(doc.get("ticks", 0), 0):
        out.append(Diagnostic("$.ticks", "ticks must be an integer >= 0"))
    if not isinstance(doc.get("seed", 0), int):
        out.append(Diagnostic("$.seed", "seed must be an integer"))

    envs = doc.get("environments") or []
    env_ids = _ids(envs, "$.environments", "environment", out)
    for i, env in enumerate(envs):
        for key, amount in ((env or {}).get("resources") or {}).items():
            if not (isinstance(amount, (int, float)) and amount >= 0):
                out.append(Diagnostic(f"$.environments[{i}].resources.{key}",
                                      "resource amounts must be >= 0"))

    contexts = doc.get("contexts") or []
    ctx_ids = _ids(contexts, "$.contexts", "context", out)
    for i, ctx in enumerate(contexts):
        out.extend(check_context(ctx, f"$.contexts[{i}]"))

    systems = doc.get("systems") or []
    if not systems:
        out.append(Diagnostic("$.systems", "at least one system is required"))
    sys_ids = _ids(systems, "$.systems", "system", out)
    comp_seen: dict[str, str] = {}
    memory_ids: dict[str, set[str]] = {}
    for i, s in enumerate(systems):
        p = f"$.systems[{i}]"
        if not isinstance(s, Mapping):
            continue
        if s.get("context") not in ctx_ids:
            out.append(Diagnostic(f"{p}.context", f"unknown context {s.get('context')!r}"))
        if "environment" in s and s["environment"] not in env_ids:
            out.append(Diagnostic(f"{p}.environment", f"unknown environment {s['environment']!r}"))
        if s.get("policy", "reactive") not in {x.value for x in Policy}:
            out.append(Diagnostic(f"{p}.policy", f"unknown policy {s.get('policy')!r}"))
        expr = s.get("expression")
        if not isinstance(expr, Mapping) or not expr.get("id"):
            out.append(Diagnostic(f"{p}.expression", "expression needs an id and a model"))
        else:
            out.extend(check_model(expr.get("model"), f"{p}.expression.model", allow_empty=False))
        comps = s.get("compositions") or []
        for j, c in enumerate(comps):
            cp = f"{p}.compositions[{j}]"
            if not isinstance(c, Mapping) or not c.get("id"):
                out.append(Diagnostic(cp, "composition needs an id"))
                continue
            cid = str(c["id"])
            if cid in comp_seen:
                out.append(Diagnostic(cp, f"duplicate composition id {cid!r} "
                                          f"(already defined at {comp_seen[cid]})"))
            else:
                comp_seen[cid] = cp
            out.extend(check_model(c.get("model"), f"{cp}.model"))
        for j, t in enumerate(s.get("transforms") or []):
            out.extend(_check_transform(t, f"{p}.transforms[{j}]"))
        sensory = s.get("sensory")
        if sensory is not None:
            for name in ("c_sbj", "c_s", "c_c"):
                if not _pos((sensory or {}).get(name)):
                    out.append(Diagnostic(f"{p}.sensory.{name}", "must be a positive number"))
        mem = s.get("memory") or []
        memory_ids[str(s.get("id"))] = set(_ids(mem, f"{p}.memory", "memory pattern", out))
        for j, m in enumerate(mem):
            mp = f"{p}.memory[{j}]"
            if not isinstance(m, Mapping):
                continue
            out.extend(check_model(m.get("model"), f"{mp}.model", allow_empty=False))
            stub = m.get("stub")
            if stub is not None:
                keys = set(model_from_data(m["model"]).keys()) if not check_model(m.get("model"), "") else set()
                if not stub or any(k not in keys for k in stub):
                    out.append(Diagnostic(f"{mp}.stub", "stub must be a non-empty subset of model keys"))
        for j, rule in enumerate(s.get("logic") or []):
            rp = f"{p}.logic[{j}]"
            if rule.get("op") not in ("and", "or"):
                out.append(Diagnostic(f"{rp}.op", "op must be 'and' or 'or'"))
            ops = rule.get("operands") or []
            if not ops:
                out.append(Diagnostic(f"{rp}.operands", "at least one operand is required"))
            for k in ops:
                if k not in memory_ids[str(s.get("id"))]:
                    out.append(Diagnostic(f"{rp}.operands", f"unknown memory pattern {k!r}"))
            if not (isinstance(rule.get("inject", 0), (int, float)) and rule.get("inject", 0) >= 0):
                out.append(Diagnostic(f"{rp}.inject", "inject must be >= 0"))
            if not _int_ge(rule.get("window", 0), 0):
                out.append(Diagnostic(f"{rp}.window", "window must be an integer >= 0"))

    ex = doc.get("exchange") or {}
    if not _int_ge(ex.get("max_depth", 4), 1):
        out.append(Diagnostic("$.exchange.max_depth", "max_depth must be an integer >= 1"))
    if not _int_ge(ex.get("cycle_length", 4), 2):
        out.append(Diagnostic("$.exchange.cycle_length", "cycle_length must be an integer >= 2"))
    if not _int_ge(ex.get("every", 1), 1):
        out.append(Diagnostic("$.exchange.every", "every must be an integer >= 1"))

    for i, o in enumerate(doc.get("observations") or []):
        op = f"$.observations[{i}]"
        if o.get("system") not in sys_ids:
            out.append(Diagnostic(f"{op}.system", f"unknown system {o.get('system')!r}"))
        if not _int_ge(o.get("tick"), 0):
            out.append(Diagnostic(f"{op}.tick", "tick must be an integer >= 0"))
        if o.get("source", "real") not in {x.value for x in Source}:
            out.append(Diagnostic(f"{op}.source", f"unknown source {o.get('source')!r}"))
        if "pattern" in o:
            if o["pattern"] not in memory_ids.get(str(o.get("system")), set()):
                out.append(Diagnostic(f"{op}.pattern", f"unknown memory pattern {o['pattern']!r}"))
        else:
            out.extend(check_model(o.get("model"), f"{op}.model"))
    for i, st in enumerate(doc.get("streams") or []):
        sp = f"$.streams[{i}]"
        if st.get("system") not in sys_ids:
            out.append(Diagnostic(f"{sp}.system", f"unknown system {st.get('system')!r}"))
        elif st.get("pattern") not in memory_ids.get(str(st.get("system")), set()):
            out.append(Diagnostic(f"{sp}.pattern", f"unknown memory pattern {st.get('pattern')!r}"))
        if not _int_ge(st.get("every", 1), 1):
            out.append(Diagnostic(f"{sp}.every", "every must be an integer >= 1"))
        if not (isinstance(st.get("noise", 0), (int, float)) and st.get("noise", 0) >= 0):
            out.append(Diagnostic(f"{sp}.noise", "noise must be >= 0"))
    for i, ev in enumerate(doc.get("events") or []):
        ep = f"$.events[{i}]"
        if ev.get("system") not in sys_ids:
            out.append(Diagnostic(f"{ep}.system", f"unknown system {ev.get('system')!r}"))
        if ev.get("kind") not in EVENT_KINDS:
            out.append(Diagnostic(f"{ep}.kind", f"kind must be one of {', '.join(EVENT_KINDS)}"))
        if not _int_ge(ev.get("tick"), 0):
            out.append(Diagnostic(f"{ep}.tick", "tick must be an integer >= 0"))
        if ev.get("kind") in ("set_expression", "add_composition"):
            out.extend(check_model(ev.get("model"), f"{ep}.model",
                                   allow_empty=ev.get("kind") == "add_composition"))
    return out


# -- parsing ---------------------------------------------------------------

def _observation(item: Mapping[str, Any], memory: Mapping[str, Sequence[MemoryPattern]]
                 ) -> tuple[str, Observation]:
    sid = str(item["system"])
    source = Source(item.get("source", "real"))
    if "pattern" in item:
        (pattern,) = [p for p in memory[sid] if p.id == item["pattern"]]
        model = pattern.model
    else:
        model = model_from_data(item["model"])
    return sid, Observation(int(item["tick"]), model, source)


def read_observation_file(path: Path) -> list[dict]:
    rows = []
    with open(path) as fh:
        for n, line in enumerate(fh, 1):
            line = line.strip()
            if not line:
                continue
            try:
                rows.append(json.loads(line))
            except json.JSONDecodeError as exc:
                raise ParseError(f"{path}:{n}: {exc}") from exc
    return rows


def parse_scenario(doc: Mapping[str, Any], base_dir: Path | None = None,
                   name: str = "scenario") -> Scenario:
    base_dir = base_dir or Path(".")
    extra_obs: list[dict] = []
    if doc.get("observation_file"):
        obs_path = base_dir / doc["observation_file"]
        if not obs_path.exists():
            raise ValidationError([Diagnostic("$.observation_file", f"file not found: {obs_path}")])
        extra_obs = read_observation_file(obs_path)
    full = dict(doc)
    full["observations"] = list(doc.get("observations") or []) + extra_obs
    diagnostics = validate_document(full)
    if diagnostics:
        raise ValidationError(diagnostics)

    envs = {}
    for e in doc.get("environments") or []:
        envs[str(e["id"])] = Environment(str(e["id"]), (), {str(k): float(v) for k, v in
                                                           (e.get("resources") or {}).items()})
    contexts = {str(c["id"]): context_from_data(c) for c in doc.get("contexts") or []}
    specs = []
    memory: dict[str, list[MemoryPattern]] = {}
    for s in doc["systems"]:
        sid = str(s["id"])
        expr = s["expression"]
        system = System(
            id=sid,
            expression=Expression(str(expr["id"]), model_from_data(expr["model"])),
            context=contexts[s["context"]],
            holdings=tuple(Composition(str(c["id"]), model_from_data(c.get("model")), sid)
                           for c in s.get("compositions") or []),
            policy=Policy(s.get("policy", "reactive")),
            transforms=tuple(TransformSpec.from_data(t) for t in s.get("transforms") or []),
            environment=s.get("environment"),
        )
        sensory = s.get("sensory")
        mem = memory_from_data(s.get("memory") or [])
        memory[sid] = mem
        specs.append(SystemSpec(
            system=system,
            sensory=CycleConfig(int(math.ceil(sensory["c_sbj"])), float(sensory["c_s"]),
                                float(sensory["c_c"])) if sensory else None,
            memory=mem,
            pattern_memory=PatternMemory.from_data(s.get("pattern_memory") or []),
            logic=[LogicRule(str(r["id"]), r["op"], tuple(r["operands"]),
                             float(r.get("inject", 0.0)), int(r.get("window", 0)))
                   for r in s.get("logic") or []],
        ))
    ex = doc.get("exchange") or {}
    return Scenario(
        version=int(doc.get("version", SCHEMA_VERSION)),
        seed=int(doc.get("seed", 0)),
        ticks=int(doc.get("ticks", 0)),
        environments=envs,
        contexts=contexts,
        systems=specs,
        exchange=ExchangeConfig(bool(ex.get("enabled", False)), int(ex.get("max_depth", 4)),
                                int(ex.get("cycle_length", 4)), int(ex.get("every", 1))),
        observations=[_observation(o, memory) for o in full["observations"]],
        streams=[Stream(str(st["system"]), str(st["pattern"]), int(st.get("every", 1)),
                        int(st.get("start", 0)), st.get("stop"), float(st.get("noise", 0.0)),
                        Source(st.get("source", "real"))) for st in doc.get("streams") or []],
        events=[Event(int(ev["tick"]), str(ev["system"]), ev["kind"], dict(ev))
                for ev in doc.get("events") or []],
        virtual=bool(doc.get("virtual", True)),
        name=name,
    )


def read_document(path: str | Path) -> Any:
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise ParseError(f"cannot read {path}: {exc}") from exc
    try:
        return yaml.safe_load(text)
    except yaml.YAMLError as exc:
        raise ParseError(f"{path}: {exc}") from exc


def load_scenario(path: str | Path) -> Scenario:
    path = Path(path)
    return parse_scenario(read_document(path), path.parent, path.stem)


FIXTURES = Path(__file__).parent / "fixtures"


def fixture_path(name: str) -> Path:
    """Path of a shipped fixture scenario (figure3_trade, self_sustaining_cycle, priming_loop)."""
    return FIXTURES / f"{name}.yaml"
