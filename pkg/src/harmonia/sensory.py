"""Sensory priming: memory stubs prime observation, close matches expand
into full patterns, and expansions re-prime the next cycle.
"""
from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Any, Iterable, Mapping, Sequence

from harmonia.calculus import harmonic_value
from harmonia.errors import InvalidCapacity, InvalidValue, StubNotFound
from harmonia.model import CharacteristicModel, Composition, Context, Expression


class Source(str, enum.Enum):
    REAL = "real"
    VIRTUAL = "virtual"


@dataclass(frozen=True)
class MemoryPattern:
    id: str
    model: CharacteristicModel
    stub_keys: tuple[str, ...]

    def __post_init__(self):
        object.__setattr__(self, "stub_keys", tuple(self.stub_keys))
        if not self.stub_keys:
            raise InvalidValue(f"pattern {self.id!r} has an empty stub")
        missing = [k for k in self.stub_keys if k not in self.model]
        if missing:
            raise InvalidValue(f"pattern {self.id!r}: stub keys {missing} not in model")

    @property
    def stub(self) -> Stub:
        return Stub(self.id, self.model.restrict(self.stub_keys))


@dataclass(frozen=True)
class Stub:
    pattern_id: str
    model: CharacteristicModel


@dataclass(frozen=True)
class Observation:
    tick: int
    model: CharacteristicModel
    source: Source = Source.REAL

    def __post_init__(self):
        object.__setattr__(self, "source", Source(self.source))
        if self.tick < 0:
            raise InvalidValue("observation tick must be >= 0")


@dataclass(frozen=True)
class CycleConfig:
    c_sbj: int
    c_s: float
    c_c: float

    def __post_init__(self):
        for name in ("c_sbj", "c_s", "c_c"):
            v = getattr(self, name)
            if not (math.isfinite(v) and v > 0):
                raise InvalidCapacity(f"{name} must be positive, got {v!r}")


def optimum_frequency(cfg: CycleConfig) -> int:
    """Subject characteristics over the quadratic mean of the two capacities, rounded up.

    The float estimate can land on the wrong side of an integer when the
    ratio is within an ulp of it, so it is corrected by comparing squares
    in exact rationals.
    """
    rms = math.sqrt((cfg.c_s ** 2 + cfg.c_c ** 2) / 2)
    k = max(1, math.ceil(cfg.c_sbj / rms))
    n2 = Fraction(cfg.c_sbj) ** 2
    mean_sq = (Fraction(cfg.c_s) ** 2 + Fraction(cfg.c_c) ** 2) / 2
    while k * k * mean_sq < n2:
        k += 1
    while k > 1 and (k - 1) ** 2 * mean_sq >= n2:
        k -= 1
    return k


def prime(memory: Sequence[MemoryPattern], ctx: Context, capacity: float | None = None,
          ) -> list[Stub]:
    """Stubs of patterns relevant to the context, by pattern id, capped at floor(capacity)."""
    keys = set(ctx.scale)
    hits = sorted((p for p in memory if keys.intersection(p.model.keys())), key=lambda p: p.id)
    if capacity is not None:
        hits = hits[:math.floor(capacity)]
    return [p.stub for p in hits]


def stub_score(stub: Stub, obs: Observation, ctx: Context) -> float:
    restricted = obs.model.restrict(stub.model.keys())
    return harmonic_value(Composition(f"obs@{obs.tick}", restricted),
                          Expression(stub.pattern_id, stub.model), ctx).value


def match_stub(stub: Stub, obs: Observation, ctx: Context) -> float | None:
    """The conformance score when it reaches the context's threshold, else None."""
    score = stub_score(stub, obs, ctx)
    return score if score >= ctx.match_threshold else None


def expand(stub: Stub, memory: Sequence[MemoryPattern]) -> tuple[MemoryPattern, list[str]]:
    """Full pattern behind a stub, plus ids to prime next: itself, then patterns sharing a key."""
    for p in memory:
        if p.id == stub.pattern_id:
            break
    else:
        raise StubNotFound(f"no memory pattern {stub.pattern_id!r}")
    keys = set(p.model.keys())
    neighbours = sorted(q.id for q in memory if q.id != p.id and keys.intersection(q.model.keys()))
    return p, [p.id, *neighbours]


def virtual_observe(pattern: MemoryPattern, tick: int) -> Observation:
    return Observation(tick, pattern.model, Source.VIRTUAL)


@dataclass(frozen=True)
class Expansion:
    tick: int
    pattern_id: str
    score: float
    source: Source
    request: tuple[str, ...]


@dataclass
class PrimingLoop:
    """One system's priming/observation/expansion cycle.

    Each tick makes ``optimum_frequency`` stub-match attempts, walking the
    primed stubs round-robin; an attempt scores a stub against every
    observation in the tick window and keeps the best. Expansions put
    their re-priming request at the front of the next tick's priming.
    """

    memory: Sequence[MemoryPattern]
    context: Context
    config: CycleConfig
    cursor: int = 0
    requested: tuple[str, ...] = ()
    primed: list[Stub] = field(default_factory=list)

    @property
    def frequency(self) -> int:
        return optimum_frequency(self.config)

    def prime_next(self) -> list[Stub]:
        cap = math.floor(self.config.c_c)
        by_id = {p.id: p for p in self.memory}
        ordered = [by_id[i].stub for i in self.requested if i in by_id]
        for stub in prime(self.memory, self.context):
            if all(s.pattern_id != stub.pattern_id for s in ordered):
                ordered.append(stub)
        if [s.pattern_id for s in ordered[:cap]] != [s.pattern_id for s in self.primed]:
            self.cursor = 0
        self.primed = ordered[:cap]
        self.requested = ()
        return self.primed

    def step(self, tick: int, window: Sequence[Observation]) -> tuple[list[Stub], list[Expansion]]:
        primed = self.prime_next()
        expansions: list[Expansion] = []
        if not primed or not window:
            return primed, expansions
        attempts = min(self.frequency, len(primed))
        request: list[str] = []
        for k in range(attempts):
            stub = primed[(self.cursor + k) % len(primed)]
            best = None
            for obs in window:
                score = match_stub(stub, obs, self.context)
                if score is not None and (best is None or score > best[0]):
                    best = (score, obs)
            if best is None:
                continue
            _, req = expand(stub, self.memory)
            expansions.append(Expansion(tick, stub.pattern_id, best[0], best[1].source, tuple(req)))
            request.extend(r for r in req if r not in request)
        self.cursor = (self.cursor + attempts) % len(primed)
        self.requested = tuple(request)
        return primed, expansions


def memory_from_data(items: Iterable[Mapping[str, Any]]) -> list[MemoryPattern]:
    from harmonia.model import model_from_data

    out = []
    for item in items:
        model = model_from_data(item["model"])
        stub = item.get("stub") or model.keys()[:1]
        out.append(MemoryPattern(str(item["id"]), model, tuple(stub)))
    return out
