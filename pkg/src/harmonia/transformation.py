"""Simplification, enrichment, the positive-pattern memory and response policies."""
from __future__ import annotations

import enum
from dataclasses import dataclass, field, replace
from typing import Any, Iterable, Mapping, Sequence

from harmonia.calculus import assess, pair_contributions
from harmonia.errors import InvalidSpec, KeyCollision, KeyNotFound
from harmonia.model import (Characteristic, CharacteristicModel, Composition, Expression,
                            model_from_data)
from harmonia.system import Policy, System

TOLERANCE = 1e-12


class TransformKind(str, enum.Enum):
    SIMPLIFY = "simplify"
    ENRICH = "enrich"


@dataclass(frozen=True)
class TransformSpec:
    kind: TransformKind
    drop_keys: tuple[str, ...] = ()
    groups: tuple[tuple[str, ...], ...] = ()
    relabel: bool = False
    add: tuple[Characteristic, ...] = ()
    rename: tuple[tuple[str, tuple[tuple[str, str], ...]], ...] = ()
    merge_ids: tuple[str, ...] = ()
    output_id: str | None = None

    def __post_init__(self):
        object.__setattr__(self, "kind", TransformKind(self.kind))
        object.__setattr__(self, "drop_keys", tuple(self.drop_keys))
        object.__setattr__(self, "groups", tuple(tuple(g) for g in self.groups))
        object.__setattr__(self, "add", tuple(self.add))
        object.__setattr__(self, "merge_ids", tuple(self.merge_ids))
        if isinstance(self.rename, Mapping):
            object.__setattr__(self, "rename", tuple(
                (cid, tuple(sorted(m.items()))) for cid, m in sorted(self.rename.items())))
        if self.kind is TransformKind.SIMPLIFY and (self.add or self.rename or self.merge_ids):
            raise InvalidSpec("simplify specs take only drop_keys, groups and relabel")
        if self.kind is TransformKind.ENRICH and (self.drop_keys or self.groups or self.relabel):
            raise InvalidSpec("enrich specs take only add, rename and merge_ids")
        flat = [k for g in self.groups for k in g]
        if len(flat) != len(set(flat)) or any(not g for g in self.groups):
            raise InvalidSpec("groups must be non-empty and disjoint")

    @classmethod
    def simplify(cls, drop_keys=(), groups=(), relabel=False, output_id=None) -> TransformSpec:
        return cls(TransformKind.SIMPLIFY, drop_keys=drop_keys, groups=groups,
                   relabel=relabel, output_id=output_id)

    @classmethod
    def enrich(cls, add=(), rename=(), merge_ids=(), output_id=None) -> TransformSpec:
        return cls(TransformKind.ENRICH, add=add, rename=rename, merge_ids=merge_ids,
                   output_id=output_id)

    def renames_for(self, cid: str) -> dict[str, str]:
        for owner, pairs in self.rename:
            if owner == cid:
                return dict(pairs)
        return {}

    def label(self) -> str:
        if self.kind is TransformKind.SIMPLIFY:
            parts = []
            if self.drop_keys:
                parts.append("drop=" + ",".join(self.drop_keys))
            if self.groups:
                parts.append("groups=" + "|".join(",".join(g) for g in self.groups))
            if self.relabel:
                parts.append("relabel")
            return "simplify(" + ";".join(parts) + ")"
        parts = []
        if self.merge_ids:
            parts.append("merge=" + ",".join(self.merge_ids))
        if self.add:
            parts.append("add=" + ",".join(f"{c.key}:{c.value:g}" for c in self.add))
        if self.rename:
            parts.append("rename=" + ",".join(
                f"{cid}.{a}>{b}" for cid, pairs in self.rename for a, b in pairs))
        return "enrich(" + ";".join(parts) + ")"

    def to_data(self) -> dict[str, Any]:
        d: dict[str, Any] = {"kind": self.kind.value}
        if self.drop_keys:
            d["drop_keys"] = list(self.drop_keys)
        if self.groups:
            d["groups"] = [list(g) for g in self.groups]
        if self.relabel:
            d["relabel"] = True
        if self.add:
            d["add"] = [c.to_data() for c in self.add]
        if self.rename:
            d["rename"] = {cid: dict(pairs) for cid, pairs in self.rename}
        if self.merge_ids:
            d["merge_ids"] = list(self.merge_ids)
        if self.output_id:
            d["output_id"] = self.output_id
        return d

    @classmethod
    def from_data(cls, data: Mapping[str, Any]) -> TransformSpec:
        return cls(
            kind=data["kind"],
            drop_keys=tuple(data.get("drop_keys", ())),
            groups=tuple(tuple(g) for g in data.get("groups", ())),
            relabel=bool(data.get("relabel", False)),
            add=model_from_data(data.get("add", [])).entries,
            rename=data.get("rename", ()),
            merge_ids=tuple(data.get("merge_ids", ())),
            output_id=data.get("output_id"),
        )


def simplify(c: Composition, spec: TransformSpec) -> list[Composition]:
    """Drop keys and/or decompose a composition into key groups."""
    if spec.kind is not TransformKind.SIMPLIFY:
        raise InvalidSpec("simplify needs a simplify spec")
    keys = c.model.keys()
    for k in list(spec.drop_keys) + [k for g in spec.groups for k in g]:
        if k not in keys:
            raise KeyNotFound(f"{c.id!r} has no characteristic {k!r}")
    if not spec.drop_keys and not spec.groups:
        return [c]
    remaining = c.model.without(spec.drop_keys)
    if not spec.groups:
        model = remaining.relabeled() if spec.relabel else remaining
        return [Composition(spec.output_id or f"{c.id}/s", model, c.owner)]
    grouped = {k for g in spec.groups for k in g}
    if grouped != set(remaining.keys()):
        raise InvalidSpec(f"groups do not partition the remaining keys of {c.id!r}")
    out = []
    for i, group in enumerate(spec.groups):
        part = CharacteristicModel(tuple(remaining.get(k) for k in group))
        if spec.relabel:
            part = part.relabeled()
        out.append(Composition(f"{spec.output_id or c.id}/{i}", part, c.owner))
    return out


def enrich(cs: Sequence[Composition], spec: TransformSpec) -> Composition:
    """Merge compositions and add characteristics into one composition."""
    if spec.kind is not TransformKind.ENRICH:
        raise InvalidSpec("enrich needs an enrich spec")
    if not cs:
        raise InvalidSpec("enrich needs at least one composition")
    entries: list[Characteristic] = []
    seen: dict[str, str] = {}
    for c in cs:
        renames = spec.renames_for(c.id)
        for ch in c.model:
            key = renames.get(ch.key, ch.key)
            if key in seen:
                raise KeyCollision(f"key {key!r} from {c.id!r} collides with {seen[key]!r}")
            seen[key] = c.id
            target = renames.get(ch.role_target, ch.role_target) if ch.role_target else None
            entries.append(Characteristic(key, ch.value, ch.kind, ch.role, target, ch.strength))
    for ch in spec.add:
        if ch.key in seen:
            raise KeyCollision(f"added key {ch.key!r} collides with {seen[ch.key]!r}")
        seen[ch.key] = "<added>"
        entries.append(ch)
    if spec.output_id:
        cid = spec.output_id
    elif len(cs) == 1:
        cid = f"{cs[0].id}/e"
    else:
        cid = "+".join(c.id for c in cs)
    return Composition(cid, CharacteristicModel(tuple(entries)), cs[0].owner)


def simplify_expression(e: Expression, spec: TransformSpec) -> Expression:
    if spec.groups:
        raise InvalidSpec("an expression cannot be decomposed")
    (out,) = simplify(Composition(e.id, e.model), spec)
    if len(out.model) == 0:
        raise InvalidSpec(f"simplifying {e.id!r} would leave it empty")
    return Expression(e.id, out.model)


# -- pattern memory --------------------------------------------------------

@dataclass(frozen=True)
class TransformationPattern:
    context_id: str
    expression_id: str
    spec: TransformSpec
    support: int = 0
    always_improved: bool = True

    @property
    def id(self) -> str:
        return f"{self.context_id}|{self.expression_id}|{self.spec.label()}"

    def to_data(self) -> dict[str, Any]:
        return {"context": self.context_id, "expression": self.expression_id,
                "spec": self.spec.to_data(), "support": self.support,
                "always_improved": self.always_improved}

    @classmethod
    def from_data(cls, data: Mapping[str, Any]) -> TransformationPattern:
        return cls(data["context"], data["expression"], TransformSpec.from_data(data["spec"]),
                   int(data.get("support", 0)), bool(data.get("always_improved", True)))


def _ordered(patterns: Iterable[TransformationPattern]) -> tuple[TransformationPattern, ...]:
    return tuple(sorted(patterns, key=lambda p: (-p.support, p.id)))


@dataclass(frozen=True)
class PatternMemory:
    patterns: tuple[TransformationPattern, ...] = ()

    def __post_init__(self):
        object.__setattr__(self, "patterns", _ordered(self.patterns))

    def lookup(self, context_id: str, expression_id: str,
               spec: TransformSpec) -> TransformationPattern | None:
        for p in self.patterns:
            if (p.context_id, p.expression_id, p.spec) == (context_id, expression_id, spec):
                return p
        return None

    def positive(self, context_id: str, expression_id: str) -> list[TransformationPattern]:
        return [p for p in self.patterns if p.always_improved
                and p.context_id == context_id and p.expression_id == expression_id]

    def to_data(self) -> list[dict]:
        return [p.to_data() for p in self.patterns]

    @classmethod
    def from_data(cls, data: Iterable[Mapping[str, Any]]) -> PatternMemory:
        return cls(tuple(TransformationPattern.from_data(d) for d in data))


def record_application(mem: PatternMemory, context_id: str, expression_id: str,
                       spec: TransformSpec, hs_before: float, hs_after: float) -> PatternMemory:
    improved = hs_after >= hs_before - TOLERANCE
    old = mem.lookup(context_id, expression_id, spec)
    if old is None:
        new = TransformationPattern(context_id, expression_id, spec, 1, improved)
        return PatternMemory(mem.patterns + (new,))
    new = replace(old, support=old.support + 1, always_improved=old.always_improved and improved)
    return PatternMemory(tuple(new if p is old else p for p in mem.patterns))


# -- responses -------------------------------------------------------------

@dataclass(frozen=True)
class Transition:
    hs_before: float
    hs_after: float
    context_id: str

    @property
    def dropped(self) -> bool:
        return self.hs_after < self.hs_before - TOLERANCE


class ProposalKind(str, enum.Enum):
    ENRICH = "enrich"
    SIMPLIFY = "simplify"
    SIMPLIFY_EXPRESSION = "simplify_expression"
    PATTERN = "pattern"
    EXCHANGE_PROBE = "exchange_probe"


@dataclass(frozen=True)
class Proposal:
    kind: ProposalKind
    target: str
    spec: TransformSpec | None
    predicted_delta: float
    support: int = 0

    @property
    def on_expression(self) -> bool:
        return self.kind is ProposalKind.SIMPLIFY_EXPRESSION

    def to_data(self) -> dict[str, Any]:
        return {"kind": self.kind.value, "target": self.target,
                "spec": self.spec.to_data() if self.spec else None,
                "predicted_delta": self.predicted_delta, "support": self.support}


def apply_proposal(system: System, proposal: Proposal) -> System:
    """The system after carrying out a transform proposal."""
    if proposal.spec is None:
        return system
    if proposal.on_expression:
        return replace(system, expression=simplify_expression(system.expression, proposal.spec))
    c = system.holding(proposal.target)
    if proposal.spec.kind is TransformKind.SIMPLIFY:
        produced = simplify(c, proposal.spec)
    else:
        produced = [enrich([c], proposal.spec)]
    return system.with_holdings([h for h in system.holdings if h.id != c.id] + produced)


def _predict(system: System, kind: ProposalKind, target: str, spec: TransformSpec,
             baseline: float, support: int = 0) -> Proposal | None:
    proposal = Proposal(kind, target, spec, 0.0, support)
    try:
        after = apply_proposal(system, proposal)
    except (KeyNotFound, KeyCollision, InvalidSpec):
        return None
    delta = assess(after.holdings, after.expression, after.context).state - baseline
    return replace(proposal, predicted_delta=delta)


def _enrichments(system: System, resources: Mapping[str, float] | None) -> list[tuple[str, TransformSpec]]:
    out = []
    for c in system.holdings:
        for ref in system.expression.model:
            if ref.key in c.model:
                continue
            if resources is not None and resources.get(ref.key, 0.0) < 1.0:
                continue
            out.append((c.id, TransformSpec.enrich(add=(Characteristic(ref.key, ref.value),))))
    return out


def _composition_simplifications(system: System) -> list[tuple[str, TransformSpec]]:
    out = []
    for c in system.holdings:
        contrib = pair_contributions(c, system.expression, system.context)
        drop = tuple(k for k in c.model.keys() if contrib.get(k, 0.0) <= 0)
        if drop and len(drop) < len(c.model):
            out.append((c.id, TransformSpec.simplify(drop_keys=drop)))
    return out


def _expression_simplifications(system: System) -> list[TransformSpec]:
    keys = system.expression.model.keys()
    if len(keys) < 2:
        return []
    return [TransformSpec.simplify(drop_keys=(k,)) for k in keys]


def respond(system: System, transition: Transition, policy: Policy | str | None = None,
            mem: PatternMemory | None = None,
            resources: Mapping[str, float] | None = None) -> list[Proposal]:
    """Ranked transformation proposals for a system after a state transition.

    Reactive systems respond only to a drop, by enriching compositions
    toward the expression or simplifying the expression. Active systems
    always propose, and add composition simplification, reuse of stored
    positive patterns, and an exchange probe.
    """
    policy = Policy(policy or system.policy)
    mem = mem or PatternMemory()
    if policy is Policy.REACTIVE and not transition.dropped:
        return []
    baseline = system.assess().state
    candidates: list[Proposal | None] = []
    for cid, spec in _enrichments(system, resources):
        candidates.append(_predict(system, ProposalKind.ENRICH, cid, spec, baseline))
    for spec in _expression_simplifications(system):
        candidates.append(_predict(system, ProposalKind.SIMPLIFY_EXPRESSION,
                                   system.expression.id, spec, baseline))
    if policy is Policy.ACTIVE:
        for cid, spec in _composition_simplifications(system):
            candidates.append(_predict(system, ProposalKind.SIMPLIFY, cid, spec, baseline))
        for pattern in mem.positive(transition.context_id, system.expression.id):
            for c in system.holdings:
                candidates.append(_predict(system, ProposalKind.PATTERN, c.id, pattern.spec,
                                           baseline, pattern.support))
        candidates.append(Proposal(ProposalKind.EXCHANGE_PROBE, system.id, None, 0.0))
    proposals = [p for p in candidates if p is not None]
    order = list(ProposalKind)
    proposals.sort(key=lambda p: (-p.predicted_delta, -p.support, order.index(p.kind),
                                  p.target, p.spec.label() if p.spec else ""))
    return proposals
