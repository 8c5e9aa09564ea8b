"""Harmonic value, significance, state and status."""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Iterable, Sequence

from harmonia.errors import EmptyInterval, EmptyParticipants, EmptySelection
from harmonia.model import Composition, Context, Expression, Role, characteristic_theta


@dataclass(frozen=True)
class HarmonicValue:
    value: float
    matched: int
    n: int


@dataclass(frozen=True)
class Significance:
    value: float
    n_conforming: int
    m: int


def pair_contributions(c: Composition, e: Expression, ctx: Context) -> dict[str, float]:
    """Role-adjusted cos(theta) per key matched between composition and expression.

    Facilitators scale their target's positive contribution by
    ``1 + strength``; inhibitors scale their target's contribution by
    ``max(0, 1 - strength)``. Targets outside the matched set are ignored.
    """
    contrib: dict[str, float] = {}
    for ch in c.model:
        ref = e.model.get(ch.key)
        if ref is not None:
            contrib[ch.key] = math.cos(characteristic_theta(ch, ref, ctx).theta)
    for ch in c.model:
        t = ch.role_target
        if t not in contrib:
            continue
        if ch.role is Role.FACILITATOR and contrib[t] > 0:
            contrib[t] *= 1.0 + ch.strength
        elif ch.role is Role.INHIBITOR:
            contrib[t] *= max(0.0, 1.0 - ch.strength)
    return contrib


def harmonic_value(c: Composition, e: Expression, ctx: Context) -> HarmonicValue:
    n = len(c.model)
    contrib = pair_contributions(c, e, ctx)
    if n == 0:
        return HarmonicValue(0.0, 0, 0)
    value = min(1.0, max(-1.0, math.fsum(contrib.values()) / n))
    return HarmonicValue(value, len(contrib), n)


def harmonic_significance(c: Composition, e: Expression, ctx: Context,
                          participants: Sequence[Composition]) -> Significance:
    m = sum(len(p.model) for p in participants)
    if m == 0:
        raise EmptyParticipants("participating compositions carry no characteristics")
    n_conf = sum(1 for v in pair_contributions(c, e, ctx).values() if v > 0)
    hv = harmonic_value(c, e, ctx).value
    # + 0.0 folds -0.0 into 0.0
    return Significance(hv * n_conf / m + 0.0, n_conf, m)


def select_compositions(candidates: Sequence[Composition], e: Expression,
                        ctx: Context) -> list[Composition]:
    """Top ``ctx.selection_size`` candidates by (significance, HV) descending, id ascending."""
    if not candidates:
        return []
    m = sum(len(p.model) for p in candidates)
    keyed = []
    for c in candidates:
        hv = harmonic_value(c, e, ctx).value
        sig = harmonic_significance(c, e, ctx, candidates).value if m else 0.0
        keyed.append(((-sig, -hv, c.id), c))
    keyed.sort(key=lambda item: item[0])
    return [c for _, c in keyed[:ctx.selection_size]]


def harmonic_state(selected: Iterable[HarmonicValue | float]) -> float:
    """Quadratic mean of the selected harmonic values."""
    xs = [x.value if isinstance(x, HarmonicValue) else float(x) for x in selected]
    if not xs:
        raise EmptySelection("harmonic state needs at least one selected composition")
    return math.sqrt(math.fsum(x * x for x in xs) / len(xs))


@dataclass(frozen=True)
class StateSample:
    tick: int
    values: tuple[float, ...]
    state: float


@dataclass
class StateHistory:
    samples: list[StateSample] = field(default_factory=list)

    def append(self, tick: int, values: Iterable[float], state: float) -> None:
        if self.samples and tick <= self.samples[-1].tick:
            raise ValueError(f"tick {tick} does not follow {self.samples[-1].tick}")
        self.samples.append(StateSample(tick, tuple(values), state))


def harmonic_status(h: StateHistory, a: int, b: int) -> float:
    """Mean over ticks in [a, b] of the per-tick mean harmonic value."""
    if a > b:
        raise EmptyInterval(f"interval [{a}, {b}] is reversed")
    means = [math.fsum(s.values) / len(s.values) if s.values else 0.0
             for s in h.samples if a <= s.tick <= b]
    if not means:
        raise EmptyInterval(f"no samples in [{a}, {b}]")
    return math.fsum(means) / len(means)


@dataclass(frozen=True)
class Assessment:
    """Everything the calculus says about one system's holdings."""

    values: dict[str, float]
    significances: dict[str, float]
    active: tuple[str, ...]
    selected: tuple[str, ...]
    state: float


def assess(holdings: Sequence[Composition], e: Expression, ctx: Context) -> Assessment:
    """Evaluate holdings against an expression.

    Only Active compositions (HV > 0) are eligible for selection; the
    state of a system with nothing Active is 0.
    """
    values = {c.id: harmonic_value(c, e, ctx).value for c in holdings}
    m = sum(len(c.model) for c in holdings)
    sigs = {c.id: harmonic_significance(c, e, ctx, holdings).value if m else 0.0
            for c in holdings}
    active = [c for c in holdings if values[c.id] > 0]
    selected = select_compositions(active, e, ctx)
    state = harmonic_state(values[c.id] for c in selected) if selected else 0.0
    return Assessment(values, sigs, tuple(c.id for c in active),
                      tuple(c.id for c in selected), state)


def system_state(holdings: Sequence[Composition], e: Expression, ctx: Context) -> float:
    return assess(holdings, e, ctx).state
