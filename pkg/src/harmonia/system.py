from __future__ import annotations

import enum
from dataclasses import dataclass, field, replace
from typing import TYPE_CHECKING, Iterable

from harmonia.calculus import Assessment, assess
from harmonia.errors import NotOwned
from harmonia.model import Composition, Context, Expression

if TYPE_CHECKING:
    from harmonia.transformation import TransformSpec


class Policy(str, enum.Enum):
    REACTIVE = "reactive"
    ACTIVE = "active"


@dataclass(frozen=True)
class System:
    """A harmonic system: one expression, one context, and what it owns."""

    id: str
    expression: Expression
    context: Context
    holdings: tuple[Composition, ...] = ()
    policy: Policy = Policy.REACTIVE
    transforms: tuple[TransformSpec, ...] = field(default=())
    environment: str | None = None

    def __post_init__(self):
        object.__setattr__(self, "holdings", tuple(
            sorted((c.owned_by(self.id) for c in self.holdings), key=lambda c: c.id)))
        object.__setattr__(self, "policy", Policy(self.policy))

    def assess(self) -> Assessment:
        return assess(self.holdings, self.expression, self.context)

    @property
    def state(self) -> float:
        return self.assess().state

    def holding(self, cid: str) -> Composition:
        for c in self.holdings:
            if c.id == cid:
                return c
        raise NotOwned(f"{self.id} does not own {cid!r}")

    def owns(self, cid: str) -> bool:
        return any(c.id == cid for c in self.holdings)

    def with_holdings(self, holdings: Iterable[Composition]) -> System:
        return replace(self, holdings=tuple(holdings))

    def giving(self, cids: Iterable[str]) -> System:
        cids = set(cids)
        for cid in cids:
            self.holding(cid)
        return self.with_holdings(c for c in self.holdings if c.id not in cids)

    def receiving(self, comps: Iterable[Composition]) -> System:
        return self.with_holdings(self.holdings + tuple(comps))
