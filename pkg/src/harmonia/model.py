"""Structural vocabulary: characteristics, models, contexts, expressions,
compositions, environments, and the angular comparison between two
characteristics.
"""
from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field
from typing import Any, Iterable, Iterator, Mapping, Sequence

from harmonia.errors import InvalidValue, KeyMismatch

POSITIONAL_PREFIX = "c"


class Kind(str, enum.Enum):
    INTRINSIC = "intrinsic"
    REFERENTIAL = "referential"


class Role(str, enum.Enum):
    ACTIVATOR = "activator"
    INHIBITOR = "inhibitor"
    FACILITATOR = "facilitator"


class CompositionClass(str, enum.Enum):
    ACTIVE = "active"
    PASSIVE = "passive"
    TARGET = "target"


def positional_key(i: int) -> str:
    return f"{POSITIONAL_PREFIX}{i}"


@dataclass(frozen=True)
class Characteristic:
    key: str
    value: float
    kind: Kind = Kind.INTRINSIC
    role: Role = Role.ACTIVATOR
    role_target: str | None = None
    strength: float = 0.0

    def __post_init__(self):
        object.__setattr__(self, "kind", Kind(self.kind))
        object.__setattr__(self, "role", Role(self.role))
        if not self.key:
            raise InvalidValue("characteristic key must be non-empty")
        if not math.isfinite(self.value):
            raise InvalidValue(f"characteristic {self.key!r} has non-finite value")
        if not math.isfinite(self.strength) or self.strength < 0:
            raise InvalidValue(f"characteristic {self.key!r} strength must be finite and >= 0")
        needs_target = self.role in (Role.INHIBITOR, Role.FACILITATOR)
        if needs_target != (self.role_target is not None):
            raise InvalidValue(
                f"characteristic {self.key!r}: role_target is required for "
                f"inhibitors/facilitators and forbidden for activators")

    def with_key(self, key: str) -> Characteristic:
        return Characteristic(key, self.value, self.kind, self.role, self.role_target, self.strength)

    def to_data(self) -> dict:
        d: dict[str, Any] = {"key": self.key, "value": self.value}
        if self.kind is not Kind.INTRINSIC:
            d["kind"] = self.kind.value
        if self.role is not Role.ACTIVATOR:
            d["role"] = self.role.value
            d["target"] = self.role_target
            d["strength"] = self.strength
        return d


@dataclass(frozen=True)
class CharacteristicModel:
    """Ordered, key-unique collection of characteristics."""

    entries: tuple[Characteristic, ...] = ()

    def __post_init__(self):
        object.__setattr__(self, "entries", tuple(self.entries))
        seen = set()
        for ch in self.entries:
            if ch.key in seen:
                raise InvalidValue(f"duplicate characteristic key {ch.key!r}")
            seen.add(ch.key)

    @classmethod
    def of(cls, *values: float) -> CharacteristicModel:
        """Model from bare numbers, keyed positionally (c0, c1, ...)."""
        return cls(tuple(Characteristic(positional_key(i), float(v)) for i, v in enumerate(values)))

    @classmethod
    def from_mapping(cls, values: Mapping[str, float]) -> CharacteristicModel:
        return cls(tuple(Characteristic(k, float(v)) for k, v in values.items()))

    def __len__(self) -> int:
        return len(self.entries)

    def __iter__(self) -> Iterator[Characteristic]:
        return iter(self.entries)

    def __contains__(self, key: object) -> bool:
        return any(ch.key == key for ch in self.entries)

    def keys(self) -> list[str]:
        return [ch.key for ch in self.entries]

    def get(self, key: str) -> Characteristic | None:
        for ch in self.entries:
            if ch.key == key:
                return ch
        return None

    def restrict(self, keys: Iterable[str]) -> CharacteristicModel:
        wanted = set(keys)
        return CharacteristicModel(tuple(ch for ch in self.entries if ch.key in wanted))

    def without(self, keys: Iterable[str]) -> CharacteristicModel:
        dropped = set(keys)
        return CharacteristicModel(tuple(ch for ch in self.entries if ch.key not in dropped))

    def extended(self, extra: Iterable[Characteristic]) -> CharacteristicModel:
        return CharacteristicModel(self.entries + tuple(extra))

    def relabeled(self) -> CharacteristicModel:
        """Re-key positionally, keeping order. Role targets are remapped too."""
        mapping = {ch.key: positional_key(i) for i, ch in enumerate(self.entries)}
        out = []
        for ch in self.entries:
            target = mapping.get(ch.role_target, ch.role_target) if ch.role_target else None
            out.append(Characteristic(mapping[ch.key], ch.value, ch.kind, ch.role, target, ch.strength))
        return CharacteristicModel(tuple(out))

    def values(self) -> tuple[float, ...]:
        return tuple(ch.value for ch in self.entries)

    def to_data(self) -> list[dict]:
        return [ch.to_data() for ch in self.entries]


@dataclass(frozen=True)
class Context:
    id: str
    scale: Mapping[str, float] = field(default_factory=dict)
    default_scale: float = 1.0
    selection_size: int = 1
    match_threshold: float = 0.8

    def __post_init__(self):
        object.__setattr__(self, "scale", dict(self.scale))
        for key, s in self.scale.items():
            if not (math.isfinite(s) and s > 0):
                raise InvalidValue(f"context {self.id!r}: scale for {key!r} must be > 0")
        if not (math.isfinite(self.default_scale) and self.default_scale > 0):
            raise InvalidValue(f"context {self.id!r}: default scale must be > 0")
        if self.selection_size < 1:
            raise InvalidValue(f"context {self.id!r}: selection_size must be >= 1")
        if not 0 < self.match_threshold <= 1:
            raise InvalidValue(f"context {self.id!r}: match_threshold must lie in (0, 1]")

    def __hash__(self):
        return hash((self.id, tuple(sorted(self.scale.items())), self.default_scale,
                     self.selection_size, self.match_threshold))

    def scale_for(self, key: str) -> float:
        return self.scale.get(key, self.default_scale)


@dataclass(frozen=True)
class Expression:
    id: str
    model: CharacteristicModel

    def __post_init__(self):
        if len(self.model) == 0:
            raise InvalidValue(f"expression {self.id!r} has an empty model")


@dataclass(frozen=True)
class Composition:
    id: str
    model: CharacteristicModel = CharacteristicModel()
    owner: str | None = None

    def owned_by(self, owner: str | None) -> Composition:
        return Composition(self.id, self.model, owner)


@dataclass(frozen=True)
class Environment:
    id: str
    pool: tuple[Composition, ...] = ()
    resources: Mapping[str, float] = field(default_factory=dict)

    def __post_init__(self):
        object.__setattr__(self, "pool", tuple(self.pool))
        object.__setattr__(self, "resources", dict(self.resources))
        ids = [c.id for c in self.pool]
        if len(ids) != len(set(ids)):
            raise InvalidValue(f"environment {self.id!r}: duplicate composition ids")
        for key, amount in self.resources.items():
            if amount < 0:
                raise InvalidValue(f"environment {self.id!r}: resource {key!r} is negative")

    def __hash__(self):
        return hash((self.id, self.pool, tuple(sorted(self.resources.items()))))

    def __contains__(self, composition: object) -> bool:
        cid = composition.id if isinstance(composition, Composition) else composition
        return any(c.id == cid for c in self.pool)


@dataclass(frozen=True)
class Comparison:
    theta: float
    mu: float
    r: float = 1.0

    @property
    def l_obs(self) -> float:
        return self.r * self.theta

    @property
    def l_t(self) -> float:
        # arc on the unit circle
        return self.theta


def characteristic_theta(observed: Characteristic, reference: Characteristic,
                         context: Context, r: float = 1.0) -> Comparison:
    """Angle between an observed and a reference characteristic.

    The value difference is mapped linearly onto [0, pi] using the
    context's scale for the key, saturating at pi once the difference
    reaches the scale.
    """
    if observed.key != reference.key:
        raise KeyMismatch(f"cannot compare {observed.key!r} with {reference.key!r}")
    if not (math.isfinite(observed.value) and math.isfinite(reference.value)):
        raise InvalidValue("non-finite characteristic value")
    delta = abs(observed.value - reference.value)
    theta = math.pi * min(delta / context.scale_for(observed.key), 1.0)
    return Comparison(theta=theta, mu=delta / math.pi, r=r)


def classify_composition(c: Composition, env: Environment, expr: Expression,
                         context: Context) -> CompositionClass:
    from harmonia.calculus import harmonic_value

    if c not in env:
        return CompositionClass.TARGET
    if harmonic_value(c, expr, context).value > 0:
        return CompositionClass.ACTIVE
    return CompositionClass.PASSIVE


# -- raw data --------------------------------------------------------------

@dataclass(frozen=True)
class Diagnostic:
    path: str
    message: str

    def __str__(self):
        return f"{self.path}: {self.message}"


def model_from_data(data: Any) -> CharacteristicModel:
    """Build a model from any of the accepted raw forms.

    * ``[6, 7, 8]``: bare numbers, keyed positionally
    * ``{"x": 1.0, "y": 2.0}``: key -> value
    * ``[{"key": "x", "value": 1.0, "role": "inhibitor", ...}, ...]``
    """
    if data is None:
        return CharacteristicModel()
    if isinstance(data, Mapping):
        return CharacteristicModel.from_mapping(data)
    entries = []
    for i, item in enumerate(data):
        if isinstance(item, Mapping):
            entries.append(Characteristic(
                key=str(item.get("key", positional_key(i))),
                value=float(item["value"]),
                kind=item.get("kind", Kind.INTRINSIC),
                role=item.get("role", Role.ACTIVATOR),
                role_target=item.get("target"),
                strength=float(item.get("strength", 0.0)),
            ))
        else:
            entries.append(Characteristic(positional_key(i), float(item)))
    return CharacteristicModel(tuple(entries))


def context_from_data(data: Mapping) -> Context:
    scale = dict(data.get("scale") or {})
    default = scale.pop("default", data.get("default_scale", 1.0))
    return Context(
        id=str(data["id"]),
        scale={str(k): float(v) for k, v in scale.items()},
        default_scale=float(default),
        selection_size=int(data.get("selection_size", 1)),
        match_threshold=float(data.get("match_threshold", 0.8)),
    )


def _is_number(x: Any) -> bool:
    return isinstance(x, (int, float)) and not isinstance(x, bool)


def _finite(x: Any) -> bool:
    return _is_number(x) and math.isfinite(x)


def check_model(data: Any, path: str, allow_empty: bool = True) -> list[Diagnostic]:
    out: list[Diagnostic] = []
    if data is None:
        data = []
    if isinstance(data, Mapping):
        items = [{"key": k, "value": v} for k, v in data.items()]
    elif isinstance(data, Sequence) and not isinstance(data, str):
        items = list(data)
    else:
        return [Diagnostic(path, "characteristic model must be a list or mapping")]
    if not items and not allow_empty:
        out.append(Diagnostic(path, "model must be non-empty"))
    seen: set[str] = set()
    for i, item in enumerate(items):
        p = f"{path}[{i}]"
        if not isinstance(item, Mapping):
            item = {"key": positional_key(i), "value": item}
        key = str(item.get("key", positional_key(i)))
        if not key:
            out.append(Diagnostic(p, "key must be non-empty"))
        elif key in seen:
            out.append(Diagnostic(p, f"duplicate characteristic key {key!r}"))
        seen.add(key)
        if not _finite(item.get("value")):
            out.append(Diagnostic(p, "value must be a finite number"))
        role = item.get("role", "activator")
        if role not in {r.value for r in Role}:
            out.append(Diagnostic(p, f"unknown role {role!r}"))
        elif (role != "activator") != (item.get("target") is not None):
            out.append(Diagnostic(p, "target is required iff role is inhibitor or facilitator"))
        kind = item.get("kind", "intrinsic")
        if kind not in {k.value for k in Kind}:
            out.append(Diagnostic(p, f"unknown kind {kind!r}"))
        strength = item.get("strength", 0.0)
        if not (_finite(strength) and strength >= 0):
            out.append(Diagnostic(p, "strength must be finite and >= 0"))
    return out


def check_context(data: Any, path: str) -> list[Diagnostic]:
    if not isinstance(data, Mapping):
        return [Diagnostic(path, "context must be a mapping")]
    out = []
    if not data.get("id"):
        out.append(Diagnostic(path, "context id is required"))
    scale = data.get("scale") or {}
    if not isinstance(scale, Mapping):
        out.append(Diagnostic(f"{path}.scale", "scale must be a mapping"))
        scale = {}
    for key, s in scale.items():
        if not (_finite(s) and s > 0):
            out.append(Diagnostic(f"{path}.scale.{key}", "scale must be > 0"))
    if "default_scale" in data and not (_finite(data["default_scale"]) and data["default_scale"] > 0):
        out.append(Diagnostic(f"{path}.default_scale", "scale must be > 0"))
    k = data.get("selection_size", 1)
    if not (isinstance(k, int) and not isinstance(k, bool) and k >= 1):
        out.append(Diagnostic(f"{path}.selection_size", "selection_size must be an integer >= 1"))
    tau = data.get("match_threshold", 0.8)
    if not (_finite(tau) and 0 < tau <= 1):
        out.append(Diagnostic(f"{path}.match_threshold", "match_threshold must lie in (0, 1]"))
    return out


def validate(fragment: Any, path: str = "$") -> list[Diagnostic]:
    """Check type invariants of a raw fragment; never raises.

    Accepts a whole scenario document, a context, a composition or
    expression (anything with a ``model``), or a bare characteristic model.
    """
    if isinstance(fragment, Mapping):
        if "systems" in fragment:
            from harmonia.scenario import validate_document
            return validate_document(fragment)
        if "scale" in fragment or "selection_size" in fragment or "match_threshold" in fragment:
            return check_context(fragment, path)
        if "model" in fragment:
            return check_model(fragment["model"], f"{path}.model")
    return check_model(fragment, path)
