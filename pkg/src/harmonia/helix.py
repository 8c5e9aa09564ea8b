"""Double-helix integer representation and expansion-based boolean logic.

Integers live on two intertwined strands, one unit per half turn. The
positive strand counts clockwise away from +0, the negative strand
counter-clockwise away from -0, and the strands meet at a zero junction
that costs no rotation to cross.
"""
from __future__ import annotations

import enum
import math
from dataclasses import dataclass
from typing import Iterator, Sequence

from harmonia.errors import EmptyOperands, InvalidAngle


class Strand(str, enum.Enum):
    POSITIVE = "+"
    NEGATIVE = "-"


class Turn(str, enum.Enum):
    CW = "cw"
    CCW = "ccw"


@dataclass(frozen=True)
class HelixPoint:
    strand: Strand
    mag: int

    def __post_init__(self):
        if self.mag < 0:
            raise ValueError("helix magnitude must be non-negative")

    def __str__(self):
        return f"{self.strand.value}{self.mag}"


POS_ZERO = HelixPoint(Strand.POSITIVE, 0)
NEG_ZERO = HelixPoint(Strand.NEGATIVE, 0)


def encode(z: int) -> HelixPoint:
    return HelixPoint(Strand.POSITIVE, z) if z >= 0 else HelixPoint(Strand.NEGATIVE, -z)


def decode(p: HelixPoint) -> int:
    return p.mag if p.strand is Strand.POSITIVE else -p.mag


def step(p: HelixPoint, turn: Turn) -> HelixPoint:
    """One half-turn. Leaving a zero onto the opposite strand crosses the junction for free."""
    if turn is Turn.CW:
        if p.strand is Strand.POSITIVE:
            return HelixPoint(Strand.POSITIVE, p.mag + 1)
        if p.mag > 0:
            return HelixPoint(Strand.NEGATIVE, p.mag - 1)
        return HelixPoint(Strand.POSITIVE, 1)
    if p.strand is Strand.NEGATIVE:
        return HelixPoint(Strand.NEGATIVE, p.mag + 1)
    if p.mag > 0:
        return HelixPoint(Strand.POSITIVE, p.mag - 1)
    return HelixPoint(Strand.NEGATIVE, 1)


def walk(p: HelixPoint, turn: Turn, units: int) -> Iterator[HelixPoint]:
    """Yield every intermediate point of ``units`` half-turns."""
    for _ in range(units):
        p = step(p, turn)
        yield p


def turn(p: HelixPoint, direction: Turn, units: int) -> HelixPoint:
    """Closed form of ``units`` consecutive steps in one direction."""
    if units == 0:
        return p
    forward = Strand.POSITIVE if direction is Turn.CW else Strand.NEGATIVE
    backward = Strand.NEGATIVE if direction is Turn.CW else Strand.POSITIVE
    if p.strand is forward:
        return HelixPoint(forward, p.mag + units)
    if units <= p.mag:
        return HelixPoint(backward, p.mag - units)
    return HelixPoint(forward, units - p.mag)


def helix_add(x: HelixPoint, y: int) -> HelixPoint:
    return turn(x, Turn.CW if y >= 0 else Turn.CCW, abs(y))


def helix_sub(x: HelixPoint, y: int) -> HelixPoint:
    return turn(x, Turn.CCW if y >= 0 else Turn.CW, abs(y))


def helix_mul(x: int, y: int) -> HelixPoint:
    """|x| repetitions of a |y|-unit turn from +0; clockwise when the signs agree."""
    direction = Turn.CW if (x >= 0) == (y >= 0) or x == 0 or y == 0 else Turn.CCW
    p = POS_ZERO
    for _ in range(abs(x)):
        p = turn(p, direction, abs(y))
    return p


# -- logic -----------------------------------------------------------------

@dataclass(frozen=True)
class PredicateScore:
    theta: float
    score: float
    present: bool = True

    @property
    def truth(self) -> bool:
        return self.score > 0


def predicate_score(theta: float, present: bool = True) -> PredicateScore:
    if not (0.0 <= theta <= math.pi):
        raise InvalidAngle(f"theta {theta!r} outside [0, pi]")
    if not present:
        return PredicateScore(theta, -1.0, False)
    # cos(pi/2) is ~6e-17; the truth boundary sits exactly at pi/2
    score = 0.0 if theta == math.pi / 2 else math.cos(theta)
    return PredicateScore(theta, score, True)


def predicate_from_value(hv: float) -> PredicateScore:
    """Treat a whole-model harmonic value as a single predicate."""
    hv = max(-1.0, min(1.0, hv))
    return PredicateScore(math.acos(hv), hv, True)


def score_of(value: PredicateScore | float) -> float:
    return value.score if isinstance(value, PredicateScore) else float(value)


def eval_and(operands: Sequence[PredicateScore | float],
             injected_activation: float = 0.0) -> tuple[float, bool]:
    """Serial expansion: the weakest operand gates the outcome; injection can force it."""
    if not operands:
        raise EmptyOperands("conjunction needs at least one operand")
    if injected_activation < 0:
        raise ValueError("injected activation must be >= 0")
    outcome = min(score_of(o) for o in operands) + injected_activation
    return outcome, outcome > 0


def eval_or(operands: Sequence[PredicateScore | float]) -> tuple[float, bool]:
    if not operands:
        raise EmptyOperands("disjunction needs at least one operand")
    outcome = max(score_of(o) for o in operands)
    return outcome, outcome > 0
