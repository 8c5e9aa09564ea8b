"""Reference implementations written without importing the code under test.

Each oracle recomputes a quantity from its definition using plain Python
data (dicts, tuples, fractions) so agreement with the library is evidence,
not tautology.
"""
from __future__ import annotations

import itertools
import math
from fractions import Fraction


def rms(xs):
    total = 0.0
    for x in xs:
        total += x * x
    return (total / len(xs)) ** 0.5


def angle(a, b, scale):
    d = abs(a - b)
    return math.pi if d >= scale else math.pi * d / scale


def plain_hv(comp, expr, scales, default=1.0):
    """HV of a role-free composition given as {key: value} dicts."""
    if not comp:
        return 0.0
    total = 0.0
    for k, v in comp.items():
        if k in expr:
            total += math.cos(angle(v, expr[k], scales.get(k, default)))
    return max(-1.0, min(1.0, total / len(comp)))


def exact_frequency(c_sbj, c_s, c_c):
    """Smallest k >= 1 with k * sqrt((c_s^2 + c_c^2) / 2) >= c_sbj, in exact rationals."""
    s, c, n = Fraction(c_s), Fraction(c_c), Fraction(c_sbj)
    mean_sq = (s * s + c * c) / 2
    k = max(1, math.isqrt(int(n * n / mean_sq)))
    while k > 1 and (k - 1) ** 2 * mean_sq >= n * n:
        k -= 1
    while k * k * mean_sq < n * n:
        k += 1
    return k


# -- helix ------------------------------------------------------------------

def sim_step(point, cw):
    """Unit step on a (sign, magnitude) double strand; zero crossing is free."""
    sign, mag = point
    ahead = "+" if cw else "-"
    if sign == ahead:
        return (sign, mag + 1)
    if mag > 0:
        return (sign, mag - 1)
    return (ahead, 1)


def sim_walk(point, cw, units):
    for _ in range(units):
        point = sim_step(point, cw)
    return point


def sim_value(point):
    sign, mag = point
    return mag if sign == "+" else -mag


# -- exchange ---------------------------------------------------------------

def party_states(systems, allocation):
    """State of every system for an allocation {system_id: [Composition, ...]}."""
    from harmonia.calculus import harmonic_value

    out = {}
    for s in systems:
        vals = [harmonic_value(c, s.expression, s.context).value for c in allocation[s.id]]
        active = sorted((v for v in vals if v > 0), reverse=True)
        chosen = active[:s.context.selection_size]
        out[s.id] = rms(chosen) if chosen else 0.0
    return out


def pareto(returns, tol=1e-12):
    rs = list(returns)
    return all(r >= -tol for r in rs) and any(r > tol for r in rs)


def _variants(comp, owner_specs):
    """Ways an item can end up: whole, or split by any party that can transform it."""
    from harmonia.transformation import simplify

    yield ("whole", [comp])
    for spec in owner_specs:
        try:
            parts = simplify(comp, spec)
        except (KeyError, ValueError):
            continue
        if parts != [comp]:
            yield ("split", parts)


def best_allocation(systems, include_transforms=True):
    """Enumerate every final allocation of the parties' items.

    Each item may stay whole or be split by any transform some party
    owns, and every resulting piece may land with any party. This is a
    superset of what any chain among them can reach. Returns the first
    Pareto-improving allocation found as (allocation, returns), or None.
    """
    systems = list(systems)
    before = party_states(systems, {s.id: list(s.holdings) for s in systems})
    specs = [sp for s in systems for sp in s.transforms] if include_transforms else []
    items = [c for s in systems for c in s.holdings]
    per_item = [list(_variants(c, specs)) for c in items]
    for choice in itertools.product(*per_item):
        pieces = [p for _, parts in choice for p in parts]
        for sides in itertools.product(range(len(systems)), repeat=len(pieces)):
            alloc = {s.id: [] for s in systems}
            for piece, side in zip(pieces, sides):
                alloc[systems[side].id].append(piece)
            after = party_states(systems, alloc)
            rs = [after[s.id] - before[s.id] for s in systems]
            if pareto(rs):
                return alloc, rs
    return None


def best_direct_exchange(s1, s2, include_transforms=True):
    return best_allocation([s1, s2], include_transforms)


def bfs_chain_exists(systems, max_depth):
    """Breadth-first search over trade / defer / settle moves (no transforms).

    State: per-party item sets plus the multiset of open debts
    (debtor, creditor). Accepting: no debts, at least two parties changed,
    Pareto returns. Returns the minimal depth or None.
    """
    ids = [s.id for s in systems]
    by_id = {c.id: c for s in systems for c in s.holdings}
    start = tuple(frozenset(c.id for c in s.holdings) for s in systems)
    before = party_states(systems, {s.id: list(s.holdings) for s in systems})

    def accepting(hold, debts):
        if debts or sum(h != h0 for h, h0 in zip(hold, start)) < 2:
            return False
        after = party_states(systems, {i: [by_id[x] for x in h] for i, h in zip(ids, hold)})
        return pareto(after[i] - before[i] for i in ids)

    frontier = {(start, ())}
    seen = set(frontier)
    n = len(systems)
    for depth in range(1, max_depth + 1):
        nxt = set()
        for hold, debts in frontier:
            succ = []
            for i, j in itertools.permutations(range(n), 2):
                for a in hold[i]:
                    for b in hold[j]:
                        if i < j:
                            h = list(hold)
                            h[i] = h[i] - {a} | {b}
                            h[j] = h[j] - {b} | {a}
                            succ.append((tuple(h), debts))
                if (i, j) not in debts:
                    for b in hold[j]:
                        h = list(hold)
                        h[i] = h[i] | {b}
                        h[j] = h[j] - {b}
                        succ.append((tuple(h), tuple(sorted(debts + ((i, j),)))))
            for k, (i, j) in enumerate(debts):
                for a in hold[i]:
                    h = list(hold)
                    h[i] = h[i] - {a}
                    h[j] = h[j] | {a}
                    succ.append((tuple(h), debts[:k] + debts[k + 1:]))
            for st in succ:
                if st in seen:
                    continue
                if accepting(*st):
                    return depth
                seen.add(st)
                nxt.add(st)
        frontier = nxt
    return None
