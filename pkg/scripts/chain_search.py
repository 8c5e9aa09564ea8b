#!/usr/bin/env python3
"""Show why the three-party fixture needs a chain.

Every pair is searched exhaustively (no chain within the depth bound),
then the full search is run and the chain it finds is printed step by step.
"""
import argparse
import itertools
import time

from harmonia.exchange import chain_outcome, find_chain
from harmonia.scenario import fixture_path, load_scenario


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("scenario", nargs="?", default=str(fixture_path("figure3_trade")))
    ap.add_argument("--depth", type=int, default=6)
    args = ap.parse_args()
    systems = [spec.system for spec in load_scenario(args.scenario).systems]
    for s in systems:
        print(f"{s.id}: state {s.state:.4f}, holds {', '.join(c.id for c in s.holdings)}")
    for a, b in itertools.combinations(systems, 2):
        t = time.perf_counter()
        found = find_chain([a, b], args.depth)
        verdict = "chain found" if found else "no chain"
        print(f"pair {a.id}-{b.id}: {verdict} (depth <= {args.depth}, {time.perf_counter() - t:.2f}s)")
    t = time.perf_counter()
    chain = find_chain(systems, args.depth)
    if chain is None:
        print(f"all parties: no chain within depth {args.depth}")
        return
    print(f"all parties: {len(chain.actions)}-step chain in {time.perf_counter() - t:.2f}s")
    for i, action in enumerate(chain.actions, 1):
        print(f"  {i}. {action}")
    out = chain_outcome(systems, chain)
    for sid in sorted(out.motivation):
        print(f"  return {sid}: {out.motivation[sid]:+.4f}")
    print(f"  exchange value {out.xv:.4f}, efficiency {out.efficiency:.4f}")


if __name__ == "__main__":
    main()
