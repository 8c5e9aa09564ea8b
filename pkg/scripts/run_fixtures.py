#!/usr/bin/env python3
"""Run every shipped fixture, write its trace, and print a per-kind record count."""
import argparse
from collections import Counter
from pathlib import Path

from harmonia.engine import run
from harmonia.scenario import fixture_path, load_scenario

FIXTURES = ["figure3_trade", "self_sustaining_cycle", "priming_loop"]


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--out", default="traces", help="directory for .trace.jsonl files")
    ap.add_argument("--seed", type=int)
    args = ap.parse_args()
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    for name in FIXTURES:
        result = run(load_scenario(fixture_path(name)), seed=args.seed)
        path = out / f"{name}.trace.jsonl"
        path.write_text("".join(line + "\n" for line in result.trace_lines()))
        counts = Counter(r.kind for r in result.records)
        summary = ", ".join(f"{k}={counts[k]}" for k in sorted(counts))
        print(f"{name:<24} {len(result.records):>4} records  {summary}")
        print(f"{'':<24} -> {path}")


if __name__ == "__main__":
    main()
