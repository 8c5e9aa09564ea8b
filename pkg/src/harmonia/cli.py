"""Command line entry point: ``harmonia <command> ...``.

Exit status is 0 on success, 1 when a scenario fails to parse or
validate, 2 on usage errors.
"""
from __future__ import annotations

import argparse
import json
import os
import sys
from pathlib import Path

from harmonia.engine import run
from harmonia.errors import ParseError, ValidationError
from harmonia.helix import decode, encode, eval_and, eval_or, helix_add, helix_mul, helix_sub
from harmonia.model import classify_composition, Environment
from harmonia.scenario import load_scenario, read_document, validate_document
from harmonia.sensory import CycleConfig, optimum_frequency

TRACE_DIR_ENV = "HARMONIA_TRACE_DIR"


def _cmd_validate(args) -> int:
    doc = read_document(args.file)
    diagnostics = validate_document(doc)
    if not diagnostics:
        try:
            load_scenario(args.file)
        except ValidationError as exc:
            diagnostics = exc.diagnostics
    for d in diagnostics:
        print(d, file=sys.stderr)
    if diagnostics:
        return 1
    print(f"{args.file}: ok")
    return 0


def _trace_path(args) -> Path | None:
    if args.trace:
        return Path(args.trace)
    trace_dir = os.environ.get(TRACE_DIR_ENV)
    if trace_dir:
        return Path(trace_dir) / f"{Path(args.file).stem}.trace.jsonl"
    return None


def _cmd_run(args) -> int:
    scenario = load_scenario(args.file)
    path = _trace_path(args)
    out = open(path, "w") if path else sys.stdout
    try:
        def sink(record):
            out.write(record.to_json() + "\n")
            out.flush()

        result = run(scenario, seed=args.seed, ticks=args.ticks, sink=sink)
    finally:
        if path:
            out.close()
    if args.state_out:
        Path(args.state_out).write_text(json.dumps(result.final_state(), indent=2, sort_keys=True))
    if path:
        print(f"{len(result.records)} records -> {path}", file=sys.stderr)
    return 0


def _cmd_helix(args) -> int:
    if args.op == "add":
        p = helix_add(encode(args.x), args.y)
    elif args.op == "sub":
        p = helix_sub(encode(args.x), args.y)
    else:
        p = helix_mul(args.x, args.y)
    print(decode(p))
    if args.verbose:
        print(f"point {p}", file=sys.stderr)
    return 0


def _cmd_eval(args) -> int:
    if args.op == "and":
        outcome, expanded = eval_and(args.scores, args.inject)
    else:
        if args.inject:
            print("--inject applies only to 'and'", file=sys.stderr)
            return 2
        outcome, expanded = eval_or(args.scores)
    print(f"{outcome:g} {'expanded' if expanded else 'not-expanded'}")
    return 0


def _cmd_freq(args) -> int:
    print(optimum_frequency(CycleConfig(args.sbj, args.s, args.c)))
    return 0


def _cmd_hv(args) -> int:
    scenario = load_scenario(args.file)
    every = [c for spec in scenario.systems for c in spec.system.holdings]
    for spec in sorted(scenario.systems, key=lambda s: s.system.id):
        s = spec.system
        a = s.assess()
        env = Environment(s.environment or s.id, s.holdings)
        print(f"system {s.id}  expression={s.expression.id}  context={s.context.id}  "
              f"state={a.state:.6f}")
        print(f"  {'composition':<16}{'class':<9}{'hv':>10}{'significance':>14}  selected")
        for c in every:
            cls = classify_composition(c, env, s.expression, s.context).value
            if c.id in a.values:
                print(f"  {c.id:<16}{cls:<9}{a.values[c.id]:>10.6f}"
                      f"{a.significances[c.id]:>14.6f}  {'*' if c.id in a.selected else ''}")
            else:
                print(f"  {c.id:<16}{cls:<9}{'':>10}{'':>14}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="harmonia", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("validate", help="check a scenario file")
    p.add_argument("file")
    p.set_defaults(func=_cmd_validate)

    p = sub.add_parser("run", help="run a scenario and write its trace")
    p.add_argument("file")
    p.add_argument("--trace", help=f"trace output (default ${TRACE_DIR_ENV}/<name>.trace.jsonl, else stdout)")
    p.add_argument("--ticks", type=int)
    p.add_argument("--seed", type=int)
    p.add_argument("--state-out", help="write final holdings and pattern memory as JSON")
    p.set_defaults(func=_cmd_run)

    p = sub.add_parser("helix", help="integer arithmetic on the helix")
    p.add_argument("op", choices=["add", "sub", "mul"])
    p.add_argument("x", type=int)
    p.add_argument("y", type=int)
    p.add_argument("-v", "--verbose", action="store_true")
    p.set_defaults(func=_cmd_helix)

    p = sub.add_parser("eval", help="conjunction/disjunction expansion")
    p.add_argument("op", choices=["and", "or"])
    p.add_argument("--scores", type=float, nargs="+", required=True)
    p.add_argument("--inject", type=float, default=0.0)
    p.set_defaults(func=_cmd_eval)

    p = sub.add_parser("freq", help="optimum priming cycle frequency")
    p.add_argument("--sbj", type=int, required=True)
    p.add_argument("--s", type=float, required=True)
    p.add_argument("--c", type=float, required=True)
    p.set_defaults(func=_cmd_freq)

    p = sub.add_parser("hv", help="harmonic value / significance / state report")
    p.add_argument("file")
    p.set_defaults(func=_cmd_hv)
    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (ParseError, ValidationError) as exc:
        print(exc, file=sys.stderr)
        return 1
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
