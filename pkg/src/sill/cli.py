"""Command line frontend.

Subcommands: ``check``, ``sub``, ``ssync``, ``esync``, ``meet``, ``run``,
``fmt``. Exit codes: 0 for success / a positive verdict, 1 for a negative
verdict or diagnostics, 2 for usage and syntax errors.
"""

from __future__ import annotations

import argparse
import sys

from .types import TOP, BOT, SharedC
from .parser import parse_program, parse_type, ParseError, Program, SystemDecl
from .printer import format_program, format_type
from .subtype import is_subtype
from .synchro import is_ssync, is_esync, meet_types, SsyncPreconditionError
from .typecheck import check_program
from .runtime import run, RunStatus


def _load(path: str) -> Program:
    with open(path, encoding="utf-8") as f:
        return parse_program(f.read())


def _checked(path: str) -> Program | None:
    prog = _load(path)
    diags, prog2 = check_program(prog)
    if diags:
        for d in diags:
            print(d, file=sys.stderr)
        return None
    return prog2


def cmd_check(args) -> int:
    prog = _load(args.file)
    diags, _ = check_program(prog)
    if diags:
        for d in diags:
            print(d, file=sys.stderr)
        return 1
    print("ok")
    return 0


def cmd_fmt(args) -> int:
    prog = _load(args.file)
    sys.stdout.write(format_program(prog))
    return 0


def cmd_sub(args) -> int:
    prog = _load(args.file)
    a = parse_type(args.a)
    b = parse_type(args.b)
    ok = is_subtype(prog.types, a, b)
    print("yes" if ok else "no")
    return 0 if ok else 1


def cmd_ssync(args) -> int:
    prog = _load(args.file)
    a = parse_type(args.a)
    b = parse_type(args.b)
    if args.constraint == "top":
        d = TOP
    elif args.constraint == "bot":
        d = BOT
    else:
        d = SharedC(parse_type(args.constraint))
    try:
        ok = is_ssync(prog.types, a, b, d)
    except SsyncPreconditionError:
        print("not a subtype pair", file=sys.stderr)
        return 2
    print("yes" if ok else "no")
    return 0 if ok else 1


def cmd_esync(args) -> int:
    prog = _load(args.file)
    a = parse_type(args.a)
    ok = is_esync(prog.types, a)
    print("yes" if ok else "no")
    return 0 if ok else 1


def cmd_meet(args) -> int:
    prog = _load(args.file)
    a = parse_type(args.a)
    b = parse_type(args.b)
    t, env2 = meet_types(prog.types, a, b)
    if t is None:
        print("none")
        return 1
    for d in env2.defs[len(prog.types.defs):]:
        print(f"type {d.name} = {format_type(d.body)}")
    print(format_type(t))
    return 0


def cmd_run(args) -> int:
    if args.no_static:
        prog = _load(args.file)
        _, prog = check_program(prog)  # elaborate, ignore diagnostics
    else:
        prog = _checked(args.file)
        if prog is None:
            return 1
    if args.main is not None:
        prog = Program(prog.types, prog.procs,
                       SystemDecl((), (args.main, ())))
    if prog.system is None:
        print("program has no system block", file=sys.stderr)
        return 2
    trace = None
    if args.trace:
        trace = open(args.trace, "w", encoding="utf-8")
    try:
        res = run(prog, seed=args.seed, max_steps=args.steps,
                  monitor=args.monitor, policy=args.policy, trace=trace)
    finally:
        if trace is not None:
            trace.close()
    print(f"{res.status.value} after {res.steps} steps")
    if res.violation is not None:
        print(res.violation, file=sys.stderr)
    return 1 if res.status is RunStatus.MONITOR_VIOLATION else 0


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="sill")
    sub = ap.add_subparsers(dest="cmd", required=True)

    p = sub.add_parser("check", help="typecheck a source file")
    p.add_argument("file")
    p.set_defaults(fn=cmd_check)

    p = sub.add_parser("fmt", help="canonical formatting")
    p.add_argument("file")
    p.set_defaults(fn=cmd_fmt)

    p = sub.add_parser("sub", help="decide a <= b")
    p.add_argument("file")
    p.add_argument("a")
    p.add_argument("b")
    p.set_defaults(fn=cmd_sub)

    p = sub.add_parser("ssync", help="decide the subsynchronizing judgment")
    p.add_argument("file")
    p.add_argument("a")
    p.add_argument("b")
    p.add_argument("--constraint", default="top",
                   help="release obligation: top, bot, or a shared type")
    p.set_defaults(fn=cmd_ssync)

    p = sub.add_parser("esync", help="decide equi-synchronization")
    p.add_argument("file")
    p.add_argument("a")
    p.set_defaults(fn=cmd_esync)

    p = sub.add_parser("meet", help="greatest lower bound of two types")
    p.add_argument("file")
    p.add_argument("a")
    p.add_argument("b")
    p.set_defaults(fn=cmd_meet)

    p = sub.add_parser("run", help="execute the system block")
    p.add_argument("file")
    p.add_argument("--main", default=None,
                   help="run this process (no arguments) instead of the "
                        "manifest main")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--steps", type=int, default=1000)
    p.add_argument("--monitor", action=argparse.BooleanOptionalAction,
                   default=True)
    p.add_argument("--policy", choices=("random", "fifo"), default="random")
    p.add_argument("--trace", default=None, help="JSONL trace output path")
    p.add_argument("--no-static", action="store_true",
                   help="skip the static check before running")
    p.set_defaults(fn=cmd_run)
    return ap


def main(argv: list[str] | None = None) -> int:
    ap = build_parser()
    try:
        args = ap.parse_args(argv)
    except SystemExit as e:
        return 2 if e.code not in (0, None) else 0
    try:
        return args.fn(args)
    except ParseError as e:
        print(str(e), file=sys.stderr)
        return 2
    except FileNotFoundError as e:
        print(str(e), file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
