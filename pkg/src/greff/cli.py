"""Command line driver.

Subcommands cover the whole pipeline: `check` reports a program's
typing, `elab` prints its cast-calculus elaboration, `run` evaluates it
on the frame machine, and `graduality` / `conformance` drive the
randomized metatheory batches.

Exit codes are part of the interface and depend only on the input file,
the flags, and the seed:

    0   success (a run ends in a value)
    1   static error: lexing, parsing, elaboration, or typechecking
    2   the machine stopped with a cast error
    3   fuel ran out
    4   a conformance or graduality batch found a violation
    5   an operation reached the top level unhandled
    64  bad invocation or unreadable input
"""

from __future__ import annotations

import argparse
import random
import sys
from dataclasses import dataclass

from . import conformance as conf
from . import core
from . import elaborate
from . import eval as ev
from . import surface
from .surface import ParseError

EXIT_OK = 0
EXIT_STATIC = 1
EXIT_CAST_ERROR = 2
EXIT_FUEL = 3
EXIT_VIOLATION = 4
EXIT_UNCAUGHT = 5
EXIT_USAGE = 64


@dataclass(frozen=True)
class RunConfig:
    """Knobs shared by the evaluating and batching subcommands."""

    fuel: int = ev.DEFAULT_FUEL
    tracing: bool = False
    seed: int = 0
    cases: int = 25

    def __post_init__(self):
        if self.fuel < 1:
            raise ValueError("fuel must be at least 1")
        if self.cases < 1:
            raise ValueError("cases must be at least 1")


class _UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    # argparse exits with status 2; invocation problems must map to 64
    def error(self, message):
        raise _UsageError(message)


def _read(path: str) -> str:
    try:
        with open(path, "r", encoding="utf-8") as fh:
            return fh.read()
    except OSError as e:
        raise _UsageError(f"cannot read {path}: {e.strerror}")


def _elab(path: str) -> elaborate.ElabResult:
    return elaborate.elab_source(_read(path))


def cmd_check(path: str, out=sys.stdout) -> int:
    res = _elab(path)
    print(f"{res.eff} ! {res.val}", file=out)
    return EXIT_OK


def cmd_elab(path: str, out=sys.stdout) -> int:
    res = _elab(path)
    print(core.pretty(res.term), file=out)
    return EXIT_OK


def cmd_run(path: str, cfg: RunConfig, out=sys.stdout, err=sys.stderr) -> int:
    res = _elab(path)
    trace = None
    if cfg.tracing:

        def trace(rule: str, detail: str) -> None:
            line = f"{rule} {detail}" if detail else rule
            print(line, file=err)

    result = ev.run(res.sig, res.term, fuel=cfg.fuel, trace=trace)
    o = result.outcome
    if isinstance(o, ev.Value):
        if isinstance(o.value, core.StrLit):
            print(o.value.value, file=out)
        else:
            print(core.pretty(o.value), file=out)
        return EXIT_OK
    if isinstance(o, ev.Error):
        print("cast error", file=err)
        return EXIT_CAST_ERROR
    if isinstance(o, ev.UncaughtRaise):
        print(f"uncaught operation: {o.op}", file=err)
        return EXIT_UNCAUGHT
    print(f"out of fuel after {o.steps} steps", file=err)
    return EXIT_FUEL


def cmd_graduality(path: str, cfg: RunConfig, out=sys.stdout, err=sys.stderr) -> int:
    """Blur the file's effect annotations and compare against the original."""
    program = surface.parse_program(_read(path))
    if conf.count_effect_sites(program) == 0:
        print("no effect annotation sites to blur", file=err)
        return EXIT_OK
    violations = 0
    for i in range(cfg.cases):
        case_seed = cfg.seed * 100_003 + i
        pair = conf.imprecisify(program, random.Random(case_seed))
        assert pair is not None
        res = conf.check_graduality_pair(pair, fuel=cfg.fuel)
        rec = conf.CaseRecord(
            "graduality",
            case_seed,
            str(res.verdict).split(" ")[0],
            conf.describe_outcome(res.left) if res.left is not None else "static",
            conf.describe_outcome(res.right) if res.right is not None else "static",
            0,
            0,
        )
        print(rec.to_json(), file=out)
        if rec.verdict == "violated":
            violations += 1
    print(f"{cfg.cases} cases, {violations} violations", file=err)
    return EXIT_VIOLATION if violations else EXIT_OK


def cmd_conformance(cfg: RunConfig, out=sys.stdout, err=sys.stderr) -> int:
    report = conf.run_conformance(
        seed=cfg.seed,
        cases_per_law=cfg.cases,
        fuel=cfg.fuel,
        emit=lambda line: print(line, file=out),
    )
    bad = report.violations
    print(f"{len(report.records)} cases, {len(bad)} violations", file=err)
    return EXIT_VIOLATION if bad else EXIT_OK


def _build_parser() -> _Parser:
    p = _Parser(prog="greff", description=__doc__.splitlines()[0])
    sub = p.add_subparsers(dest="command", required=True)

    c = sub.add_parser("check", help="typecheck a program and print its typing")
    c.add_argument("file")

    e = sub.add_parser("elab", help="print a program's cast-calculus elaboration")
    e.add_argument("file")

    r = sub.add_parser("run", help="evaluate a program on the frame machine")
    r.add_argument("file")
    r.add_argument("--fuel", type=int, default=ev.DEFAULT_FUEL)
    r.add_argument("--trace", action="store_true")

    g = sub.add_parser("graduality", help="blur a file's annotations and compare")
    g.add_argument("file")
    g.add_argument("--seed", type=int, default=0)
    g.add_argument("--cases", type=int, default=25)
    g.add_argument("--fuel", type=int, default=200_000)

    k = sub.add_parser("conformance", help="run the randomized law batches")
    k.add_argument("--seed", type=int, default=0)
    k.add_argument("--cases", type=int, default=25)
    k.add_argument("--fuel", type=int, default=200_000)

    return p


def main(argv=None, out=sys.stdout, err=sys.stderr) -> int:
    parser = _build_parser()
    try:
        ns = parser.parse_args(argv)
        if ns.command == "check":
            return cmd_check(ns.file, out=out)
        if ns.command == "elab":
            return cmd_elab(ns.file, out=out)
        if ns.command == "run":
            cfg = RunConfig(fuel=ns.fuel, tracing=ns.trace)
            return cmd_run(ns.file, cfg, out=out, err=err)
        if ns.command == "graduality":
            cfg = RunConfig(fuel=ns.fuel, seed=ns.seed, cases=ns.cases)
            return cmd_graduality(ns.file, cfg, out=out, err=err)
        cfg = RunConfig(fuel=ns.fuel, seed=ns.seed, cases=ns.cases)
        return cmd_conformance(cfg, out=out, err=err)
    except _UsageError as e:
        print(f"usage error: {e}", file=err)
        return EXIT_USAGE
    except ValueError as e:
        print(f"usage error: {e}", file=err)
        return EXIT_USAGE
    except (ParseError, elaborate.ElabError, core.TypeCheckError) as e:
        print(f"static error: {e}", file=err)
        return EXIT_STATIC


if __name__ == "__main__":
    sys.exit(main())
