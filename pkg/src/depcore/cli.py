"""Batch front end: program analysis reports and the sampling oracle suites."""

from __future__ import annotations

import argparse
import random
import sys

from .abstract import analyze_program
from .concrete import check_noninterference, evaluate
from .consistency import differential_check
from .errors import DepcoreError, EvalTypeError, ParseError, ResourceError
from .fixtures import TERMINATION_FIXTURES
from .generator import ProgramGenerator
from .report import RunConfig, analyze_file
from .syntax import parse, pretty_print

EX_USAGE = 64

ORACLE_SUITES = ("context-lemma", "noninterference", "consistency", "termination")


class _ArgumentParser(argparse.ArgumentParser):
    """argparse variant that exits with the usage status code (64)."""

    def error(self, message: str):
        self.print_usage(sys.stderr)
        self.exit(EX_USAGE, f"{self.prog}: error: {message}\n")


def _build_parser() -> _ArgumentParser:
    parser = _ArgumentParser(prog="depcore",
                             description="dependency analyzer for the core language")
    sub = parser.add_subparsers(dest="command", required=True)

    analyze = sub.add_parser("analyze", help="analyze one program")
    analyze.add_argument("file", help="program file (.ljs)")
    analyze.add_argument("--engine", choices=("concrete", "abstract", "both"),
                         default="both")
    analyze.add_argument("--config", help="JSON config file")
    analyze.add_argument("--format", choices=("text", "json"), default="text")
    analyze.add_argument("--deny-unsanitized", metavar="MODE",
                         help="exit 2 when the final value carries a mark in MODE")

    oracle = sub.add_parser("oracle", help="run a property-sampling suite")
    oracle.add_argument("suite", choices=ORACLE_SUITES)
    oracle.add_argument("--cases", type=int, default=200)
    oracle.add_argument("--seed", type=int, default=0)
    return parser


def _run_analyze(args) -> int:
    try:
        if args.config:
            config = RunConfig.from_file(args.config, engine=args.engine,
                                         report_format=args.format)
        else:
            config = RunConfig(engine=args.engine, report_format=args.format)
    except (OSError, ValueError) as exc:
        print(f"depcore: bad configuration: {exc}", file=sys.stderr)
        return EX_USAGE

    try:
        outcome = analyze_file(args.file, config)
    except OSError as exc:
        print(f"depcore: cannot read program: {exc}", file=sys.stderr)
        return 1
    except (ParseError, EvalTypeError, ResourceError) as exc:
        print(f"depcore: analysis error: {exc}", file=sys.stderr)
        return 1

    report = outcome.report
    print(report.to_json() if config.report_format == "json" else report.to_text())

    if args.deny_unsanitized is not None:
        offending = [m for m in outcome.marks if m.mode == args.deny_unsanitized]
        if offending:
            for mark in sorted(offending, key=lambda m: m.label.id):
                print(f"depcore: unsanitized dependency {mark}", file=sys.stderr)
            return 2
    return 0


def _oracle_context_lemma(cases: int, seed: int) -> int:
    rng = random.Random(seed)
    gen = ProgramGenerator(rng, allow_untrace=False)
    failures = 0
    for i in range(cases):
        program = gen.program()
        violations = []

        def observer(ctx, result):
            if not ctx <= result.marks:
                violations.append((ctx, result))

        try:
            evaluate(program, observer=observer)
        except (EvalTypeError, ResourceError):
            continue
        if violations:
            failures += 1
            print(f"FAIL case {i}: context marks escaped the result")
            print(pretty_print(program))
    print(f"context-lemma: {cases} cases, {failures} failures")
    return 1 if failures else 0


def _oracle_noninterference(cases: int, seed: int) -> int:
    rng = random.Random(seed)
    gen = ProgramGenerator(rng)
    failures = 0
    inconclusive = 0
    for i in range(cases):
        program, label = gen.single_trace_program()
        bodies = gen.substitution_bodies(2)
        verdict = check_noninterference(program, label, bodies)
        if verdict.is_fail:
            failures += 1
            print(f"FAIL case {i}: {verdict.reason}")
            print(pretty_print(program))
        elif verdict.kind == "inconclusive":
            inconclusive += 1
    print(f"noninterference: {cases} cases, {failures} failures, "
          f"{inconclusive} inconclusive")
    return 1 if failures else 0


def _oracle_consistency(cases: int, seed: int) -> int:
    rng = random.Random(seed)
    gen = ProgramGenerator(rng)
    failures = 0
    inconclusive = 0
    for i in range(cases):
        program = gen.program()
        verdict = differential_check(program)
        if verdict.is_fail:
            failures += 1
            print(f"FAIL case {i}: {verdict.reason}")
            print(pretty_print(program))
        elif verdict.kind == "inconclusive":
            inconclusive += 1
    print(f"consistency: {cases} cases, {failures} failures, "
          f"{inconclusive} inconclusive")
    return 1 if failures else 0


def _oracle_termination(cases: int, seed: int) -> int:
    failures = 0
    for name, source in TERMINATION_FIXTURES:
        program = parse(source, filename=name)
        try:
            report = analyze_program(program, keep_trajectory=True)
        except ResourceError as exc:
            failures += 1
            print(f"FAIL {name}: {exc}")
            continue
        chain_ok = all(prev.leq(cur) for prev, cur in
                       zip(report.trajectory, report.trajectory[1:]))
        if not chain_ok:
            failures += 1
            print(f"FAIL {name}: iterates do not form an ascending chain")
        else:
            print(f"ok {name}: stable after {report.iterations} iterations")
    print(f"termination: {len(TERMINATION_FIXTURES)} fixtures, {failures} failures")
    return 1 if failures else 0


def _run_oracle(args) -> int:
    runner = {
        "context-lemma": _oracle_context_lemma,
        "noninterference": _oracle_noninterference,
        "consistency": _oracle_consistency,
        "termination": _oracle_termination,
    }[args.suite]
    return runner(args.cases, args.seed)


def main(argv=None) -> int:
    parser = _build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return exc.code if isinstance(exc.code, int) else EX_USAGE
    if args.command == "analyze":
        return _run_analyze(args)
    if args.command == "oracle":
        return _run_oracle(args)
    raise DepcoreError(f"unknown command {args.command!r}")


if __name__ == "__main__":
    sys.exit(main())
