"""Command-line front end: ``meadowprog run|compile|normalize|canon|extract|verify``.

Exit codes: 0 success, 1 usage or parse error, 2 divergence, 3 resource
guard, 4 verification mismatch.
"""
from __future__ import annotations

import argparse
import sys
from pathlib import Path

from .compile import compile_term, verify_equivalence
from .meadow import MeadowError, meadow_from_selector
from .normalize import (NormalizationLimitError, SignedTermError,
                        signed_standard_form, smf_normalize, ssmf_normalize,
                        to_sum_of_quotients)
from .pga import PGASyntaxError, format_pga, parse_pga, second_canonical_form
from .term import TermSyntaxError, format_term, has_inv, parse_term, term_depth
from .thread import Terminated, extract, run

EXIT_OK, EXIT_USAGE, EXIT_DIVERGENT, EXIT_GUARD, EXIT_MISMATCH = 0, 1, 2, 3, 4


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    # argparse exits with 2 on usage errors; 2 means divergence here.
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def _natural(minimum):
    def parse(text):
        value = int(text)
        if value < minimum:
            raise argparse.ArgumentTypeError(f"must be at least {minimum}")
        return value
    return parse


def build_parser() -> argparse.ArgumentParser:
    common = _Parser(add_help=False)
    common.add_argument("--meadow", default=None,
                        help="backend: q, q-signed or mod:<n>")
    common.add_argument("--bound", type=_natural(1), default=10_000)
    common.add_argument("--samples", type=_natural(1), default=100)
    common.add_argument("--seed", type=int, default=0)
    common.add_argument("--depth-guard", type=_natural(0), default=12)
    common.add_argument("--verbose", action="store_true")

    parser = _Parser(prog="meadowprog", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True,
                                parser_class=_Parser)

    p = sub.add_parser("run", parents=[common], help="run a .pga program")
    p.add_argument("--inputs", default="", help="comma-separated input values")
    p.add_argument("program")

    p = sub.add_parser("compile", parents=[common],
                       help="compile a term to a straight-line program")
    p.add_argument("--term", help="term text")
    p.add_argument("--signed", action="store_true")
    p.add_argument("-o", "--output", help="write the program to this .pga file")
    p.add_argument("source", nargs="?", help="term text or a file holding one")

    p = sub.add_parser("normalize", parents=[common], help="print a normal form")
    p.add_argument("--form", choices=["smf", "soq", "ssmf", "signed"],
                   default="smf")
    p.add_argument("--term", help="term text")
    p.add_argument("source", nargs="?", help="term text or a file holding one")

    p = sub.add_parser("canon", parents=[common],
                       help="print the second canonical form")
    p.add_argument("program")

    p = sub.add_parser("extract", parents=[common],
                       help="print the extracted thread as equations")
    p.add_argument("program")

    p = sub.add_parser("verify", parents=[common],
                       help="compare a program with a term")
    p.add_argument("--term", help="term text")
    p.add_argument("program")
    p.add_argument("source", nargs="?", help="term text or a file holding one")
    return parser


def _read_program(path: str):
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        raise UsageError(f"cannot read {path}: {exc.strerror}") from exc
    return parse_pga(text)


def _read_term(args):
    text = args.term
    if text is None:
        if args.source is None:
            raise UsageError("no term given (use --term or a positional term)")
        path = Path(args.source)
        text = path.read_text(encoding="utf-8") if path.is_file() else args.source
    elif args.source is not None:
        raise UsageError("give the term either with --term or positionally")
    return parse_term(text)


def _guard(args, t):
    depth = term_depth(t)
    if depth > args.depth_guard:
        raise _GuardError(f"term depth {depth} exceeds --depth-guard "
                          f"{args.depth_guard}")


class _GuardError(Exception):
    pass


def _cmd_run(args, out):
    meadow = meadow_from_selector(args.meadow or "q")
    seq = _read_program(args.program)
    inputs = [meadow.parse(v) for v in args.inputs.split(",")] \
        if args.inputs.strip() else []
    outcome = run(seq, inputs, meadow, args.bound)
    if isinstance(outcome, Terminated):
        print(f"result: {outcome.output} steps: {outcome.steps}", file=out)
        return EXIT_OK
    print(f"divergent: {outcome.reason}", file=out)
    return EXIT_DIVERGENT


def _cmd_compile(args, out):
    t = _read_term(args)
    _guard(args, t)
    meadow = meadow_from_selector(args.meadow or ("q-signed" if args.signed else "q"))
    report = compile_term(t, signed=args.signed)
    report.verification = verify_equivalence(report.program, t, meadow,
                                             args.samples, args.seed, args.bound)
    program_text = format_pga(report.program.to_instr_seq())
    if args.output:
        Path(args.output).write_text(program_text + "\n", encoding="utf-8")
    else:
        print(f"program: {program_text}", file=out)
    for line in report.lines(args.verbose):
        print(line, file=out)
    return EXIT_OK if report.verification.passed else EXIT_MISMATCH


def _cmd_normalize(args, out):
    t = _read_term(args)
    _guard(args, t)
    if args.form == "smf":
        print(format_term(smf_normalize(t)), file=out)
    elif args.form == "ssmf":
        print(format_term(ssmf_normalize(t)), file=out)
    elif args.form == "soq":
        print(to_sum_of_quotients(t, signed=False), file=out)
    elif has_inv(t):
        print(to_sum_of_quotients(t, signed=True), file=out)
        for line in _signed_parts(t):
            print(line, file=out)
    else:
        print(signed_standard_form(t), file=out)
    return EXIT_OK


def _signed_parts(t):
    soq = to_sum_of_quotients(t, signed=True)
    for i, q in enumerate(soq):
        yield f"numerator {i}: {signed_standard_form(q.numerator)}"
        yield f"denominator {i}: {signed_standard_form(q.denominator)}"


def _cmd_canon(args, out):
    print(format_pga(second_canonical_form(_read_program(args.program))), file=out)
    return EXIT_OK


def _cmd_extract(args, out):
    print(extract(_read_program(args.program)).format(), file=out)
    return EXIT_OK


def _cmd_verify(args, out):
    seq = _read_program(args.program)
    t = _read_term(args)
    meadow = meadow_from_selector(args.meadow or "q")
    report = verify_equivalence(seq, t, meadow, args.samples, args.seed, args.bound)
    print(report.summary(), file=out)
    return EXIT_OK if report.passed else EXIT_MISMATCH


_COMMANDS = {"run": _cmd_run, "compile": _cmd_compile,
             "normalize": _cmd_normalize, "canon": _cmd_canon,
             "extract": _cmd_extract, "verify": _cmd_verify}


def main(argv=None, out=None) -> int:
    out = out or sys.stdout
    args = build_parser().parse_args(argv)
    try:
        return _COMMANDS[args.command](args, out)
    except (_GuardError, NormalizationLimitError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_GUARD
    except (UsageError, PGASyntaxError, TermSyntaxError, MeadowError,
            SignedTermError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
