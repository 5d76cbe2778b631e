"""``charon`` command line.

Exit codes: 0 success, 2 certificate mismatch (``verify``), 64 usage error,
otherwise the ``exit_code`` of the pipeline error that stopped the run.
"""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

from . import __version__
from .bench import bench, env_seed, gen_corpus
from .canon import canon
from .cert_high import cert_high
from .cert_low import cert_low
from .certnum import cert_parse, cert_to_string, first_divergence, tower_to_str
from .compiler import compile_program
from .errors import CertificationError, CharonError
from .frontend.parser import parse_source
from .ir import IRProgram, parse_ir, serialize
from .vm import run

EXIT_MISMATCH = 2
EXIT_USAGE = 64


class _Parser(argparse.ArgumentParser):
    def error(self, message: str):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def _read(path: str) -> str:
    if path == "-":
        return sys.stdin.read()
    try:
        return Path(path).read_text()
    except OSError as e:
        raise CharonError(f"cannot read {path}: {e.strerror}") from None


def _ir_of(path: str) -> IRProgram:
    """IR from a ``.ch`` source (compiled) or an IR text file."""
    text = _read(path)
    if path.endswith(".ch"):
        return compile_program(parse_source(text))[0]
    return parse_ir(text)


def _factor(cert, i: int) -> str:
    if i > len(cert):
        return "<absent>"
    f = cert.factors[i - 1]
    return f"{f.prime}^({tower_to_str(f.exponent)})"


def cmd_compile(a) -> int:
    ir, _, _ = compile_program(parse_source(_read(a.file)))
    sys.stdout.write(serialize(ir))
    return 0


def cmd_cert_high(a) -> int:
    print(cert_to_string(cert_high(parse_source(_read(a.file)))))
    return 0


def cmd_cert_low(a) -> int:
    print(cert_to_string(cert_low(_ir_of(a.file))))
    return 0


def cmd_verify(a) -> int:
    prog = parse_source(_read(a.file))
    ir = parse_ir(_read(a.ir)) if a.ir else compile_program(prog)[0]
    high = cert_high(prog)
    try:
        low = cert_low(ir)
    except CertificationError as e:
        print(f"verify: IR rejected: {e}", file=sys.stderr)
        return EXIT_MISMATCH
    i = first_divergence(high, low)
    if i is None:
        print(f"verify: ok ({len(high)} factors)")
        return 0
    print(
        f"verify: certificates differ at factor {i}: high {_factor(high, i)} vs low {_factor(low, i)}",
        file=sys.stderr,
    )
    return EXIT_MISMATCH


def cmd_canon(a) -> int:
    sys.stdout.write(canon(cert_parse(_read(a.file).strip())))
    return 0


def cmd_run(a) -> int:
    res = run(_ir_of(a.file), a.arg, a.steps)
    print(res.value)
    return 0


def cmd_bench(a) -> int:
    res = bench(a.corpus, a.runs)
    if a.output:
        Path(a.output).write_text(res.csv())
    else:
        sys.stdout.write(res.csv())
    print(res.summary(), file=sys.stderr)
    return 0


def cmd_gen_corpus(a) -> int:
    seed = a.seed if a.seed is not None else env_seed()
    for name, _ in gen_corpus(seed, a.count, (a.min_size, a.max_size), a.out_dir):
        print(Path(a.out_dir) / name)
    return 0


def _number(text: str) -> int | float:
    try:
        return int(text, 0)
    except ValueError:
        return float(text)


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="charon", description="Certifying compiler for CharonLang.")
    p.add_argument("--version", action="version", version=f"charon {__version__}")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    s = sub.add_parser("compile", help="compile a .ch file to IR text")
    s.add_argument("file")
    s.set_defaults(fn=cmd_compile)

    s = sub.add_parser("cert-high", help="certificate of a .ch program")
    s.add_argument("file")
    s.set_defaults(fn=cmd_cert_high)

    s = sub.add_parser("cert-low", help="certificate of an IR file (or a .ch file, compiled first)")
    s.add_argument("file")
    s.set_defaults(fn=cmd_cert_low)

    s = sub.add_parser("verify", help="check that both certificates agree")
    s.add_argument("file")
    s.add_argument("--ir", help="IR file to check instead of compiling FILE")
    s.set_defaults(fn=cmd_verify)

    s = sub.add_parser("canon", help="rebuild the canonical program from a certificate ('-' for stdin)")
    s.add_argument("file")
    s.set_defaults(fn=cmd_canon)

    s = sub.add_parser("run", help="execute a .ch or IR file in the VM")
    s.add_argument("file")
    s.add_argument("--arg", type=_number, default=None, help="value passed to main's parameter")
    s.add_argument("--steps", type=int, default=1_000_000, help="step budget")
    s.set_defaults(fn=cmd_run)

    s = sub.add_parser("bench", help="time both certifiers over a corpus directory, CSV on stdout")
    s.add_argument("corpus")
    s.add_argument("--runs", type=int, default=21)
    s.add_argument("-o", "--output")
    s.set_defaults(fn=cmd_bench)

    s = sub.add_parser("gen-corpus", help="write random programs (seed defaults to $CHARON_SEED or 1)")
    s.add_argument("out_dir")
    s.add_argument("--seed", type=int)
    s.add_argument("--count", type=int, default=20)
    s.add_argument("--min-size", type=int, default=10)
    s.add_argument("--max-size", type=int, default=200)
    s.set_defaults(fn=cmd_gen_corpus)
    return p


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.fn(args)
    except CharonError as e:
        print(f"charon {args.command}: {e}", file=sys.stderr)
        return e.exit_code


if __name__ == "__main__":
    sys.exit(main())
