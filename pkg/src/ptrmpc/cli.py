"""Command line: ``ptrmpc check|run|bench``.

Exit codes: 0 success, 1 usage or I/O error, 2 static rejection,
3 run-time abort.
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path

from .fieldcore import DEFAULT_KAPPA
from .harness import PartyConfig
from .lang import (CheckError, InputError, ParseError, RuntimeAbort, check_source, format_outputs,
                   parse_inputs, run_mpc, run_plain)

EXIT_OK, EXIT_USAGE, EXIT_REJECT, EXIT_ABORT = 0, 1, 2, 3

log = logging.getLogger("ptrmpc")


class _Parser(argparse.ArgumentParser):
    def error(self, message: str):  # usage errors share the I/O exit code
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def _define(text: str) -> tuple[str, int]:
    name, sep, val = text.partition("=")
    if not sep or not name:
        raise argparse.ArgumentTypeError(f"expected NAME=VALUE, got {text!r}")
    try:
        return name, int(val)
    except ValueError:
        raise argparse.ArgumentTypeError(f"value of {name} is not an integer") from None


def _sizes(text: str) -> list[int]:
    try:
        out = [int(s) for s in text.split(",") if s]
    except ValueError:
        raise argparse.ArgumentTypeError(f"bad size list {text!r}") from None
    if not out or any(s < 1 for s in out):
        raise argparse.ArgumentTypeError("sizes must be positive")
    return out


def build_parser() -> argparse.ArgumentParser:
    ap = _Parser(prog="ptrmpc", description="Run C-like programs with private pointers over simulated MPC.")
    ap.add_argument("-v", "--verbose", action="store_true")
    sub = ap.add_subparsers(dest="cmd", required=True, parser_class=_Parser)

    c = sub.add_parser("check", help="parse and statically check a program")
    c.add_argument("program")
    c.add_argument("--ptr-arith", action="store_true", help="allow pointer arithmetic")

    r = sub.add_parser("run", help="execute a program")
    r.add_argument("program")
    r.add_argument("--input", "-i", help="input file with name=v1,v2,... lines")
    r.add_argument("--output", "-o", help="output file (default stdout)")
    r.add_argument("--stats", help="write run statistics as JSON here")
    r.add_argument("--parties", "-n", type=int, default=3)
    r.add_argument("--threshold", "-t", type=int, default=1)
    r.add_argument("--kappa", type=int, default=DEFAULT_KAPPA)
    r.add_argument("--seed", type=int, default=0)
    r.add_argument("--transport", choices=("inproc", "tcp"), default="inproc")
    r.add_argument("--port-base", type=int, default=0, help="first TCP port (0 picks free ports)")
    r.add_argument("--ptr-arith", action="store_true", help="allow pointer arithmetic")
    r.add_argument("--mode", choices=("mpc", "plain"), default="mpc",
                   help="plain runs the cleartext reference interpreter")
    r.add_argument("-D", dest="defines", action="append", type=_define, default=[],
                   metavar="NAME=VALUE", help="override a public global's initial value")

    b = sub.add_parser("bench", help="run benchmark cases and print CSV")
    b.add_argument("cases", nargs="*", help="case ids (default: all)")
    b.add_argument("--sizes", type=_sizes, help="comma separated sizes")
    b.add_argument("--seed", type=int, default=0)
    b.add_argument("--output", "-o", help="CSV file (default stdout)")
    b.add_argument("--no-oracle", action="store_true", help="skip the plaintext cross-check")
    b.add_argument("--list", action="store_true", help="list case ids and exit")
    return ap


def _read(path: str) -> str:
    return Path(path).read_text(encoding="utf-8")


def _print_diags(exc: CheckError | ParseError, path: str) -> None:
    if isinstance(exc, ParseError):
        print(f"{path}:{exc.line}:{exc.col}: syntax error: {exc.msg}", file=sys.stderr)
        return
    for d in exc.diagnostics:
        print(f"{path}:{d.line}:{d.col}: rule ({d.rule}): {d.message}", file=sys.stderr)


def cmd_check(args) -> int:
    src = _read(args.program)
    try:
        cp = check_source(src, ptr_arith=args.ptr_arith)
    except (ParseError, CheckError) as exc:
        _print_diags(exc, args.program)
        return EXIT_REJECT
    print(f"{args.program}: ok (max private bits {cp.max_bits}, "
          f"comparisons {'yes' if cp.uses_comparison else 'no'})")
    return EXIT_OK


def cmd_run(args) -> int:
    src = _read(args.program)
    inputs = parse_inputs(_read(args.input)) if args.input else {}
    config = PartyConfig(n=args.parties, t=args.threshold, seed=args.seed, transport=args.transport,
                         kappa=args.kappa, port_base=args.port_base)
    try:
        cp = check_source(src, ptr_arith=args.ptr_arith)
    except (ParseError, CheckError) as exc:
        _print_diags(exc, args.program)
        return EXIT_REJECT
    defines = dict(args.defines)
    try:
        if args.mode == "plain":
            res = run_plain(cp, inputs, defines, kappa=args.kappa)
        else:
            res = run_mpc(cp, inputs, config, defines)
    except RuntimeAbort as exc:
        print(f"{args.program}: run-time abort: {exc}", file=sys.stderr)
        return EXIT_ABORT
    text = format_outputs(res.outputs)
    if args.output:
        Path(args.output).write_text(text)
    else:
        sys.stdout.write(text)
    if res.stats is not None:
        for d in res.stats.diagnostics:
            log.warning("diagnostic: %s", d)
        log.info("wall time %.1f ms", res.stats.wall_ms)
        if args.stats:
            Path(args.stats).write_text(stats_json(res) + "\n")
    return EXIT_OK


def stats_json(res) -> str:
    """Run counters; wall time is left out so equal seeds give equal files."""
    st = res.stats
    doc = {
        "interactive_ops": st.interactive_ops,
        "rounds": st.rounds,
        "bytes_per_party": st.bytes_per_party,
        "dealer_values": st.dealer_values,
        "diagnostics": st.diagnostics,
        "field_bits": res.field_bits,
        "marks": [{"label": label, **snap} for label, snap in res.marks],
    }
    return json.dumps(doc, sort_keys=True)


def cmd_bench(args) -> int:
    from .bench import CASES, run_cases, write_csv
    if args.list:
        for name, case in CASES.items():
            print(f"{name}\t{','.join(map(str, case.sizes))}")
        return EXIT_OK
    unknown = [c for c in args.cases if c not in CASES]
    if unknown:
        print(f"unknown case(s): {', '.join(unknown)}; known: {', '.join(CASES)}", file=sys.stderr)
        return EXIT_USAGE
    rows = run_cases(args.cases, args.sizes, args.seed, oracle=not args.no_oracle)
    bad = [r for r in rows if r.match is False]
    if args.output:
        with open(args.output, "w", newline="") as fh:
            write_csv(rows, fh)
    else:
        write_csv(rows, sys.stdout)
    for r in bad:
        print(f"mismatch: {r.case} size {r.size}: mpc {r.outputs} plain {r.oracle}", file=sys.stderr)
    return EXIT_ABORT if bad else EXIT_OK


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return {"check": cmd_check, "run": cmd_run, "bench": cmd_bench}[args.cmd](args)
    except (OSError, InputError, ValueError) as exc:
        print(f"ptrmpc: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
