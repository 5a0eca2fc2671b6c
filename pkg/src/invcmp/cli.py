"""Command-line driver.

Exit codes: 0 success, 1 usage error, 2 corpus/parse failure, 3 backend failure.
"""
from __future__ import annotations

import argparse
import csv
import json
import logging
import sys
from dataclasses import replace
from pathlib import Path
from typing import Optional, Sequence

from .compare import OracleBackend, ZonesBackend
from .engine import PRESETS, AnalysisConfig, AnalysisDiverged, analyze, load_config, parse_widening
from .experiment import Experiment, emit_report, load_corpus, run_experiment
from .ir import ParseError, parse_program
from .oracle import DEFAULT_BOX, OracleBudgetExceeded
from .smt import ExternalBackend, SolverError

EXIT_OK, EXIT_USAGE, EXIT_CORPUS, EXIT_BACKEND = 0, 1, 2, 3


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def build_parser() -> argparse.ArgumentParser:
    ap = _Parser(prog="invcmp", description=__doc__.splitlines()[0])
    ap.add_argument("-v", "--verbose", action="store_true")
    sub = ap.add_subparsers(dest="cmd", required=True, parser_class=_Parser)

    a = sub.add_parser("analyze", help="run one analysis and dump per-point invariants")
    a.add_argument("program")
    a.add_argument("--domain", choices=["zones", "predicates"], default="zones")
    a.add_argument("--widening", default="standard",
                   help="standard, delayed:K or threshold[:T0,T1,...]")
    a.add_argument("--cfg", help="preset name or config file (overrides --domain/--widening)")
    a.add_argument("--out", help="JSON output file (default: stdout)")

    c = sub.add_parser("compare", help="compare analysis pairs over a corpus")
    c.add_argument("--left-cfg", action="append", required=True,
                   help=f"preset ({', '.join(PRESETS)}) or config file; repeatable")
    c.add_argument("--right-cfg", action="append", required=True)
    c.add_argument("--corpus", default="desk", help="'desk', a directory of .ir files, or one file")
    c.add_argument("--mode", choices=["full", "minimal", "both"], default="both")
    c.add_argument("--backend", choices=["oracle", "extern", "zones"], default="oracle")
    c.add_argument("--delta", help="override the Δ variant of every config (fs, nn, cc, ...)")
    c.add_argument("--out", required=True, help="report directory")
    c.add_argument("--oracle-box", type=int, default=DEFAULT_BOX)
    c.add_argument("--solver", help="SMT-LIB solver binary (default: z3 or cvc5 on PATH)")
    c.add_argument("--timeout-ms", type=int, default=10_000)

    r = sub.add_parser("report", help="print the tables of a report directory")
    r.add_argument("dir")
    return ap


def _config(source: str) -> AnalysisConfig:
    try:
        return load_config(source)
    except ValueError as e:
        raise UsageError(str(e)) from e


def cmd_analyze(ns) -> int:
    if ns.cfg:
        cfg = _config(ns.cfg)
    else:
        try:
            cfg = AnalysisConfig(ns.domain, parse_widening(ns.widening))
        except ValueError as e:
            raise UsageError(str(e)) from e
    try:
        prog = parse_program(Path(ns.program).read_text())
    except OSError as e:
        print(f"invcmp: {e}", file=sys.stderr)
        return EXIT_CORPUS
    except ParseError as e:
        print(f"invcmp: {ns.program}: {e}", file=sys.stderr)
        return EXIT_CORPUS
    try:
        rec = analyze(prog, cfg)
    except (AnalysisDiverged, ParseError) as e:
        print(f"invcmp: {e}", file=sys.stderr)
        return EXIT_CORPUS
    text = json.dumps(rec.to_json(), indent=1, sort_keys=True) + "\n"
    if ns.out:
        Path(ns.out).write_text(text)
    else:
        sys.stdout.write(text)
    return EXIT_OK


def _backend(ns):
    if ns.backend == "extern":
        return ExternalBackend(ns.solver, ns.timeout_ms)
    oracle = OracleBackend(box=ns.oracle_box)
    return ZonesBackend(oracle) if ns.backend == "zones" else oracle


def cmd_compare(ns) -> int:
    if len(ns.left_cfg) != len(ns.right_cfg):
        raise UsageError("--left-cfg and --right-cfg must be given the same number of times")
    pairs = []
    for l, r in zip(ns.left_cfg, ns.right_cfg):
        left, right = _config(l), _config(r)
        if ns.delta:
            left, right = replace(left, delta=ns.delta), replace(right, delta=ns.delta)
        pairs.append((left, right))
    try:
        corpus = load_corpus(ns.corpus)
    except FileNotFoundError as e:
        print(f"invcmp: {e}", file=sys.stderr)
        return EXIT_CORPUS
    modes = ("full", "minimal") if ns.mode == "both" else (ns.mode,)
    try:
        report = run_experiment(Experiment(corpus, pairs, _backend(ns), modes))
    except (SolverError, OracleBudgetExceeded) as e:
        print(f"invcmp: backend failure: {e}", file=sys.stderr)
        return EXIT_BACKEND
    emit_report(report, ns.out)
    for f in report.failures:
        print(f"invcmp: skipped {f['program']} {f['pair']}: {f['error']}", file=sys.stderr)
    return EXIT_CORPUS if report.failures else EXIT_OK


def cmd_report(ns) -> int:
    d = Path(ns.dir)
    for name in ("summary.csv", "iterations.csv", "proportions.csv"):
        path = d / name
        try:
            with path.open(newline="") as fh:
                rows = list(csv.reader(fh))
        except OSError as e:
            print(f"invcmp: {e}", file=sys.stderr)
            return EXIT_CORPUS
        print(f"== {name}")
        widths = [max(len(r[k]) for r in rows) for k in range(len(rows[0]))]
        for r in rows:
            print("  ".join(cell.ljust(w) for cell, w in zip(r, widths)).rstrip())
        print()
    return EXIT_OK


def main(argv: Optional[Sequence[str]] = None) -> int:
    ns = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if ns.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return {"analyze": cmd_analyze, "compare": cmd_compare, "report": cmd_report}[ns.cmd](ns)
    except UsageError as e:
        print(f"invcmp: {e}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
