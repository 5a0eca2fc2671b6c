"""Batch comparison runs over a corpus and the CSV/JSON reports."""
from __future__ import annotations

import csv
import io
import json
import math
from collections import Counter
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path
from typing import Optional, Sequence

from .commonvarset import ContractError
from .compare import CATEGORIES, Backend, ComparisonRecord, OracleBackend, compare_full, compare_minimal
from .delta import MissingTraceKey, get_delta
from .engine import AnalysisConfig, AnalysisDiverged, analyze
from .ir import ParseError, parse_program

__all__ = ["Experiment", "Report", "run_experiment", "emit_report", "load_corpus", "desk_corpus",
           "proportion_bin", "BINS", "render_report", "walkthrough_dir"]

MODES = ("full", "minimal")
BINS = tuple(k / 10 for k in range(11))


def desk_corpus() -> list[Path]:
    root = resources.files("invcmp") / "corpus"
    return sorted(Path(str(p)) for p in root.iterdir() if p.name.endswith(".ir"))


def walkthrough_dir() -> Path:
    return Path(str(resources.files("invcmp") / "corpus" / "walkthrough"))


def load_corpus(spec: str) -> list[Path]:
    """``desk`` (bundled programs), a directory of ``*.ir`` files, or one file."""
    if spec == "desk":
        return desk_corpus()
    path = Path(spec)
    if path.is_dir():
        return sorted(path.glob("*.ir"))
    if path.is_file():
        return [path]
    raise FileNotFoundError(f"no such corpus: {spec}")


def pair_name(left: AnalysisConfig, right: AnalysisConfig) -> str:
    return f"{left.label}:{right.label}"


@dataclass
class Experiment:
    corpus: Sequence[Path]
    pairs: Sequence[tuple[AnalysisConfig, AnalysisConfig]]
    backend: Backend = field(default_factory=OracleBackend)
    modes: tuple[str, ...] = MODES
    out: Optional[Path] = None


@dataclass
class Report:
    pairs: list[str]
    modes: tuple[str, ...]
    records: list[ComparisonRecord] = field(default_factory=list)
    failures: list[dict] = field(default_factory=list)

    def by(self, pair: str, mode: str) -> list[ComparisonRecord]:
        return [r for r in self.records if r.pair == pair and r.mode == mode]

    def counts(self, pair: str, mode: str) -> Counter:
        return Counter(r.outcome.value for r in self.by(pair, mode))

    def proportions(self, pair: str) -> Counter:
        return Counter(proportion_bin(r.proportion) for r in self.by(pair, "minimal"))

    def depths(self, pair: str) -> Counter:
        return Counter(r.iterations for r in self.by(pair, "minimal"))


def proportion_bin(p) -> int:
    """Bin index 0..10: bin 0 holds exactly the empty-set points, bin k holds ((k-1)/10, k/10]."""
    return math.ceil(p * 10)


def run_experiment(e: Experiment) -> Report:
    report = Report([pair_name(l, r) for l, r in e.pairs], tuple(e.modes))
    for path in e.corpus:
        path = Path(path)
        try:
            prog = parse_program(path.read_text())
        except (OSError, ParseError) as exc:
            report.failures.append({"program": path.name, "pair": "", "error": str(exc)})
            continue
        for left, right in e.pairs:
            name = pair_name(left, right)
            try:
                report.records.extend(_compare_program(prog, path.stem, name, left, right,
                                                       e.backend, e.modes))
            except (AnalysisDiverged, ContractError, MissingTraceKey, ParseError, ValueError) as exc:
                report.failures.append({"program": path.name, "pair": name,
                                        "error": f"{type(exc).__name__}: {exc}"})
    return report


def _compare_program(prog, program, pair, left, right, backend, modes):
    rl, rr = analyze(prog, left), analyze(prog, right)
    dl, dr = get_delta(left.delta), get_delta(right.delta)
    out = []
    for pt in sorted(set(rl.points) & set(rr.points)):
        if "full" in modes:
            out.append(compare_full(pt, rl, rr, backend, program, pair))
        if "minimal" in modes:
            out.append(compare_minimal(pt, rl, rr, dl, dr, backend, program, pair))
    return out


def _csv(rows: list[list]) -> str:
    buf = io.StringIO()
    csv.writer(buf, lineterminator="\n").writerows(rows)
    return buf.getvalue()


def render_report(r: Report) -> dict[str, str]:
    summary = [["pair", "mode", "category", "count"]]
    props = [["pair", "bin", "frequency"]]
    iters = [["pair", "depth", "frequency"]]
    for pair in r.pairs:
        for mode in r.modes:
            counts = r.counts(pair, mode)
            if not r.by(pair, mode):
                continue
            summary += [[pair, mode, c, counts.get(c, 0)] for c in CATEGORIES]
        if "minimal" in r.modes and r.by(pair, "minimal"):
            hist = r.proportions(pair)
            props += [[pair, f"{BINS[k]:.1f}", hist.get(k, 0)] for k in range(len(BINS))]
            depths = r.depths(pair)
            iters += [[pair, d, depths.get(d, 0)] for d in range(max(depths) + 1)]
    points = {
        "records": [rec.to_json() for rec in r.records],
        "failures": r.failures,
    }
    return {
        "summary.csv": _csv(summary),
        "proportions.csv": _csv(props),
        "iterations.csv": _csv(iters),
        "points.json": json.dumps(points, indent=1, sort_keys=True) + "\n",
    }


def emit_report(r: Report, out_dir) -> list[Path]:
    out_dir = Path(out_dir)
    written = []
    try:
        out_dir.mkdir(parents=True, exist_ok=True)
        for name, text in render_report(r).items():
            path = out_dir / name
            path.write_text(text)
            written.append(path)
    except OSError as e:
        raise OSError(f"cannot write report to {out_dir}: {e}") from e
    return written
