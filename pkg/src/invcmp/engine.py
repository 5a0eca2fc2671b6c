"""Worklist fixpoint over the CFG and per-point invariant recording."""
from __future__ import annotations

import heapq
import re
from dataclasses import dataclass, field
from pathlib import Path
from typing import Union

from .formula import Formula, render
from .ir import (Branch, Cond, Goto, Guard, ParseError, Program, ProgramPoint, _Parser,
                 updated_vars)
from .predicates import (DEFAULT_PARTITION, Partition, PredState, pred_join, pred_to_formula,
                         pred_transfer, pred_widen)
from .smt import export_smtlib
from .zones import WideningPolicy, ZoneState, closure, join, transfer, widen, zone_to_formula

__all__ = [
    "AnalysisConfig", "AnalysisRecord", "PointRecord", "AnalysisDiverged", "PRESETS",
    "analyze", "widening_points", "load_config", "parse_widening", "parse_cond",
]

ITERATION_FACTOR = 1000


class AnalysisDiverged(RuntimeError):
    pass


@dataclass(frozen=True)
class AnalysisConfig:
    domain: str = "zones"
    widening: WideningPolicy = field(default_factory=WideningPolicy.standard)
    delta: str = "cc"
    label: str = ""
    assume: tuple[Union[str, Cond], ...] = ()  # entry conditions; text is parsed per program
    partition: Partition = DEFAULT_PARTITION

    def __post_init__(self):
        if self.domain not in ("zones", "predicates"):
            raise ValueError(f"unknown domain {self.domain!r}")
        if not self.label:
            object.__setattr__(self, "label", self.domain)


PRESETS = {
    "Z": AnalysisConfig("zones", WideningPolicy.standard(), label="Z"),
    "Z_k5": AnalysisConfig("zones", WideningPolicy.delayed(5), label="Z_k5"),
    "Z_ths": AnalysisConfig("zones", WideningPolicy.threshold(), label="Z_ths"),
    "P": AnalysisConfig("predicates", label="P"),
}


def parse_widening(text: str) -> WideningPolicy:
    """``standard``, ``delayed:<k>`` / ``k<k>``, or ``threshold[:t0,t1,...]``."""
    text = text.strip()
    if text == "standard":
        return WideningPolicy.standard()
    m = re.fullmatch(r"(?:delayed[:=]|k=?)(\d+)", text)
    if m:
        return WideningPolicy.delayed(int(m.group(1)))
    m = re.fullmatch(r"(?:threshold|ths)(?::(.*))?", text)
    if m:
        if m.group(1) is None:
            return WideningPolicy.threshold()
        return WideningPolicy.threshold(int(t) for t in m.group(1).split(","))
    raise ValueError(f"unknown widening policy {text!r}")


def parse_cond(text: str, vars) -> Cond:
    """One branch-style condition such as ``w <= y`` over declared ``vars``."""
    p = _Parser(text)
    p.declared = set(vars)
    c = p.cond()
    if p.tok.kind != "eof":
        raise ParseError(f"trailing input {p.tok.text!r} in condition", p.tok.line, p.tok.col)
    return c


def load_config(source: Union[str, Path]) -> AnalysisConfig:
    """A preset name or a flat ``key = value`` file.

    Keys: ``domain``, ``widening``, ``delta``, ``label``, ``assume``
    (conditions separated by ``;``) and ``partition`` (ascending cut points).
    """
    if str(source) in PRESETS:
        return PRESETS[str(source)]
    path = Path(source)
    try:
        text = path.read_text()
    except OSError as e:
        raise ValueError(f"cannot read config {path}: {e}") from e
    kv: dict[str, str] = {}
    for n, line in enumerate(text.splitlines(), 1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ValueError(f"{path}:{n}: expected key = value")
        k, v = line.split("=", 1)
        kv[k.strip()] = v.strip()
    unknown = set(kv) - {"domain", "widening", "delta", "label", "assume", "partition"}
    if unknown:
        raise ValueError(f"{path}: unknown keys {sorted(unknown)}")
    delta = kv.get("delta", "cc")
    m = re.fullmatch(r"scripted\((.+?)((?:,\s*\w+)?)\)", delta)
    if m and not Path(m.group(1)).is_absolute():
        delta = f"scripted({path.parent / m.group(1)}{m.group(2)})"
    assume = tuple(a.strip() for a in kv.get("assume", "").split(";") if a.strip())
    partition = DEFAULT_PARTITION
    if "partition" in kv:
        partition = Partition.from_cuts(int(c) for c in kv["partition"].split(","))
    cfg = AnalysisConfig(
        domain=kv.get("domain", "zones"),
        widening=parse_widening(kv.get("widening", "standard")),
        delta=delta,
        label=kv.get("label", path.stem),
        assume=assume,
        partition=partition,
    )
    return cfg


@dataclass(frozen=True)
class PointRecord:
    point: ProgramPoint
    formula: Formula
    state: object
    dv: frozenset
    visits: int = 0


@dataclass
class AnalysisRecord:
    program: str
    label: str
    domain: str
    vars: tuple[str, ...]
    points: dict[ProgramPoint, PointRecord]
    visits: dict[int, int]
    steps: int

    def to_json(self) -> list[dict]:
        return [{
            "point": str(p),
            "label": self.label,
            "domain": self.domain,
            "formula": export_smtlib(r.formula, self.vars),
            "text": render(r.formula),
            "dv": sorted(r.dv),
            "visits": r.visits,
        } for p, r in sorted(self.points.items())]


class _Zones:
    def __init__(self, vars, policy: WideningPolicy):
        self.vars, self.policy = vars, policy

    def top(self):
        return ZoneState.top(self.vars)

    def bot(self):
        return ZoneState.bot(self.vars)

    def transfer(self, s, stmt):
        return transfer(s, stmt)

    def norm(self, s):
        return closure(s)

    def join(self, a, b):
        return join(a, b)

    def widen(self, a, b, count):
        return widen(a, b, self.policy, count)

    @property
    def delay(self) -> int:
        return self.policy.delay

    def formula(self, s):
        return zone_to_formula(closure(s))


class _Preds:
    delay = 2

    def __init__(self, vars, partition: Partition):
        self.vars, self.partition = vars, partition

    def top(self):
        return PredState.top(self.vars, self.partition)

    def bot(self):
        return PredState.bot(self.vars, self.partition)

    def transfer(self, s, stmt):
        return pred_transfer(s, stmt)

    def norm(self, s):
        return s

    def join(self, a, b):
        return pred_join(a, b)

    def widen(self, a, b, count):
        return pred_widen(a, b)

    def formula(self, s):
        return pred_to_formula(s)


def widening_points(p: Program) -> set[int]:
    """Targets of back edges of a depth-first traversal from the entry."""
    color = {b.id: 0 for b in p.blocks}  # 0 new, 1 on stack, 2 done
    heads: set[int] = set()
    stack = [(p.entry, iter(p.blocks[p.entry].successors))]
    color[p.entry] = 1
    while stack:
        b, it = stack[-1]
        nxt = next(it, None)
        if nxt is None:
            color[b] = 2
            stack.pop()
        elif color[nxt] == 1:
            heads.add(nxt)
        elif color[nxt] == 0:
            color[nxt] = 1
            stack.append((nxt, iter(p.blocks[nxt].successors)))
    return heads


def _out_edges(p: Program, b: int):
    """``(target, guard-or-None, edge tag)`` for each outgoing edge of block ``b``."""
    t = p.blocks[b].term
    if isinstance(t, Goto):
        return [(t.target, None, "")]
    if isinstance(t, Branch):
        return [(t.then, Guard(t.cond, True), "t"), (t.orelse, Guard(t.cond, False), "f")]
    return []


def _in_edges(p: Program) -> dict[int, list[tuple[int, str]]]:
    inc: dict[int, list[tuple[int, str]]] = {b.id: [] for b in p.blocks}
    for b in p.blocks:
        for tgt, _, tag in _out_edges(p, b.id):
            inc[tgt].append((b.id, tag))
    return inc


def analyze(p: Program, cfg: AnalysisConfig) -> AnalysisRecord:
    if cfg.domain == "zones":
        dom = _Zones(p.vars, cfg.widening)
    else:
        dom = _Preds(p.vars, cfg.partition)
    init = dom.top()
    for c in cfg.assume:
        cond = parse_cond(c, p.vars) if isinstance(c, str) else c
        init = dom.transfer(init, Guard(cond, True))
    heads = widening_points(p)
    inc = _in_edges(p)

    edge_state: dict[tuple[int, str], object] = {}
    block_in: dict[int, object] = {p.entry: init}
    visits = {h: 0 for h in heads}
    heap = [p.entry]
    queued = {p.entry}
    if p.entry in heads:
        visits[p.entry] = 1
    steps = 0
    cap = ITERATION_FACTOR * len(p.blocks)

    def incoming(b: int):
        acc = init if b == p.entry else dom.bot()
        for src, tag in inc[b]:
            if (src, tag) in edge_state:
                acc = dom.join(acc, edge_state[(src, tag)])
        return acc

    while heap:
        b = heapq.heappop(heap)
        queued.discard(b)
        steps += 1
        if steps > cap:
            raise AnalysisDiverged(f"{p.name}: no fixpoint after {cap} block visits")
        s = dom.norm(block_in[b])
        for stmt in p.blocks[b].stmts:
            s = dom.transfer(s, stmt)
        for tgt, guard, tag in _out_edges(p, b):
            out = s if guard is None else dom.transfer(s, guard)
            if edge_state.get((b, tag)) == out:
                continue
            edge_state[(b, tag)] = out
            new = incoming(tgt)
            old = block_in.get(tgt)
            if tgt in heads and old is not None:
                visits[tgt] += 1
                if visits[tgt] > dom.delay:
                    new = dom.widen(old, new, visits[tgt])
            elif tgt in heads:
                visits[tgt] += 1
            if old is None or dom.norm(new) != dom.norm(old):
                block_in[tgt] = new
                if tgt not in queued:
                    heapq.heappush(heap, tgt)
                    queued.add(tgt)

    return _record(p, cfg, dom, block_in, heads, visits, inc, steps)


def _record(p, cfg, dom, block_in, heads, visits, inc, steps) -> AnalysisRecord:
    # dv flowing out of each block / edge, to a fixpoint over the CFG
    joins = {b.id for b in p.blocks if len(inc[b.id]) + (b.id == p.entry) >= 2}
    in_dv: dict[int, frozenset] = {b.id: frozenset() for b in p.blocks}
    edge_dv: dict[tuple[int, str], frozenset] = {}
    changed = True
    while changed:
        changed = False
        for blk in p.blocks:
            dv = frozenset()
            if blk.id != p.entry or blk.id in joins:
                dv = dv.union(*(edge_dv.get(e, frozenset()) for e in inc[blk.id]))
            if dv != in_dv[blk.id]:
                in_dv[blk.id], changed = dv, True
            last = updated_vars(blk.stmts[-1]) if blk.stmts else dv
            for _, guard, tag in _out_edges(p, blk.id):
                out = last if guard is None else updated_vars(guard)
                if edge_dv.get((blk.id, tag)) != out:
                    edge_dv[(blk.id, tag)], changed = out, True

    points: dict[ProgramPoint, PointRecord] = {}

    def put(pt: ProgramPoint, state, dv, b: int):
        points[pt] = PointRecord(pt, dom.formula(state), state, frozenset(dv), visits.get(b, 0))

    for blk in p.blocks:
        b = blk.id
        s = dom.norm(block_in.get(b, dom.bot()))
        if b in joins:
            put(ProgramPoint(b, -1), s, in_dv[b], b)
        for i, stmt in enumerate(blk.stmts):
            s = dom.transfer(s, stmt)
            put(ProgramPoint(b, i), s, updated_vars(stmt), b)
        for _, guard, tag in _out_edges(p, b):
            if guard is not None:
                put(ProgramPoint(b, len(blk.stmts), tag), dom.transfer(s, guard),
                    updated_vars(guard), b)
    return AnalysisRecord(p.name, cfg.label, cfg.domain, p.vars, points,
                          {h: visits[h] for h in sorted(heads)}, steps)
