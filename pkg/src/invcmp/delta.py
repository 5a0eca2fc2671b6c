"""Invariant minimization functions (changed sub-invariant selection).

Every function here maps ``(invariant, dv)`` to a sub-conjunction of the
invariant's items.  Explicit ``v -> T`` items are selected like any other
item, so a changed variable that the invariant leaves unconstrained still
shows up in the result's variable projection.  The ``false`` item, having
no variables, is kept by every selection: any part of a bottom invariant is
bottom.
"""
from __future__ import annotations

import json
import re
from pathlib import Path
from typing import Callable, Iterable, Mapping, Optional

from .formula import FALSE, Formula, parse_formula, vars_of

__all__ = [
    "DeltaFn", "vars_of", "delta_fs", "delta_nn", "delta_cc",
    "delta_scripted", "load_replay", "get_delta", "MissingTraceKey",
]

DeltaFn = Callable[[Formula, frozenset], Formula]


def _keep_false(f: Formula, items: set) -> Formula:
    if f.is_false:
        items.add(FALSE)
    return Formula.of(items)


def delta_fs(inv: Formula, dv: Iterable[str]) -> Formula:
    """Full state: the whole invariant, whatever changed."""
    return inv


def delta_nn(inv: Formula, dv: Iterable[str]) -> Formula:
    """Node neighbors: items mentioning at least one changed variable."""
    dv = frozenset(dv)
    return _keep_false(inv, {i for i in inv.items if i.vars & dv})


def delta_cc(inv: Formula, dv: Iterable[str]) -> Formula:
    """Connected components of the variable-sharing graph that touch ``dv``."""
    reach = set(dv) & vars_of(inv)
    pending = [i for i in inv.items if i.vars]
    picked: set = set()
    grew = True
    while grew:
        grew = False
        rest = []
        for item in pending:
            if item.vars & reach:
                picked.add(item)
                reach |= item.vars
                grew = True
            else:
                rest.append(item)
        pending = rest
    return _keep_false(inv, picked)


delta_fs.__name__ = "fs"
delta_nn.__name__ = "nn"
delta_cc.__name__ = "cc"


class MissingTraceKey(KeyError):
    pass


def delta_scripted(trace: Mapping[tuple[Formula, frozenset], Formula],
                   fallback: Optional[DeltaFn] = None) -> DeltaFn:
    """Replay recorded Δ values; unknown keys go to ``fallback`` or raise."""
    table = {(inv, frozenset(dv)): out for (inv, dv), out in trace.items()}

    def scripted(inv: Formula, dv: Iterable[str]) -> Formula:
        key = (inv, frozenset(dv))
        if key in table:
            return table[key]
        if fallback is None:
            raise MissingTraceKey(f"no scripted Δ for ({inv}, {sorted(key[1])})")
        return fallback(inv, dv)

    scripted.__name__ = "scripted"
    return scripted


def load_replay(path) -> dict[tuple[Formula, frozenset], Formula]:
    """Read a replay file: a JSON list of ``{"invariant", "dv", "result"}`` records."""
    data = json.loads(Path(path).read_text())
    return {(parse_formula(r["invariant"]), frozenset(r["dv"])): parse_formula(r["result"])
            for r in data}


_BY_NAME = {"fs": delta_fs, "nn": delta_nn, "cc": delta_cc}


def get_delta(spec: str) -> DeltaFn:
    """``fs``, ``nn``, ``cc`` or ``scripted(<path>[, <fallback>])``.

    ``scripted:<path>[:<fallback>]`` is accepted too.
    """
    spec = spec.strip()
    if spec in _BY_NAME:
        return _BY_NAME[spec]
    m = re.fullmatch(r"scripted\((.+?)(?:,\s*(\w+))?\)|scripted:([^:]+)(?::(\w+))?", spec)
    if m:
        path = m.group(1) or m.group(3)
        fb = m.group(2) or m.group(4) or ""
        if fb and fb not in _BY_NAME:
            raise ValueError(f"unknown fallback Δ {fb!r}")
        return delta_scripted(load_replay(path), _BY_NAME.get(fb))
    raise ValueError(f"unknown Δ variant {spec!r}")
