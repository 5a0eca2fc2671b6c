"""Entailment backends and precision classification of invariant pairs."""
from __future__ import annotations

import enum
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Optional, Protocol

from .commonvarset import CvsResult, common_var_set
from .delta import DeltaFn
from .formula import Formula, LinAtom, render, vars_of
from .oracle import DEFAULT_BOX, DEFAULT_CAP, oracle_entails
from .zones import ZoneState, zone_includes

__all__ = [
    "Outcome", "Entailment3", "Backend", "OracleBackend", "ZonesBackend",
    "entails", "classify", "classify_detail", "ComparisonRecord",
    "compare_minimal", "compare_full",
]


class Outcome(enum.Enum):
    Equivalent = "Equivalent"
    LeftMorePrecise = "LeftMorePrecise"
    RightMorePrecise = "RightMorePrecise"
    Incomparable = "Incomparable"
    Unknown = "Unknown"

    def swapped(self) -> "Outcome":
        return {Outcome.LeftMorePrecise: Outcome.RightMorePrecise,
                Outcome.RightMorePrecise: Outcome.LeftMorePrecise}.get(self, self)


CATEGORIES = tuple(o.value for o in Outcome)


class Entailment3(enum.Enum):
    yes = "yes"
    no = "no"
    unknown = "unknown"


class Backend(Protocol):
    name: str

    def entails(self, a: Formula, b: Formula) -> tuple[Entailment3, Optional[dict]]: ...


class OracleBackend:
    """Exact on the box ``[-box, box]`` per variable; never unknown."""

    name = "oracle"

    def __init__(self, box: int = DEFAULT_BOX, cap: int = DEFAULT_CAP):
        self.box = box
        self.cap = cap

    def entails(self, a: Formula, b: Formula):
        ok, model = oracle_entails(a, b, self.box, self.cap)
        return (Entailment3.yes, None) if ok else (Entailment3.no, model)


def _as_zone(f: Formula, vs: tuple[str, ...]) -> Optional[ZoneState]:
    cons = []
    for i in f.constraints:
        if not isinstance(i, LinAtom):
            return None
        pos = [v for v, c in i.terms if c == 1]
        neg = [v for v, c in i.terms if c == -1]
        if len(pos) + len(neg) != len(i.terms) or len(pos) > 1 or len(neg) > 1:
            return None
        cons.append((pos[0] if pos else None, neg[0] if neg else None, i.bound))
    return ZoneState.from_constraints(vs, cons)


class ZonesBackend:
    """Native DBM inclusion for difference-constraint formulas.

    Anything a DBM cannot hold (block disjunctions, ``false`` is fine) goes
    to ``fallback``, as do countermodel requests.
    """

    name = "zones"

    def __init__(self, fallback: Optional[Backend] = None):
        self.fallback = fallback or OracleBackend()

    def entails(self, a: Formula, b: Formula):
        if b.is_false or a.is_false:
            return self.fallback.entails(a, b)
        vs = tuple(sorted(vars_of(a) | vars_of(b)))
        za, zb = _as_zone(a, vs), _as_zone(b, vs)
        if za is None or zb is None:
            return self.fallback.entails(a, b)
        if zone_includes(za, zb):
            return Entailment3.yes, None
        _, model = self.fallback.entails(a, b)
        return Entailment3.no, model


def entails(a: Formula, b: Formula, backend: Backend) -> tuple[Entailment3, Optional[dict]]:
    """Three-valued ``a => b`` with cheap syntactic shortcuts before the backend."""
    if a.is_false or b.constraints <= a.constraints:
        return Entailment3.yes, None
    return backend.entails(a, b)


def classify_detail(a: Formula, b: Formula, backend: Backend):
    """``(outcome, countermodel to a => b, countermodel to b => a)``."""
    ab, m_ab = entails(a, b, backend)
    ba, m_ba = entails(b, a, backend)
    if Entailment3.unknown in (ab, ba):
        out = Outcome.Unknown
    elif ab is Entailment3.yes and ba is Entailment3.yes:
        out = Outcome.Equivalent
    elif ab is Entailment3.yes:
        out = Outcome.LeftMorePrecise
    elif ba is Entailment3.yes:
        out = Outcome.RightMorePrecise
    else:
        out = Outcome.Incomparable
    return out, m_ab, m_ba


def classify(a: Formula, b: Formula, backend: Backend) -> Outcome:
    return classify_detail(a, b, backend)[0]


@dataclass(frozen=True)
class ComparisonRecord:
    program: str
    pair: str
    point: str
    mode: str
    outcome: Outcome
    s: tuple[str, ...]
    iterations: int
    proportion: Fraction
    left: str
    right: str
    countermodels: dict = field(default_factory=dict, compare=False)

    def to_json(self) -> dict:
        return {
            "program": self.program, "pair": self.pair, "point": self.point,
            "mode": self.mode, "outcome": self.outcome.value, "s": list(self.s),
            "iterations": self.iterations, "proportion": str(self.proportion),
            "left": self.left, "right": self.right,
            "countermodels": self.countermodels,
        }


def _models(m_ab, m_ba) -> dict:
    out = {}
    if m_ab is not None:
        out["left_not_right"] = dict(sorted(m_ab.items()))
    if m_ba is not None:
        out["right_not_left"] = dict(sorted(m_ba.items()))
    return out


def _ground_outcome(a: Formula, b: Formula) -> Outcome:
    # Variable-free formulas are either true or false.
    if a.is_false == b.is_false:
        return Outcome.Equivalent
    return Outcome.LeftMorePrecise if a.is_false else Outcome.RightMorePrecise


def compare_minimal(point, left, right, delta_left: DeltaFn, delta_right: DeltaFn,
                    backend: Backend, program: str = "", pair: str = "") -> ComparisonRecord:
    """Compare only the part of each invariant reachable from the common changed set."""
    pl, pr = left.points[point], right.points[point]
    cvs: CvsResult = common_var_set(pl.dv, pr.dv, pl.formula, pr.formula,
                                    delta_left, delta_right)
    fl = delta_left(pl.formula, cvs.s)
    fr = delta_right(pr.formula, cvs.s)
    if not cvs.s:
        out, m_ab, m_ba = _ground_outcome(fl, fr), None, None
    else:
        out, m_ab, m_ba = classify_detail(fl, fr, backend)
    return ComparisonRecord(program, pair, str(point), "minimal", out, tuple(sorted(cvs.s)),
                            cvs.iterations, cvs.proportion, render(fl), render(fr),
                            _models(m_ab, m_ba))


def compare_full(point, left, right, backend: Backend, program: str = "",
                 pair: str = "") -> ComparisonRecord:
    """Compare the whole invariants at ``point``."""
    fl, fr = left.points[point].formula, right.points[point].formula
    out, m_ab, m_ba = classify_detail(fl, fr, backend)
    universe = vars_of(fl) | vars_of(fr)
    return ComparisonRecord(program, pair, str(point), "full", out, tuple(sorted(universe)),
                            0, Fraction(1) if universe else Fraction(0),
                            render(fl), render(fr), _models(m_ab, m_ba))
