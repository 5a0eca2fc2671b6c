"""Solver-neutral invariant formulas.

A :class:`Formula` is a conjunction of items:

* :class:`LinAtom` -- ``sum(coef * var) <= bound`` over the integers;
* :class:`OneOf` -- ``var`` lies in a union of integer intervals (a
  predicate-domain block disjunction);
* :class:`Top` -- the explicit ``var -> T`` marker.  It is semantically
  ``true`` but keeps ``var`` in the variable projection, which is how an
  invariant advertises unconstrained variables of its universe;
* :data:`FALSE` -- the unsatisfiable item (bottom).

Text syntax, accepted by :func:`parse_formula` and produced by
:func:`render`::

    z - x <= 0 && y - x <= 0 && w -> T
    x in {[0,0], [1,1]} && false
"""
from __future__ import annotations

import re
from dataclasses import dataclass
from typing import Iterable, Mapping, Optional, Union

Interval = tuple[Optional[int], Optional[int]]


@dataclass(frozen=True, order=True)
class LinAtom:
    terms: tuple[tuple[str, int], ...]
    bound: int

    @classmethod
    def of(cls, coeffs: Mapping[str, int], bound: int) -> "LinAtom":
        return cls(tuple(sorted((v, c) for v, c in coeffs.items() if c)), bound)

    @classmethod
    def diff(cls, a: Optional[str], b: Optional[str], bound: int) -> "LinAtom":
        """``a - b <= bound``; either side may be None (the constant zero)."""
        coeffs = {}
        if a is not None:
            coeffs[a] = 1
        if b is not None:
            coeffs[b] = coeffs.get(b, 0) - 1
        return cls.of(coeffs, bound)

    @property
    def vars(self) -> frozenset[str]:
        return frozenset(v for v, _ in self.terms)

    @property
    def shape(self) -> tuple[tuple[str, int], ...]:
        return self.terms

    def holds(self, model: Mapping[str, int]) -> bool:
        return sum(c * model[v] for v, c in self.terms) <= self.bound

    def negate(self) -> "LinAtom":
        return LinAtom(tuple((v, -c) for v, c in self.terms), -self.bound - 1)


@dataclass(frozen=True, order=True)
class OneOf:
    var: str
    intervals: tuple[Interval, ...]

    @property
    def vars(self) -> frozenset[str]:
        return frozenset({self.var})

    def holds(self, model: Mapping[str, int]) -> bool:
        return in_intervals(model[self.var], self.intervals)

    def negate(self) -> "OneOf":
        return OneOf(self.var, complement(self.intervals))


@dataclass(frozen=True, order=True)
class Top:
    var: str

    @property
    def vars(self) -> frozenset[str]:
        return frozenset({self.var})

    def holds(self, model) -> bool:
        return True


@dataclass(frozen=True, order=True)
class _False:
    @property
    def vars(self) -> frozenset[str]:
        return frozenset()

    def holds(self, model) -> bool:
        return False


FALSE = _False()
Item = Union[LinAtom, OneOf, Top, _False]


def in_intervals(x: int, intervals: Iterable[Interval]) -> bool:
    return any((lo is None or lo <= x) and (hi is None or x <= hi) for lo, hi in intervals)


def complement(intervals: Iterable[Interval]) -> tuple[Interval, ...]:
    """Complement of a union of intervals within the integers."""
    ivs = sorted(((lo, hi) for lo, hi in intervals
                  if lo is None or hi is None or lo <= hi),
                 key=lambda iv: float("-inf") if iv[0] is None else iv[0])
    out: list[Interval] = []
    nxt: Optional[int] = None  # smallest uncovered value so far; None is -inf
    started = False
    for lo, hi in ivs:
        if lo is not None:
            if not started:
                out.append((None, lo - 1))
            elif lo > nxt:
                out.append((nxt, lo - 1))
        if hi is None:
            return tuple(out)
        if not started or hi + 1 > nxt:
            nxt, started = hi + 1, True
    out.append((nxt if started else None, None))
    return tuple(out)


def _item_key(item: Item):
    order = {LinAtom: 0, OneOf: 1, Top: 2, _False: 3}
    return (order[type(item)], str(render_item(item)))


@dataclass(frozen=True)
class Formula:
    items: frozenset

    @classmethod
    def of(cls, items: Iterable[Item]) -> "Formula":
        return cls(frozenset(items))

    @classmethod
    def true(cls, universe: Iterable[str] = ()) -> "Formula":
        return cls(frozenset(Top(v) for v in universe))

    @classmethod
    def false(cls, universe: Iterable[str] = ()) -> "Formula":
        return cls(frozenset([FALSE, *(Top(v) for v in universe)]))

    @property
    def is_false(self) -> bool:
        return FALSE in self.items

    @property
    def constraints(self) -> frozenset:
        """Items other than ``Top`` markers."""
        return frozenset(i for i in self.items if not isinstance(i, Top))

    @property
    def tops(self) -> frozenset[str]:
        return frozenset(i.var for i in self.items if isinstance(i, Top))

    @property
    def atoms(self) -> frozenset:
        return frozenset(i for i in self.items if isinstance(i, LinAtom))

    def sorted_items(self) -> list:
        return sorted(self.items, key=_item_key)

    def holds(self, model: Mapping[str, int]) -> bool:
        return all(i.holds(model) for i in self.items)

    def __and__(self, other: "Formula") -> "Formula":
        return Formula(self.items | other.items)

    def __str__(self) -> str:
        return render(self)


def vars_of(f: Union[Formula, Item]) -> frozenset[str]:
    """Variables syntactically occurring in ``f``, explicit ``v -> T`` included."""
    if isinstance(f, Formula):
        out: set[str] = set()
        for i in f.items:
            out |= i.vars
        return frozenset(out)
    return f.vars


# --------------------------------------------------------------------------
# Rendering and parsing

def _bound_text(b: Optional[int], inf: str) -> str:
    return inf if b is None else str(b)


def render_item(item: Item) -> str:
    if isinstance(item, LinAtom):
        if not item.terms:
            lhs = "0"
        else:
            lhs = ""
            terms = sorted(item.terms, key=lambda t: (t[1] < 0, t[0]))
            for k, (v, c) in enumerate(terms):
                sign = "-" if c < 0 else "+"
                mag = "" if abs(c) == 1 else f"{abs(c)}*"
                if k == 0:
                    lhs = ("-" if c < 0 else "") + mag + v
                else:
                    lhs += f" {sign} {mag}{v}"
        return f"{lhs} <= {item.bound}"
    if isinstance(item, OneOf):
        ivs = ", ".join(f"[{_bound_text(lo, '-inf')},{_bound_text(hi, 'inf')}]"
                        for lo, hi in item.intervals)
        return f"{item.var} in {{{ivs}}}"
    if isinstance(item, Top):
        return f"{item.var} -> T"
    return "false"


def render(f: Formula) -> str:
    if not f.items:
        return "true"
    return " && ".join(render_item(i) for i in f.sorted_items())


class FormulaSyntaxError(ValueError):
    pass


_FTOK = re.compile(r"\s*(?:(?P<int>\d+)|(?P<id>[A-Za-z_][A-Za-z0-9_]*)"
                   r"|(?P<op><=|>=|==|->|&&|[<>+\-*{}\[\],]|∧|→|⊤))")


def _ftokens(text: str) -> list[str]:
    pos, out = 0, []
    text = text.rstrip()
    while pos < len(text):
        m = _FTOK.match(text, pos)
        if not m or m.end() == pos:
            raise FormulaSyntaxError(f"bad formula text at {pos}: {text[pos:pos + 10]!r}")
        out.append(m.group(m.lastgroup))
        pos = m.end()
    return [{"∧": "&&", "→": "->", "⊤": "T"}.get(t, t) for t in out]


def _linexpr(toks: list[str], pos: int) -> tuple[dict[str, int], int, int]:
    coeffs: dict[str, int] = {}
    const = 0
    sign = 1
    if toks[pos] == "-":
        sign, pos = -1, pos + 1
    while True:
        t = toks[pos]
        if t.isdigit():
            n = int(t)
            pos += 1
            if pos < len(toks) and toks[pos] == "*":
                v = toks[pos + 1]
                coeffs[v] = coeffs.get(v, 0) + sign * n
                pos += 2
            else:
                const += sign * n
        else:
            coeffs[t] = coeffs.get(t, 0) + sign
            pos += 1
        if pos < len(toks) and toks[pos] in ("+", "-"):
            sign = 1 if toks[pos] == "+" else -1
            pos += 1
        else:
            return coeffs, const, pos


def _interval_bound(tok: list[str], pos: int) -> tuple[Optional[int], int]:
    neg = tok[pos] == "-"
    if neg:
        pos += 1
    if tok[pos] == "inf":
        return None, pos + 1
    return (-int(tok[pos]) if neg else int(tok[pos])), pos + 1


def parse_formula(text: str) -> Formula:
    """Parse the text syntax of :func:`render` (plus ``>=``, ``<``, ``>``, ``==``)."""
    toks = _ftokens(text)
    items: list[Item] = []
    pos = 0
    if not toks:
        raise FormulaSyntaxError("empty formula")
    while True:
        t = toks[pos]
        if t == "true":
            pos += 1
        elif t == "false":
            items.append(FALSE)
            pos += 1
        elif pos + 1 < len(toks) and toks[pos + 1] == "->":
            if toks[pos + 2] != "T":
                raise FormulaSyntaxError("expected T after ->")
            items.append(Top(t))
            pos += 3
        elif pos + 1 < len(toks) and toks[pos + 1] == "in":
            var, pos = t, pos + 3
            if toks[pos - 1] != "{":
                raise FormulaSyntaxError("expected { after in")
            ivs = []
            while toks[pos] == "[":
                lo, pos = _interval_bound(toks, pos + 1)
                if toks[pos] != ",":
                    raise FormulaSyntaxError("expected , in interval")
                hi, pos = _interval_bound(toks, pos + 1)
                if toks[pos] != "]":
                    raise FormulaSyntaxError("expected ] in interval")
                ivs.append((lo, hi))
                pos += 1
                if toks[pos] == ",":
                    pos += 1
            if toks[pos] != "}":
                raise FormulaSyntaxError("expected }")
            items.append(OneOf(var, tuple(ivs)))
            pos += 1
        else:
            lc, lk, pos = _linexpr(toks, pos)
            op = toks[pos]
            rc, rk, pos = _linexpr(toks, pos + 1)
            diff = dict(lc)
            for v, c in rc.items():
                diff[v] = diff.get(v, 0) - c
            k = rk - lk
            neg = {v: -c for v, c in diff.items()}
            if op == "<=":
                items.append(LinAtom.of(diff, k))
            elif op == "<":
                items.append(LinAtom.of(diff, k - 1))
            elif op == ">=":
                items.append(LinAtom.of(neg, -k))
            elif op == ">":
                items.append(LinAtom.of(neg, -k - 1))
            elif op == "==":
                items += [LinAtom.of(diff, k), LinAtom.of(neg, -k)]
            else:
                raise FormulaSyntaxError(f"unknown relation {op!r}")
        if pos == len(toks):
            return Formula.of(items)
        if toks[pos] != "&&":
            raise FormulaSyntaxError(f"expected && , found {toks[pos]!r}")
        pos += 1
