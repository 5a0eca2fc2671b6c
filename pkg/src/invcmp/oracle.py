"""Bounded enumeration oracle for linear integer formulas.

Decides satisfiability (and so entailment) of conjunctions of
:class:`LinAtom`/:class:`OneOf` items with every variable confined to
``[-box, box]``.  Values are enumerated depth-first; interval bound
propagation prunes the enumeration but never changes the answer, so the
result is exact on the box.  Independent variable groups are solved
separately.
"""
from __future__ import annotations

from typing import Iterable, Optional, Sequence

from .formula import FALSE, Formula, LinAtom, OneOf, Top

__all__ = ["OracleBudgetExceeded", "find_model", "oracle_entails", "DEFAULT_BOX", "DEFAULT_CAP"]

DEFAULT_BOX = 64
DEFAULT_CAP = 10 ** 7


class OracleBudgetExceeded(RuntimeError):
    """The enumeration cap was hit; enlarge the cap or shrink the box."""


class _Budget:
    def __init__(self, cap: int):
        self.cap = cap
        self.used = 0

    def tick(self) -> None:
        self.used += 1
        if self.used > self.cap:
            raise OracleBudgetExceeded(f"oracle enumeration exceeded {self.cap} points")


def _snap_up(x: int, unions: list, hi: int) -> Optional[int]:
    """Smallest value >= x inside every union of intervals, or None past hi."""
    while x <= hi:
        moved = False
        for ivs in unions:
            best = None
            for lo_, hi_ in ivs:
                if hi_ is not None and hi_ < x:
                    continue
                cand = x if lo_ is None or lo_ <= x else lo_
                if best is None or cand < best:
                    best = cand
            if best is None:
                return None
            if best > x:
                x, moved = best, True
        if not moved:
            return x
    return None


def _snap_down(x: int, unions: list, lo: int) -> Optional[int]:
    while x >= lo:
        moved = False
        for ivs in unions:
            best = None
            for lo_, hi_ in ivs:
                if lo_ is not None and lo_ > x:
                    continue
                cand = x if hi_ is None or hi_ >= x else hi_
                if best is None or cand > best:
                    best = cand
            if best is None:
                return None
            if best < x:
                x, moved = best, True
        if not moved:
            return x
    return None


def _propagate(lo: dict, hi: dict, atoms: Sequence[LinAtom], unions: dict) -> bool:
    """Tighten bounds to a fixpoint; False when some domain empties."""
    changed = True
    while changed:
        changed = False
        for a in atoms:
            minsum = 0
            for v, c in a.terms:
                minsum += c * (lo[v] if c > 0 else hi[v])
            for v, c in a.terms:
                rest = minsum - c * (lo[v] if c > 0 else hi[v])
                r = a.bound - rest
                if c > 0:
                    nb = r // c
                    if nb < hi[v]:
                        if v in unions:
                            nb = _snap_down(nb, unions[v], lo[v])
                            if nb is None:
                                return False
                        if nb < lo[v]:
                            return False
                        hi[v] = nb  # minsum only uses lo[v] for c > 0
                        changed = True
                else:
                    nb = _ceil_div(r, c)
                    if nb > lo[v]:
                        if v in unions:
                            nb = _snap_up(nb, unions[v], hi[v])
                            if nb is None:
                                return False
                        if nb > hi[v]:
                            return False
                        lo[v] = nb
                        changed = True
    return True


def _ceil_div(p: int, q: int) -> int:
    return -((-p) // q)


def _solve(vs: list[str], atoms: list[LinAtom], unions: dict, box: int,
           budget: _Budget) -> Optional[dict]:
    lo = {v: -box for v in vs}
    hi = {v: box for v in vs}
    for v in unions:
        a = _snap_up(lo[v], unions[v], hi[v])
        if a is None:
            return None
        b = _snap_down(hi[v], unions[v], a)
        if b is None:
            return None
        lo[v], hi[v] = a, b
    if not _propagate(lo, hi, atoms, unions):
        return None
    return _search(vs, lo, hi, atoms, unions, budget)


def _search(vs, lo, hi, atoms, unions, budget) -> Optional[dict]:
    open_vars = [v for v in vs if lo[v] < hi[v]]
    if not open_vars:
        budget.tick()
        model = dict(lo)
        return model if all(a.holds(model) for a in atoms) else None
    v = min(open_vars, key=lambda u: (hi[u] - lo[u], u))
    x = lo[v]
    while x is not None and x <= hi[v]:
        budget.tick()
        nlo, nhi = dict(lo), dict(hi)
        nlo[v] = nhi[v] = x
        if _propagate(nlo, nhi, atoms, unions):
            found = _search(vs, nlo, nhi, atoms, unions, budget)
            if found is not None:
                return found
        x = x + 1 if v not in unions else _snap_up(x + 1, unions[v], hi[v])
    return None


def _components(items: Iterable) -> list[tuple[set, list]]:
    parent: dict[str, str] = {}

    def find(x):
        while parent[x] != x:
            parent[x] = parent[parent[x]]
            x = parent[x]
        return x

    items = list(items)
    for it in items:
        vs = sorted(it.vars)
        for v in vs:
            parent.setdefault(v, v)
        for v in vs[1:]:
            parent[find(v)] = find(vs[0])
    groups: dict[str, tuple[set, list]] = {}
    for v in parent:
        groups.setdefault(find(v), (set(), []))[0].add(v)
    for it in items:
        groups[find(next(iter(it.vars)))][1].append(it)
    return [groups[k] for k in sorted(groups)]


def find_model(items: Iterable, box: int = DEFAULT_BOX, cap: int = DEFAULT_CAP,
               budget: Optional[_Budget] = None) -> Optional[dict]:
    """A model of the conjunction within ``[-box, box]``, or None."""
    budget = budget or _Budget(cap)
    items = [i for i in items if not isinstance(i, Top)]
    if FALSE in items:
        return None
    model: dict[str, int] = {}
    for it in items:
        if not it.vars:  # constant atom
            if not it.holds({}):
                return None
    for vs, group in _components(i for i in items if i.vars):
        atoms = [i for i in group if isinstance(i, LinAtom)]
        unions: dict[str, list] = {}
        for i in group:
            if isinstance(i, OneOf):
                unions.setdefault(i.var, []).append(i.intervals)
        part = _solve(sorted(vs), atoms, unions, box, budget)
        if part is None:
            return None
        model.update(part)
    return model


def oracle_entails(a: Formula, b: Formula, box: int = DEFAULT_BOX,
                   cap: int = DEFAULT_CAP) -> tuple[bool, Optional[dict]]:
    """Does ``a`` imply ``b`` on the box?  Returns ``(answer, countermodel)``."""
    budget = _Budget(cap)
    universe = sorted(set().union(*(i.vars for i in a.items | b.items)) if (a.items | b.items) else set())
    base = find_model(a.items, box, budget=budget)
    if base is None:
        return True, None

    def complete(m: dict) -> dict:
        return {v: m.get(v, base.get(v, 0)) for v in universe}

    if b.is_false:
        return False, complete(base)
    a_items = [i for i in a.items if not isinstance(i, Top)]
    comps = _components(i for i in a_items if i.vars)
    for item in sorted(b.constraints, key=str):
        if item in a.items:
            continue
        neg = item.negate()
        touched = set(neg.vars)
        group = [neg]
        for vs, its in comps:
            if vs & touched:
                group += its
        if not neg.vars and neg.holds({}):
            return False, complete({})
        m = find_model(group, box, budget=budget)
        if m is not None:
            return False, complete(m)
    return True, None
