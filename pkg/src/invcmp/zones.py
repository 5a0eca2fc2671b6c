"""Zones: difference-bound matrices over integer variables.

Index 0 of the matrix is the constant-zero variable; variable ``vars[k]``
lives at index ``k + 1``.  Entry ``m[i][j]`` bounds ``v_i - v_j <= m[i][j]``
and ``INF`` means unconstrained, so ``m[x][0]`` is an upper bound on ``x``
and ``-m[0][x]`` a lower bound.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Iterable, Optional, Sequence

from .formula import Formula, LinAtom, Top
from .ir import Assign, Guard, LinExpr, Skip, Statement, cond_atoms

INF = math.inf

__all__ = [
    "INF", "ZoneState", "WideningPolicy", "closure", "transfer", "join",
    "widen", "reduce_redundant", "zone_includes", "zone_to_formula",
]


@dataclass(frozen=True)
class ZoneState:
    vars: tuple[str, ...]
    m: Optional[tuple[tuple, ...]]
    closed: bool = False
    bottom: bool = False
    index: dict = field(default=None, compare=False, repr=False, hash=False)

    def __post_init__(self):
        object.__setattr__(self, "index", {v: k + 1 for k, v in enumerate(self.vars)})

    @classmethod
    def top(cls, vars: Sequence[str]) -> "ZoneState":
        n = len(vars) + 1
        m = tuple(tuple(0 if i == j else INF for j in range(n)) for i in range(n))
        return cls(tuple(vars), m, closed=True)

    @classmethod
    def bot(cls, vars: Sequence[str]) -> "ZoneState":
        return cls(tuple(vars), None, closed=True, bottom=True)

    @classmethod
    def from_constraints(cls, vars: Sequence[str],
                         cons: Iterable[tuple[Optional[str], Optional[str], int]]) -> "ZoneState":
        """Unclosed zone from ``(a, b, c)`` meaning ``a - b <= c`` (None = zero)."""
        z = cls.top(vars)
        m = [list(r) for r in z.m]
        for a, b, c in cons:
            i, j = z.idx(a), z.idx(b)
            if i == j:
                if c < 0:
                    return cls.bot(vars)
                continue
            m[i][j] = min(m[i][j], c)
        return cls(tuple(vars), _freeze(m), closed=False)

    def idx(self, v: Optional[str]) -> int:
        return 0 if v is None else self.index[v]

    def bound(self, a: Optional[str], b: Optional[str]):
        """Bound on ``a - b`` (INF when unconstrained)."""
        return self.m[self.idx(a)][self.idx(b)]

    def name(self, i: int) -> Optional[str]:
        return None if i == 0 else self.vars[i - 1]

    def __str__(self) -> str:
        if self.bottom:
            return "⊥"
        return str(zone_to_formula(self if self.closed else closure(self)))


def _freeze(m) -> tuple[tuple, ...]:
    return tuple(tuple(r) for r in m)


def _check_same(a: ZoneState, b: ZoneState) -> None:
    if a.vars != b.vars:
        raise ValueError(f"zone variable mismatch: {a.vars} vs {b.vars}")


def closure(z: ZoneState) -> ZoneState:
    """Floyd-Warshall shortest-path closure; negative cycle gives bottom."""
    if z.bottom or z.closed:
        return z
    m = [list(r) for r in z.m]
    n = len(m)
    for k in range(n):
        mk = m[k]
        for i in range(n):
            mik = m[i][k]
            if mik == INF:
                continue
            mi = m[i]
            for j in range(n):
                d = mik + mk[j]
                if d < mi[j]:
                    mi[j] = d
    if any(m[i][i] < 0 for i in range(n)):
        return ZoneState.bot(z.vars)
    return ZoneState(z.vars, _freeze(m), closed=True)


def _forget(m: list[list], t: int) -> None:
    for k in range(len(m)):
        if k != t:
            m[t][k] = INF
            m[k][t] = INF


def _meet_atoms(z: ZoneState, atoms) -> ZoneState:
    m = [list(r) for r in z.m]
    for coeffs, k in atoms:
        pos = [v for v, c in coeffs.items() if c == 1]
        neg = [v for v, c in coeffs.items() if c == -1]
        if len(pos) + len(neg) != len(coeffs) or len(pos) > 1 or len(neg) > 1:
            continue  # not a difference constraint; dropping it is sound
        if not coeffs:
            if k < 0:
                return ZoneState.bot(z.vars)
            continue
        i = z.idx(pos[0]) if pos else 0
        j = z.idx(neg[0]) if neg else 0
        m[i][j] = min(m[i][j], k)
    return closure(ZoneState(z.vars, _freeze(m), closed=False))


def transfer(z: ZoneState, stmt: Statement) -> ZoneState:
    """Abstract post-state of ``stmt``; the result is closed."""
    if z.bottom or isinstance(stmt, Skip):
        return z
    z = closure(z)
    if z.bottom:
        return z
    if isinstance(stmt, Guard):
        atoms = cond_atoms(stmt.effective)
        if atoms is None:  # !=
            return z
        return _meet_atoms(z, atoms)
    assert isinstance(stmt, Assign)
    t = z.idx(stmt.target)
    m = [list(r) for r in z.m]
    e = stmt.expr
    if not isinstance(e, LinExpr):
        _forget(m, t)
        return ZoneState(z.vars, _freeze(m), closed=True)
    terms = dict(e.terms)
    c = e.const
    if not terms:
        _forget(m, t)
        m[t][0], m[0][t] = c, -c
        return closure(ZoneState(z.vars, _freeze(m)))
    if len(terms) == 1:
        (v, coef), = terms.items()
        s = z.idx(v)
        if coef == 1 and s == t:
            # t := t + c shifts every bound involving t; stays closed
            for k in range(len(m)):
                if k != t:
                    m[t][k] += c
                    m[k][t] -= c
            return ZoneState(z.vars, _freeze(m), closed=True)
        if coef == 1:
            _forget(m, t)
            m[t][s], m[s][t] = c, -c
            return closure(ZoneState(z.vars, _freeze(m)))
        if coef == -1:
            # t := -v + c has no difference form; keep v's interval image
            hi, lo = z.m[0][s] + c, z.m[s][0] - c
            _forget(m, t)
            m[t][0], m[0][t] = hi, lo
            return closure(ZoneState(z.vars, _freeze(m)))
    _forget(m, t)
    return ZoneState(z.vars, _freeze(m), closed=True)


def join(a: ZoneState, b: ZoneState) -> ZoneState:
    """Least upper bound (pointwise max of closed matrices)."""
    _check_same(a, b)
    a, b = closure(a), closure(b)
    if a.bottom:
        return b
    if b.bottom:
        return a
    m = tuple(tuple(max(x, y) for x, y in zip(ra, rb)) for ra, rb in zip(a.m, b.m))
    return ZoneState(a.vars, m, closed=True)


@dataclass(frozen=True)
class WideningPolicy:
    """``standard`` and ``threshold`` widen after two iterations, ``delayed`` after k."""
    kind: str = "standard"
    k: int = 2
    thresholds: tuple[int, ...] = ()

    def __post_init__(self):
        if self.kind not in ("standard", "delayed", "threshold"):
            raise ValueError(f"unknown widening kind {self.kind!r}")
        if self.k < 1:
            raise ValueError("widening delay must be >= 1")
        if self.kind == "threshold":
            if not self.thresholds:
                raise ValueError("threshold widening needs a non-empty threshold set")
            if list(self.thresholds) != sorted(set(self.thresholds)):
                raise ValueError("thresholds must be ascending and duplicate-free")

    @classmethod
    def standard(cls) -> "WideningPolicy":
        return cls("standard", 2)

    @classmethod
    def delayed(cls, k: int) -> "WideningPolicy":
        return cls("delayed", k)

    @classmethod
    def threshold(cls, thresholds: Iterable[int] = (0, 1, 10, 100, 1000)) -> "WideningPolicy":
        return cls("threshold", 2, tuple(thresholds))

    @property
    def delay(self) -> int:
        return self.k

    def __str__(self) -> str:
        if self.kind == "delayed":
            return f"delayed:{self.k}"
        if self.kind == "threshold":
            return "threshold:" + ",".join(map(str, self.thresholds))
        return "standard"


def widen(a: ZoneState, b: ZoneState, p: WideningPolicy, visit_count: int) -> ZoneState:
    """Widen ``a`` by ``b``.  The result is deliberately left unclosed."""
    _check_same(a, b)
    if visit_count < 1:
        raise ValueError("visit_count must be >= 1")
    if a.bottom:
        return closure(b)
    b = closure(b)
    if b.bottom:
        return a
    if p.kind == "delayed" and visit_count < p.k:
        return join(a, b)
    ts = p.thresholds if p.kind == "threshold" else ()
    m = []
    for i, (ra, rb) in enumerate(zip(a.m, b.m)):
        row = []
        for j, (x, y) in enumerate(zip(ra, rb)):
            if i == j or y <= x:
                row.append(x)
            else:
                row.append(next((t for t in ts if t >= y), INF))
        m.append(row)
    return ZoneState(a.vars, _freeze(m), closed=False)


def reduce_redundant(z: ZoneState) -> list[tuple[int, int, int]]:
    """Minimal list of finite edges ``(i, j, c)`` whose closure is ``z``.

    Variables tied by zero-weight cycles (equalities, including constants
    tied to index 0) are grouped: each group keeps a cycle through its
    members and only group leaders take part in the two-step redundancy
    test, which is exact once zero cycles are gone.
    """
    z = closure(z)
    if z.bottom:
        raise ValueError("reduce_redundant on bottom zone")
    m = z.m
    n = len(m)
    leader = list(range(n))
    for i in range(n):
        if leader[i] != i:
            continue
        for j in range(i + 1, n):
            if leader[j] == j and m[i][j] != INF and m[i][j] + m[j][i] == 0:
                leader[j] = i
    out = []
    groups: dict[int, list[int]] = {}
    for i in range(n):
        groups.setdefault(leader[i], []).append(i)
    for members in groups.values():
        if len(members) > 1:
            for a, b in zip(members, members[1:] + members[:1]):
                out.append((a, b, m[a][b]))
    leaders = sorted(groups)
    for i in leaders:
        for j in leaders:
            if i == j or m[i][j] == INF:
                continue
            if any(m[i][k] + m[k][j] <= m[i][j] for k in leaders if k != i and k != j):
                continue
            out.append((i, j, m[i][j]))
    return sorted(out)


def _project_leq(a: ZoneState, b: ZoneState, idx: list[int]) -> bool:
    return all(a.m[i][j] <= b.m[i][j] for i in idx for j in idx)


def zone_includes(a: ZoneState, b: ZoneState, s: Optional[Iterable[str]] = None) -> bool:
    """True iff ``a`` implies ``b`` on the variables ``s`` (default: all)."""
    _check_same(a, b)
    a, b = closure(a), closure(b)
    if a.bottom:
        return True
    if b.bottom:
        return False
    names = a.vars if s is None else s
    idx = [0] + sorted(a.idx(v) for v in names)
    return _project_leq(a, b, idx)


def edge_atom(z: ZoneState, i: int, j: int, c: int) -> LinAtom:
    return LinAtom.diff(z.name(i), z.name(j), c)


def zone_to_formula(z: ZoneState, s: Optional[Iterable[str]] = None) -> Formula:
    """Reduced constraints over ``s`` plus ``v -> T`` for unconstrained ``v``."""
    s = frozenset(z.vars if s is None else s)
    z = closure(z)
    if z.bottom:
        return Formula.false(s)
    items = []
    for i, j, c in reduce_redundant(z):
        atom = edge_atom(z, i, j, c)
        if atom.vars <= s:
            items.append(atom)
    covered = frozenset().union(*(a.vars for a in items)) if items else frozenset()
    items += [Top(v) for v in s - covered]
    return Formula.of(items)
