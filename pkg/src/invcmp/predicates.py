"""Relational Predicates: value partitions plus guard-harvested relations.

Each variable carries the set of partition blocks its value may lie in.  On
top of that a state keeps a store of difference/unary atoms taken verbatim
from guards and copy-assignments; nothing is derived from them except an
emptiness check.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterable, Mapping, Optional, Sequence

from .formula import Formula, Interval, LinAtom, OneOf, Top
from .ir import Assign, Guard, LinExpr, Skip, Statement, cond_atoms

__all__ = [
    "Partition", "DEFAULT_PARTITION", "PredState", "abstract_const",
    "pred_transfer", "pred_join", "pred_widen", "pred_to_formula",
]


@dataclass(frozen=True)
class Partition:
    """Sorted disjoint integer intervals tiling Z (None marks an infinite end)."""
    blocks: tuple[Interval, ...]

    def __post_init__(self):
        bs = self.blocks
        if not bs or bs[0][0] is not None or bs[-1][1] is not None:
            raise ValueError("partition must extend to -inf and +inf")
        for (lo, hi), (nlo, _) in zip(bs, bs[1:]):
            if hi is None or nlo is None or nlo != hi + 1:
                raise ValueError(f"partition blocks must be contiguous: {bs}")
        for lo, hi in bs:
            if lo is not None and hi is not None and lo > hi:
                raise ValueError(f"empty partition block {(lo, hi)}")

    @classmethod
    def from_cuts(cls, cuts: Iterable[int]) -> "Partition":
        """Blocks ``(-inf, c0-1], [c0, c1-1], ..., [ck, +inf)`` from ascending cut points."""
        cuts = sorted(set(cuts))
        los = [None, *cuts]
        his = [c - 1 for c in cuts] + [None]
        return cls(tuple(zip(los, his)))

    @property
    def cuts(self) -> tuple[int, ...]:
        return tuple(lo for lo, _ in self.blocks[1:])

    def __len__(self) -> int:
        return len(self.blocks)

    def block_of(self, c: int) -> int:
        for k, (lo, hi) in enumerate(self.blocks):
            if (lo is None or lo <= c) and (hi is None or c <= hi):
                return k
        raise AssertionError("partition does not cover value")

    def covering(self, lo: Optional[int], hi: Optional[int]) -> frozenset[int]:
        """Blocks meeting the interval ``[lo, hi]``."""
        out = set()
        for k, (blo, bhi) in enumerate(self.blocks):
            if (lo is None or bhi is None or bhi >= lo) and (hi is None or blo is None or blo <= hi):
                out.add(k)
        return frozenset(out)


# (-inf,-5], (-5,-2], {-1}, {0}, {1}, [2,5), [5,+inf)
DEFAULT_PARTITION = Partition.from_cuts([-4, -1, 0, 1, 2, 5])


@dataclass(frozen=True)
class PredState:
    vars: tuple[str, ...]
    blocksets: tuple[frozenset[int], ...]
    rel: frozenset = frozenset()
    bottom: bool = False
    partition: Partition = field(default=DEFAULT_PARTITION)

    @classmethod
    def top(cls, vars: Sequence[str], partition: Partition = DEFAULT_PARTITION) -> "PredState":
        full = frozenset(range(len(partition)))
        return cls(tuple(vars), tuple(full for _ in vars), frozenset(), False, partition)

    @classmethod
    def bot(cls, vars: Sequence[str], partition: Partition = DEFAULT_PARTITION) -> "PredState":
        return cls(tuple(vars), tuple(frozenset() for _ in vars), frozenset(), True, partition)

    def blockset(self, v: str) -> frozenset[int]:
        return self.blocksets[self.vars.index(v)]

    def is_top_var(self, v: str) -> bool:
        return len(self.blockset(v)) == len(self.partition)

    def hull(self, v: str) -> tuple[Optional[int], Optional[int]]:
        bs = sorted(self.blockset(v))
        return self.partition.blocks[bs[0]][0], self.partition.blocks[bs[-1]][1]

    def with_blocks(self, updates: Mapping[str, frozenset[int]], rel=None) -> "PredState":
        bsets = tuple(updates.get(v, b) for v, b in zip(self.vars, self.blocksets))
        return _normalize(PredState(self.vars, bsets, self.rel if rel is None else rel,
                                    False, self.partition))

    def __str__(self) -> str:
        return str(pred_to_formula(self))


def abstract_const(c: int, partition: Partition = DEFAULT_PARTITION) -> frozenset[int]:
    return frozenset({partition.block_of(c)})


def _add(a: Optional[int], b: Optional[int]) -> Optional[int]:
    return None if a is None or b is None else a + b


def _neg(iv: Interval) -> Interval:
    lo, hi = iv
    return (None if hi is None else -hi, None if lo is None else -lo)


def _rel_add(rel: frozenset, atom: LinAtom) -> frozenset:
    """Insert keeping one atom per shape (the tighter bound)."""
    for old in rel:
        if old.shape == atom.shape:
            if old.bound <= atom.bound:
                return rel
            return (rel - {old}) | {atom}
    return rel | {atom}


def _drop(rel: frozenset, v: str) -> frozenset:
    return frozenset(a for a in rel if v not in a.vars)


def _consistent(p: PredState) -> bool:
    """Negative-cycle check over rel plus each variable's block hull."""
    from .zones import ZoneState, closure
    cons = []
    for v in p.vars:
        lo, hi = p.hull(v)
        if hi is not None:
            cons.append((v, None, hi))
        if lo is not None:
            cons.append((None, v, -lo))
    for a in p.rel:
        coeffs = dict(a.terms)
        pos = next((v for v, c in coeffs.items() if c == 1), None)
        neg = next((v for v, c in coeffs.items() if c == -1), None)
        cons.append((pos, neg, a.bound))
    return not closure(ZoneState.from_constraints(p.vars, cons)).bottom


def _normalize(p: PredState) -> PredState:
    if any(not b for b in p.blocksets) or not _consistent(p):
        return PredState.bot(p.vars, p.partition)
    return p


def _image(p: PredState, e: LinExpr) -> frozenset[int]:
    """Blocks covering the value set of ``e`` (interval image per block combination)."""
    part = p.partition
    ranges: list[Interval] = [(e.const, e.const)]
    for v, c in e.terms:
        blocks = [part.blocks[k] for k in sorted(p.blockset(v))]
        scaled = []
        for lo, hi in blocks:
            iv = (lo, hi) if c > 0 else _neg((lo, hi))
            m = abs(c)
            scaled.append((None if iv[0] is None else m * iv[0], None if iv[1] is None else m * iv[1]))
        ranges = [(_add(r[0], s[0]), _add(r[1], s[1])) for r in ranges for s in scaled]
    out: set[int] = set()
    for lo, hi in ranges:
        out |= part.covering(lo, hi)
    return frozenset(out)


def _filter(p: PredState, v: str, lo: Optional[int], hi: Optional[int]) -> frozenset[int]:
    return p.blockset(v) & p.partition.covering(lo, hi)


def pred_transfer(p: PredState, stmt: Statement) -> PredState:
    if p.bottom or isinstance(stmt, Skip):
        return p
    if isinstance(stmt, Assign):
        t = stmt.target
        rel = _drop(p.rel, t)
        e = stmt.expr
        if not isinstance(e, LinExpr):
            full = frozenset(range(len(p.partition)))
            return p.with_blocks({t: full}, rel)
        image = _image(p, e)
        terms = dict(e.terms)
        if len(terms) == 1:
            (v, coef), = terms.items()
            if coef == 1 and v != t:
                rel = _rel_add(rel, LinAtom.diff(t, v, e.const))
                rel = _rel_add(rel, LinAtom.diff(v, t, -e.const))
        return p.with_blocks({t: image}, rel)
    assert isinstance(stmt, Guard)
    cond = stmt.effective
    atoms = cond_atoms(cond)
    if atoms is None:
        # v != c removes a singleton block; anything else is a no-op
        if cond.rhs is None:
            k = p.partition.block_of(cond.const)
            if p.partition.blocks[k] == (cond.const, cond.const):
                return p.with_blocks({cond.lhs: p.blockset(cond.lhs) - {k}})
        return p
    cur = p
    for coeffs, k in atoms:
        atom = LinAtom.of(coeffs, k)
        if not atom.terms:
            if k < 0:
                return PredState.bot(p.vars, p.partition)
            continue
        terms = dict(atom.terms)
        upd = {}
        if len(terms) == 1:
            (v, c), = terms.items()
            upd[v] = _filter(cur, v, None, k) if c == 1 else _filter(cur, v, -k, None)
        else:
            a = next(v for v, c in terms.items() if c == 1)
            b = next(v for v, c in terms.items() if c == -1)
            # a - b <= k: a <= hi(b) + k and b >= lo(a) - k
            upd[a] = _filter(cur, a, None, _add(cur.hull(b)[1], k))
            upd[b] = _filter(cur, b, _add(cur.hull(a)[0], -k), None)
        cur = cur.with_blocks(upd, _rel_add(cur.rel, atom))
        if cur.bottom:
            return cur
    return cur


def _check_same(a: PredState, b: PredState) -> None:
    if a.vars != b.vars:
        raise ValueError(f"predicate variable mismatch: {a.vars} vs {b.vars}")


def pred_join(a: PredState, b: PredState) -> PredState:
    _check_same(a, b)
    if a.bottom:
        return b
    if b.bottom:
        return a
    bshape = {x.shape: x for x in b.rel}
    rel = frozenset(LinAtom(x.terms, max(x.bound, bshape[x.shape].bound))
                    for x in a.rel if x.shape in bshape)
    bsets = tuple(x | y for x, y in zip(a.blocksets, b.blocksets))
    return PredState(a.vars, bsets, rel, False, a.partition)


def pred_widen(a: PredState, b: PredState) -> PredState:
    """Blockset union; relations of ``a`` survive only where ``b`` is as tight."""
    _check_same(a, b)
    if a.bottom:
        return b
    if b.bottom:
        return a
    bshape = {x.shape: x for x in b.rel}
    rel = frozenset(x for x in a.rel if x.shape in bshape and bshape[x.shape].bound <= x.bound)
    bsets = tuple(x | y for x, y in zip(a.blocksets, b.blocksets))
    return PredState(a.vars, bsets, rel, False, a.partition)


def pred_includes(a: PredState, b: PredState) -> bool:
    """Syntactic order: a's blocks within b's and every b relation matched in a."""
    _check_same(a, b)
    if a.bottom:
        return True
    if b.bottom:
        return False
    ashape = {x.shape: x for x in a.rel}
    return (all(x <= y for x, y in zip(a.blocksets, b.blocksets))
            and all(x.shape in ashape and ashape[x.shape].bound <= x.bound for x in b.rel))


def pred_to_formula(p: PredState, s: Optional[Iterable[str]] = None) -> Formula:
    s = frozenset(p.vars if s is None else s)
    if p.bottom:
        return Formula.false(s)
    items = []
    for v in sorted(s):
        if not p.is_top_var(v):
            items.append(OneOf(v, tuple(p.partition.blocks[k] for k in sorted(p.blockset(v)))))
    items += [a for a in p.rel if a.vars <= s]
    covered = frozenset().union(*(i.vars for i in items)) if items else frozenset()
    items += [Top(v) for v in s - covered]
    return Formula.of(items)

