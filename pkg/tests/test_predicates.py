import pytest
from hypothesis import given, settings, strategies as st

from enumerate import all_points, np_entails
from invcmp.compare import Entailment3, OracleBackend
from invcmp.formula import LinAtom, OneOf, Top
from invcmp.ir import Assign, Cond, Guard, LinExpr, Nondet, Skip
from invcmp.predicates import (DEFAULT_PARTITION, Partition, PredState, abstract_const, pred_join,
                               pred_to_formula, pred_transfer, pred_widen)

V3 = ("x", "y", "z")
B = DEFAULT_PARTITION.blocks


def blk(iv):
    return B.index(iv)


def test_default_partition_blocks():
    assert B == ((None, -5), (-4, -2), (-1, -1), (0, 0), (1, 1), (2, 4), (5, None))


@pytest.mark.parametrize("c, block", [(0, (0, 0)), (3, (2, 4)), (-7, (None, -5)),
                                      (-5, (None, -5)), (-2, (-4, -2)), (4, (2, 4)), (5, (5, None))])
def test_abstract_const(c, block):
    assert abstract_const(c) == {blk(block)}


def test_partition_tiles_integers():
    for c in range(-1000, 1001):
        hits = [k for k, (lo, hi) in enumerate(B)
                if (lo is None or lo <= c) and (hi is None or c <= hi)]
        assert len(hits) == 1 and DEFAULT_PARTITION.block_of(c) == hits[0]


@pytest.mark.parametrize("blocks", [
    ((0, None),),
    ((None, 0), (2, None)),
    ((None, 0), (1, 0), (1, None)),
])
def test_bad_partitions(blocks):
    with pytest.raises(ValueError):
        Partition(blocks)


def test_from_cuts_round_trip():
    p = Partition.from_cuts([3, -2, 10])
    assert p.blocks == ((None, -3), (-2, 2), (3, 9), (10, None))
    assert p.cuts == (-2, 3, 10)


def test_assign_const():
    p = pred_transfer(PredState.top(V3), Assign("x", LinExpr.of({}, 0)))
    assert p.blockset("x") == {blk((0, 0))}


def test_guard_lower_bound():
    p = pred_transfer(PredState.top(V3), Guard(Cond("x", ">=", None, 5), True))
    assert p.blockset("x") == {blk((5, None))}
    assert LinAtom.of({"x": -1}, -5) in p.rel


def test_guard_relation_only():
    top = PredState.top(("w", "x", "y", "z"))
    p = pred_transfer(top, Guard(Cond("y", "<=", "x"), True))
    assert p.rel == {LinAtom.diff("y", "x", 0)}
    assert p.blocksets == top.blocksets


def test_copy_assignment_records_both_directions():
    p = pred_transfer(PredState.top(V3), Assign("y", LinExpr.of({"x": 1}, 2)))
    assert p.rel == {LinAtom.diff("y", "x", 2), LinAtom.diff("x", "y", -2)}
    q = pred_transfer(p, Assign("x", Nondet()))
    assert q.rel == frozenset() and q.is_top_var("x")


def test_shifted_image():
    p = pred_transfer(PredState.top(V3), Assign("x", LinExpr.of({}, 1)))
    p = pred_transfer(p, Assign("x", LinExpr.of({"x": 1}, 1)))
    assert p.blockset("x") == {blk((2, 4))}
    p = pred_transfer(p, Assign("y", LinExpr.of({"x": 1}, 2)))
    # [2,4] + 2 = [4,6] meets [2,4] and [5,+inf)
    assert p.blockset("y") == {blk((2, 4)), blk((5, None))}


def test_contradiction_is_bottom():
    p = pred_transfer(PredState.top(V3), Assign("x", LinExpr.of({}, 0)))
    assert pred_transfer(p, Guard(Cond("x", ">", None, 3), True)).bottom
    q = pred_transfer(PredState.top(V3), Guard(Cond("x", "<", "y"), True))
    q = pred_transfer(q, Guard(Cond("y", "<", "x"), True))
    assert q.bottom


def test_disequality_removes_singleton():
    p = pred_transfer(PredState.top(V3), Guard(Cond("x", "!=", None, 0), True))
    assert blk((0, 0)) not in p.blockset("x") and len(p.blockset("x")) == len(B) - 1


def test_join_examples():
    zero = pred_transfer(PredState.top(V3), Assign("x", LinExpr.of({}, 0)))
    one = pred_transfer(PredState.top(V3), Assign("x", LinExpr.of({}, 1)))
    assert pred_join(zero, one).blockset("x") == {blk((0, 0)), blk((1, 1))}

    vs = ("w", "x", "y")
    full = PredState.top(vs).blocksets
    a = PredState(vs, full, frozenset({LinAtom.diff("y", "x", 0), LinAtom.diff("w", None, 3)}))
    b = PredState(vs, full, frozenset({LinAtom.diff("y", "x", 2)}))
    assert pred_join(a, b).rel == {LinAtom.diff("y", "x", 2)}
    assert pred_join(PredState.bot(vs), b) == b


def test_join_mismatch():
    with pytest.raises(ValueError):
        pred_join(PredState.top(("x",)), PredState.top(("y",)))
    with pytest.raises(ValueError):
        pred_widen(PredState.top(("x",)), PredState.top(("y",)))


def test_to_formula_examples():
    p = pred_transfer(PredState.top(("x",)), Assign("x", LinExpr.of({}, 0)))
    p = pred_join(p, pred_transfer(PredState.top(("x",)), Assign("x", LinExpr.of({}, 1))))
    assert pred_to_formula(p, {"x"}).constraints == {OneOf("x", ((0, 0), (1, 1)))}

    q = pred_transfer(PredState.top(("x", "y")), Guard(Cond("y", "<=", "x"), True))
    assert pred_to_formula(q, {"x", "y"}).constraints == {LinAtom.diff("y", "x", 0)}

    assert pred_to_formula(q, set()).items == frozenset()
    assert pred_to_formula(PredState.bot(V3)).is_false


def test_to_formula_marks_unconstrained():
    p = pred_transfer(PredState.top(V3), Assign("x", LinExpr.of({}, 3)))
    f = pred_to_formula(p)
    assert Top("y") in f.items and Top("z") in f.items and Top("x") not in f.items


# -- random states -----------------------------------------------------------

statements = st.one_of(
    st.builds(lambda t, k: Assign(t, LinExpr.of({}, k)), st.sampled_from(V3), st.integers(-7, 7)),
    st.builds(lambda t, v, k: Assign(t, LinExpr.of({v: 1}, k)), st.sampled_from(V3),
              st.sampled_from(V3), st.integers(-3, 3)),
    st.builds(lambda t, v: Assign(t, LinExpr.of({v: -1})), st.sampled_from(V3), st.sampled_from(V3)),
    st.builds(lambda t, v, w: Assign(t, LinExpr.of({v: 1, w: -1})), st.sampled_from(V3),
              st.sampled_from(V3), st.sampled_from(V3)),
    st.builds(lambda t: Assign(t, Nondet()), st.sampled_from(V3)),
    st.builds(lambda a, op, b, k, pol: Guard(Cond(a, op, b, k), pol), st.sampled_from(V3),
              st.sampled_from(["<=", "<", ">=", ">", "==", "!="]),
              st.one_of(st.none(), st.sampled_from(V3)), st.integers(-6, 6), st.booleans()),
    st.just(Skip()),
)


@st.composite
def states(draw):
    p = PredState.top(V3)
    for stmt in draw(st.lists(statements, max_size=4)):
        p = pred_transfer(p, stmt)
    return p


def _run(stmt, env):
    if isinstance(stmt, Skip):
        return [env]
    if isinstance(stmt, Assign):
        if isinstance(stmt.expr, Nondet):
            return [{**env, stmt.target: k} for k in (-9, -1, 0, 2, 9)]
        e = stmt.expr
        return [{**env, stmt.target: e.const + sum(c * env[v] for v, c in e.terms)}]
    c = stmt.effective
    lhs, rhs = env[c.lhs], (env[c.rhs] if c.rhs else 0) + c.const
    ok = {"<=": lhs <= rhs, "<": lhs < rhs, ">=": lhs >= rhs, ">": lhs > rhs,
          "==": lhs == rhs, "!=": lhs != rhs}[c.op]
    return [env] if ok else []


@settings(max_examples=150, deadline=None)
@given(states(), statements)
def test_transfer_sound_by_enumeration(p, stmt):
    pre, post = pred_to_formula(p), pred_to_formula(pred_transfer(p, stmt))
    for vals in all_points(V3, 6):
        env = dict(zip(V3, vals))
        if pre.holds(env):
            for out in _run(stmt, env):
                assert post.holds(out)


@settings(max_examples=100, deadline=None)
@given(states(), states())
def test_join_is_upper_bound(a, b):
    j = pred_to_formula(pred_join(a, b))
    oracle = OracleBackend(box=16)
    for side in (a, b):
        f = pred_to_formula(side)
        assert oracle.entails(f, j)[0] is Entailment3.yes
        assert np_entails(f, j, 8)


@settings(max_examples=100, deadline=None)
@given(states(), states())
def test_widen_rel_antitone(a, b):
    w = pred_widen(a, b)
    if not a.bottom and not b.bottom:
        assert w.rel <= a.rel
        assert all(x | y == z for x, y, z in zip(a.blocksets, b.blocksets, w.blocksets))


@given(states())
def test_widen_self_is_identity(a):
    assert pred_widen(a, a) == a


@settings(max_examples=50, deadline=None)
@given(st.lists(states(), min_size=1, max_size=40))
def test_blockset_chains_stabilize(seq):
    cur, changes = seq[0], 0
    for nxt in seq[1:]:
        new = pred_widen(cur, pred_join(cur, nxt))
        if new.blocksets != cur.blocksets:
            changes += 1
        cur = new
    assert changes <= len(V3) * len(B)
