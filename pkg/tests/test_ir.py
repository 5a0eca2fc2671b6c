import pytest
from hypothesis import given, settings, strategies as st

from invcmp.experiment import desk_corpus, walkthrough_dir
from invcmp.ir import (Assign, Branch, Cond, Goto, Guard, LinExpr, Nondet, ParseError, Return, Skip,
                       cond_atoms, format_program, parse_program, updated_vars)

BRANCH_SHAPE = """
proc branches(w, x, y, z) {
  b0: if (y <= x) t else f;
  t: return;
  f: return;
}
"""


def test_branch_shape_parses_to_three_blocks():
    p = parse_program(BRANCH_SHAPE)
    assert len(p.blocks) == 3
    assert set(p.vars) == {"w", "x", "y", "z"}
    assert p.blocks[0].term == Branch(Cond("y", "<=", "x"), 1, 2)


def test_minimal_program():
    p = parse_program("proc p(x) { entry: skip; }")
    assert len(p.blocks) == 1
    assert p.blocks[0].stmts == (Skip(),)
    assert isinstance(p.blocks[0].term, Return)


def test_undeclared_variable():
    with pytest.raises(ParseError, match="undeclared variable r") as err:
        parse_program("proc p(q) {\n  e: q := r;\n}")
    assert (err.value.line, err.value.col) == (2, 11)


@pytest.mark.parametrize("text, msg", [
    ("proc p(x) { a: skip; a: skip; }", "duplicate block label a"),
    ("proc p(x) { a: goto nowhere; }", "unknown block label nowhere"),
    ("proc p(x) { a: return; b: return; }", "unreachable"),
    ("proc p(x) { a: x := x + ; }", "expected"),
    ("proc p(x, y, z) { a: x := y + z + 1 + x; }", "more than two variables"),
    ("proc p(x) { a: x := 1 }", "expected ';'"),
    ("proc p(x) { a: x := $; }", "unexpected character"),
    ("proc p(x, x) { a: skip; }", "duplicate parameter"),
])
def test_parse_errors(text, msg):
    with pytest.raises(ParseError, match=msg):
        parse_program(text)


def test_parse_shapes():
    p = parse_program("""
    proc s(a, b, c) {
      e: a := 3; b := -a + 2; c := a - b; a := ?; c := c + 1;
         if (a != b - 4) e2 else e2;
      e2: goto e3;
      e3:
    }""")
    stmts = p.blocks[0].stmts
    assert stmts[0] == Assign("a", LinExpr.of({}, 3))
    assert stmts[1] == Assign("b", LinExpr.of({"a": -1}, 2))
    assert stmts[2] == Assign("c", LinExpr.of({"a": 1, "b": -1}))
    assert stmts[3] == Assign("a", Nondet())
    assert p.blocks[0].term == Branch(Cond("a", "!=", "b", -4), 1, 1)
    assert p.blocks[1].term == Goto(2)
    assert isinstance(p.blocks[2].term, Return)


def test_updated_vars_examples():
    assert updated_vars(Guard(Cond("y", "<=", "x"), True)) == {"x", "y"}
    assert updated_vars(Assign("x", LinExpr.of({"x": 1}, 1))) == {"x"}
    assert updated_vars(Skip()) == frozenset()
    assert updated_vars(Guard(Cond("x", ">", None, 3), False)) == {"x"}


def test_cond_atoms_normalization():
    assert cond_atoms(Cond("x", "<", None, 5)) == [({"x": 1}, 4)]
    assert cond_atoms(Cond("x", ">", "y", 2)) == [({"x": -1, "y": 1}, -3)]
    assert cond_atoms(Cond("x", "==", "y")) == [({"x": 1, "y": -1}, 0), ({"x": -1, "y": 1}, 0)]
    assert cond_atoms(Cond("x", "!=", None, 0)) is None
    # false branch of y <= x is x <= y - 1
    assert cond_atoms(Guard(Cond("y", "<=", "x"), False).effective) == [({"x": 1, "y": -1}, -1)]


def _all_programs():
    return desk_corpus() + [walkthrough_dir() / "branches.ir"]


@pytest.mark.parametrize("path", _all_programs(), ids=lambda p: p.stem)
def test_corpus_round_trip_and_structure(path):
    p = parse_program(path.read_text())
    text = format_program(p)
    q = parse_program(text)
    assert q == p
    assert format_program(q) == text
    for (_, _), stmt in p.statements():
        assert updated_vars(stmt) <= set(p.vars)
    for b in p.blocks:
        if isinstance(b.term, Branch):
            assert len(b.successors) == 2
        else:
            assert len(b.successors) <= 1


NAMES = ["a", "b", "c"]
ops = st.sampled_from(["<=", "<", ">=", ">", "==", "!="])


@st.composite
def programs(draw):
    n = draw(st.integers(1, 4))
    blocks = []
    for i in range(n):
        stmts = []
        for _ in range(draw(st.integers(0, 3))):
            t = draw(st.sampled_from(NAMES))
            kind = draw(st.sampled_from(["const", "copy", "neg", "two", "nondet", "skip"]))
            k = draw(st.integers(-9, 9))
            v, w = draw(st.sampled_from(NAMES)), draw(st.sampled_from(NAMES))
            rhs = {"const": f"{k}", "copy": f"{v} + {k}" if k >= 0 else f"{v} - {-k}",
                   "neg": f"-{v}", "two": f"{v} - {w}", "nondet": "?", "skip": None}[kind]
            stmts.append("skip;" if rhs is None else f"{t} := {rhs};")
        choice = draw(st.integers(0, 2))
        if choice == 0:
            term = "return;"
        elif choice == 1:
            term = f"goto l{draw(st.integers(0, n - 1))};"
        else:
            c = f"{draw(st.sampled_from(NAMES))} {draw(ops)} {draw(st.integers(-5, 5))}"
            term = f"if ({c}) l{draw(st.integers(0, n - 1))} else l{draw(st.integers(0, n - 1))};"
        blocks.append(f"l{i}: {' '.join(stmts)} {term}")
    return "proc g(a, b, c) {\n" + "\n".join(blocks) + "\n}\n"


@settings(max_examples=200, deadline=None)
@given(programs())
def test_round_trip_random(text):
    try:
        p = parse_program(text)
    except ParseError as e:
        assert "unreachable" in str(e)
        return
    assert parse_program(format_program(p)) == p
