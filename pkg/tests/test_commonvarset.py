import random
from fractions import Fraction

import pytest
from hypothesis import given, settings, strategies as st

from stubs import random_instance, reach_delta
from invcmp.commonvarset import ContractError, common_var_set
from invcmp.delta import delta_cc, delta_fs, delta_nn, delta_scripted, load_replay, vars_of
from invcmp.experiment import walkthrough_dir
from invcmp.formula import Formula, parse_formula

F = parse_formula
I1 = F("z - x <= 0 && y - x <= 0 && w -> T")
I2 = F("z - x <= 0 && y - x <= 0 && w - y <= 0")


def _walkthrough_delta():
    return delta_scripted(load_replay(walkthrough_dir() / "replay.json"))


def test_worked_example():
    d = _walkthrough_delta()
    r = common_var_set({"x", "y"}, {"x", "y"}, I1, I2, d, d)
    assert r.s == {"w", "x", "y"}
    assert r.iterations == 1
    assert r.proportion == Fraction(3, 4)


def test_worked_example_inline_trace():
    trace = {
        (I1, frozenset("xy")): F("y - x <= 0"),
        (I2, frozenset("xy")): F("y - x <= 0 && w - y <= 0"),
        (I1, frozenset("w")): F("w -> T"),
        (I2, frozenset("wxy")): F("y - x <= 0 && w - y <= 0"),
        (I1, frozenset("wxy")): F("y - x <= 0 && w -> T"),
    }
    d = delta_scripted(trace)
    r = common_var_set("xy", "xy", I1, I2, d, d)
    assert (r.s, r.iterations) == ({"w", "x", "y"}, 1)


def test_same_delta_same_dv_needs_no_iteration():
    for d in (delta_nn, delta_cc, delta_fs):
        r = common_var_set({"y"}, {"y"}, I1, I1, d, d)
        assert r.iterations == 0
        assert r.s == vars_of(d(I1, {"y"}))


def test_incomparable_branch():
    u = Formula.true({"a", "b"})
    trace = {(u, frozenset("a")): Formula.true({"a"}),
             (u, frozenset("b")): Formula.true({"b"})}
    d = delta_scripted(trace)
    r = common_var_set({"a"}, {"b"}, u, u, d, d)
    assert (r.s, r.iterations) == ({"a", "b"}, 1)
    assert r.delta_calls == 4


def test_full_state_devolves_to_universe():
    r = common_var_set({"x"}, {"y"}, I1, I2, delta_fs, delta_fs)
    assert r.s == vars_of(I1) and r.iterations <= 1 and r.proportion == 1


def test_empty_changes():
    r = common_var_set(set(), set(), I1, I2, delta_cc, delta_cc)
    assert r.s == frozenset() and r.iterations == 0 and r.proportion == 0


def test_contract_errors():
    with pytest.raises(ContractError, match="different variables"):
        common_var_set({"x"}, {"x"}, F("x <= 1"), F("y <= 1"), delta_cc, delta_cc)
    with pytest.raises(ContractError, match="dv1"):
        common_var_set({"q"}, {"x"}, F("x <= 1"), F("x <= 2"), delta_cc, delta_cc)
    escape = lambda inv, dv: Formula.true({"q"})
    with pytest.raises(ContractError, match="introduced"):
        common_var_set({"x"}, {"x"}, F("x <= 1"), F("x <= 2"), escape, escape)
    u = Formula.true({"a", "b"})
    shrink = lambda inv, dv: Formula.true({"a"})
    other = lambda inv, dv: Formula.true({"b"})
    with pytest.raises(ContractError, match="no progress"):
        common_var_set({"a"}, {"b"}, u, u, shrink, other)


def _check(names, inv, dv1, dv2, d1, d2):
    r = common_var_set(dv1, dv2, inv, inv, d1, d2)
    assert r.iterations <= len(names)
    assert vars_of(d1(inv, r.s)) == r.s == vars_of(d2(inv, r.s))
    assert r.delta_calls <= 2 * (r.iterations + 1)
    assert r.proportion == Fraction(len(r.s), len(names))
    return r


@settings(max_examples=300)
@given(st.integers(0, 2**32 - 1))
def test_random_reachability_deltas(seed):
    _check(*random_instance(random.Random(seed)))


def test_smallest_common_superset():
    """On reachability Δs the result is the least set closed under both graphs."""
    g1 = {"a": {"b"}, "b": set(), "c": set(), "d": {"a"}}
    g2 = {"a": set(), "b": {"c"}, "c": set(), "d": set()}
    inv = Formula.true("abcd")
    r = common_var_set({"a"}, {"a"}, inv, inv, reach_delta(g1), reach_delta(g2))
    assert r.s == {"a", "b", "c"}
