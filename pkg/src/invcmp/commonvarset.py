"""Common minimal changed-variable set between two invariants.

Given each side's updated variables and a Δ function per side, find the
smallest ``S`` with ``S = V(Δ1(I1, S)) = V(Δ2(I2, S))`` by growing the two
candidate sets until they agree.  Sets only ever grow by union, which is
what bounds the loop by the size of the variable universe.
"""
from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from typing import Iterable

from .delta import DeltaFn
from .formula import Formula, vars_of

__all__ = ["CvsResult", "ContractError", "common_var_set"]


class ContractError(ValueError):
    """A precondition of the common-variable-set computation does not hold."""


@dataclass(frozen=True)
class CvsResult:
    s: frozenset[str]
    iterations: int
    proportion: Fraction
    delta_calls: int = 0


def common_var_set(dv1: Iterable[str], dv2: Iterable[str], inv1: Formula, inv2: Formula,
                   delta1: DeltaFn, delta2: DeltaFn) -> CvsResult:
    universe = vars_of(inv1)
    if universe != vars_of(inv2):
        raise ContractError(
            f"invariants range over different variables: {sorted(universe)} vs {sorted(vars_of(inv2))}")
    dv1, dv2 = frozenset(dv1), frozenset(dv2)
    for name, dv in (("dv1", dv1), ("dv2", dv2)):
        if not dv <= universe:
            raise ContractError(f"{name} has variables outside the invariant: {sorted(dv - universe)}")
    calls = 0

    def project(delta: DeltaFn, inv: Formula, dv: frozenset) -> frozenset:
        nonlocal calls
        calls += 1
        out = vars_of(delta(inv, dv))
        if not out <= universe:
            raise ContractError(f"Δ introduced variables {sorted(out - universe)}")
        return out

    s1 = project(delta1, inv1, dv1)
    s2 = project(delta2, inv2, dv2)
    iterations = 0
    while s1 != s2:
        iterations += 1
        before = (s1, s2)
        if s1 > s2:
            dv2 = s1 - s2
            s2 = s2 | project(delta2, inv2, dv2)
        elif s2 > s1:
            dv1 = s2 - s1
            s1 = s1 | project(delta1, inv1, dv1)
        else:
            dv1 = s2 - s1
            dv2 = s1 - s2
            s1 = s1 | project(delta1, inv1, dv1)
            s2 = s2 | project(delta2, inv2, dv2)
        if (s1, s2) == before:
            # a Δ that drops its own changed variables never lets the sets meet
            raise ContractError(
                f"no progress at iteration {iterations}: Δ must keep the variables it is given")
    proportion = Fraction(len(s1), len(universe)) if universe else Fraction(0)
    return CvsResult(s1, iterations, proportion, calls)
