"""SMT-LIB v2 export and a subprocess solver client."""
from __future__ import annotations

import logging
import os
import re
import select
import shutil
import subprocess
import time
from pathlib import Path
from typing import Iterable, Optional

from .formula import Formula, LinAtom, OneOf, Top, vars_of

__all__ = ["export_smtlib", "entailment_query", "ExternalBackend", "SolverError", "find_solver"]

log = logging.getLogger(__name__)

_RESERVED = {
    "and", "or", "not", "xor", "ite", "let", "true", "false", "distinct", "div", "mod",
    "abs", "Int", "Bool", "Real", "assert", "forall", "exists", "par", "as", "_", "!",
}
_SIMPLE = re.compile(r"[A-Za-z~!@$%^&*_+=<>.?/-][A-Za-z0-9~!@$%^&*_+=<>.?/-]*")


def symbol(v: str) -> str:
    if v in _RESERVED or not _SIMPLE.fullmatch(v):
        return f"|{v}|"
    return v


def _num(n: int) -> str:
    return f"(- {-n})" if n < 0 else str(n)


def _term(v: str, c: int) -> str:
    if c == 1:
        return symbol(v)
    if c == -1:
        return f"(- {symbol(v)})"
    return f"(* {_num(c)} {symbol(v)})"


def _atom(a: LinAtom) -> str:
    if not a.terms:
        lhs = "0"
    elif len(a.terms) == 1:
        lhs = _term(*a.terms[0])
    else:
        lhs = "(+ " + " ".join(_term(v, c) for v, c in a.terms) + ")"
    return f"(<= {lhs} {_num(a.bound)})"


def _oneof(o: OneOf) -> str:
    x = symbol(o.var)
    parts = []
    for lo, hi in o.intervals:
        if lo is not None and lo == hi:
            parts.append(f"(= {x} {_num(lo)})")
            continue
        side = []
        if lo is not None:
            side.append(f"(<= {_num(lo)} {x})")
        if hi is not None:
            side.append(f"(<= {x} {_num(hi)})")
        parts.append("true" if not side else side[0] if len(side) == 1
                     else f"(and {' '.join(side)})")
    if not parts:
        return "false"
    return parts[0] if len(parts) == 1 else f"(or {' '.join(parts)})"


def _item(i) -> str:
    if isinstance(i, LinAtom):
        return _atom(i)
    if isinstance(i, OneOf):
        return _oneof(i)
    return "false"


def formula_term(f: Formula) -> str:
    """The conjunction as one SMT-LIB term; ``v -> T`` markers are dropped."""
    parts = [_item(i) for i in f.sorted_items() if not isinstance(i, Top)]
    if not parts:
        return "true"
    return parts[0] if len(parts) == 1 else f"(and {' '.join(parts)})"


def _declare(universe: Iterable[str]) -> list[str]:
    return [f"(declare-const {symbol(v)} Int)" for v in sorted(universe)]


def export_smtlib(f: Formula, universe: Optional[Iterable[str]] = None) -> str:
    universe = vars_of(f) if universe is None else frozenset(universe)
    lines = ["(set-logic QF_LIA)", *_declare(universe), f"(assert {formula_term(f)})"]
    return "\n".join(lines) + "\n"


def entailment_query(a: Formula, b: Formula) -> str:
    """``a /\\ not b`` then a satisfiability check: unsat means ``a`` entails ``b``."""
    universe = vars_of(a) | vars_of(b)
    lines = [
        "(set-option :produce-models true)",
        "(set-logic QF_LIA)",
        *_declare(universe),
        f"(assert {formula_term(a)})",
        f"(assert (not {formula_term(b)}))",
        "(check-sat)",
    ]
    return "\n".join(lines) + "\n"


class SolverError(RuntimeError):
    pass


_ARGS = {
    "z3": ["-in", "-smt2"],
    "cvc5": ["--lang=smt2", "--produce-models", "--incremental"],
    "cvc4": ["--lang=smt2", "--produce-models", "--incremental"],
}


def find_solver() -> Optional[str]:
    for name in ("z3", "cvc5", "cvc4"):
        path = shutil.which(name)
        if path:
            return path
    return None


def _sexprs(text: str) -> list:
    toks = re.findall(r"\(|\)|\|[^|]*\||[^\s()]+", text)
    stack: list[list] = [[]]
    for t in toks:
        if t == "(":
            stack.append([])
        elif t == ")":
            if len(stack) == 1:
                raise SolverError(f"unbalanced solver reply: {text!r}")
            done = stack.pop()
            stack[-1].append(done)
        else:
            stack[-1].append(t.strip("|") if t.startswith("|") else t)
    if len(stack) != 1:
        raise SolverError(f"truncated solver reply: {text!r}")
    return stack[0]


def _int_value(e) -> int:
    if isinstance(e, str):
        return int(e)
    if len(e) == 2 and e[0] == "-":
        return -_int_value(e[1])
    raise SolverError(f"non-integer model value {e!r}")


class _Reader:
    """Line and s-expression reads from a pipe with a shared deadline."""

    def __init__(self, fd: int, deadline: float):
        self.fd = fd
        self.deadline = deadline
        self.buf = b""

    def _fill(self) -> None:
        left = self.deadline - time.monotonic()
        if left <= 0:
            raise TimeoutError
        ready, _, _ = select.select([self.fd], [], [], left)
        if not ready:
            raise TimeoutError
        chunk = os.read(self.fd, 65536)
        if not chunk:
            raise SolverError("solver closed its output")
        self.buf += chunk

    def line(self) -> str:
        while b"\n" not in self.buf:
            self._fill()
        head, self.buf = self.buf.split(b"\n", 1)
        return head.decode().strip()

    def balanced(self) -> str:
        while True:
            text = self.buf.decode()
            depth, started = 0, False
            for k, ch in enumerate(text):
                if ch == "(":
                    depth += 1
                    started = True
                elif ch == ")":
                    depth -= 1
                    if started and depth == 0:
                        self.buf = text[k + 1:].encode()
                        return text[:k + 1]
            self._fill()


class ExternalBackend:
    """Entailment through an SMT-LIB solver process, one process per query."""

    name = "extern"

    def __init__(self, solver: Optional[str] = None, timeout_ms: int = 10_000,
                 args: Optional[list[str]] = None):
        solver = solver or find_solver()
        if solver is None:
            raise SolverError("no SMT-LIB solver found on PATH (tried z3, cvc5, cvc4)")
        if shutil.which(solver) is None:
            raise SolverError(f"solver {solver!r} is not an executable")
        self.solver = solver
        self.timeout_ms = timeout_ms
        self.args = list(args) if args is not None else _ARGS.get(Path(solver).name, [])
        self.queries: list[str] = []

    def check(self, query: str, universe: list[str]) -> tuple[str, Optional[dict]]:
        """Run one query; returns ``("sat"|"unsat"|"unknown", model)``."""
        self.queries.append(query)
        deadline = time.monotonic() + self.timeout_ms / 1000
        try:
            proc = subprocess.Popen([self.solver, *self.args], stdin=subprocess.PIPE,
                                    stdout=subprocess.PIPE, stderr=subprocess.DEVNULL)
        except OSError as e:
            log.warning("cannot start solver %s: %s", self.solver, e)
            return "unknown", None
        try:
            proc.stdin.write(query.encode())
            proc.stdin.flush()
            reader = _Reader(proc.stdout.fileno(), deadline)
            answer = reader.line()
            while not answer:
                answer = reader.line()
            if answer not in ("sat", "unsat", "unknown"):
                log.warning("malformed solver reply %r", answer)
                return "unknown", None
            model = None
            if answer == "sat" and universe:
                syms = " ".join(symbol(v) for v in universe)
                proc.stdin.write(f"(get-value ({syms}))\n".encode())
                proc.stdin.flush()
                reply = _sexprs(reader.balanced())
                pairs = reply[0] if reply else []
                model = {name: _int_value(val) for name, val in pairs}
            return answer, model
        except TimeoutError:
            log.warning("solver timed out after %d ms", self.timeout_ms)
            return "unknown", None
        except (SolverError, ValueError, OSError) as e:
            log.warning("solver failure: %s", e)
            return "unknown", None
        finally:
            try:
                proc.stdin.write(b"(exit)\n")
                proc.stdin.close()
            except OSError:
                pass
            try:
                proc.wait(timeout=1)
            except subprocess.TimeoutExpired:
                proc.kill()
                proc.wait()
            proc.stdout.close()

    def entails(self, a: Formula, b: Formula):
        from .compare import Entailment3
        universe = sorted(vars_of(a) | vars_of(b))
        answer, model = self.check(entailment_query(a, b), universe)
        if answer == "unsat":
            return Entailment3.yes, None
        if answer == "sat":
            return Entailment3.no, model
        return Entailment3.unknown, None
