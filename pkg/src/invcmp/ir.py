"""Textual three-address IR and its control-flow graph.

A program is a single procedure over integer variables declared in its
header::

    proc branches(w, x, y, z) {
      entry: if (z <= x) seeded else out;
      seeded: if (y <= x) t else f;
      t: return;
      f: return;
      out: return;
    }

Blocks are numbered densely in textual order; the first block is the entry.
A block without a terminator falls through to the next block (or returns if
it is the last one).
"""
from __future__ import annotations

import re
from dataclasses import dataclass, field
from typing import Iterator, Optional, Union

__all__ = [
    "ParseError", "LinExpr", "Nondet", "Cond", "Assign", "Skip", "Guard",
    "Goto", "Branch", "Return", "Block", "Program", "ProgramPoint",
    "parse_program", "format_program", "updated_vars", "cond_atoms",
]


class ParseError(ValueError):
    """Raised on malformed program text; carries a 1-based line/column."""

    def __init__(self, msg: str, line: int = 0, col: int = 0):
        self.line, self.col = line, col
        where = f"{line}:{col}: " if line else ""
        super().__init__(where + msg)


# --------------------------------------------------------------------------
# Expressions and conditions

@dataclass(frozen=True)
class LinExpr:
    """sum(coef * var) + const, with zero coefficients removed."""
    terms: tuple[tuple[str, int], ...]
    const: int = 0

    @classmethod
    def of(cls, coeffs: dict[str, int], const: int = 0) -> "LinExpr":
        return cls(tuple(sorted((v, c) for v, c in coeffs.items() if c)), const)

    @property
    def vars(self) -> frozenset[str]:
        return frozenset(v for v, _ in self.terms)

    def __str__(self) -> str:
        parts = []
        for v, c in self.terms:
            # the grammar has no multiplication: x + x for 2*x
            parts.extend([("-" if c < 0 else "+", v)] * abs(c))
        if self.const or not parts:
            parts.append(("-" if self.const < 0 else "+", str(abs(self.const))))
        first_sign, first = parts[0]
        out = ("-" if first_sign == "-" else "") + first
        for sign, p in parts[1:]:
            out += f" {sign} {p}"
        return out


@dataclass(frozen=True)
class Nondet:
    @property
    def vars(self) -> frozenset[str]:
        return frozenset()

    def __str__(self) -> str:
        return "?"


Expr = Union[LinExpr, Nondet]

_NEGATE = {"<=": ">", "<": ">=", ">=": "<", ">": "<=", "==": "!=", "!=": "=="}


@dataclass(frozen=True)
class Cond:
    """``lhs op rhs + const`` where rhs may be absent (compare with const)."""
    lhs: str
    op: str
    rhs: Optional[str]
    const: int = 0

    @property
    def vars(self) -> frozenset[str]:
        return frozenset({self.lhs} | ({self.rhs} if self.rhs else set()))

    def negate(self) -> "Cond":
        return Cond(self.lhs, _NEGATE[self.op], self.rhs, self.const)

    def __str__(self) -> str:
        if self.rhs is None:
            return f"{self.lhs} {self.op} {self.const}"
        if self.const == 0:
            return f"{self.lhs} {self.op} {self.rhs}"
        sign = "+" if self.const > 0 else "-"
        return f"{self.lhs} {self.op} {self.rhs} {sign} {abs(self.const)}"


def cond_atoms(cond: Cond) -> Optional[list[tuple[dict[str, int], int]]]:
    """Normalize a condition into non-strict integer atoms sum(c*v) <= k.

    Returns None for ``!=`` (not a conjunction of linear atoms).
    """
    diff = {cond.lhs: 1}
    if cond.rhs is not None:
        diff[cond.rhs] = diff.get(cond.rhs, 0) - 1
    diff = {v: c for v, c in diff.items() if c}
    neg = {v: -c for v, c in diff.items()}
    k = cond.const
    if cond.op == "<=":
        return [(diff, k)]
    if cond.op == "<":
        return [(diff, k - 1)]
    if cond.op == ">=":
        return [(neg, -k)]
    if cond.op == ">":
        return [(neg, -k - 1)]
    if cond.op == "==":
        return [(diff, k), (neg, -k)]
    return None


# --------------------------------------------------------------------------
# Statements and blocks

@dataclass(frozen=True)
class Assign:
    target: str
    expr: Expr

    def __str__(self) -> str:
        return f"{self.target} := {self.expr};"


@dataclass(frozen=True)
class Skip:
    def __str__(self) -> str:
        return "skip;"


@dataclass(frozen=True)
class Guard:
    """The branch condition as seen on one outgoing edge."""
    cond: Cond
    polarity: bool

    @property
    def effective(self) -> Cond:
        return self.cond if self.polarity else self.cond.negate()


Statement = Union[Assign, Skip, Guard]


@dataclass(frozen=True)
class Goto:
    target: int


@dataclass(frozen=True)
class Branch:
    cond: Cond
    then: int
    orelse: int


@dataclass(frozen=True)
class Return:
    pass


Terminator = Union[Goto, Branch, Return]


@dataclass(frozen=True)
class Block:
    id: int
    label: str
    stmts: tuple[Statement, ...]
    term: Terminator
    explicit_term: bool = field(default=True, compare=False)

    @property
    def successors(self) -> tuple[int, ...]:
        if isinstance(self.term, Goto):
            return (self.term.target,)
        if isinstance(self.term, Branch):
            return (self.term.then, self.term.orelse)
        return ()


@dataclass(frozen=True, order=True)
class ProgramPoint:
    """An invariant-recording site.

    ``index`` is the statement index the invariant follows; ``-1`` is the
    block entry (recorded only at merge points) and ``len(stmts)`` with an
    ``edge`` of ``"t"``/``"f"`` is a branch successor.
    """
    block: int
    index: int
    edge: str = ""

    def __str__(self) -> str:
        return f"b{self.block}:{self.index}{':' + self.edge if self.edge else ''}"


@dataclass(frozen=True)
class Program:
    name: str
    vars: tuple[str, ...]
    blocks: tuple[Block, ...]
    entry: int = 0
    preds: dict = field(default=None, compare=False, repr=False)

    def __post_init__(self):
        preds: dict[int, list[int]] = {b.id: [] for b in self.blocks}
        for b in self.blocks:
            for s in b.successors:
                preds[s].append(b.id)
        object.__setattr__(self, "preds", preds)

    def statements(self) -> Iterator[tuple[tuple[int, int], Statement]]:
        for b in self.blocks:
            for i, s in enumerate(b.stmts):
                yield (b.id, i), s
            if isinstance(b.term, Branch):
                yield (b.id, len(b.stmts)), Guard(b.term.cond, True)
                yield (b.id, len(b.stmts)), Guard(b.term.cond, False)

    def edges(self) -> Iterator[tuple[int, int, Optional[bool]]]:
        for b in self.blocks:
            if isinstance(b.term, Goto):
                yield b.id, b.term.target, None
            elif isinstance(b.term, Branch):
                yield b.id, b.term.then, True
                yield b.id, b.term.orelse, False


def updated_vars(stmt: Statement) -> frozenset[str]:
    """Variables a statement's transfer function may change (dv)."""
    if isinstance(stmt, Assign):
        return frozenset({stmt.target})
    if isinstance(stmt, Guard):
        return stmt.cond.vars
    return frozenset()


# --------------------------------------------------------------------------
# Parsing

_TOKEN = re.compile(
    r"(?P<ws>[ \t\r]+)|(?P<nl>\n)|(?P<comment>(//|#)[^\n]*)"
    r"|(?P<op>:=|<=|>=|==|!=|<|>|[(){}:;,+\-?])"
    r"|(?P<int>\d+)|(?P<ident>[A-Za-z_][A-Za-z0-9_]*)|(?P<bad>.)"
)
_KEYWORDS = {"proc", "skip", "goto", "if", "else", "return"}


@dataclass
class _Tok:
    kind: str
    text: str
    line: int
    col: int


def _tokenize(text: str) -> list[_Tok]:
    toks, line, start = [], 1, 0
    for m in _TOKEN.finditer(text):
        kind = m.lastgroup
        col = m.start() - start + 1
        if kind == "nl":
            line, start = line + 1, m.end()
        elif kind == "bad":
            raise ParseError(f"unexpected character {m.group()!r}", line, col)
        elif kind not in ("ws", "comment"):
            if kind == "ident" and m.group() in _KEYWORDS:
                kind = "kw"
            toks.append(_Tok(kind, m.group(), line, col))
    toks.append(_Tok("eof", "", line, len(text) - start + 1))
    return toks


class _Parser:
    def __init__(self, text: str):
        self.toks = _tokenize(text)
        self.pos = 0
        self.declared: set[str] = set()

    @property
    def tok(self) -> _Tok:
        return self.toks[self.pos]

    def error(self, msg: str, tok: Optional[_Tok] = None) -> ParseError:
        tok = tok or self.tok
        return ParseError(msg, tok.line, tok.col)

    def accept(self, text: str) -> bool:
        if self.tok.text == text and self.tok.kind in ("op", "kw"):
            self.pos += 1
            return True
        return False

    def expect(self, text: str) -> _Tok:
        tok = self.tok
        if not self.accept(text):
            raise self.error(f"expected {text!r}, found {tok.text or 'end of input'!r}")
        return tok

    def ident(self) -> _Tok:
        tok = self.tok
        if tok.kind != "ident":
            raise self.error(f"expected identifier, found {tok.text or 'end of input'!r}")
        self.pos += 1
        return tok

    def var(self) -> str:
        tok = self.ident()
        if tok.text not in self.declared:
            raise self.error(f"undeclared variable {tok.text}", tok)
        return tok.text

    def integer(self) -> int:
        neg = self.accept("-")
        tok = self.tok
        if tok.kind != "int":
            raise self.error(f"expected integer, found {tok.text or 'end of input'!r}")
        self.pos += 1
        return -int(tok.text) if neg else int(tok.text)

    def program(self) -> tuple[str, tuple[str, ...], list]:
        self.expect("proc")
        name = self.ident().text
        self.expect("(")
        params = []
        while True:
            tok = self.ident()
            if tok.text in self.declared:
                raise self.error(f"duplicate parameter {tok.text}", tok)
            self.declared.add(tok.text)
            params.append(tok.text)
            if not self.accept(","):
                break
        self.expect(")")
        self.expect("{")
        raw_blocks = []
        while self.tok.text != "}":
            raw_blocks.append(self.block())
        if not raw_blocks:
            raise self.error("procedure has no blocks")
        self.expect("}")
        if self.tok.kind != "eof":
            raise self.error(f"trailing input {self.tok.text!r}")
        return name, tuple(params), raw_blocks

    def block(self):
        label = self.ident()
        self.expect(":")
        stmts = []
        while True:
            tok = self.tok
            if tok.kind == "kw" and tok.text in ("goto", "if", "return"):
                return label, stmts, self.terminator()
            if tok.kind == "kw" and tok.text == "skip":
                self.pos += 1
                self.expect(";")
                stmts.append(Skip())
            elif tok.kind == "ident" and self.toks[self.pos + 1].text == ":=":
                target = self.var()
                self.expect(":=")
                stmts.append(Assign(target, self.expr()))
                self.expect(";")
            else:
                # next block label or end of procedure: implicit fallthrough
                return label, stmts, None

    def expr(self) -> Expr:
        if self.accept("?"):
            return Nondet()
        coeffs: dict[str, int] = {}
        const = 0
        sign = -1 if self.accept("-") else 1
        while True:
            tok = self.tok
            if tok.kind == "int":
                self.pos += 1
                const += sign * int(tok.text)
            else:
                v = self.var()
                coeffs[v] = coeffs.get(v, 0) + sign
            if self.accept("+"):
                sign = 1
            elif self.accept("-"):
                sign = -1
            else:
                break
        if sum(1 for c in coeffs.values() if c) > 2:
            raise self.error("expression has more than two variables")
        return LinExpr.of(coeffs, const)

    def terminator(self):
        tok = self.tok
        self.pos += 1
        if tok.text == "return":
            self.expect(";")
            return ("return",)
        if tok.text == "goto":
            target = self.ident()
            self.expect(";")
            return ("goto", target)
        self.expect("(")
        cond = self.cond()
        self.expect(")")
        then = self.ident()
        self.expect("else")
        orelse = self.ident()
        self.expect(";")
        return ("if", cond, then, orelse)

    def cond(self) -> Cond:
        lhs = self.var()
        tok = self.tok
        if tok.text not in _NEGATE:
            raise self.error(f"expected comparison operator, found {tok.text!r}")
        self.pos += 1
        if self.tok.kind == "ident":
            rhs = self.var()
            const = 0
            if self.accept("+"):
                const = self.integer()
            elif self.accept("-"):
                const = -self.integer()
            return Cond(lhs, tok.text, rhs, const)
        return Cond(lhs, tok.text, None, self.integer())


def parse_program(text: str) -> Program:
    """Parse program text into a :class:`Program`; raises :class:`ParseError`."""
    p = _Parser(text)
    name, params, raw = p.program()
    ids: dict[str, int] = {}
    for i, (label, _, _) in enumerate(raw):
        if label.text in ids:
            raise ParseError(f"duplicate block label {label.text}", label.line, label.col)
        ids[label.text] = i

    def resolve(tok: _Tok) -> int:
        if tok.text not in ids:
            raise ParseError(f"unknown block label {tok.text}", tok.line, tok.col)
        return ids[tok.text]

    blocks = []
    for i, (label, stmts, term) in enumerate(raw):
        if term is None:
            t = Goto(i + 1) if i + 1 < len(raw) else Return()
        elif term[0] == "return":
            t = Return()
        elif term[0] == "goto":
            t = Goto(resolve(term[1]))
        else:
            t = Branch(term[1], resolve(term[2]), resolve(term[3]))
        blocks.append(Block(i, label.text, tuple(stmts), t, term is not None))
    prog = Program(name, params, tuple(blocks), 0)

    seen, stack = {0}, [0]
    while stack:
        for s in prog.blocks[stack.pop()].successors:
            if s not in seen:
                seen.add(s)
                stack.append(s)
    for b in prog.blocks:
        if b.id not in seen:
            label = raw[b.id][0]
            raise ParseError(f"block {b.label} is unreachable from entry", label.line, label.col)
    return prog


def format_program(p: Program) -> str:
    """Pretty-print; ``parse_program(format_program(p)) == p``."""
    lines = [f"proc {p.name}({', '.join(p.vars)}) {{"]
    for b in p.blocks:
        body = [str(s) for s in b.stmts]
        t = b.term
        if isinstance(t, Goto):
            body.append(f"goto {p.blocks[t.target].label};")
        elif isinstance(t, Branch):
            body.append(f"if ({t.cond}) {p.blocks[t.then].label} else {p.blocks[t.orelse].label};")
        else:
            body.append("return;")
        lines.append(f"  {b.label}: " + " ".join(body))
    lines.append("}")
    return "\n".join(lines) + "\n"
