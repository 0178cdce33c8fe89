"""Tokenizer and recursive-descent parser for scenario files.

Parsing only builds the syntax tree (with source positions); names and
dimensions are checked later by :mod:`.elaborate`.  The grammar is
documented in ``docs/scenario-language.md``.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field
from typing import Optional, Union

from ..errors import OpinionModelError

Pos = tuple[int, int]


class ScenarioSyntaxError(OpinionModelError, SyntaxError):
    def __init__(self, message: str, pos: Pos, expected: Optional[set] = None):
        self.pos = pos
        self.expected = sorted(expected or ())
        detail = f"; expected one of: {', '.join(self.expected)}" if self.expected else ""
        super().__init__(f"line {pos[0]}, column {pos[1]}: {message}{detail}")


# --- tokens ----------------------------------------------------------------

@dataclass(frozen=True)
class Token:
    kind: str  # NUMBER NAME STRING OP NEWLINE EOF
    text: str
    pos: Pos


_TOKEN_RE = re.compile(r"""
    (?P<ws>[ \t\r]+)
  | (?P<comment>\#[^\n]*)
  | (?P<newline>\n)
  | (?P<number>-?\d+(?:\.\d+)?)
  | (?P<string>"[^"\n]*")
  | (?P<name>[A-Za-z_][A-Za-z0-9_]*)
  | (?P<op>\.\.|<=|>=|==|!=|[-<>=+*^()\[\]{},:|./])
""", re.VERBOSE)

_OPENERS, _CLOSERS = "([{", ")]}"


def tokenize(text: str) -> list[Token]:
    tokens: list[Token] = []
    line, line_start, depth, pos = 1, 0, 0, 0
    while pos < len(text):
        m = _TOKEN_RE.match(text, pos)
        col = pos - line_start + 1
        if m is None:
            raise ScenarioSyntaxError(f"unexpected character {text[pos]!r}", (line, col))
        kind = m.lastgroup
        value = m.group()
        if kind == "newline":
            if depth == 0 and tokens and tokens[-1].kind != "NEWLINE":
                tokens.append(Token("NEWLINE", "\n", (line, col)))
            line += 1
            line_start = m.end()
        elif kind not in ("ws", "comment"):
            if kind == "op":
                if value in _OPENERS:
                    depth += 1
                elif value in _CLOSERS:
                    depth = max(0, depth - 1)
            tokens.append(Token(kind.upper(), value, (line, col)))
        pos = m.end()
    if tokens and tokens[-1].kind != "NEWLINE":
        tokens.append(Token("NEWLINE", "\n", (line, len(text) - line_start + 1)))
    tokens.append(Token("EOF", "", (line + 1, 1)))
    return tokens


# --- syntax tree -------------------------------------------------------------

@dataclass(frozen=True)
class Num:
    text: str
    pos: Pos
    denominator: Optional[str] = None


@dataclass(frozen=True)
class Bool:
    value: bool
    pos: Pos


@dataclass(frozen=True)
class Name:
    text: str
    pos: Pos


Value = Union[Num, Name, Bool]


@dataclass(frozen=True)
class Compare:
    """``var op value``, or a chained ``low op var op high``."""

    var: Name
    ops: tuple[str, ...]
    bounds: tuple[Value, ...]
    lower_first: bool
    pos: Pos


@dataclass(frozen=True)
class Call:
    name: str
    args: tuple[Value, ...]
    pos: Pos


@dataclass(frozen=True)
class Table:
    variables: Optional[tuple[Name, ...]]
    entries: tuple[tuple[tuple[Value, ...], Value], ...]
    pos: Pos


@dataclass(frozen=True)
class SetOf:
    items: tuple["Expr", ...]
    pos: Pos


@dataclass(frozen=True)
class Binary:
    op: str  # plus | times
    word: str  # spelling used in the source: plus, or, +, times, and, *
    left: "Expr"
    right: "Expr"
    pos: Pos


@dataclass(frozen=True)
class Tagged:
    expr: "Expr"
    agent: Name
    pos: Pos


Expr = Union[Num, Bool, Compare, Call, Table, SetOf, Binary, Tagged]


@dataclass(frozen=True)
class Setting:
    key: str
    value: object  # Num | Name | Bool | str | list | Call
    pos: Pos


@dataclass(frozen=True)
class VarDecl:
    name: str
    values: tuple[Value, ...]
    pos: Pos


@dataclass(frozen=True)
class TagDecl:
    name: str
    pos: Pos


@dataclass(frozen=True)
class AgentsDecl:
    count: Optional[int]
    names: tuple[str, ...]
    pos: Pos


@dataclass(frozen=True)
class InfluenceEntry:
    row: Value
    col: Optional[Value]
    exprs: tuple[Expr, ...]
    pos: Pos


@dataclass(frozen=True)
class OpinionDecl:
    agent: Value
    expr: Expr
    pos: Pos


Statement = Union[Setting, VarDecl, TagDecl, AgentsDecl, InfluenceEntry, OpinionDecl]


@dataclass
class ScenarioFile:
    statements: list[Statement] = field(default_factory=list)


# --- parser ------------------------------------------------------------------

_CMP = {"<=", "<", ">=", ">", "=", "==", "!="}
_PLUS = {"plus": "plus", "or": "plus", "+": "plus"}
_TIMES = {"times": "times", "and": "times", "*": "times"}
_KEYWORDS = {"true", "false", "plus", "or", "times", "and"}


class Parser:
    def __init__(self, text: str):
        self.tokens = tokenize(text)
        self.i = 0

    # helpers
    @property
    def tok(self) -> Token:
        return self.tokens[self.i]

    def peek(self, k: int = 1) -> Token:
        return self.tokens[min(self.i + k, len(self.tokens) - 1)]

    def advance(self) -> Token:
        t = self.tok
        self.i += 1
        return t

    def at(self, *texts: str) -> bool:
        return self.tok.kind in ("OP", "NAME") and self.tok.text in texts

    def fail(self, message: str, expected=None):
        t = self.tok
        shown = "end of line" if t.kind == "NEWLINE" else "end of file" if t.kind == "EOF" else repr(t.text)
        raise ScenarioSyntaxError(f"{message}, found {shown}", t.pos, expected)

    def expect(self, text: str) -> Token:
        if not self.at(text):
            self.fail(f"expected {text!r}", {text})
        return self.advance()

    def expect_kind(self, kind: str, what: str) -> Token:
        if self.tok.kind != kind:
            self.fail(f"expected {what}", {what})
        return self.advance()

    # statements
    def parse(self) -> ScenarioFile:
        out = ScenarioFile()
        while self.tok.kind != "EOF":
            if self.tok.kind == "NEWLINE":
                self.advance()
                continue
            out.statements.append(self.statement())
            if self.tok.kind not in ("NEWLINE", "EOF"):
                self.fail("expected end of statement", {"end of line"})
        return out

    def statement(self) -> Statement:
        t = self.tok
        if t.kind != "NAME":
            self.fail("expected a statement", {"var", "tag", "agents", "influence", "opinion", "<setting>"})
        if t.text == "var":
            return self.var_decl()
        if t.text == "tag":
            self.advance()
            return TagDecl(self.expect_kind("NAME", "tag variable name").text, t.pos)
        if t.text == "agents":
            return self.agents_decl()
        if t.text == "influence":
            return self.influence()
        if t.text == "opinion":
            self.advance()
            agent = self.ref()
            self.expect("=")
            return OpinionDecl(agent, self.expr(), t.pos)
        return self.setting()

    def var_decl(self) -> VarDecl:
        start = self.advance()
        name = self.expect_kind("NAME", "variable name").text
        self.expect("in")
        if self.at("{"):
            self.advance()
            values = [self.value()]
            while self.at(","):
                self.advance()
                values.append(self.value())
            self.expect("}")
            return VarDecl(name, tuple(values), start.pos)
        low = self.integer()
        self.expect("..")
        high = self.integer()
        if high < low:
            raise ScenarioSyntaxError(f"empty range {low}..{high}", start.pos)
        return VarDecl(name, tuple(Num(str(v), start.pos) for v in range(low, high + 1)), start.pos)

    def integer(self) -> int:
        t = self.expect_kind("NUMBER", "integer")
        if "." in t.text:
            raise ScenarioSyntaxError("expected an integer", t.pos, {"integer"})
        return int(t.text)

    def agents_decl(self) -> AgentsDecl:
        start = self.advance()
        self.expect("=")
        if self.tok.kind == "NUMBER":
            n = self.integer()
            if n < 1:
                raise ScenarioSyntaxError("agent count must be positive", start.pos)
            return AgentsDecl(n, tuple(str(k) for k in range(1, n + 1)), start.pos)
        self.expect("[")
        names = [self.ref_text()]
        while self.at(","):
            self.advance()
            names.append(self.ref_text())
        self.expect("]")
        return AgentsDecl(None, tuple(names), start.pos)

    def ref_text(self) -> str:
        if self.tok.kind in ("NAME", "NUMBER"):
            return self.advance().text
        self.fail("expected an agent name", {"name", "integer"})

    def ref(self) -> Value:
        t = self.tok
        if t.kind == "NUMBER":
            return Num(self.advance().text, t.pos)
        if t.kind == "NAME":
            return Name(self.advance().text, t.pos)
        self.fail("expected an agent name or index", {"name", "integer"})

    def influence(self) -> InfluenceEntry:
        start = self.advance()
        self.expect("[")
        row = self.ref()
        self.expect("]")
        col = None
        if self.at("["):
            self.advance()
            col = self.ref()
            self.expect("]")
        self.expect("=")
        if col is not None:
            return InfluenceEntry(row, col, (self.expr(),), start.pos)
        self.expect("[")
        exprs = [self.expr()]
        while self.at(","):
            self.advance()
            exprs.append(self.expr())
        self.expect("]")
        return InfluenceEntry(row, None, tuple(exprs), start.pos)

    def setting(self) -> Setting:
        start = self.tok
        key = self.advance().text
        while self.at("."):
            self.advance()
            key += "." + self.expect_kind("NAME", "setting name").text
        self.expect("=")
        t = self.tok
        if t.kind == "STRING":
            self.advance()
            value: object = t.text[1:-1]
        elif self.at("["):
            self.advance()
            items = [] if self.at("]") else [self.value()]
            while self.at(","):
                self.advance()
                items.append(self.value())
            self.expect("]")
            value = items
        elif t.kind == "NAME" and self.peek().text == "(":
            self.advance()
            self.advance()
            arg = self.expect_kind("NAME", "name").text
            self.expect(")")
            value = Call(t.text, (Name(arg, t.pos),), t.pos)
        else:
            value = self.value()
            # hyphenated identifiers such as `nonneg-real`
            while isinstance(value, Name) and self.at("-") and self.peek().kind == "NAME":
                self.advance()
                value = Name(value.text + "-" + self.advance().text, value.pos)
        return Setting(key, value, start.pos)

    # expressions
    def expr(self) -> Expr:
        left = self.term()
        while self.tok.text in _PLUS and self.tok.kind in ("NAME", "OP"):
            op = self.advance()
            left = Binary("plus", op.text, left, self.term(), op.pos)
        return left

    def term(self) -> Expr:
        left = self.factor()
        while self.tok.text in _TIMES and self.tok.kind in ("NAME", "OP"):
            op = self.advance()
            left = Binary("times", op.text, left, self.factor(), op.pos)
        return left

    def factor(self) -> Expr:
        e = self.primary()
        while self.at("^"):
            caret = self.advance()
            agent = self.tok
            if agent.kind not in ("NAME", "NUMBER"):
                self.fail("expected an agent name after '^'", {"name"})
            self.advance()
            e = Tagged(e, Name(agent.text, agent.pos), caret.pos)
        return e

    def primary(self) -> Expr:
        t = self.tok
        if self.at("("):
            self.advance()
            e = self.expr()
            self.expect(")")
            return e
        if self.at("{"):
            return self.braces()
        if t.kind == "NAME" and t.text in ("true", "false"):
            self.advance()
            return Bool(t.text == "true", t.pos)
        if t.kind == "NAME" and t.text not in _KEYWORDS:
            nxt = self.peek()
            if nxt.text == "(":
                return self.call()
            if nxt.text in _CMP:
                self.advance()
                op = self.advance().text
                return Compare(Name(t.text, t.pos), (op,), (self.value(),), False, t.pos)
            self.advance()
            self.fail(f"bare name {t.text!r} is not an expression", {"comparison", "builder call"})
        if t.kind == "NUMBER":
            if self.peek().text in _CMP:
                low = self.number()
                op1 = self.advance().text
                var = self.expect_kind("NAME", "variable name")
                if self.tok.text in _CMP:
                    op2 = self.advance().text
                    high = self.value()
                    return Compare(Name(var.text, var.pos), (op1, op2), (low, high), True, t.pos)
                return Compare(Name(var.text, var.pos), (op1,), (low,), True, t.pos)
            return self.number()
        self.fail("expected an expression", {"number", "true", "false", "comparison", "builder call", "(", "{"})

    def number(self) -> Num:
        t = self.expect_kind("NUMBER", "number")
        if self.at("/") and self.peek().kind == "NUMBER":
            self.advance()
            den = self.advance()
            return Num(t.text, t.pos, den.text)
        return Num(t.text, t.pos)

    def value(self) -> Value:
        t = self.tok
        if t.kind == "NUMBER":
            return self.number()
        if t.kind == "NAME" and t.text in ("true", "false"):
            self.advance()
            return Bool(t.text == "true", t.pos)
        if t.kind == "NAME":
            return Name(self.advance().text, t.pos)
        self.fail("expected a value", {"number", "name"})

    def call(self) -> Call:
        name = self.advance()
        self.expect("(")
        args = [] if self.at(")") else [self.value()]
        while self.at(","):
            self.advance()
            args.append(self.value())
        self.expect(")")
        return Call(name.text, tuple(args), name.pos)

    def braces(self) -> Expr:
        start = self.expect("{")
        save = self.i
        variables = None
        # `{x, y | ...}` names the table variables explicitly
        names = []
        while self.tok.kind == "NAME" and self.peek().text in (",", "|"):
            names.append(Name(self.tok.text, self.tok.pos))
            self.advance()
            if self.advance().text == "|":
                variables = tuple(names)
                break
        if variables is None:
            self.i = save
        if variables is not None or self.looks_like_entry():
            entries = [self.entry()]
            while self.at(","):
                self.advance()
                entries.append(self.entry())
            self.expect("}")
            return Table(variables, tuple(entries), start.pos)
        items = [self.expr()]
        while self.at(","):
            self.advance()
            items.append(self.expr())
        self.expect("}")
        return SetOf(tuple(items), start.pos)

    def looks_like_entry(self) -> bool:
        if self.at("("):
            k = 1
            while self.peek(k).text not in (")", "\n") and self.peek(k).kind != "EOF":
                k += 1
            return self.peek(k + 1).text == ":"
        if self.tok.kind == "NUMBER" and self.peek().text == "/":
            return self.peek(3).text == ":"
        return self.tok.kind in ("NUMBER", "NAME") and self.peek().text == ":"

    def entry(self) -> tuple[tuple[Value, ...], Value]:
        if self.at("("):
            self.advance()
            key = [self.value()]
            while self.at(","):
                self.advance()
                key.append(self.value())
            self.expect(")")
        else:
            key = [self.value()]
        self.expect(":")
        return tuple(key), self.value()


def parse(text: str) -> ScenarioFile:
    """Parse scenario text into a syntax tree; raises :class:`ScenarioSyntaxError`."""
    return Parser(text).parse()
