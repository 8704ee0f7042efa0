"""Recursive-descent parser for the ASCII process syntax.

Grammar, loosest binding first::

    program    ::= { NAME '=' process }
    process    ::= seq { '||' seq }
    seq        ::= unary { ';' unary }
    unary      ::= action '.' unary | postfix
    postfix    ::= atom { '|{' gate {',' gate} '}' }
    atom       ::= 'nil' | 'end' | NAME ['[' vars ']'] | '(' process ')'
                 | '[' decl {decl} ':' process ']'
                 | '[]' cond '->' process { '[]' cond '->' process }
    decl       ::= ('nat' | 'qubit') '[' vars ']'
    action     ::= gate '!' NUM | gate '!' var | gate '!' NAME '[' vars ']'
                 | gate '?' var | NAME '[' vars ']'
    cond       ::= elem op elem      op in = != <= >= < >

``--`` starts a comment running to the end of the line. ``NAME[vars] .`` is
an operator application; whether NAME is a unitary or an observable is left
to elaboration, so the parser always produces ``ApplyUnitary`` for it.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field

from .errors import ParseError
from .terms import (
    END,
    NIL,
    Action,
    ApplyUnitary,
    Choice,
    Cond,
    EmitMeasure,
    EmitValue,
    EmitVar,
    Invoke,
    Par,
    Prefix,
    Receive,
    Restrict,
    Scope,
    Seq,
    Term,
)

KEYWORDS = frozenset({"nil", "end", "nat", "qubit"})

_TOKEN_RE = re.compile(
    r"""
    (?P<ws>[ \t\r\f]+)
  | (?P<nl>\n)
  | (?P<comment>--[^\n]*)
  | (?P<num>[0-9]+)
  | (?P<name>[A-Za-z_][A-Za-z0-9_#~]*)
  | (?P<op>\[\]|\|\||\|\{|->|!=|<=|>=|[\[\](){},.;!?:=<>])
    """,
    re.VERBOSE,
)


@dataclass(frozen=True)
class Token:
    kind: str  # "num", "name", "op", "eof"
    text: str
    line: int
    col: int

    @property
    def pos(self) -> tuple[int, int]:
        return (self.line, self.col)


def tokenize(text: str) -> list[Token]:
    tokens: list[Token] = []
    line, line_start, i = 1, 0, 0
    while i < len(text):
        m = _TOKEN_RE.match(text, i)
        if m is None:
            raise ParseError(f"unknown token {text[i]!r}", (line, i - line_start + 1))
        kind = m.lastgroup
        if kind == "nl":
            line, line_start = line + 1, m.end()
        elif kind not in ("ws", "comment"):
            tokens.append(Token(kind, m.group(), line, i - line_start + 1))
        i = m.end()
    tokens.append(Token("eof", "", line, i - line_start + 1))
    return tokens


@dataclass
class Definition:
    name: str
    body: Term
    pos: tuple[int, int] | None = field(default=None, compare=False)


class _Parser:
    def __init__(self, text: str):
        self.toks = tokenize(text)
        self.i = 0

    # token helpers

    def peek(self, k: int = 0) -> Token:
        return self.toks[min(self.i + k, len(self.toks) - 1)]

    def at(self, text: str, k: int = 0) -> bool:
        t = self.peek(k)
        return t.kind == "op" and t.text == text

    def advance(self) -> Token:
        t = self.toks[self.i]
        self.i += 1
        return t

    def expect(self, text: str) -> Token:
        if not self.at(text):
            self.fail(f"expected {text!r}")
        return self.advance()

    def fail(self, what: str, tok: Token | None = None):
        tok = tok or self.peek()
        found = "end of input" if tok.kind == "eof" else repr(tok.text)
        raise ParseError(f"{what}, found {found}", tok.pos)

    def name(self, what: str = "identifier") -> str:
        t = self.peek()
        if t.kind != "name" or t.text in KEYWORDS:
            self.fail(f"expected {what}")
        return self.advance().text

    def name_list(self) -> tuple[str, ...]:
        self.expect("[")
        names = [self.name("variable")]
        while self.at(","):
            self.advance()
            names.append(self.name("variable"))
        self.expect("]")
        return tuple(names)

    # grammar

    def program(self) -> list[Definition]:
        defs = []
        while self.peek().kind != "eof":
            tok = self.peek()
            name = self.name("process name")
            self.expect("=")
            defs.append(Definition(name, self.process(), tok.pos))
        return defs

    def process(self) -> Term:
        left = self.seq()
        while self.at("||"):
            self.advance()
            left = Par(left, self.seq())
        return left

    def seq(self) -> Term:
        left = self.unary()
        while self.at(";"):
            self.advance()
            left = Seq(left, self.unary())
        return left

    def _starts_action(self) -> bool:
        t = self.peek()
        if t.kind != "name" or t.text in KEYWORDS:
            return False
        if self.at("!", 1) or self.at("?", 1):
            return True
        if not self.at("[", 1):
            return False
        # NAME[...] is an action only when followed by the prefix dot
        k = 2
        while self.peek(k).kind != "eof" and not self.at("]", k):
            k += 1
        return self.at(".", k + 1)

    def unary(self) -> Term:
        if self._starts_action():
            action = self.action()
            self.expect(".")
            return Prefix(action, self.unary())
        return self.postfix()

    def action(self) -> Action:
        tok = self.peek()
        head = self.advance().text
        if self.at("?"):
            self.advance()
            return Receive(head, self.name("variable after '?'"), pos=tok.pos)
        if self.at("!"):
            self.advance()
            t = self.peek()
            if t.kind == "num":
                return EmitValue(head, int(self.advance().text), pos=tok.pos)
            if t.kind == "name" and t.text not in KEYWORDS:
                arg = self.advance().text
                if self.at("["):
                    return EmitMeasure(head, arg, self.name_list(), pos=tok.pos)
                return EmitVar(head, arg, pos=tok.pos)
            self.fail("expected value, variable or observable after '!'")
        return ApplyUnitary(head, self.name_list(), pos=tok.pos)

    def postfix(self) -> Term:
        term = self.atom()
        while self.at("|{"):
            self.advance()
            gates = [self.name("gate")]
            while self.at(","):
                self.advance()
                gates.append(self.name("gate"))
            self.expect("}")
            term = Restrict(term, tuple(gates))
        return term

    def atom(self) -> Term:
        t = self.peek()
        if t.kind == "name":
            if t.text == "nil":
                self.advance()
                return NIL
            if t.text == "end":
                self.advance()
                return END
            if t.text in KEYWORDS:
                self.fail("unexpected keyword")
            name = self.advance().text
            args = self.name_list() if self.at("[") else ()
            return Invoke(name, args, pos=t.pos)
        if self.at("("):
            self.advance()
            term = self.process()
            self.expect(")")
            return term
        if self.at("[]"):
            return self.choice()
        if self.at("["):
            return self.scope()
        self.fail("expected a process")

    def scope(self) -> Scope:
        tok = self.expect("[")
        classical: list[str] = []
        quantum: list[str] = []
        while True:
            t = self.peek()
            if t.kind == "name" and t.text == "nat":
                self.advance()
                classical.extend(self.name_list())
            elif t.kind == "name" and t.text == "qubit":
                self.advance()
                quantum.extend(self.name_list())
            else:
                self.fail("expected 'nat[...]' or 'qubit[...]' declaration")
            if self.at(":"):
                break
        self.advance()
        body = self.process()
        self.expect("]")
        return Scope(tuple(classical), tuple(quantum), body, pos=tok.pos)

    def choice(self) -> Choice:
        tok = self.peek()
        branches = []
        while self.at("[]"):
            self.advance()
            cond = self.cond()
            self.expect("->")
            branches.append((cond, self.process()))
        return Choice(tuple(branches), pos=tok.pos)

    def elem(self) -> str | int:
        t = self.peek()
        if t.kind == "num":
            return int(self.advance().text)
        return self.name("variable or value in condition")

    def cond(self) -> Cond:
        tok = self.peek()
        lhs = self.elem()
        op = self.peek()
        if op.kind != "op" or op.text not in ("=", "!=", "<=", ">=", "<", ">"):
            self.fail("expected comparison operator")
        self.advance()
        return Cond(lhs, op.text, self.elem(), pos=tok.pos)


def parse_definitions(text: str) -> list[Definition]:
    """Parse source text into definitions, rejecting duplicate names."""
    defs = _Parser(text).program()
    seen: dict[str, Definition] = {}
    for d in defs:
        if d.name in seen:
            raise ParseError(f"duplicate definition of {d.name!r}", d.pos)
        seen[d.name] = d
    return defs


def parse_term(text: str) -> Term:
    """Parse a single process term."""
    p = _Parser(text)
    term = p.process()
    if p.peek().kind != "eof":
        p.fail("unexpected trailing input")
    return term
