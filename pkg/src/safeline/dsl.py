"""Shared tokenizer and parser scaffolding for the three textual formats.

The model, CFT-library, and behavior formats use the same lexical structure:
identifiers, numbers, double-quoted strings, a fixed symbol set, and ``#``
line comments.
"""

from __future__ import annotations

import re
from dataclasses import dataclass

from .diagnostics import Diagnostic, ParseError

_TOKEN_RE = re.compile(
    r"""
    (?P<ws>\s+)
  | (?P<comment>\#[^\n]*)
  | (?P<number>[-+]?(?:\d+\.\d*|\.\d+|\d+)(?:[eE][-+]?\d+)?)
  | (?P<ident>[A-Za-z_][A-Za-z0-9_]*)
  | (?P<string>"(?:[^"\\]|\\.)*")
  | (?P<symbol>->|==|!=|[{}()\[\];:,.=])
    """,
    re.VERBOSE,
)


@dataclass(frozen=True)
class Token:
    kind: str  # "ident" | "number" | "string" | "symbol" | "eof"
    value: str
    line: int
    col: int


def tokenize(text: str) -> list[Token]:
    tokens: list[Token] = []
    line, col = 1, 1
    pos = 0
    while pos < len(text):
        m = _TOKEN_RE.match(text, pos)
        if m is None:
            raise ParseError(
                [Diagnostic("error", f"unexpected character {text[pos]!r}", line=line, col=col)]
            )
        kind = m.lastgroup
        value = m.group()
        if kind not in ("ws", "comment"):
            tokens.append(Token(kind, value, line, col))
        newlines = value.count("\n")
        if newlines:
            line += newlines
            col = len(value) - value.rfind("\n")
        else:
            col += len(value)
        pos = m.end()
    tokens.append(Token("eof", "", line, col))
    return tokens


class Parser:
    """Recursive-descent helper over a token list."""

    def __init__(self, text: str):
        self.tokens = tokenize(text)
        self.pos = 0

    @property
    def cur(self) -> Token:
        return self.tokens[self.pos]

    def at(self, value: str) -> bool:
        return self.cur.value == value and self.cur.kind in ("ident", "symbol")

    def at_kind(self, kind: str) -> bool:
        return self.cur.kind == kind

    def advance(self) -> Token:
        tok = self.cur
        if tok.kind != "eof":
            self.pos += 1
        return tok

    def accept(self, value: str) -> bool:
        if self.at(value):
            self.advance()
            return True
        return False

    def fail(self, expected: str) -> ParseError:
        tok = self.cur
        got = tok.value if tok.kind != "eof" else "end of input"
        return ParseError(
            [Diagnostic("error", f"expected {expected}, got {got!r}", line=tok.line, col=tok.col)]
        )

    def expect(self, value: str) -> Token:
        if not self.at(value):
            raise self.fail(f"'{value}'")
        return self.advance()

    def ident(self, what: str = "identifier") -> Token:
        if self.cur.kind != "ident":
            raise self.fail(what)
        return self.advance()

    def number(self) -> float:
        if self.cur.kind != "number":
            raise self.fail("number")
        return float(self.advance().value)

    def string(self) -> str:
        if self.cur.kind != "string":
            raise self.fail("string literal")
        raw = self.advance().value
        return raw[1:-1].replace('\\"', '"').replace("\\\\", "\\")

    def expect_eof(self) -> None:
        if self.cur.kind != "eof":
            raise self.fail("end of input")
