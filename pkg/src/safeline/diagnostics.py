"""Diagnostics shared by the parsers, validators, and checkers."""

from __future__ import annotations

from dataclasses import dataclass


@dataclass(frozen=True)
class Diagnostic:
    severity: str  # "error" | "warning"
    message: str
    element: str | None = None
    line: int | None = None
    col: int | None = None

    def __str__(self) -> str:
        pos = f"{self.line}:{self.col}: " if self.line is not None else ""
        elem = f" [{self.element}]" if self.element else ""
        return f"{pos}{self.severity}: {self.message}{elem}"


def errors(diags: list[Diagnostic]) -> list[Diagnostic]:
    return [d for d in diags if d.severity == "error"]


class SafelineError(Exception):
    """Base class for all domain errors raised by the pipeline."""


class ParseError(SafelineError):
    """Syntax or reference error in one of the textual input formats."""

    def __init__(self, diags: list[Diagnostic]):
        self.diagnostics = diags
        super().__init__("; ".join(str(d) for d in diags))
