"""Error root and structured validation diagnostics shared by all modules."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable


class ComposError(Exception):
    """Root of all library-specific errors."""


#: Stable code per diagnostic kind; the codes are part of the CLI contract.
KIND_CODES = {
    "SyntaxError": "E001",
    "UnresolvedReference": "E002",
    "TotalityViolation": "E003",
    "ImageOutsideTarget": "E004",
    "MalformedName": "E005",
    "NameSetsOverlap": "E006",
    "SymbolNotDeclared": "E007",
    "GuardDomainMismatch": "E008",
    "EffectDomainMismatch": "E009",
    "ObservationDomainMismatch": "E010",
    "ObservedActionUnknown": "E011",
    "PrescriptionNotPreserved": "E012",
    "DescriptionNotPreserved": "E013",
    "ObservationNotPreserved": "E014",
    "EndpointMismatch": "E015",
    "UnknownNode": "E016",
    "CommutationFailure": "E017",
    "LegMissing": "E018",
    "LegUnknownNode": "E019",
    "LegSourceMismatch": "E020",
    "LegTargetMismatch": "E021",
    "DuplicateDeclaration": "E022",
    "DuplicateMapping": "E023",
    "UnknownEnvironment": "E024",
    "UndeclaredAction": "W001",
    "UndeclaredEvent": "W002",
    "DuplicateName": "W003",
}


@dataclass(frozen=True)
class Diagnostic:
    """One validation finding: a stable kind, the offending names, and prose.

    ``subject`` carries the names the finding is about (an action, an event,
    an edge label, ...) so tests and tools can match on them without parsing
    the message.  ``line``/``column`` are filled in when the finding points
    into a source text.
    """

    kind: str
    subject: tuple[str, ...]
    message: str
    severity: str = "error"
    line: int | None = None
    column: int | None = None

    @property
    def code(self) -> str:
        return KIND_CODES.get(self.kind, "E999")

    def located(self, line: int, column: int) -> "Diagnostic":
        return Diagnostic(self.kind, self.subject, self.message,
                          self.severity, line, column)

    def __str__(self) -> str:
        subject = ", ".join(self.subject)
        return f"{self.severity}[{self.code} {self.kind}]({subject}): {self.message}"


class ValidationFailure(ComposError):
    """Raised when parsing or loading yields a structurally invalid artifact."""

    def __init__(self, diagnostics: Iterable[Diagnostic], origin: str = "<input>"):
        self.diagnostics = list(diagnostics)
        self.origin = origin
        first = self.diagnostics[0] if self.diagnostics else None
        super().__init__(f"{origin}: {first}" if first else origin)


def error(kind: str, *subject: str, message: str,
          line: int | None = None, column: int | None = None) -> Diagnostic:
    return Diagnostic(kind, subject, message, "error", line, column)


def warning(kind: str, *subject: str, message: str,
            line: int | None = None, column: int | None = None) -> Diagnostic:
    return Diagnostic(kind, subject, message, "warning", line, column)
