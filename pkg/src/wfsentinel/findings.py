"""Finding records shared by detectors, the fixer and the reporters."""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum
from typing import Any

from .model import SourceSpan


class Weakness(str, Enum):
    AIW = "AIW"
    CFW = "CFW"
    EPW = "EPW"
    GRCW = "GRCW"
    HGW = "HGW"
    IW = "IW"
    KVCW = "KVCW"
    SEW = "SEW"
    TMW = "TMW"
    UDW = "UDW"

    @property
    def title(self) -> str:
        return WEAKNESS_TITLES[self]

    @property
    def cwe(self) -> tuple[str, ...]:
        return WEAKNESS_CWE[self]


WEAKNESS_TITLES = {
    Weakness.AIW: "Artifact Integrity Weakness",
    Weakness.CFW: "Control Flow Weakness",
    Weakness.EPW: "Excessive Permission Weakness",
    Weakness.GRCW: "GitHub Runner Compatibility Weakness",
    Weakness.HGW: "Hardening Gap Weakness",
    Weakness.IW: "Injection Weakness",
    Weakness.KVCW: "Known Vulnerable Component Weakness",
    Weakness.SEW: "Secrets Exposure Weakness",
    Weakness.TMW: "Trigger Misuse Weakness",
    Weakness.UDW: "Unpinned Dependency Weakness",
}

WEAKNESS_CWE = {
    Weakness.AIW: ("CWE-353", "CWE-494"),
    Weakness.CFW: ("CWE-571",),
    Weakness.EPW: ("CWE-250", "CWE-732"),
    Weakness.GRCW: ("CWE-477", "CWE-440"),
    Weakness.HGW: ("CWE-223",),
    Weakness.IW: ("CWE-20", "CWE-94"),
    Weakness.KVCW: ("CWE-1395",),
    Weakness.SEW: ("CWE-200", "CWE-522"),
    Weakness.TMW: ("CWE-862",),
    Weakness.UDW: ("CWE-829",),
}


class Severity(str, Enum):
    LOW = "low"
    MEDIUM = "medium"
    HIGH = "high"
    CRITICAL = "critical"

    @property
    def rank(self) -> int:
        return _SEVERITY_RANK[self]

    def at_least(self, other: Severity) -> bool:
        return self.rank >= other.rank

    def bump(self) -> Severity:
        order = list(Severity)
        return order[min(self.rank + 1, len(order) - 1)]


_SEVERITY_RANK = {s: i for i, s in enumerate(Severity)}


class Confidence(str, Enum):
    LOW = "low"
    MEDIUM = "medium"
    HIGH = "high"


@dataclass(frozen=True)
class TextEdit:
    """Replace ``span`` with ``replacement``; optionally append ``# comment`` to the line."""

    span: SourceSpan
    replacement: str
    trailing_comment: str | None = None

    def to_dict(self) -> dict[str, Any]:
        return {"span": self.span.to_dict(), "replacement": self.replacement,
                "trailing_comment": self.trailing_comment}

    @classmethod
    def from_dict(cls, data: dict[str, Any]) -> TextEdit:
        return cls(SourceSpan.from_dict(data["span"]), data["replacement"], data.get("trailing_comment"))


@dataclass(frozen=True)
class Finding:
    rule_id: str
    weakness: Weakness
    severity: Severity
    confidence: Confidence
    path: str
    span: SourceSpan
    message: str
    cwe: tuple[str, ...] = ()
    fix: TextEdit | None = None
    related: tuple[SourceSpan, ...] = ()

    @property
    def line(self) -> int:
        return self.span.start_line

    def sort_key(self) -> tuple:
        return (self.path, self.span.start_byte, self.rule_id, self.span.end_byte, self.message)

    def to_dict(self) -> dict[str, Any]:
        return {
            "rule_id": self.rule_id,
            "weakness": self.weakness.value,
            "cwe": list(self.cwe),
            "severity": self.severity.value,
            "confidence": self.confidence.value,
            "path": self.path,
            "span": self.span.to_dict(),
            "message": self.message,
            "fix": self.fix.to_dict() if self.fix else None,
            "related": [s.to_dict() for s in self.related],
        }

    @classmethod
    def from_dict(cls, data: dict[str, Any]) -> Finding:
        return cls(
            rule_id=data["rule_id"],
            weakness=Weakness(data["weakness"]),
            severity=Severity(data["severity"]),
            confidence=Confidence(data["confidence"]),
            path=data["path"],
            span=SourceSpan.from_dict(data["span"]),
            message=data["message"],
            cwe=tuple(data.get("cwe", ())),
            fix=TextEdit.from_dict(data["fix"]) if data.get("fix") else None,
            related=tuple(SourceSpan.from_dict(s) for s in data.get("related", ())),
        )
