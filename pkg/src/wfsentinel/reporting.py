"""Render findings as text, JSON or SARIF, and tally them per weakness."""

from __future__ import annotations

import csv
import io
import json
from collections import defaultdict
from dataclasses import dataclass, field
from typing import Any, Iterable, Mapping, Sequence

from . import __version__
from .catalog import RULES, UnknownRuleError, map_rule_to_weakness  # noqa: F401 (re-exported)
from .findings import Finding, Severity, Weakness

TOOL_NAME = "wf-sentinel"
JSON_SCHEMA_ID = "wf-sentinel/findings/v1"
SARIF_SCHEMA = "https://json.schemastore.org/sarif-2.1.0.json"
SARIF_LEVEL = {Severity.CRITICAL: "error", Severity.HIGH: "error", Severity.MEDIUM: "warning",
               Severity.LOW: "note"}


class ReportError(ValueError):
    pass


@dataclass
class ScanMeta:
    profile: str
    files: list[str] = field(default_factory=list)
    tool_version: str = __version__
    timing: dict[str, float] | None = None  # seconds per file; omitted when None
    diagnostics: list[str] = field(default_factory=list)

    def to_dict(self) -> dict[str, Any]:
        out: dict[str, Any] = {
            "tool": {"name": TOOL_NAME, "version": self.tool_version},
            "profile": self.profile,
            "files": sorted(self.files),
            "diagnostics": list(self.diagnostics),
        }
        if self.timing is not None:
            out["timing"] = {k: round(v, 6) for k, v in sorted(self.timing.items())}
        return out


def sort_findings(findings: Iterable[Finding]) -> list[Finding]:
    return sorted(findings, key=lambda f: f.sort_key())


def emit_json(findings: Iterable[Finding], meta: ScanMeta) -> bytes:
    doc = {"schema": JSON_SCHEMA_ID, **meta.to_dict(),
           "findings": [f.to_dict() for f in sort_findings(findings)]}
    return (json.dumps(doc, indent=2, sort_keys=True, ensure_ascii=False) + "\n").encode("utf-8")


def load_json(data: bytes | str) -> tuple[dict[str, Any], list[Finding]]:
    doc = json.loads(data)
    findings = [Finding.from_dict(f) for f in doc.pop("findings")]
    return doc, findings


def _region(span) -> dict[str, int]:
    return {"startLine": span.start_line, "startColumn": span.start_col,
            "endLine": span.end_line, "endColumn": span.end_col,
            "byteOffset": span.start_byte, "byteLength": span.end_byte - span.start_byte}


def emit_sarif(findings: Iterable[Finding], meta: ScanMeta) -> bytes:
    findings = sort_findings(findings)
    known = set(meta.files)
    for f in findings:
        if f.path not in known:
            raise ReportError(f"finding in {f.path!r}, which is not among the scanned files")
    index = {r.rule_id: i for i, r in enumerate(RULES)}
    rules = [{
        "id": r.rule_id,
        "name": r.rule_id.replace(".", "/"),
        "shortDescription": {"text": r.title},
        "fullDescription": {"text": r.rationale},
        "defaultConfiguration": {"level": SARIF_LEVEL[r.severity]},
        "properties": {"weakness": r.weakness.value, "weakness-name": r.weakness.title,
                       "cwe": list(r.cwe), "tags": ["security", r.weakness.value, *r.cwe]},
    } for r in RULES]
    results = []
    for f in findings:
        if f.rule_id not in index:
            raise UnknownRuleError(f.rule_id)
        location = {"physicalLocation": {"artifactLocation": {"uri": f.path}, "region": _region(f.span)}}
        result: dict[str, Any] = {
            "ruleId": f.rule_id,
            "ruleIndex": index[f.rule_id],
            "level": SARIF_LEVEL[f.severity],
            "message": {"text": f.message},
            "locations": [location],
            "properties": {"weakness": f.weakness.value, "cwe": list(f.cwe),
                           "severity": f.severity.value, "confidence": f.confidence.value},
        }
        if f.related:
            result["relatedLocations"] = [
                {"id": i, "physicalLocation": {"artifactLocation": {"uri": f.path}, "region": _region(s)}}
                for i, s in enumerate(f.related)]
        if f.fix is not None:
            span = f.fix.span
            result["fixes"] = [{
                "description": {"text": f"pin to {f.fix.replacement}"},
                "artifactChanges": [{
                    "artifactLocation": {"uri": f.path},
                    "replacements": [{
                        "deletedRegion": {"byteOffset": span.start_byte,
                                          "byteLength": span.end_byte - span.start_byte},
                        "insertedContent": {"text": f.fix.replacement},
                    }],
                }],
            }]
        results.append(result)
    doc = {
        "$schema": SARIF_SCHEMA,
        "version": "2.1.0",
        "runs": [{
            "tool": {"driver": {"name": TOOL_NAME, "version": meta.tool_version, "rules": rules}},
            "columnKind": "unicodeCodePoints",
            "artifacts": [{"location": {"uri": p}} for p in sorted(known)],
            "results": results,
            "properties": {"profile": meta.profile},
        }],
    }
    return (json.dumps(doc, indent=2, sort_keys=True, ensure_ascii=False) + "\n").encode("utf-8")


# -- text ------------------------------------------------------------------------

_COLORS = {Severity.CRITICAL: "\x1b[1;31m", Severity.HIGH: "\x1b[31m", Severity.MEDIUM: "\x1b[33m",
           Severity.LOW: "\x1b[36m"}
_RESET = "\x1b[0m"


def emit_text(findings: Iterable[Finding], sources: Mapping[str, bytes] | None = None,
              color: bool = False) -> str:
    """Findings grouped by weakness, then file, each with its source line."""
    findings = sort_findings(findings)
    if not findings:
        return "no findings\n"
    sources = sources or {}
    groups: dict[Weakness, dict[str, list[Finding]]] = defaultdict(lambda: defaultdict(list))
    for f in findings:
        groups[f.weakness][f.path].append(f)
    out = []
    for weakness in sorted(groups, key=lambda w: w.value):
        per_file = groups[weakness]
        total = sum(len(v) for v in per_file.values())
        out.append(f"{weakness.value} {weakness.title} ({', '.join(weakness.cwe)}): {total}")
        for path in sorted(per_file):
            out.append(f"  {path}")
            lines = sources[path].splitlines() if path in sources else []
            for f in per_file[path]:
                sev = f.severity.value
                if color:
                    sev = f"{_COLORS[f.severity]}{sev}{_RESET}"
                out.append(f"    {f.span.start_line}:{f.span.start_col} {sev} {f.rule_id} {f.message}")
                if 0 < f.span.start_line <= len(lines):
                    out.append(f"      | {lines[f.span.start_line - 1].decode('utf-8', 'replace').rstrip()}")
    counts = defaultdict(int)
    for f in findings:
        counts[f.severity] += 1
    summary = ", ".join(f"{counts[s]} {s.value}" for s in reversed(list(Severity)) if counts[s])
    out.append(f"{len(findings)} findings ({summary})")
    return "\n".join(out) + "\n"


# -- matrices --------------------------------------------------------------------

Matrix = dict[Weakness, tuple[int, int]]


def summarize(per_workflow: Mapping[str, Sequence[Finding]]) -> Matrix:
    """For each weakness: (total findings, workflows with at least one)."""
    totals = {w: 0 for w in Weakness}
    workflows = {w: 0 for w in Weakness}
    for findings in per_workflow.values():
        seen = set()
        for f in findings:
            totals[f.weakness] += 1
            seen.add(f.weakness)
        for w in seen:
            workflows[w] += 1
    return {w: (totals[w], workflows[w]) for w in Weakness}


def matrix_table(columns: Mapping[str, Matrix]) -> list[list[str]]:
    """Rows of weakness by column name, cells ``total (workflows)``."""
    rows = [["weakness", *columns]]
    for w in Weakness:
        rows.append([w.value, *(f"{m[w][0]} ({m[w][1]})" for m in columns.values())])
    return rows


def matrix_text(columns: Mapping[str, Matrix]) -> str:
    rows = matrix_table(columns)
    widths = [max(len(r[i]) for r in rows) for i in range(len(rows[0]))]
    lines = ["  ".join(cell.ljust(widths[i]) if i == 0 else cell.rjust(widths[i])
                       for i, cell in enumerate(r)).rstrip() for r in rows]
    return "\n".join(lines) + "\n"


def matrix_csv(columns: Mapping[str, Matrix]) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(["weakness", "column", "total_findings", "workflows_with_finding"])
    for w in Weakness:
        for name, m in columns.items():
            writer.writerow([w.value, name, m[w][0], m[w][1]])
    return buf.getvalue()
