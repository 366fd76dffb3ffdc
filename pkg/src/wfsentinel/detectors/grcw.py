"""Runner compatibility: constructs the current platform rejects, skips or no longer runs."""

from __future__ import annotations

import json
from dataclasses import dataclass
from functools import lru_cache
from importlib import resources

from ..advisories import try_parse_version
from ..findings import Finding
from ..model import ParseReport, RefKind, WorkflowDoc, list_action_refs
from ..profiles import Profile
from ._common import Emitter, document_exprs

KNOWN_CONTEXTS = frozenset({
    "github", "env", "vars", "job", "jobs", "steps", "runner", "secrets", "strategy", "matrix",
    "needs", "inputs",
})

_ANOMALY_RULES = {"unknown-key": "grcw.unknown-key", "duplicate-key": "grcw.duplicate-key"}


@dataclass(frozen=True)
class Deprecation:
    action: str
    min_major: int | None
    reason: str

    def applies(self, ref_kind: RefKind, ref: str | None) -> bool:
        if self.min_major is None:  # archived: every version
            return True
        if ref_kind is not RefKind.TAG:
            return False
        version = try_parse_version(ref)
        return version is not None and version.major < self.min_major


@lru_cache(maxsize=1)
def deprecation_table() -> dict[str, Deprecation]:
    text = resources.files("wfsentinel").joinpath("data/deprecations.json").read_text(encoding="utf-8")
    data = json.loads(text)
    return {d["action"].lower(): Deprecation(d["action"].lower(), d.get("min_major"), d["reason"])
            for d in data["actions"]}


def detect_grcw(doc: WorkflowDoc, report: ParseReport | None, profile: Profile) -> list[Finding]:
    em = Emitter(doc, profile)
    table = deprecation_table()

    for ref, span in list_action_refs(doc):
        if not ref.slug:
            continue
        dep = table.get(ref.slug.lower())
        if dep is not None and dep.applies(ref.ref_kind, ref.ref):
            em.add("grcw.deprecated-action", span, f"{ref.raw}: {dep.reason}")

    for job in doc.jobs.values():
        for name, span in zip(job.needs, job.needs_spans):
            if name not in doc.jobs:
                em.add("grcw.undefined-job", span, f"job {job.id!r} needs undefined job {name!r}")

    for scalar, expr in document_exprs(doc):
        if expr.malformed:
            em.add("grcw.invalid-expression", expr.span or scalar.span,
                   f"malformed expression {expr.raw.strip()[:60]!r}: {expr.error}")
            continue
        owner = doc.jobs.get(scalar.path[1]) if scalar.path[:1] == ("jobs",) and len(scalar.path) > 1 else None
        reported_needs: set[str] = set()
        for ctx in expr.contexts:
            parts = ctx.split(".")
            root = parts[0].lower()
            if root not in KNOWN_CONTEXTS:
                em.add("grcw.unknown-context", expr.span or scalar.span,
                       f"unknown context {parts[0]!r} in {expr.body[:60]!r}")
                continue
            if root == "needs" and len(parts) > 1 and parts[1] != "*" and parts[1] not in reported_needs:
                target = parts[1]
                if target not in doc.jobs:
                    reported_needs.add(target)
                    em.add("grcw.undefined-job", expr.span or scalar.span,
                           f"{ctx} refers to undefined job {target!r}")
                elif owner is not None and target not in owner.needs:
                    reported_needs.add(target)
                    em.add("grcw.undefined-job", expr.span or scalar.span,
                           f"{ctx} refers to job {target!r}, which job {owner.id!r} does not list in needs")

    for anomaly in (report.anomalies if report is not None else ()):
        rule = _ANOMALY_RULES.get(anomaly.kind, "grcw.invalid-structure")
        em.add(rule, anomaly.span or doc.span, anomaly.message)
    return em.findings
