"""Known vulnerable components: action versions named by published advisories."""

from __future__ import annotations

from ..advisories import AdvisorySource, lookup_advisories, try_parse_version
from ..findings import Confidence, Finding, Severity
from ..model import RefKind, WorkflowDoc, list_action_refs
from ..pinning import ResolutionSource
from ..profiles import Profile
from ._common import Emitter

_SEVERITY = {"LOW": Severity.LOW, "MODERATE": Severity.MEDIUM, "MEDIUM": Severity.MEDIUM,
             "HIGH": Severity.HIGH, "CRITICAL": Severity.CRITICAL}


def detect_kvcw(doc: WorkflowDoc, advisories: AdvisorySource | None, profile: Profile,
                pins: ResolutionSource | None = None, warnings: list[str] | None = None) -> list[Finding]:
    em = Emitter(doc, profile)
    if advisories is None or (hasattr(advisories, "__len__") and len(advisories) == 0):
        if warnings is not None:
            warnings.append(f"{doc.path}: no advisory data available; known-vulnerability checks skipped")
        return []

    for ref, span in list_action_refs(doc):
        if ref.ref_kind in (RefKind.LOCAL, RefKind.DOCKER) or not ref.slug:
            continue
        version, via = None, ""
        if ref.ref_kind is RefKind.SHA:
            tag = pins.reverse(ref.slug, ref.ref) if pins is not None else None
            version = try_parse_version(tag)
            via = f" (pinned from {tag})" if tag else ""
        else:
            version = try_parse_version(ref.ref)
        if version is None:
            em.add("kvcw.unresolved-version", span,
                   f"{ref.raw}: version cannot be determined, advisory coverage unknown")
            continue
        for match in lookup_advisories(ref, advisories, version, warnings):
            adv = match.advisory
            bounds = "; ".join(
                f">={r.introduced}" + (f" <{r.fixed}" if r.fixed else "") for r in adv.ranges)
            caveat = " (coarse tag; the exact release may differ)" if match.coarse else ""
            em.add("kvcw.known-vulnerable-action", span,
                   f"{ref.raw}{via} matches {adv.id} (affected {bounds}){caveat}: {adv.summary}",
                   _SEVERITY.get(adv.severity.upper(), Severity.MEDIUM),
                   Confidence.LOW if match.coarse else Confidence.HIGH)
    return em.findings
