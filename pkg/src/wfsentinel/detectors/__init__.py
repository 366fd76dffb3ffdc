"""The ten weakness detectors and the combined runner."""

from __future__ import annotations

import dataclasses
import logging
from typing import Callable

from ..findings import Finding, Weakness
from ..model import WorkflowDoc
from ..pinning import plan_pin_fixes
from ..profiles import Profile
from ..services import Services
from .aiw import detect_aiw
from .cfw import detect_cfw
from .epw import detect_epw
from .grcw import detect_grcw
from .hgw import detect_hgw
from .iw import detect_iw
from .kvcw import detect_kvcw
from .sew import detect_sew
from .tmw import detect_tmw
from .udw import detect_udw

log = logging.getLogger(__name__)

Detector = Callable[[WorkflowDoc, Profile, Services, list], list[Finding]]

DETECTORS: dict[Weakness, Detector] = {
    Weakness.AIW: lambda d, p, s, w: detect_aiw(d, p),
    Weakness.CFW: lambda d, p, s, w: detect_cfw(d, p),
    Weakness.EPW: lambda d, p, s, w: detect_epw(d, p),
    Weakness.GRCW: lambda d, p, s, w: detect_grcw(d, d.report, p),
    Weakness.HGW: lambda d, p, s, w: detect_hgw(d, p),
    Weakness.IW: lambda d, p, s, w: detect_iw(d, p),
    Weakness.KVCW: lambda d, p, s, w: detect_kvcw(d, s.advisories, p, s.pins, w),
    Weakness.SEW: lambda d, p, s, w: detect_sew(d, p),
    Weakness.TMW: lambda d, p, s, w: detect_tmw(d, p),
    Weakness.UDW: lambda d, p, s, w: detect_udw(d, p),
}


def run_all(doc: WorkflowDoc, profile: Profile, services: Services | None = None,
            diagnostics: list[str] | None = None) -> list[Finding]:
    """All detectors over ``doc``, ordered by (start byte, rule id).

    A detector that raises is reported in ``diagnostics`` and skipped; the
    others still run.
    """
    services = services or Services.offline()
    diagnostics = diagnostics if diagnostics is not None else []
    findings: list[Finding] = []
    for weakness, detector in DETECTORS.items():
        try:
            findings.extend(detector(doc, profile, services, diagnostics))
        except Exception as exc:  # keep scanning with the remaining detectors
            log.debug("detector %s failed on %s", weakness.value, doc.path, exc_info=True)
            diagnostics.append(f"{doc.path}: {weakness.value} detector failed: {type(exc).__name__}: {exc}")
    if services.pins is not None:
        findings = _attach_fixes(doc, findings, services, diagnostics)
    findings.sort(key=lambda f: (f.span.start_byte, f.rule_id, f.span.end_byte, f.message))
    return findings


def _attach_fixes(doc: WorkflowDoc, findings: list[Finding], services: Services,
                  diagnostics: list[str]) -> list[Finding]:
    udw = [f for f in findings if f.weakness is Weakness.UDW]
    if not udw:
        return findings
    try:
        plan = plan_pin_fixes(doc, udw, services.pins)
    except Exception as exc:
        diagnostics.append(f"{doc.path}: fix planning failed: {exc}")
        return findings
    by_line = {e.span.start_line: e for e in plan.edits}
    out = []
    for f in findings:
        edit = by_line.get(f.span.start_line) if f.weakness is Weakness.UDW else None
        if edit is not None and f.span.start_byte <= edit.span.start_byte < f.span.end_byte:
            f = dataclasses.replace(f, fix=edit)
        out.append(f)
    return out


__all__ = [
    "DETECTORS", "run_all", "detect_aiw", "detect_cfw", "detect_epw", "detect_grcw", "detect_hgw",
    "detect_iw", "detect_kvcw", "detect_sew", "detect_tmw", "detect_udw",
]
