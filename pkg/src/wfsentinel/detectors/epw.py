"""Excessive permissions granted to the workflow token."""

from __future__ import annotations

from ..findings import Finding, Severity
from ..model import PermissionMode, PermissionSet, WorkflowDoc
from ..profiles import EXTERNALLY_TRIGGERABLE, Profile
from ._common import Emitter


def _severity(perms: PermissionSet, exposed: bool) -> Severity:
    scopes = perms.write_scopes()
    severity = Severity.MEDIUM
    if perms.mode is PermissionMode.WRITE_ALL or len(scopes) >= 3:
        severity = severity.bump()
    if exposed:
        severity = severity.bump()
    return severity


def detect_epw(doc: WorkflowDoc, profile: Profile) -> list[Finding]:
    opts = profile.epw
    em = Emitter(doc, profile)
    exposed = bool(doc.events & EXTERNALLY_TRIGGERABLE)
    if opts.externally_triggerable_only and not exposed:
        return []

    blocks = [("workflow", doc.permissions)]
    if opts.job_level:
        blocks += [(f"job {job.id!r}", job.permissions) for job in doc.jobs.values()]
    for where, perms in blocks:
        if perms is None or not perms.has_write or perms.span is None:
            continue
        scopes = perms.write_scopes()
        listed = "all scopes" if scopes == ["*"] else ", ".join(scopes)
        em.add("epw.write-permissions", perms.span, f"{where} grants write access to {listed}",
               _severity(perms, exposed))

    if doc.permissions is None:
        anchor = doc.on_span or doc.jobs_span or doc.span
        em.add("epw.missing-permissions", anchor,
               "no top-level permissions block; the token falls back to the repository default")
    return em.findings
