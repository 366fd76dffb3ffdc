"""Hardening gap: a pipeline that never runs any security tooling."""

from __future__ import annotations

import re

from ..findings import Finding
from ..model import WorkflowDoc
from ..profiles import Profile
from ._common import Emitter, action_name


def _command_re(commands: tuple[str, ...]) -> re.Pattern:
    alternatives = "|".join(re.escape(c).replace(r"\ ", r"\s+") for c in commands)
    return re.compile(rf"(?<![\w./-])(?:{alternatives})(?![\w-])", re.IGNORECASE)


def uses_security_tooling(doc: WorkflowDoc, profile: Profile) -> bool:
    tools = tuple(t.lower().rstrip("/") for t in profile.hgw.security_tool_list)
    commands = _command_re(profile.hgw.security_commands) if profile.hgw.security_commands else None
    for job in doc.jobs.values():
        if job.reusable_call is not None and job.reusable_call.slug:
            name = job.reusable_call.slug.lower()
            if any(name == t or name.startswith(t + "/") for t in tools):
                return True
        for step in job.steps:
            name = action_name(step)
            if name and any(name == t or name.startswith(t + "/") for t in tools):
                return True
            if step.run is not None and commands is not None and commands.search(step.run.value):
                return True
    return False


def detect_hgw(doc: WorkflowDoc, profile: Profile) -> list[Finding]:
    em = Emitter(doc, profile)
    if not profile.hgw.enabled or not doc.jobs:
        return []
    if not uses_security_tooling(doc, profile):
        em.add("hgw.no-security-tooling", doc.jobs_span or doc.span,
               "no step runs a security scanner, dependency audit or secret scan")
    return em.findings
