"""Artifact integrity: consuming artifacts or foreign code without verifying it."""

from __future__ import annotations

import re

from ..findings import Finding
from ..model import StepKind, WorkflowDoc
from ..profiles import PRIVILEGED_TRIGGERS, Profile
from ._common import Emitter, action_name, checkout_owner, pr_head_checkout

DOWNLOAD_ACTIONS = frozenset({
    "actions/download-artifact",
    "dawidd6/action-download-artifact",
    "bettermarks/action-artifact-download",
})

_VERIFY_RE = re.compile(
    r"\b(?:sha(?:1|224|256|384|512)sum\s+(?:-\w+\s+)*(?:-c|--check)\b"
    r"|shasum\s+(?:-\w+\s+)*(?:-c|--check)\b"
    r"|gpg2?\s+(?:--\S+\s+)*--verify\b"
    r"|cosign\s+verify(?:-blob|-attestation)?\b"
    r"|gh\s+attestation\s+verify\b"
    r"|slsa-verifier\s+verify"
    r"|minisign\s+-V\b)"
)
VERIFY_ACTIONS = frozenset({"slsa-framework/slsa-verifier", "actions/attest-build-provenance"})


def detect_aiw(doc: WorkflowDoc, profile: Profile) -> list[Finding]:
    em = Emitter(doc, profile)
    trusted = {o.lower() for o in profile.aiw.trusted_owners}
    privileged = bool(doc.events & PRIVILEGED_TRIGGERS)

    for job in doc.jobs.values():
        steps = list(job.steps)
        for i, step in enumerate(steps):
            name = action_name(step)
            later = steps[i + 1:]
            if name in DOWNLOAD_ACTIONS:
                verified = any(
                    (s.run is not None and _VERIFY_RE.search(s.run.value))
                    or (action_name(s) or "").startswith(tuple(VERIFY_ACTIONS))
                    for s in later)
                if not verified and step.uses is not None:
                    em.add("aiw.unverified-artifact", step.uses.span,
                           f"artifact from {step.uses.raw} is used without a checksum or signature check")
            if privileged and pr_head_checkout(doc, step) is not None:
                owner = checkout_owner(step)
                if owner is not None and owner in trusted:
                    continue
                runner = next((s for s in later if s.kind is StepKind.RUN
                               or (s.uses is not None and s.uses.raw.startswith("./"))), None)
                if runner is not None and step.uses is not None:
                    em.add("aiw.untrusted-checkout-exec", step.uses.span,
                           f"job {job.id!r} checks out untrusted pull request code and then executes "
                           f"step {runner.label!r}", related=[runner.span])
    return em.findings
