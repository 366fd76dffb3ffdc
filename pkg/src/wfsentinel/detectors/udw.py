"""Unpinned dependencies: action and image references that can change under you."""

from __future__ import annotations

from ..findings import Finding, Severity
from ..model import RefKind, WorkflowDoc, list_action_refs
from ..profiles import Profile
from ._common import Emitter

DEFAULT_BRANCH_REFS = frozenset({"main", "master"})


def detect_udw(doc: WorkflowDoc, profile: Profile) -> list[Finding]:
    opts = profile.udw
    em = Emitter(doc, profile)
    official = {o.lower() for o in opts.official_owners}
    for ref, span in list_action_refs(doc, include_commented=opts.include_commented):
        if ref.ref_kind is RefKind.LOCAL:
            continue
        if ref.ref_kind is RefKind.DOCKER:
            if not ref.docker_digest_pinned and not ref.commented_out:
                em.add("udw.unpinned-docker", span, f"image {ref.raw} is not pinned to a sha256 digest")
            continue
        if ref.ref_kind is RefKind.SHA:
            continue
        owner = (ref.owner or "").lower()
        if opts.official_exempt and owner in official:
            continue
        if opts.skip_default_branch_refs and ref.ref in DEFAULT_BRANCH_REFS:
            continue
        what = "branch" if ref.ref_kind is RefKind.BRANCH else "tag" if ref.ref_kind is RefKind.TAG else "ref"
        detail = f"{ref.action} uses mutable {what} {ref.ref!r}" if ref.ref else f"{ref.action} has no ref"
        severity = Severity.LOW if owner in official else Severity.MEDIUM
        if ref.commented_out:
            em.add("udw.commented-uses", span, f"commented-out reference: {detail}")
        elif ref.is_reusable_workflow:
            em.add("udw.unpinned-reusable-workflow", span, f"{detail}; pin it to a full commit SHA", severity)
        else:
            em.add("udw.unpinned-uses", span, f"{detail}; pin it to a full commit SHA", severity)
    return em.findings
