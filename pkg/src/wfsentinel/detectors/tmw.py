"""Trigger misuse: privileged events and runners reachable by outsiders."""

from __future__ import annotations

from ..findings import Finding
from ..model import WorkflowDoc
from ..profiles import EXTERNALLY_TRIGGERABLE, Profile
from ._common import Emitter, pr_head_checkout

_PRIVILEGED_RULES = {
    "pull_request_target": "tmw.pull-request-target",
    "workflow_run": "tmw.workflow-run",
}


def detect_tmw(doc: WorkflowDoc, profile: Profile) -> list[Finding]:
    em = Emitter(doc, profile)
    privileged = [t for t in doc.triggers if t.event in _PRIVILEGED_RULES]
    checkouts = [(job, step, scalar) for job, step in doc.iter_steps()
                 if (scalar := pr_head_checkout(doc, step)) is not None]

    for trig in privileged:
        if profile.tmw.require_checkout_for_prt and not checkouts:
            continue
        suffix = " and checks out pull request code" if checkouts else ""
        em.add(_PRIVILEGED_RULES[trig.event], trig.span,
               f"{trig.event} runs with base repository privileges{suffix}")

    if privileged:
        trigger_spans = [t.span for t in privileged]
        events = "/".join(sorted({t.event for t in privileged}))
        for job, step, scalar in checkouts:
            em.add("tmw.untrusted-checkout", scalar.span,
                   f"job {job.id!r} step {step.label!r} checks out pull request head code under {events}",
                   related=trigger_spans)

    if doc.events & EXTERNALLY_TRIGGERABLE:
        for job in doc.jobs.values():
            if any(label.lower() == "self-hosted" for label in job.runs_on) and job.runs_on_span:
                em.add("tmw.self-hosted-runner", job.runs_on_span,
                       f"job {job.id!r} runs on a self-hosted runner and the workflow accepts external triggers")
    return em.findings
