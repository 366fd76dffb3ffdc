"""Control flow: conditions that do not gate what they appear to gate."""

from __future__ import annotations

from ..expressions import Truthiness, evaluate_condition
from ..findings import Finding
from ..model import WorkflowDoc
from ..profiles import Profile
from ._common import Emitter


def detect_cfw(doc: WorkflowDoc, profile: Profile) -> list[Finding]:
    em = Emitter(doc, profile)
    for job in doc.jobs.values():
        owners = [(f"job {job.id!r}", job.condition)]
        owners += [(f"step {s.label!r} of job {job.id!r}", s.condition) for s in job.steps]
        for where, cond in owners:
            if cond is None:
                continue
            verdict = evaluate_condition(cond)
            if verdict.value is Truthiness.ALWAYS_TRUE:
                em.add("cfw.always-true-condition", cond.span,
                       f"condition of {where} is always true: {verdict.reason}")
            elif verdict.forced_run:
                em.add("cfw.forced-run", cond.span,
                       f"condition of {where} runs even after failure or cancellation")
    return em.findings
