"""Injection: untrusted text reaching a shell, a script, or the job environment."""

from __future__ import annotations

import re

from ..expressions import DEFAULT_UNTRUSTED, Trust
from ..findings import Finding, Severity
from ..model import Job, PermissionMode, Scalar, Step, WorkflowDoc
from ..profiles import Profile
from ._common import Emitter, effective_permissions, file_sink_ranges, in_ranges, scalar_exprs, script_sinks

_DEPRECATED_RE = re.compile(r"::(set-env|add-path)\b")
_LEGACY_OUTPUT_RE = re.compile(r"::(set-output|save-state)\b")
_UNSECURE_VAR = "ACTIONS_ALLOW_UNSECURE_COMMANDS"


def _tainted_env(doc: WorkflowDoc, job: Job, step: Step, untrusted: tuple[str, ...]) -> list[str]:
    """Env names visible to ``step`` whose value expands an untrusted context."""
    merged: dict[str, Scalar] = {**doc.env, **job.env, **step.env}
    names = []
    for name, scalar in merged.items():
        if any(e.trust is Trust.UNTRUSTED for e in scalar_exprs(doc, scalar, untrusted)):
            names.append(name)
    return names


def detect_iw(doc: WorkflowDoc, profile: Profile) -> list[Finding]:
    opts = profile.iw
    em = Emitter(doc, profile)
    base = tuple(DEFAULT_UNTRUSTED) + tuple(opts.untrusted_contexts)

    for where in [doc.env] + [j.env for j in doc.jobs.values()] + [s.env for _, s in doc.iter_steps()]:
        flag = where.get(_UNSECURE_VAR)
        if flag is not None and flag.value.strip().lower() == "true":
            em.add("iw.deprecated-command", flag.span,
                   f"{_UNSECURE_VAR}=true re-enables the set-env and add-path commands")

    for job in doc.jobs.values():
        perms = effective_permissions(doc, job)
        writes = perms.has_write or perms.mode is PermissionMode.WRITE_ALL
        for step in job.steps:
            tainted = _tainted_env(doc, job, step, base)
            untrusted = base + tuple(f"env.{n}" for n in tainted)
            for scalar, sink in script_sinks(step):
                exprs = scalar_exprs(doc, scalar, untrusted)
                ranges = file_sink_ranges(scalar.value) if sink == "run" else []
                for e in exprs:
                    if e.malformed:
                        continue
                    where = f"{sink} script of step {step.label!r} in job {job.id!r}"
                    if e.trust is Trust.UNTRUSTED:
                        em.add("iw.untrusted-expression", e.span,
                               f"untrusted {', '.join(e.contexts)} expanded into the {where}",
                               Severity.CRITICAL if writes else Severity.HIGH)
                    elif e.trust is Trust.CONDITIONAL:
                        em.add("iw.conditional-expression", e.span,
                               f"{', '.join(e.contexts) or e.body} of unknown trust expanded into the {where}")
                    target = in_ranges(e.offset, ranges, ("GITHUB_ENV", "GITHUB_PATH"))
                    if target and e.trust is not Trust.TRUSTED:
                        em.add("iw.env-path-sink", e.span,
                               f"{e.body} is written to {target}, affecting every later step")
                if sink == "run":
                    _commands(doc, em, scalar)
    return em.findings


def _commands(doc: WorkflowDoc, em: Emitter, scalar: Scalar) -> None:
    for regex, rule in ((_DEPRECATED_RE, "iw.deprecated-command"), (_LEGACY_OUTPUT_RE, "iw.legacy-output-command")):
        cursor = None
        for m in regex.finditer(scalar.value):
            span = doc.find_in(scalar.span, m.group(0), cursor) or scalar.span
            cursor = span.end_byte
            em.add(rule, span, f"deprecated workflow command ::{m.group(1)}")
