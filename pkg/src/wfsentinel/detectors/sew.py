"""Secrets exposure: hardcoded credentials and over-broad secret propagation."""

from __future__ import annotations

from ..findings import Confidence, Finding, Severity
from ..model import ContainerSpec, RefKind, SecretsMode, WorkflowDoc
from ..profiles import Profile
from ..secretscan import detect_candidate_secrets
from ._common import Emitter, file_sink_ranges, in_ranges, scalar_exprs


def _secret_refs(contexts: tuple[str, ...]) -> list[str]:
    return [c for c in contexts if c.split(".", 1)[0].lower() == "secrets"]


def detect_sew(doc: WorkflowDoc, profile: Profile) -> list[Finding]:
    opts = profile.sew
    em = Emitter(doc, profile)

    for job in doc.jobs.values():
        if job.secrets_mode is SecretsMode.INHERIT and job.secrets_span is not None:
            call = job.reusable_call
            external = call is not None and call.ref_kind is not RefKind.LOCAL
            target = call.raw if call is not None else "the called workflow"
            em.add("sew.secrets-inherit", job.secrets_span,
                   f"job {job.id!r} passes every repository secret to {target}",
                   Severity.HIGH if external else Severity.MEDIUM)

        for step in job.steps:
            if step.run is None or "secrets" not in step.run.value:
                continue
            ranges = file_sink_ranges(step.run.value)
            for e in scalar_exprs(doc, step.run):
                refs = _secret_refs(e.contexts)
                target = in_ranges(e.offset, ranges, ("GITHUB_ENV", "GITHUB_OUTPUT"))
                if refs and target:
                    em.add("sew.secret-to-env-file", e.span,
                           f"{', '.join(refs)} is written to {target} in step {step.label!r}")

        specs: list[tuple[str, ContainerSpec]] = []
        if job.container is not None:
            specs.append(("container", job.container))
        specs.extend((f"service {sid!r}", spec) for sid, spec in job.services.items())
        for where, spec in specs:
            _container(doc, em, job.id, where, spec)

    for cand in detect_candidate_secrets(doc, opts.entropy_threshold, opts.min_token_length):
        name = f" assigned to {cand.assigned_name}" if cand.assigned_name else ""
        if cand.matched_pattern:
            em.add("sew.hardcoded-secret", cand.span,
                   f"value matching the {cand.matched_pattern} credential format{name}",
                   confidence=Confidence.HIGH)
        else:
            em.add("sew.high-entropy-secret", cand.span,
                   f"high-entropy value ({cand.entropy:.2f} bits/char){name}", confidence=Confidence.MEDIUM)
    return em.findings


def _container(doc: WorkflowDoc, em: Emitter, job_id: str, where: str, spec: ContainerSpec) -> None:
    for scalar in spec.scalars:
        in_credentials = "credentials" in scalar.path
        if in_credentials and scalar.key == "password" and "${{" not in scalar.value and scalar.value.strip():
            em.add("sew.container-credentials", scalar.span,
                   f"hardcoded registry password in the {where} of job {job_id!r}", Severity.HIGH)
            continue
        if in_credentials:
            continue
        for e in scalar_exprs(doc, scalar):
            refs = _secret_refs(e.contexts)
            if refs:
                em.add("sew.container-credentials", e.span,
                       f"{', '.join(refs)} expanded into the {where} definition of job {job_id!r}")
