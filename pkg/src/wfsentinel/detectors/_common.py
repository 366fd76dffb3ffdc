"""Helpers shared by the per-weakness detectors."""

from __future__ import annotations

import re
from dataclasses import dataclass, field
from typing import Iterator, Sequence

from ..catalog import enabled_rules, get_rule
from ..expressions import DEFAULT_TRUSTED, DEFAULT_UNTRUSTED, TaintedExpr, bare_expression, extract_expressions
from ..findings import Confidence, Finding, Severity
from ..model import (Job, PermissionMode, PermissionSet, RawCondition, Scalar, SourceSpan, Step,
                     WorkflowDoc)
from ..profiles import Profile


@dataclass
class Emitter:
    """Collects findings for one document, dropping rules the profile disables."""

    doc: WorkflowDoc
    profile: Profile
    findings: list[Finding] = field(default_factory=list)

    def __post_init__(self):
        self._enabled = enabled_rules(self.profile)

    def enabled(self, rule_id: str) -> bool:
        return rule_id in self._enabled

    def add(self, rule_id: str, span: SourceSpan, message: str, severity: Severity | None = None,
            confidence: Confidence | None = None, related: Sequence[SourceSpan] = ()) -> None:
        rule = get_rule(rule_id)
        if rule_id not in self._enabled:
            return
        self.findings.append(Finding(
            rule_id, rule.weakness, severity or rule.severity, confidence or rule.confidence,
            self.doc.path, span, message, rule.cwe, None, tuple(related)))


def effective_permissions(doc: WorkflowDoc, job: Job) -> PermissionSet:
    if job.permissions is not None:
        return job.permissions
    if doc.permissions is not None:
        return doc.permissions
    return PermissionSet(PermissionMode.DEFAULT_IMPLICIT)


def scalar_exprs(doc: WorkflowDoc, scalar: Scalar, untrusted: Sequence[str] = DEFAULT_UNTRUSTED,
                 trusted: Sequence[str] = DEFAULT_TRUSTED) -> list[TaintedExpr]:
    if "${{" not in scalar.value:
        return []
    return extract_expressions(scalar.value, scalar.span, doc.source, untrusted, trusted)


def condition_exprs(doc: WorkflowDoc, cond: RawCondition, untrusted: Sequence[str] = DEFAULT_UNTRUSTED,
                    trusted: Sequence[str] = DEFAULT_TRUSTED) -> list[TaintedExpr]:
    """Expressions of an ``if:``; undelimited text is one bare expression."""
    if "${{" in cond.text:
        return extract_expressions(cond.text, cond.span, doc.source, untrusted, trusted)
    if not cond.text.strip():
        return []
    return [bare_expression(cond.text, cond.span, untrusted, trusted)]


def is_condition_path(path: tuple) -> bool:
    """``jobs.<id>.if`` or ``jobs.<id>.steps[i].if``."""
    return (len(path) == 3 and path[0] == "jobs" and path[2] == "if") or \
        (len(path) == 5 and path[0] == "jobs" and path[2] == "steps" and path[4] == "if")


def document_exprs(doc: WorkflowDoc, untrusted: Sequence[str] = DEFAULT_UNTRUSTED,
                   trusted: Sequence[str] = DEFAULT_TRUSTED) -> Iterator[tuple[Scalar, TaintedExpr]]:
    """Every expression in the document, paired with the scalar holding it."""
    for scalar in doc.scalars:
        if is_condition_path(scalar.path):
            cond = RawCondition(scalar.value, scalar.style, scalar.span)
            for e in condition_exprs(doc, cond, untrusted, trusted):
                yield scalar, e
        else:
            for e in scalar_exprs(doc, scalar, untrusted, trusted):
                yield scalar, e


def action_name(step: Step) -> str | None:
    """Lower-cased ``owner/repo[/path]`` of a step's action, or ``None``."""
    if step.uses is None or not step.uses.slug:
        return None
    name = step.uses.slug
    if step.uses.subpath:
        name += "/" + step.uses.subpath
    return name.lower()


def script_sinks(step: Step) -> Iterator[tuple[Scalar, str]]:
    """Scalars whose text is executed as code: run scripts and github-script bodies."""
    if step.run is not None:
        yield step.run, "run"
    elif action_name(step) == "actions/github-script" and "script" in step.with_:
        yield step.with_["script"], "github-script"


_FILE_SINK_RE = re.compile(
    r"""(?:>>?|\btee\b(?:\s+-a|\s+--append)?)\s*["']?\$\{?(GITHUB_ENV|GITHUB_PATH|GITHUB_OUTPUT|GITHUB_STATE)\}?""")
_HEREDOC_RE = re.compile(r"""<<-?\s*["']?([A-Za-z_][A-Za-z0-9_]*)["']?""")


def file_sink_ranges(script: str) -> list[tuple[int, int, str]]:
    """Character ranges of ``script`` whose output lands in a GITHUB_* environment file.

    Covers single redirected lines and here-documents fed into a redirect.
    Returns ``(start, end, file)`` triples.
    """
    lines = script.splitlines(keepends=True)
    starts = [0]
    for line in lines:
        starts.append(starts[-1] + len(line))
    out = []
    i = 0
    while i < len(lines):
        m = _FILE_SINK_RE.search(lines[i])
        if not m:
            i += 1
            continue
        last = i
        here = _HEREDOC_RE.search(lines[i])
        if here:
            last = i + 1
            while last < len(lines) and lines[last].strip() != here.group(1):
                last += 1
            last = min(last, len(lines) - 1)
        out.append((starts[i], starts[last + 1], m.group(1)))
        i = last + 1
    return out


def in_ranges(offset: int, ranges: list[tuple[int, int, str]], files: Sequence[str]) -> str | None:
    for start, end, name in ranges:
        if start <= offset < end and name in files:
            return name
    return None


PR_HEAD_CONTEXTS = (
    "github.event.pull_request.head.sha",
    "github.event.pull_request.head.ref",
    "github.event.pull_request.head.repo.full_name",
    "github.event.pull_request.merge_commit_sha",
    "github.head_ref",
    "github.event.workflow_run.head_sha",
    "github.event.workflow_run.head_branch",
    "github.event.workflow_run.head_repository.full_name",
    "github.event.workflow_run.pull_requests.*.head.sha",
    "github.event.workflow_run.pull_requests.*.head.ref",
)
_PR_REF_RE = re.compile(r"refs/pull/")


def pr_head_checkout(doc: WorkflowDoc, step: Step) -> Scalar | None:
    """The ``with:`` scalar by which a checkout step fetches pull-request head code."""
    if action_name(step) != "actions/checkout":
        return None
    for key in ("ref", "repository"):
        scalar = step.with_.get(key)
        if scalar is None:
            continue
        if _PR_REF_RE.search(scalar.value):
            return scalar
        for e in scalar_exprs(doc, scalar, untrusted=PR_HEAD_CONTEXTS):
            if e.trust.value == "untrusted":
                return scalar
    return None


def checkout_owner(step: Step) -> str | None:
    """Literal owner named by ``with.repository``, if any."""
    repo = step.with_.get("repository")
    if repo is None or "${{" in repo.value or "/" not in repo.value:
        return None
    return repo.value.split("/", 1)[0].strip().lower()
