"""Typed, span-preserving model of a GitHub Actions workflow file.

Workflows are composed with PyYAML (node level, not object level) so every
model node keeps the byte/line region it came from. The model never mutates
``source``; fixes are applied to the raw bytes elsewhere.
"""

from __future__ import annotations

import bisect
import copy
import re
from dataclasses import dataclass, field
from enum import Enum
from itertools import accumulate
from pathlib import Path
from typing import Any, Iterator

import yaml
from yaml.constructor import SafeConstructor
from yaml.nodes import MappingNode, Node, ScalarNode, SequenceNode

__all__ = [
    "ActionRef",
    "Anomaly",
    "ContainerSpec",
    "Job",
    "ParseReport",
    "PermissionMode",
    "PermissionSet",
    "RawCondition",
    "RefKind",
    "Scalar",
    "ScalarStyle",
    "SecretsMode",
    "SourceSpan",
    "Step",
    "StepKind",
    "Trigger",
    "WorkflowDoc",
    "WorkflowEncodingError",
    "WorkflowError",
    "WorkflowSyntaxError",
    "list_action_refs",
    "load_workflow",
    "parse_action_ref",
    "parse_workflow",
]

PERMISSION_SCOPES = frozenset({
    "contents", "pull-requests", "issues", "id-token", "packages", "actions",
    "checks", "deployments", "security-events", "statuses", "pages",
    "discussions", "attestations",
})

KNOWN_EVENTS = frozenset({
    "branch_protection_rule", "check_run", "check_suite", "create", "delete",
    "deployment", "deployment_status", "discussion", "discussion_comment",
    "fork", "gollum", "issue_comment", "issues", "label", "merge_group",
    "milestone", "page_build", "project", "project_card", "project_column",
    "public", "pull_request", "pull_request_review",
    "pull_request_review_comment", "pull_request_target", "push",
    "registry_package", "release", "repository_dispatch", "schedule", "status",
    "watch", "workflow_call", "workflow_dispatch", "workflow_run",
})

WORKFLOW_KEYS = frozenset({
    "name", "run-name", "on", "permissions", "env", "defaults", "concurrency", "jobs",
})
JOB_KEYS = frozenset({
    "name", "permissions", "needs", "if", "runs-on", "environment", "concurrency",
    "outputs", "env", "defaults", "steps", "timeout-minutes", "strategy",
    "continue-on-error", "container", "services", "uses", "with", "secrets",
    "snapshot",
})
STEP_KEYS = frozenset({
    "id", "if", "name", "uses", "run", "working-directory", "shell", "with",
    "env", "continue-on-error", "timeout-minutes",
})

_SHA_RE = re.compile(r"[0-9a-f]{40}")
_TAG_RE = re.compile(r"v?\d+(\.\d+)*|v\d.*")
_BRANCH_NAMES = frozenset({"main", "master", "develop", "dev", "trunk", "next", "latest", "canary"})
_JOB_ID_RE = re.compile(r"[A-Za-z_][A-Za-z0-9_-]*")
_COMMENTED_USES_RE = re.compile(r"^[ \t]*#[ \t#]*(?:-[ \t]+)?uses:[ \t]*['\"]?([^\s'\"#]+)", re.MULTILINE)


class WorkflowError(Exception):
    """Base class for workflow loading failures."""


class WorkflowEncodingError(WorkflowError):
    """The workflow bytes are not valid UTF-8."""


class WorkflowSyntaxError(WorkflowError):
    """The workflow is not parseable YAML; ``report`` holds the details."""

    def __init__(self, report: ParseReport):
        self.report = report
        first = report.anomalies[0].message if report.anomalies else "invalid YAML"
        super().__init__(f"{report.path}: {first}")


# -- spans -------------------------------------------------------------------


@dataclass(frozen=True, order=True)
class SourceSpan:
    """Half-open byte range ``[start_byte, end_byte)`` with 1-based lines/columns."""

    start_byte: int
    end_byte: int
    start_line: int
    end_line: int
    start_col: int = 1
    end_col: int = 1

    def contains(self, other: SourceSpan) -> bool:
        return self.start_byte <= other.start_byte and other.end_byte <= self.end_byte

    def to_dict(self) -> dict[str, int]:
        return {
            "start_byte": self.start_byte,
            "end_byte": self.end_byte,
            "start_line": self.start_line,
            "end_line": self.end_line,
            "start_col": self.start_col,
            "end_col": self.end_col,
        }

    @classmethod
    def from_dict(cls, data: dict[str, int]) -> SourceSpan:
        return cls(**data)


class _Locator:
    """Maps character offsets (what PyYAML reports) to byte spans with lines."""

    def __init__(self, source: bytes, text: str, bom: int):
        self.source = source
        self.bom = bom
        if text.isascii():
            self._byte_of = None
        else:
            self._byte_of = list(accumulate((len(c.encode("utf-8")) for c in text), initial=0))
        self._line_starts = [0]
        pos = source.find(b"\n")
        while pos != -1:
            self._line_starts.append(pos + 1)
            pos = source.find(b"\n", pos + 1)

    def byte(self, char_index: int) -> int:
        if self._byte_of is None:
            return char_index + self.bom
        return self._byte_of[min(char_index, len(self._byte_of) - 1)] + self.bom

    def line_of(self, byte: int) -> int:
        return bisect.bisect_right(self._line_starts, byte)

    def _col(self, line: int, byte: int) -> int:
        start = self._line_starts[line - 1]
        return len(self.source[start:byte].decode("utf-8", "replace")) + 1

    def span(self, start: int, end: int) -> SourceSpan:
        end = max(start, min(end, len(self.source)))
        start_line = self.line_of(start)
        end_line = self.line_of(end - 1) if end > start else start_line
        return SourceSpan(start, end, start_line, end_line,
                          self._col(start_line, start), self._col(end_line, end))

    def node_span(self, node: Node) -> SourceSpan:
        start = self.byte(node.start_mark.index)
        end = self.byte(node.end_mark.index)
        if isinstance(node, ScalarNode) and node.style in ("|", ">"):
            # block scalar marks run to the next token; trim trailing blank lines
            while end > start and self.source[end - 1:end] in (b"\n", b" ", b"\r", b"\t"):
                end -= 1
        return self.span(start, end)


# -- model types ---------------------------------------------------------------


class ScalarStyle(str, Enum):
    PLAIN = "plain"
    FOLDED = "folded"
    LITERAL = "literal"
    QUOTED = "quoted"

    @classmethod
    def of(cls, node: ScalarNode) -> ScalarStyle:
        return {None: cls.PLAIN, ">": cls.FOLDED, "|": cls.LITERAL}.get(node.style, cls.QUOTED)


@dataclass(frozen=True)
class Scalar:
    """A leaf value with its location; ``path`` is the key path from the root."""

    value: str
    span: SourceSpan
    style: ScalarStyle = ScalarStyle.PLAIN
    path: tuple[str | int, ...] = ()

    @property
    def key(self) -> str | None:
        for part in reversed(self.path):
            if isinstance(part, str):
                return part
        return None

    @property
    def is_block(self) -> bool:
        return self.style in (ScalarStyle.FOLDED, ScalarStyle.LITERAL)


@dataclass(frozen=True)
class RawCondition:
    text: str
    style: ScalarStyle
    span: SourceSpan


class RefKind(str, Enum):
    SHA = "sha"
    TAG = "tag"
    BRANCH = "branch"
    LOCAL = "local"
    DOCKER = "docker"
    UNKNOWN = "unknown"


@dataclass(frozen=True)
class ActionRef:
    raw: str
    ref_kind: RefKind
    owner: str | None = None
    repo: str | None = None
    subpath: str | None = None
    ref: str | None = None
    commented_out: bool = False
    span: SourceSpan | None = None

    @property
    def slug(self) -> str | None:
        if self.owner and self.repo:
            return f"{self.owner}/{self.repo}"
        return None

    @property
    def action(self) -> str:
        """``owner/repo[/subpath]`` without the ref."""
        return self.raw.split("@", 1)[0]

    @property
    def is_reusable_workflow(self) -> bool:
        return bool(re.search(r"\.github/workflows/[^/]+\.ya?ml$", self.action))

    @property
    def docker_digest_pinned(self) -> bool:
        return self.ref_kind is RefKind.DOCKER and "@sha256:" in self.raw


class StepKind(str, Enum):
    RUN = "run"
    USES = "uses"


@dataclass(frozen=True)
class Step:
    index: int
    kind: StepKind
    span: SourceSpan
    run: Scalar | None = None
    shell: str | None = None
    uses: ActionRef | None = None
    with_: dict[str, Scalar] = field(default_factory=dict)
    env: dict[str, Scalar] = field(default_factory=dict)
    condition: RawCondition | None = None
    continue_on_error: bool = False
    name: str | None = None
    id: str | None = None

    @property
    def label(self) -> str:
        return self.name or self.id or (self.uses.raw if self.uses else f"step {self.index}")


class PermissionMode(str, Enum):
    DEFAULT_IMPLICIT = "default-implicit"
    READ_ALL = "read-all"
    WRITE_ALL = "write-all"
    SCOPED = "scoped"
    NONE_ALL = "none-all"


@dataclass(frozen=True)
class PermissionSet:
    mode: PermissionMode
    scopes: dict[str, str] = field(default_factory=dict)
    span: SourceSpan | None = None

    def write_scopes(self) -> list[str]:
        if self.mode is PermissionMode.WRITE_ALL:
            return ["*"]
        return sorted(k for k, v in self.scopes.items() if v == "write")

    @property
    def has_write(self) -> bool:
        return bool(self.write_scopes())


@dataclass(frozen=True)
class ContainerSpec:
    image: str | None
    span: SourceSpan
    credentials: dict[str, Scalar] = field(default_factory=dict)
    env: dict[str, Scalar] = field(default_factory=dict)
    scalars: tuple[Scalar, ...] = ()


class SecretsMode(str, Enum):
    NONE = "none"
    EXPLICIT = "explicit"
    INHERIT = "inherit"


@dataclass(frozen=True)
class Trigger:
    event: str
    span: SourceSpan
    filters: dict[str, Any] = field(default_factory=dict)


@dataclass(frozen=True)
class Job:
    id: str
    span: SourceSpan
    key_span: SourceSpan
    name: str | None = None
    runs_on: tuple[str, ...] = ()
    runs_on_span: SourceSpan | None = None
    permissions: PermissionSet | None = None
    container: ContainerSpec | None = None
    services: dict[str, ContainerSpec] = field(default_factory=dict)
    steps: tuple[Step, ...] = ()
    reusable_call: ActionRef | None = None
    with_: dict[str, Scalar] = field(default_factory=dict)
    secrets_mode: SecretsMode = SecretsMode.NONE
    secrets: dict[str, Scalar] = field(default_factory=dict)
    secrets_span: SourceSpan | None = None
    condition: RawCondition | None = None
    needs: tuple[str, ...] = ()
    needs_spans: tuple[SourceSpan, ...] = ()
    env: dict[str, Scalar] = field(default_factory=dict)
    outputs: dict[str, Scalar] = field(default_factory=dict)


@dataclass(frozen=True)
class Anomaly:
    kind: str
    message: str
    span: SourceSpan | None = None
    key: str | None = None


@dataclass
class ParseReport:
    path: str
    anomalies: list[Anomaly] = field(default_factory=list)

    def add(self, kind: str, message: str, span: SourceSpan | None = None, key: str | None = None) -> None:
        self.anomalies.append(Anomaly(kind, message, span, key))

    def __bool__(self) -> bool:
        return bool(self.anomalies)

    def kinds(self) -> list[str]:
        return [a.kind for a in self.anomalies]


@dataclass(frozen=True)
class WorkflowDoc:
    """One parsed workflow. Treat as immutable; detectors share it freely."""

    path: str
    source: bytes
    span: SourceSpan
    name: str | None = None
    triggers: tuple[Trigger, ...] = ()
    on_span: SourceSpan | None = None
    permissions: PermissionSet | None = None
    env: dict[str, Scalar] = field(default_factory=dict)
    jobs: dict[str, Job] = field(default_factory=dict)
    jobs_span: SourceSpan | None = None
    spans: dict[str, SourceSpan] = field(default_factory=dict)
    scalars: tuple[Scalar, ...] = ()
    extras: dict[str, Any] = field(default_factory=dict)
    report: ParseReport | None = None
    locator: _Locator | None = field(default=None, repr=False, compare=False)

    @property
    def events(self) -> set[str]:
        return {t.event for t in self.triggers}

    def excerpt(self, span: SourceSpan) -> str:
        return self.source[span.start_byte:span.end_byte].decode("utf-8", "replace")

    def line_text(self, line: int) -> str:
        lines = self.source.splitlines()
        return lines[line - 1].decode("utf-8", "replace") if 0 < line <= len(lines) else ""

    def make_span(self, start: int, end: int) -> SourceSpan:
        return self.locator.span(start, end)

    def find_in(self, span: SourceSpan, needle: str, start: int | None = None) -> SourceSpan | None:
        """Locate ``needle`` verbatim inside ``span``; ``None`` if it is not there."""
        raw = needle.encode("utf-8")
        begin = span.start_byte if start is None else max(start, span.start_byte)
        pos = self.source.find(raw, begin, span.end_byte)
        if pos == -1:
            return None
        return self.make_span(pos, pos + len(raw))

    def iter_steps(self) -> Iterator[tuple[Job, Step]]:
        for job in self.jobs.values():
            for step in job.steps:
                yield job, step


# -- action refs ---------------------------------------------------------------


def classify_ref(ref: str | None) -> RefKind:
    if not ref:
        return RefKind.UNKNOWN
    if _SHA_RE.fullmatch(ref):
        return RefKind.SHA
    if "/" in ref or ref in _BRANCH_NAMES:
        return RefKind.BRANCH
    if _TAG_RE.fullmatch(ref):
        return RefKind.TAG
    return RefKind.UNKNOWN


def parse_action_ref(raw: str, span: SourceSpan | None = None, commented_out: bool = False) -> ActionRef:
    """Decompose a ``uses:`` target into owner/repo/subpath/ref."""
    raw = raw.strip()
    if raw.startswith("docker://"):
        image = raw[len("docker://"):]
        ref = None
        if "@" in image:
            ref = image.split("@", 1)[1]
        elif ":" in image.rsplit("/", 1)[-1]:
            ref = image.rsplit(":", 1)[1]
        return ActionRef(raw, RefKind.DOCKER, ref=ref, commented_out=commented_out, span=span)
    if raw.startswith("./") or raw.startswith("../"):
        return ActionRef(raw, RefKind.LOCAL, subpath=raw, commented_out=commented_out, span=span)
    target, _, ref = raw.partition("@")
    parts = target.split("/")
    owner = parts[0] or None
    repo = parts[1] if len(parts) > 1 and parts[1] else None
    subpath = "/".join(parts[2:]) or None
    return ActionRef(raw, classify_ref(ref or None), owner, repo, subpath, ref or None,
                     commented_out, span)


def list_action_refs(doc: WorkflowDoc, include_commented: bool = False) -> list[tuple[ActionRef, SourceSpan]]:
    """All ``uses:`` targets (steps and reusable-workflow jobs), in source order."""
    refs: list[tuple[ActionRef, SourceSpan]] = []
    for job in doc.jobs.values():
        if job.reusable_call is not None:
            refs.append((job.reusable_call, job.reusable_call.span))
        for step in job.steps:
            if step.uses is not None:
                refs.append((step.uses, step.uses.span))
    if include_commented:
        refs.extend(_commented_refs(doc))
    refs.sort(key=lambda item: item[1].start_byte)
    return refs


def _commented_refs(doc: WorkflowDoc) -> list[tuple[ActionRef, SourceSpan]]:
    text = doc.source.decode("utf-8", "replace")
    found = []
    for m in _COMMENTED_USES_RE.finditer(text):
        start = len(text[:m.start(1)].encode("utf-8"))
        end = start + len(m.group(1).encode("utf-8"))
        span = doc.make_span(start, end)
        found.append((parse_action_ref(m.group(1), span, commented_out=True), span))
    return found


# -- loading -------------------------------------------------------------------


class _SpanLoader(yaml.SafeLoader):
    """Composer whose alias nodes carry the alias use-site marks."""

    def compose_node(self, parent, index):
        if self.check_event(yaml.AliasEvent):
            event = self.peek_event()
            node = super().compose_node(parent, index)
            clone = copy.copy(node)
            clone.start_mark, clone.end_mark = event.start_mark, event.end_mark
            return clone
        return super().compose_node(parent, index)


def load_workflow(path: str | Path) -> WorkflowDoc:
    """Read and parse a workflow file. ``OSError`` propagates unchanged."""
    data = Path(path).read_bytes()
    return parse_workflow(data, str(path))


def parse_workflow(source: bytes, path: str = "<workflow>") -> WorkflowDoc:
    """Parse workflow bytes into a :class:`WorkflowDoc`.

    Structural problems (missing ``jobs``, unknown or duplicate keys, ...) are
    collected in ``doc.report``. Input that is not YAML at all raises
    :class:`WorkflowSyntaxError`; non UTF-8 input raises
    :class:`WorkflowEncodingError`.
    """
    if isinstance(source, str):
        source = source.encode("utf-8")
    try:
        text = source.decode("utf-8")
    except UnicodeDecodeError as exc:
        raise WorkflowEncodingError(f"{path}: not valid UTF-8 ({exc.reason} at byte {exc.start})") from exc
    bom = 0
    if text.startswith("\ufeff"):
        text, bom = text[1:], 3
    loc = _Locator(source, text, bom)
    report = ParseReport(path)
    loader = _SpanLoader(text)
    try:
        root = loader.get_single_node()
    except yaml.YAMLError as exc:
        mark = getattr(exc, "problem_mark", None)
        span = None
        if mark is not None:
            b = loc.byte(mark.index)
            span = loc.span(b, b)
        report.add("syntax", str(exc).replace("\n", " "), span)
        raise WorkflowSyntaxError(report) from exc
    finally:
        loader.dispose()
    return _Builder(path, source, loc, report).build(root)


def _to_python(node: Node) -> Any:
    try:
        return SafeConstructor().construct_object(node, deep=True)
    except (yaml.YAMLError, TypeError):
        return None


class _Builder:
    def __init__(self, path: str, source: bytes, loc: _Locator, report: ParseReport):
        self.path = path
        self.source = source
        self.loc = loc
        self.report = report
        self.spans: dict[str, SourceSpan] = {}

    # generic helpers

    def span(self, node: Node) -> SourceSpan:
        return self.loc.node_span(node)

    def pairs(self, node: MappingNode, where: str) -> dict[str, tuple[ScalarNode, Node]]:
        """Mapping entries keyed by scalar key, merge keys expanded, last writer wins."""
        out: dict[str, tuple[ScalarNode, Node]] = {}
        for key, value in node.value:
            if key.tag == "tag:yaml.org,2002:merge" or (isinstance(key, ScalarNode) and key.value == "<<"):
                sources = value.value if isinstance(value, SequenceNode) else [value]
                for src in sources:
                    if isinstance(src, MappingNode):
                        for k, v in self.pairs(src, where).items():
                            out.setdefault(k, v)
                continue
            if not isinstance(key, ScalarNode):
                self.report.add("invalid-key", f"non-scalar key in {where}", self.span(key))
                continue
            if key.value in out:
                self.report.add("duplicate-key", f"duplicate key {key.value!r} in {where}",
                                self.span(key), key.value)
                del out[key.value]
            out[key.value] = (key, value)
        return out

    def scalar(self, node: Node, path: tuple[str | int, ...]) -> Scalar | None:
        if isinstance(node, ScalarNode):
            return Scalar(node.value, self.span(node), ScalarStyle.of(node), path)
        return None

    def scalar_map(self, node: Node | None, path: tuple[str | int, ...], where: str) -> dict[str, Scalar]:
        if node is None:
            return {}
        if not isinstance(node, MappingNode):
            if isinstance(node, ScalarNode) and node.value.startswith("${{"):
                return {}
            self.report.add("invalid-value", f"{where} must be a mapping", self.span(node))
            return {}
        out = {}
        for k, (_, v) in self.pairs(node, where).items():
            if isinstance(v, ScalarNode):
                out[k] = Scalar(v.value, self.span(v), ScalarStyle.of(v), path + (k,))
            else:
                out[k] = Scalar(self.excerpt(v), self.span(v), ScalarStyle.PLAIN, path + (k,))
        return out

    def excerpt(self, node: Node) -> str:
        s = self.span(node)
        return self.source[s.start_byte:s.end_byte].decode("utf-8", "replace")

    def condition(self, node: Node | None) -> RawCondition | None:
        if node is None:
            return None
        if not isinstance(node, ScalarNode):
            self.report.add("invalid-value", "if: must be a scalar", self.span(node))
            return None
        return RawCondition(node.value, ScalarStyle.of(node), self.span(node))

    def unknown_keys(self, entries: dict, allowed: frozenset, where: str) -> dict[str, Any]:
        extras = {}
        for k, (knode, vnode) in entries.items():
            if k not in allowed:
                extras[k] = _to_python(vnode)
                self.report.add("unknown-key", f"unknown key {k!r} in {where}", self.span(knode), k)
        return extras

    def collect_scalars(self, node: Node, path: tuple[str | int, ...], out: list[Scalar], seen: set[int]) -> None:
        if id(node) in seen:
            return
        if isinstance(node, ScalarNode):
            out.append(Scalar(node.value, self.span(node), ScalarStyle.of(node), path))
        elif isinstance(node, SequenceNode):
            seen.add(id(node))
            for i, child in enumerate(node.value):
                self.collect_scalars(child, path + (i,), out, seen)
            seen.discard(id(node))
        elif isinstance(node, MappingNode):
            seen.add(id(node))
            for key, value in node.value:
                name = key.value if isinstance(key, ScalarNode) else "?"
                self.collect_scalars(value, path + (name,), out, seen)
            seen.discard(id(node))

    # workflow structure

    def build(self, root: Node | None) -> WorkflowDoc:
        whole = self.loc.span(0, len(self.source))
        if root is None or not isinstance(root, MappingNode):
            kind = "empty" if root is None else "not-a-mapping"
            self.report.add(kind, "workflow document must be a mapping", whole)
            return WorkflowDoc(self.path, self.source, whole, report=self.report, locator=self.loc)
        self.spans[""] = whole
        top = self.pairs(root, "workflow")
        extras = self.unknown_keys(top, WORKFLOW_KEYS, "workflow")

        name = top["name"][1].value if "name" in top and isinstance(top["name"][1], ScalarNode) else None
        triggers, on_span = (), None
        if "on" in top:
            on_span = self.span(top["on"][0])
            triggers = self.triggers(top["on"][1])
        else:
            self.report.add("missing-on", "workflow has no 'on' triggers", whole)
        permissions = self.permissions(top["permissions"][1], "permissions") if "permissions" in top else None
        env = self.scalar_map(top.get("env", (None, None))[1], ("env",), "env")
        jobs: dict[str, Job] = {}
        jobs_span = None
        if "jobs" in top:
            jobs_span = self.span(top["jobs"][0])
            jobs_node = top["jobs"][1]
            if isinstance(jobs_node, MappingNode):
                for job_id, (knode, vnode) in self.pairs(jobs_node, "jobs").items():
                    job = self.job(job_id, knode, vnode)
                    if job is not None:
                        jobs[job_id] = job
            else:
                self.report.add("invalid-value", "jobs must be a mapping", self.span(jobs_node))
        if not jobs:
            self.report.add("missing-jobs", "workflow defines no jobs", jobs_span or whole)

        scalars: list[Scalar] = []
        self.collect_scalars(root, (), scalars, set())
        return WorkflowDoc(
            path=self.path, source=self.source, span=whole, name=name,
            triggers=triggers, on_span=on_span, permissions=permissions, env=env,
            jobs=jobs, jobs_span=jobs_span, spans=self.spans, scalars=tuple(scalars),
            extras=extras, report=self.report, locator=self.loc,
        )

    def triggers(self, node: Node) -> tuple[Trigger, ...]:
        items: list[tuple[str, Node, Any]] = []
        if isinstance(node, ScalarNode):
            items.append((node.value, node, None))
        elif isinstance(node, SequenceNode):
            for child in node.value:
                if isinstance(child, ScalarNode):
                    items.append((child.value, child, None))
                else:
                    self.report.add("invalid-value", "trigger list entries must be event names", self.span(child))
        elif isinstance(node, MappingNode):
            for event, (knode, vnode) in self.pairs(node, "on").items():
                filters = _to_python(vnode)
                items.append((event, knode, filters if isinstance(filters, dict) else {}))
        out = []
        for event, knode, filters in items:
            span = self.span(knode)
            if not event or event != event.lower() or event not in KNOWN_EVENTS:
                self.report.add("unknown-event", f"unknown trigger event {event!r}", span, event)
                if not event:
                    continue
            self.spans[f"on.{event}"] = span
            out.append(Trigger(event.lower(), span, filters or {}))
        return tuple(out)

    def permissions(self, node: Node, where: str) -> PermissionSet:
        span = self.span(node)
        self.spans[where] = span
        if isinstance(node, ScalarNode):
            value = node.value.strip()
            if value == "read-all":
                return PermissionSet(PermissionMode.READ_ALL, span=span)
            if value == "write-all":
                return PermissionSet(PermissionMode.WRITE_ALL, span=span)
            if value in ("", "{}"):
                return PermissionSet(PermissionMode.NONE_ALL, span=span)
            self.report.add("invalid-permission", f"unknown permissions value {value!r}", span)
            return PermissionSet(PermissionMode.DEFAULT_IMPLICIT, span=span)
        if isinstance(node, MappingNode):
            scopes = {}
            for scope, (knode, vnode) in self.pairs(node, where).items():
                level = vnode.value if isinstance(vnode, ScalarNode) else ""
                if scope not in PERMISSION_SCOPES:
                    self.report.add("invalid-permission", f"unknown permission scope {scope!r}",
                                    self.span(knode), scope)
                    continue
                if level not in ("read", "write", "none"):
                    self.report.add("invalid-permission", f"invalid access level {level!r} for {scope}",
                                    self.span(vnode), scope)
                    continue
                scopes[scope] = level
            if not node.value:
                return PermissionSet(PermissionMode.NONE_ALL, span=span)
            return PermissionSet(PermissionMode.SCOPED, scopes, span)
        self.report.add("invalid-permission", "permissions must be a scalar or mapping", span)
        return PermissionSet(PermissionMode.DEFAULT_IMPLICIT, span=span)

    def container(self, node: Node, path: tuple[str | int, ...]) -> ContainerSpec:
        span = self.span(node)
        scalars: list[Scalar] = []
        self.collect_scalars(node, path, scalars, set())
        if isinstance(node, ScalarNode):
            return ContainerSpec(node.value, span, scalars=tuple(scalars))
        if not isinstance(node, MappingNode):
            self.report.add("invalid-value", "container must be an image or mapping", span)
            return ContainerSpec(None, span, scalars=tuple(scalars))
        entries = self.pairs(node, "container")
        image = entries.get("image", (None, None))[1]
        return ContainerSpec(
            image.value if isinstance(image, ScalarNode) else None,
            span,
            credentials=self.scalar_map(entries.get("credentials", (None, None))[1],
                                        path + ("credentials",), "credentials"),
            env=self.scalar_map(entries.get("env", (None, None))[1], path + ("env",), "container env"),
            scalars=tuple(scalars),
        )

    def job(self, job_id: str, knode: ScalarNode, node: Node) -> Job | None:
        key_span = self.span(knode)
        prefix = f"jobs.{job_id}"
        if not _JOB_ID_RE.fullmatch(job_id):
            self.report.add("invalid-value", f"invalid job id {job_id!r}", key_span, job_id)
        if not isinstance(node, MappingNode):
            self.report.add("invalid-value", f"job {job_id!r} must be a mapping", self.span(node), job_id)
            return None
        span = self.span(node)
        self.spans[prefix] = span
        entries = self.pairs(node, f"job {job_id!r}")
        self.unknown_keys(entries, JOB_KEYS, f"job {job_id!r}")
        path = ("jobs", job_id)

        def get(key: str) -> Node | None:
            return entries[key][1] if key in entries else None

        runs_on, runs_on_span = self.runs_on(get("runs-on"))
        permissions = self.permissions(get("permissions"), f"{prefix}.permissions") if "permissions" in entries else None
        container = self.container(get("container"), path + ("container",)) if "container" in entries else None
        services = {}
        svc = get("services")
        if isinstance(svc, MappingNode):
            for sid, (_, snode) in self.pairs(svc, "services").items():
                services[sid] = self.container(snode, path + ("services", sid))

        reusable = None
        if "uses" in entries:
            unode = get("uses")
            if isinstance(unode, ScalarNode):
                uspan = self.span(unode)
                self.spans[f"{prefix}.uses"] = uspan
                reusable = parse_action_ref(unode.value, uspan)
            else:
                self.report.add("invalid-value", "job uses: must be a string", self.span(unode))

        secrets_mode, secrets, secrets_span = SecretsMode.NONE, {}, None
        snode = get("secrets")
        if snode is not None:
            secrets_span = self.span(snode)
            if isinstance(snode, ScalarNode) and snode.value == "inherit":
                secrets_mode = SecretsMode.INHERIT
            else:
                secrets_mode = SecretsMode.EXPLICIT
                secrets = self.scalar_map(snode, path + ("secrets",), "secrets")

        needs, needs_spans = [], []
        nnode = get("needs")
        if nnode is not None:
            nodes = nnode.value if isinstance(nnode, SequenceNode) else [nnode]
            for n in nodes:
                if isinstance(n, ScalarNode):
                    if not _JOB_ID_RE.fullmatch(n.value):
                        self.report.add("invalid-value", f"invalid job id in needs: {n.value!r}", self.span(n))
                    needs.append(n.value)
                    needs_spans.append(self.span(n))

        steps = []
        stnode = get("steps")
        if isinstance(stnode, SequenceNode):
            for i, child in enumerate(stnode.value):
                step = self.step(i, child, prefix, path)
                if step is not None:
                    steps.append(step)
        elif stnode is not None:
            self.report.add("invalid-value", "steps must be a sequence", self.span(stnode))
        if bool(steps) == bool(reusable):
            what = "both steps and uses" if steps else "neither steps nor uses"
            self.report.add("invalid-job", f"job {job_id!r} has {what}", key_span, job_id)

        cond = self.condition(get("if"))
        if cond is not None:
            self.spans[f"{prefix}.if"] = cond.span
        name = get("name")
        return Job(
            id=job_id, span=span, key_span=key_span,
            name=name.value if isinstance(name, ScalarNode) else None,
            runs_on=runs_on, runs_on_span=runs_on_span, permissions=permissions,
            container=container, services=services, steps=tuple(steps),
            reusable_call=reusable, with_=self.scalar_map(get("with"), path + ("with",), "with"),
            secrets_mode=secrets_mode, secrets=secrets, secrets_span=secrets_span,
            condition=cond, needs=tuple(needs), needs_spans=tuple(needs_spans),
            env=self.scalar_map(get("env"), path + ("env",), "env"),
            outputs=self.scalar_map(get("outputs"), path + ("outputs",), "outputs"),
        )

    def runs_on(self, node: Node | None) -> tuple[tuple[str, ...], SourceSpan | None]:
        if node is None:
            return (), None
        span = self.span(node)
        if isinstance(node, ScalarNode):
            return (node.value,), span
        if isinstance(node, SequenceNode):
            return tuple(n.value for n in node.value if isinstance(n, ScalarNode)), span
        if isinstance(node, MappingNode):
            labels: list[str] = []
            for key, (_, v) in self.pairs(node, "runs-on").items():
                if key == "labels":
                    vals = v.value if isinstance(v, SequenceNode) else [v]
                    labels.extend(n.value for n in vals if isinstance(n, ScalarNode))
                elif key == "group" and isinstance(v, ScalarNode):
                    labels.append(f"group:{v.value}")
            return tuple(labels), span
        return (), span

    def step(self, index: int, node: Node, prefix: str, path: tuple) -> Step | None:
        sid = f"{prefix}.steps[{index}]"
        if not isinstance(node, MappingNode):
            self.report.add("invalid-step", f"{sid} must be a mapping", self.span(node))
            return None
        span = self.span(node)
        self.spans[sid] = span
        entries = self.pairs(node, sid)
        self.unknown_keys(entries, STEP_KEYS, sid)
        spath = path + ("steps", index)

        def get(key: str) -> Node | None:
            return entries[key][1] if key in entries else None

        uses = run = None
        if "uses" in entries:
            unode = get("uses")
            if isinstance(unode, ScalarNode):
                uspan = self.span(unode)
                self.spans[f"{sid}.uses"] = uspan
                uses = parse_action_ref(unode.value, uspan)
        if "run" in entries:
            run = self.scalar(get("run"), spath + ("run",))
            if run is not None:
                self.spans[f"{sid}.run"] = run.span
        if uses is not None and run is not None:
            self.report.add("invalid-step", f"{sid} has both run and uses", span)
            run = None
        if uses is None and run is None:
            self.report.add("invalid-step", f"{sid} has neither run nor uses", span)
            return None
        shell = get("shell")
        coe = get("continue-on-error")
        cond = self.condition(get("if"))
        if cond is not None:
            self.spans[f"{sid}.if"] = cond.span
        name = get("name")
        ident = get("id")
        return Step(
            index=index,
            kind=StepKind.USES if uses is not None else StepKind.RUN,
            span=span, run=run,
            shell=shell.value if isinstance(shell, ScalarNode) else None,
            uses=uses,
            with_=self.scalar_map(get("with"), spath + ("with",), "with"),
            env=self.scalar_map(get("env"), spath + ("env",), "env"),
            condition=cond,
            continue_on_error=isinstance(coe, ScalarNode) and coe.value.lower() == "true",
            name=name.value if isinstance(name, ScalarNode) else None,
            id=ident.value if isinstance(ident, ScalarNode) else None,
        )
