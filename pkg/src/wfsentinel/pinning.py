"""Resolve floating action refs to commit SHAs and rewrite workflows in place."""

from __future__ import annotations

import json
import logging
import os
import re
import threading
import urllib.error
import urllib.request
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Protocol

from .findings import Finding, TextEdit, Weakness
from .model import ActionRef, RefKind, SourceSpan, WorkflowDoc

log = logging.getLogger(__name__)

_SHA_RE = re.compile(r"[0-9a-f]{40}")
TOKEN_ENV = "GITHUB_TOKEN"
DEFAULT_API = "https://api.github.com"


class UnresolvedRef(Exception):
    """Resolution failed; ``reason`` is one of the ``REASONS``."""

    REASONS = ("not-in-fixture", "network-error", "ambiguous", "rate-limit", "auth")

    def __init__(self, reason: str, detail: str = ""):
        if reason not in self.REASONS:
            raise ValueError(f"unknown resolution failure {reason!r}")
        super().__init__(f"{reason}: {detail}" if detail else reason)
        self.reason = reason
        self.detail = detail


class EditConflict(ValueError):
    pass


class ResolutionSource(Protocol):
    def lookup(self, slug: str, ref: str) -> str: ...

    def reverse(self, slug: str, sha: str) -> str | None: ...


@dataclass
class OfflineFixture:
    """Static ``"owner/repo@ref" -> sha`` map; never touches the network."""

    mapping: dict[str, str] = field(default_factory=dict)

    def __post_init__(self):
        for key, sha in self.mapping.items():
            if "@" not in key or not _SHA_RE.fullmatch(sha):
                raise ValueError(f"bad pin fixture entry {key!r}: {sha!r}")

    @classmethod
    def load(cls, path: str | Path) -> OfflineFixture:
        return cls(json.loads(Path(path).read_text(encoding="utf-8")))

    def lookup(self, slug: str, ref: str) -> str:
        try:
            return self.mapping[f"{slug}@{ref}"]
        except KeyError:
            raise UnresolvedRef("not-in-fixture", f"{slug}@{ref}") from None

    def reverse(self, slug: str, sha: str) -> str | None:
        """The ref a sha was pinned from, when exactly one fixture entry maps to it."""
        tags = [k.split("@", 1)[1] for k, v in self.mapping.items()
                if v == sha and k.split("@", 1)[0] == slug]
        return tags[0] if len(tags) == 1 else None


@dataclass
class LiveForge:
    """Resolve refs through the forge's commits API, with an optional on-disk cache."""

    endpoint: str = DEFAULT_API
    token: str | None = None
    cache_path: Path | None = None
    timeout: float = 10.0
    _cache: dict[str, str] = field(default_factory=dict, init=False, repr=False)
    _lock: threading.Lock = field(default_factory=threading.Lock, init=False, repr=False)

    def __post_init__(self):
        if self.token is None:
            self.token = os.environ.get(TOKEN_ENV)
        if self.cache_path and Path(self.cache_path).exists():
            self._cache.update(json.loads(Path(self.cache_path).read_text(encoding="utf-8")))

    def lookup(self, slug: str, ref: str) -> str:
        key = f"{slug}@{ref}"
        with self._lock:
            if key in self._cache:
                return self._cache[key]
        req = urllib.request.Request(
            f"{self.endpoint.rstrip('/')}/repos/{slug}/commits/{ref}",
            headers={"Accept": "application/vnd.github.sha"},
        )
        if self.token:
            req.add_header("Authorization", f"Bearer {self.token}")
        try:
            with urllib.request.urlopen(req, timeout=self.timeout) as resp:
                sha = resp.read().decode("ascii", "replace").strip()
        except urllib.error.HTTPError as exc:
            if exc.code == 401:
                raise UnresolvedRef("auth", key) from exc
            if exc.code in (403, 429) and exc.headers.get("X-RateLimit-Remaining") == "0":
                raise UnresolvedRef("rate-limit", key) from exc
            if exc.code == 403:
                raise UnresolvedRef("auth", key) from exc
            if exc.code in (404, 422):
                raise UnresolvedRef("ambiguous", f"{key} not found") from exc
            raise UnresolvedRef("network-error", f"{key}: HTTP {exc.code}") from exc
        except (urllib.error.URLError, OSError) as exc:
            raise UnresolvedRef("network-error", f"{key}: {exc}") from exc
        if not _SHA_RE.fullmatch(sha):
            raise UnresolvedRef("ambiguous", f"{key} resolved to {sha[:60]!r}")
        with self._lock:
            self._cache[key] = sha
        return sha

    def reverse(self, slug: str, sha: str) -> str | None:
        return None

    def save_cache(self) -> None:
        if self.cache_path:
            with self._lock:
                data = dict(sorted(self._cache.items()))
            Path(self.cache_path).write_text(json.dumps(data, indent=2) + "\n", encoding="utf-8")


def resolve_ref(ref: ActionRef, source: ResolutionSource) -> str:
    """Resolve a tag or branch ref to a 40-hex sha, or raise ``UnresolvedRef``.

    Raises ``ValueError`` for refs that are already pinned or cannot be pinned
    through the commits API (sha, local, docker).
    """
    if ref.ref_kind in (RefKind.SHA, RefKind.LOCAL, RefKind.DOCKER):
        raise ValueError(f"cannot resolve a {ref.ref_kind.value} ref: {ref.raw}")
    if not ref.slug or not ref.ref:
        raise UnresolvedRef("ambiguous", f"no repository or ref in {ref.raw!r}")
    return source.lookup(ref.slug, ref.ref)


def resolve_many(refs: Iterable[ActionRef], source: ResolutionSource,
                 max_workers: int = 8) -> dict[str, str | UnresolvedRef]:
    """Resolve distinct ``slug@ref`` keys concurrently; values are shas or the failure."""
    unique = {f"{r.slug}@{r.ref}": r for r in refs}

    def one(ref: ActionRef) -> str | UnresolvedRef:
        try:
            return resolve_ref(ref, source)
        except UnresolvedRef as exc:
            return exc

    with ThreadPoolExecutor(max_workers=max_workers) as pool:
        results = pool.map(one, unique.values())
        return dict(zip(unique, results))


@dataclass
class FixPlan:
    edits: list[TextEdit]
    unresolved: list[tuple[Finding, str]]


_PINNABLE_RULES = ("udw.unpinned-uses", "udw.unpinned-reusable-workflow")


def _ref_for(doc: WorkflowDoc, finding: Finding) -> ActionRef | None:
    for job in doc.jobs.values():
        candidates = [job.reusable_call] + [s.uses for s in job.steps]
        for ref in candidates:
            if ref is not None and ref.span == finding.span:
                return ref
    return None


def ref_token_span(doc: WorkflowDoc, ref: ActionRef) -> SourceSpan | None:
    """Span of the text after ``@`` in a ``uses:`` value."""
    if ref.span is None or not ref.ref:
        return None
    raw = doc.source[ref.span.start_byte:ref.span.end_byte]
    at = raw.rfind(b"@")
    if at == -1:
        return None
    start = ref.span.start_byte + at + 1
    end = start + len(ref.ref.encode("utf-8"))
    if doc.source[start:end] != ref.ref.encode("utf-8"):
        return None
    return doc.make_span(start, end)


def plan_pin_fixes(doc: WorkflowDoc, findings: Iterable[Finding], source: ResolutionSource) -> FixPlan:
    edits: list[TextEdit] = []
    unresolved: list[tuple[Finding, str]] = []
    for finding in findings:
        if finding.weakness is not Weakness.UDW or finding.path != doc.path:
            continue
        ref = _ref_for(doc, finding) if finding.rule_id in _PINNABLE_RULES else None
        if ref is None:
            unresolved.append((finding, "unpinnable"))
            continue
        try:
            sha = resolve_ref(ref, source)
        except ValueError:
            unresolved.append((finding, "unpinnable"))
            continue
        except UnresolvedRef as exc:
            unresolved.append((finding, exc.reason))
            continue
        token = ref_token_span(doc, ref)
        if token is None:
            unresolved.append((finding, "unpinnable"))
            continue
        edits.append(TextEdit(token, sha, ref.ref))
    edits.sort(key=lambda e: e.span.start_byte)
    return FixPlan(edits, unresolved)


def _line_end(source: bytes, pos: int) -> int:
    nl = source.find(b"\n", pos)
    end = len(source) if nl == -1 else nl
    if end > 0 and source[end - 1:end] == b"\r":
        end -= 1
    return end


def apply_edits(source: bytes, edits: list[TextEdit]) -> bytes:
    """Splice edits into ``source``; reject overlapping, unsorted or out-of-range edits.

    Trailing comments are inserted at the end of the edited line, so every byte
    outside the edit spans survives unchanged. An edit carrying a comment must be
    the only edit on its line.
    """
    prev_end = -1
    prev: TextEdit | None = None
    for e in edits:
        s, t = e.span.start_byte, e.span.end_byte
        if not (0 <= s <= t <= len(source)):
            raise EditConflict(f"edit {s}..{t} outside source of {len(source)} bytes")
        if s < prev_end:
            raise EditConflict(f"edit at {s} overlaps or precedes the previous edit")
        if prev is not None and prev.trailing_comment is not None and _line_end(source, prev_end) >= s:
            raise EditConflict(f"two edits on the line ending at byte {_line_end(source, prev_end)}")
        prev_end, prev = t, e

    out = bytearray()
    pos = 0
    for e in edits:
        s, t = e.span.start_byte, e.span.end_byte
        out += source[pos:s]
        out += e.replacement.encode("utf-8")
        pos = t
        if e.trailing_comment is not None:
            eol = _line_end(source, t)
            out += source[t:eol]
            out += f" # {e.trailing_comment}".encode("utf-8")
            pos = eol
    out += source[pos:]
    return bytes(out)
