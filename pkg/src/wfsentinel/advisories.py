"""Known-vulnerability lookups for reused actions, offline by default."""

from __future__ import annotations

import functools
import json
import logging
import re
import threading
import urllib.error
import urllib.request
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path
from typing import Any, Protocol

from .model import ActionRef

log = logging.getLogger(__name__)

OSV_ENDPOINT = "https://api.osv.dev/v1/query"
_VERSION_RE = re.compile(r"v?(\d+)(?:\.(\d+))?(?:\.(\d+))?(?:-([0-9A-Za-z.-]+))?(?:\+[0-9A-Za-z.-]+)?")


class UnparseableVersion(ValueError):
    pass


@functools.total_ordering
@dataclass(frozen=True)
class Version:
    major: int
    minor: int = 0
    patch: int = 0
    prerelease: str | None = None
    precision: int = 3  # how many numeric components the text spelled out

    @property
    def coarse(self) -> bool:
        return self.precision < 3

    def line_bounds(self) -> tuple[Version, Version]:
        """``[lo, hi)`` covering every concrete version a coarse version may denote."""
        if self.precision >= 3:
            return self, self
        if self.precision == 2:
            return Version(self.major, self.minor), Version(self.major, self.minor + 1, prerelease="0")
        return Version(self.major), Version(self.major + 1, prerelease="0")

    def _key(self) -> tuple:
        # A release sorts after all of its prereleases.
        pre = () if self.prerelease is None else tuple(
            (0, int(p), "") if p.isdigit() else (1, 0, p) for p in self.prerelease.split("."))
        return (self.major, self.minor, self.patch, self.prerelease is None, pre)

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, Version):
            return NotImplemented
        return self._key() == other._key()

    def __lt__(self, other: Version) -> bool:
        return self._key() < other._key()

    def __hash__(self) -> int:
        return hash(self._key())

    def __str__(self) -> str:
        text = f"{self.major}.{self.minor}.{self.patch}"
        return f"{text}-{self.prerelease}" if self.prerelease else text


def parse_version(text: str) -> Version:
    m = _VERSION_RE.fullmatch(text.strip())
    if not m:
        raise UnparseableVersion(text)
    major, minor, patch, pre = m.groups()
    precision = 1 if minor is None else 2 if patch is None else 3
    return Version(int(major), int(minor or 0), int(patch or 0), pre, precision)


def try_parse_version(text: str | None) -> Version | None:
    if not text:
        return None
    try:
        return parse_version(text)
    except UnparseableVersion:
        return None


@dataclass(frozen=True)
class Range:
    """Half-open ``[introduced, fixed)``; ``fixed=None`` means still affected."""

    introduced: Version
    fixed: Version | None = None

    def __post_init__(self):
        if self.fixed is not None and not self.introduced < self.fixed:
            raise ValueError(f"empty range [{self.introduced}, {self.fixed})")

    def contains(self, v: Version) -> bool:
        return self.introduced <= v and (self.fixed is None or v < self.fixed)

    def overlaps(self, lo: Version, hi: Version) -> bool:
        # [lo, hi) overlaps [introduced, fixed) when each starts before the other ends.
        return self.introduced < hi and (self.fixed is None or lo < self.fixed)


def version_in_range(v: Version, r: Range) -> bool:
    return r.contains(v)


@dataclass(frozen=True)
class Advisory:
    id: str
    subject: str  # owner/repo, lower-cased
    ranges: tuple[Range, ...]
    severity: str = "MODERATE"
    summary: str = ""

    @classmethod
    def from_osv(cls, record: dict[str, Any]) -> list[Advisory]:
        """One Advisory per affected package of an OSV record (GitHub Actions ecosystem)."""
        severity = (record.get("database_specific") or {}).get("severity", "MODERATE")
        out = []
        for affected in record.get("affected", []):
            pkg = affected.get("package", {})
            if pkg.get("ecosystem", "GitHub Actions") != "GitHub Actions":
                continue
            ranges = []
            for rng in affected.get("ranges", []):
                if rng.get("type", "ECOSYSTEM") not in ("ECOSYSTEM", "SEMVER"):
                    continue
                intro = None
                for ev in rng.get("events", []):
                    if "introduced" in ev:
                        intro = parse_version("0.0.0" if ev["introduced"] == "0" else ev["introduced"])
                    elif "fixed" in ev and intro is not None:
                        ranges.append(Range(intro, parse_version(ev["fixed"])))
                        intro = None
                    elif "last_affected" in ev and intro is not None:
                        last = parse_version(ev["last_affected"])
                        # smallest version above ``last``: the "0" prerelease of the next patch
                        ranges.append(Range(intro, Version(last.major, last.minor, last.patch + 1, "0")))
                        intro = None
                if intro is not None:
                    ranges.append(Range(intro))
            out.append(cls(record["id"], pkg["name"].lower(), tuple(ranges), severity,
                           record.get("summary", "")))
        return out


class AdvisorySource(Protocol):
    def advisories_for(self, subject: str, warnings: list[str] | None = None) -> list[Advisory]: ...


@dataclass
class FixtureAdvisorySource:
    advisories: list[Advisory] = field(default_factory=list)

    @classmethod
    def from_records(cls, records: list[dict[str, Any]]) -> FixtureAdvisorySource:
        out: list[Advisory] = []
        for rec in records:
            out.extend(Advisory.from_osv(rec))
        return cls(out)

    @classmethod
    def load(cls, path: str | Path) -> FixtureAdvisorySource:
        return cls.from_records(json.loads(Path(path).read_text(encoding="utf-8")))

    @classmethod
    def bundled(cls) -> FixtureAdvisorySource:
        text = resources.files("wfsentinel").joinpath("data/advisories.json").read_text(encoding="utf-8")
        return cls.from_records(json.loads(text))

    def advisories_for(self, subject: str, warnings: list[str] | None = None) -> list[Advisory]:
        subject = subject.lower()
        return [a for a in self.advisories if a.subject == subject]

    def __len__(self) -> int:
        return len(self.advisories)


@dataclass
class OsvAdvisorySource:
    """Query an OSV-compatible endpoint; failures degrade to no data plus a warning."""

    endpoint: str = OSV_ENDPOINT
    timeout: float = 10.0
    _cache: dict[str, list[Advisory]] = field(default_factory=dict, init=False, repr=False)
    _lock: threading.Lock = field(default_factory=threading.Lock, init=False, repr=False)

    def advisories_for(self, subject: str, warnings: list[str] | None = None) -> list[Advisory]:
        subject = subject.lower()
        with self._lock:
            if subject in self._cache:
                return self._cache[subject]
        body = json.dumps({"package": {"name": subject, "ecosystem": "GitHub Actions"}}).encode()
        req = urllib.request.Request(self.endpoint, data=body, headers={"Content-Type": "application/json"})
        try:
            with urllib.request.urlopen(req, timeout=self.timeout) as resp:
                payload = json.loads(resp.read().decode("utf-8"))
            found: list[Advisory] = []
            for rec in payload.get("vulns", []):
                found.extend(a for a in Advisory.from_osv(rec) if a.subject == subject)
        except (urllib.error.URLError, OSError, ValueError, KeyError) as exc:
            msg = f"advisory lookup for {subject} failed: {exc}"
            log.warning(msg)
            if warnings is not None:
                warnings.append(msg)
            return []
        with self._lock:
            self._cache[subject] = found
        return found


@dataclass(frozen=True)
class AdvisoryMatch:
    advisory: Advisory
    version: Version
    coarse: bool


def lookup_advisories(ref: ActionRef, source: AdvisorySource, version: Version | None = None,
                      warnings: list[str] | None = None) -> list[AdvisoryMatch]:
    """Advisories whose subject is ``ref``'s owner/repo and whose range holds its version.

    ``version`` overrides parsing ``ref.ref`` (used for sha refs mapped back to tags).
    A coarse version such as ``v4`` matches when some affected range overlaps the
    release line it denotes; such matches are flagged ``coarse``.
    """
    if not ref.slug:
        raise ValueError(f"{ref.raw!r} has no owner/repo")
    if version is None:
        version = try_parse_version(ref.ref)
    if version is None:
        return []
    matches = []
    for adv in source.advisories_for(ref.slug, warnings):
        if version.coarse:
            lo, hi = version.line_bounds()
            hit = any(r.overlaps(lo, hi) for r in adv.ranges)
        else:
            hit = any(r.contains(version) for r in adv.ranges)
        if hit:
            matches.append(AdvisoryMatch(adv, version, version.coarse))
    return matches
