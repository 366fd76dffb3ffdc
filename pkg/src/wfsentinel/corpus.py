"""Corpus scans: per-weakness matrices, profile differentials and timing."""

from __future__ import annotations

import csv
import io
import json
import statistics
import time
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Sequence

from .findings import Finding, Weakness
from .model import WorkflowDoc, list_action_refs
from .profiles import Profile
from .reporting import Matrix, summarize
from .scan import discover, scan_source
from .services import Services


@dataclass
class WorkflowEntry:
    path: str
    loc: int = 0
    job_count: int = 0
    trigger_count: int = 0
    reused_action_count: int = 0
    findings: list[Finding] = field(default_factory=list)
    timing_samples: list[float] = field(default_factory=list)
    error: str | None = None

    def to_dict(self) -> dict[str, Any]:
        return {
            "path": self.path, "loc": self.loc, "job_count": self.job_count,
            "trigger_count": self.trigger_count, "reused_action_count": self.reused_action_count,
            "findings": [f.to_dict() for f in self.findings],
            "timing_samples": self.timing_samples, "error": self.error,
        }


@dataclass
class CorpusReport:
    profile: str
    repetitions: int
    workflows: list[WorkflowEntry]
    matrix: Matrix

    def to_dict(self, timings: bool = True) -> dict[str, Any]:
        entries = []
        for e in self.workflows:
            d = e.to_dict()
            if not timings:
                d.pop("timing_samples")
            entries.append(d)
        return {
            "profile": self.profile,
            "repetitions": self.repetitions,
            "matrix": {w.value: {"total_findings": t, "workflows_with_finding": n}
                       for w, (t, n) in self.matrix.items()},
            "workflows": entries,
        }

    def to_json(self, timings: bool = True) -> str:
        return json.dumps(self.to_dict(timings), indent=2, sort_keys=True) + "\n"


def count_loc(source: bytes) -> int:
    """Lines that are neither blank nor comment-only."""
    n = 0
    for raw in source.splitlines():
        line = raw.strip()
        if line and not line.startswith(b"#"):
            n += 1
    return n


def workflow_metrics(doc: WorkflowDoc) -> tuple[int, int, int, int]:
    """(loc, job count, trigger count, reused action count)."""
    return count_loc(doc.source), len(doc.jobs), len(doc.triggers), len(list_action_refs(doc))


def scan_corpus(root: str | Path, profile: Profile, repetitions: int = 1,
                services: Services | None = None, ignore_rules: Sequence[str] = ()) -> CorpusReport:
    """Scan every workflow under ``root`` ``repetitions`` times, serially.

    Findings come from the first repetition; every repetition contributes a
    timing sample measured with a monotonic clock.
    """
    if repetitions < 1:
        raise ValueError("repetitions must be at least 1")
    services = services or Services.offline()
    entries = []
    for path in discover([root]):
        rel = path.relative_to(root).as_posix() if Path(root).is_dir() else path.name
        entry = WorkflowEntry(rel)
        try:
            source = path.read_bytes()
        except OSError as exc:
            entry.error = str(exc)
            entries.append(entry)
            continue
        for i in range(repetitions):
            t0 = time.perf_counter()
            result = scan_source(source, rel, profile, services, ignore_rules)
            entry.timing_samples.append(time.perf_counter() - t0)
            if i == 0:
                entry.findings = result.findings
                entry.error = result.error
                if result.doc is not None:
                    entry.loc, entry.job_count, entry.trigger_count, entry.reused_action_count = \
                        workflow_metrics(result.doc)
                else:
                    entry.loc = count_loc(source)
        entries.append(entry)
    matrix = summarize({e.path: e.findings for e in entries})
    return CorpusReport(profile.name, repetitions, entries, matrix)


# -- differentials ---------------------------------------------------------------

DiffKey = tuple[str, int, int, Weakness]


@dataclass
class WeaknessDiff:
    common: set[DiffKey] = field(default_factory=set)
    only_a: set[DiffKey] = field(default_factory=set)
    only_b: set[DiffKey] = field(default_factory=set)


@dataclass
class ProfileDiff:
    profile_a: str
    profile_b: str
    per_weakness: dict[Weakness, WeaknessDiff]

    def rows(self) -> list[tuple[str, int, int, int]]:
        return [(w.value, len(d.common), len(d.only_a), len(d.only_b)) for w, d in self.per_weakness.items()]

    def to_text(self) -> str:
        head = ("weakness", "common", f"only {self.profile_a}", f"only {self.profile_b}")
        rows = [head] + [tuple(map(str, r)) for r in self.rows()]
        widths = [max(len(r[i]) for r in rows) for i in range(4)]
        return "\n".join("  ".join(c.ljust(widths[i]) if i == 0 else c.rjust(widths[i])
                                   for i, c in enumerate(r)) for r in rows) + "\n"

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["weakness", "common", f"only_{self.profile_a}", f"only_{self.profile_b}"])
        w.writerows(self.rows())
        return buf.getvalue()

    def to_dict(self) -> dict[str, Any]:
        def keys(s: set[DiffKey]) -> list[dict[str, Any]]:
            return [{"path": p, "start_byte": a, "end_byte": b} for p, a, b, _ in sorted(s)]
        return {"profile_a": self.profile_a, "profile_b": self.profile_b,
                "weaknesses": {w.value: {"common": keys(d.common), "only_a": keys(d.only_a),
                                         "only_b": keys(d.only_b)}
                               for w, d in self.per_weakness.items()}}


def finding_keys(report: CorpusReport) -> set[DiffKey]:
    return {(e.path, f.span.start_byte, f.span.end_byte, f.weakness) for e in report.workflows for f in e.findings}


def diff_reports(a: CorpusReport, b: CorpusReport) -> ProfileDiff:
    ka, kb = finding_keys(a), finding_keys(b)
    per = {}
    for w in Weakness:
        sa = {k for k in ka if k[3] is w}
        sb = {k for k in kb if k[3] is w}
        per[w] = WeaknessDiff(sa & sb, sa - sb, sb - sa)
    return ProfileDiff(a.profile, b.profile, per)


def diff_profiles(root: str | Path, profile_a: Profile, profile_b: Profile,
                  services: Services | None = None) -> ProfileDiff:
    return diff_reports(scan_corpus(root, profile_a, 1, services), scan_corpus(root, profile_b, 1, services))


# -- timing ----------------------------------------------------------------------


@dataclass
class TimingReport:
    profile: str
    rows: list[tuple[str, int, float]]  # (path, loc, median seconds), sorted by loc
    minimum: float
    median: float
    maximum: float
    p95: float

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["path", "loc", "median_seconds"])
        for path, loc, med in self.rows:
            w.writerow([path, loc, f"{med:.9f}"])
        return buf.getvalue()

    def summary(self) -> dict[str, float]:
        return {"min": self.minimum, "median": self.median, "max": self.maximum, "p95": self.p95}


def percentile(values: Sequence[float], q: float) -> float:
    """Nearest-rank percentile, ``q`` in (0, 100]."""
    ordered = sorted(values)
    rank = max(1, -(-len(ordered) * q // 100))
    return ordered[int(rank) - 1]


def timing_report(report: CorpusReport) -> TimingReport:
    rows = [(e.path, e.loc, statistics.median(e.timing_samples)) for e in report.workflows if e.timing_samples]
    rows.sort(key=lambda r: (r[1], r[0]))
    medians = [r[2] for r in rows]
    if not medians:
        return TimingReport(report.profile, [], 0.0, 0.0, 0.0, 0.0)
    return TimingReport(report.profile, rows, min(medians), statistics.median(medians), max(medians),
                        percentile(medians, 95))
