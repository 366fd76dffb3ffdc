"""Scan workflow files end to end: discover, parse, detect, filter."""

from __future__ import annotations

import fnmatch
import os
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Sequence

from .detectors import run_all
from .findings import Finding
from .model import WorkflowDoc, WorkflowError, parse_workflow
from .profiles import Profile
from .services import Services

WORKFLOW_SUFFIXES = (".yml", ".yaml")


@dataclass
class ScanResult:
    path: str
    findings: list[Finding] = field(default_factory=list)
    diagnostics: list[str] = field(default_factory=list)
    doc: WorkflowDoc | None = None
    error: str | None = None
    duration: float = 0.0


def discover(paths: Iterable[str | Path], ignore_paths: Sequence[str] = ()) -> list[Path]:
    """Workflow files named directly or found under directories.

    A directory containing ``.github/workflows`` is treated as a repository
    checkout and only that folder is searched; a directory holding repository
    checkouts is searched the same way per checkout.
    """
    found: list[Path] = []
    for p in map(Path, paths):
        if p.is_file():
            found.append(p)
        elif p.is_dir():
            found.extend(_discover_dir(p))
        else:
            raise FileNotFoundError(f"no such file or directory: {p}")
    unique = sorted(dict.fromkeys(found), key=lambda x: x.as_posix())
    return [f for f in unique if not any(fnmatch.fnmatch(f.as_posix(), g) for g in ignore_paths)]


def _discover_dir(root: Path) -> list[Path]:
    wf = root / ".github" / "workflows"
    if wf.is_dir():
        return _yaml_files(wf)
    repos = [d for d in sorted(root.iterdir()) if (d / ".github" / "workflows").is_dir()]
    if repos:
        return [f for d in repos for f in _yaml_files(d / ".github" / "workflows")]
    return _yaml_files(root)


def _yaml_files(root: Path) -> list[Path]:
    return sorted((p for p in root.rglob("*") if p.is_file() and p.suffix.lower() in WORKFLOW_SUFFIXES),
                  key=lambda x: x.as_posix())


def rule_ignored(rule_id: str, ignore_rules: Sequence[str]) -> bool:
    return any(fnmatch.fnmatchcase(rule_id, g) for g in ignore_rules)


def scan_source(source: bytes, path: str, profile: Profile, services: Services | None = None,
                ignore_rules: Sequence[str] = ()) -> ScanResult:
    result = ScanResult(path)
    t0 = time.perf_counter()
    try:
        doc = parse_workflow(source, path)
    except WorkflowError as exc:
        result.error = str(exc)
    else:
        result.doc = doc
        findings = run_all(doc, profile, services, result.diagnostics)
        result.findings = [f for f in findings if not rule_ignored(f.rule_id, ignore_rules)]
    result.duration = time.perf_counter() - t0
    return result


def scan_file(path: str | Path, profile: Profile, services: Services | None = None,
              ignore_rules: Sequence[str] = ()) -> ScanResult:
    try:
        data = Path(path).read_bytes()
    except OSError as exc:
        return ScanResult(str(path), error=f"{path}: {exc.strerror or exc}")
    return scan_source(data, str(path), profile, services, ignore_rules)


def scan_paths(files: Sequence[str | Path], profile: Profile, services: Services | None = None,
               ignore_rules: Sequence[str] = (), jobs: int | None = None) -> list[ScanResult]:
    """Scan files concurrently; results come back in input order."""
    services = services or Services.offline()
    workers = max(1, jobs or os.cpu_count() or 1)
    if workers == 1 or len(files) <= 1:
        return [scan_file(f, profile, services, ignore_rules) for f in files]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(lambda f: scan_file(f, profile, services, ignore_rules), files))
