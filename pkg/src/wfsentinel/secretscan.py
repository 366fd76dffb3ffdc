"""Hardcoded-secret candidates: provider token shapes and high-entropy sensitive values."""

from __future__ import annotations

import json
import math
import re
from collections import Counter
from dataclasses import dataclass
from functools import lru_cache
from importlib import resources
from typing import Sequence

from .expressions import iter_delimited
from .model import Scalar, SourceSpan, WorkflowDoc

DEFAULT_THRESHOLD = 3.5
DEFAULT_MIN_LENGTH = 16

SENSITIVE_NAME_RE = re.compile(
    r"(?i)(token|secret|passw(?:or)?d|passwd|pwd|api[_-]?key|apikey|access[_-]?key|private[_-]?key"
    r"|client[_-]?secret|credentials?|auth)")
_ASSIGN_RE = re.compile(r"""(?:^|[\s;])(?:export\s+)?([A-Za-z_][A-Za-z0-9_]*)=(["']?)([^\s"'$`;|&]+)\2""")


@dataclass(frozen=True)
class SecretPattern:
    id: str
    regex: re.Pattern


@dataclass(frozen=True)
class SecretCandidate:
    span: SourceSpan
    token: str
    entropy: float
    matched_pattern: str | None = None
    assigned_name: str | None = None


def shannon_entropy(token: str) -> float:
    """Bits per character of ``token``'s character distribution."""
    if not token:
        return 0.0
    n = len(token)
    return -sum((c / n) * math.log2(c / n) for c in Counter(token).values()) + 0.0


@lru_cache(maxsize=1)
def bundled_patterns() -> tuple[SecretPattern, ...]:
    text = resources.files("wfsentinel").joinpath("data/secret_patterns.json").read_text(encoding="utf-8")
    return load_patterns(json.loads(text))


def load_patterns(records: Sequence[dict]) -> tuple[SecretPattern, ...]:
    return tuple(SecretPattern(r["id"], re.compile(r["regex"])) for r in records)


def _mask_expressions(text: str) -> str:
    chars = list(text)
    for start, end, _ in iter_delimited(text):
        chars[start:end] = " " * (end - start)
    return "".join(chars)


def _locate(doc: WorkflowDoc, scalar: Scalar, token: str) -> SourceSpan:
    return doc.find_in(scalar.span, token) or scalar.span


def detect_candidate_secrets(doc: WorkflowDoc, threshold: float = DEFAULT_THRESHOLD,
                             min_length: int = DEFAULT_MIN_LENGTH,
                             patterns: Sequence[SecretPattern] | None = None) -> list[SecretCandidate]:
    if patterns is None:
        patterns = bundled_patterns()
    found: dict[tuple[int, int], SecretCandidate] = {}

    def add(cand: SecretCandidate) -> None:
        key = (cand.span.start_byte, cand.span.end_byte)
        # A pattern hit is stronger evidence than an entropy hit on the same bytes.
        if key not in found or (cand.matched_pattern and not found[key].matched_pattern):
            found[key] = cand

    for scalar in doc.scalars:
        masked = _mask_expressions(scalar.value)
        name = scalar.key
        for pat in patterns:
            for m in pat.regex.finditer(masked):
                token = m.group(0)
                if len(token) >= min_length:
                    add(SecretCandidate(_locate(doc, scalar, token), token, shannon_entropy(token),
                                        pat.id, name))
        if name and SENSITIVE_NAME_RE.search(name) and "${{" not in scalar.value:
            token = scalar.value.strip()
            if _is_secret_like(token, threshold, min_length):
                add(SecretCandidate(_locate(doc, scalar, token), token, shannon_entropy(token), None, name))
        if scalar.path[-1:] == ("run",):
            for m in _ASSIGN_RE.finditer(masked):
                var, token = m.group(1), m.group(3)
                if SENSITIVE_NAME_RE.search(var) and _is_secret_like(token, threshold, min_length):
                    add(SecretCandidate(_locate(doc, scalar, token), token, shannon_entropy(token), None, var))
    return sorted(found.values(), key=lambda c: (c.span.start_byte, c.span.end_byte))


def _is_secret_like(token: str, threshold: float, min_length: int) -> bool:
    return (len(token) >= min_length and not any(ch.isspace() for ch in token)
            and shannon_entropy(token) >= threshold)
