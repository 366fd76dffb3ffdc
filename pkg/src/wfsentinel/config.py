"""Configuration file loading with strict keys."""

from __future__ import annotations

import dataclasses
import re
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any

import yaml

from .findings import Severity
from .profiles import Profile, get_profile

DEFAULT_CONFIG_NAME = "wf-sentinel.yml"


class ConfigError(ValueError):
    pass


@dataclass
class Config:
    profile: str = "balanced"
    profile_overrides: dict[str, dict[str, Any]] = field(default_factory=dict)
    ignore_rules: list[str] = field(default_factory=list)
    ignore_paths: list[str] = field(default_factory=list)
    trusted_owners: list[str] | None = None
    official_owners: list[str] | None = None
    untrusted_contexts: list[str] = field(default_factory=list)
    security_tools: list[str] | None = None
    advisory_fixture: Path | None = None
    pin_fixture: Path | None = None
    offline: bool = True
    entropy_threshold: float | None = None
    min_token_length: int | None = None
    fail_severity: Severity = Severity.MEDIUM
    source: Path | None = None

    def effective_profile(self, name: str | None = None) -> Profile:
        """Built-in profile ``name`` (or the configured one) with config settings applied."""
        base = get_profile(name or self.profile)
        try:
            profile = base.with_overrides(self.profile_overrides, name=base.name)
        except KeyError as exc:
            raise ConfigError(f"profile override: {exc.args[0]}") from None
        changes: dict[str, Any] = {}
        if self.trusted_owners is not None:
            changes["aiw"] = dataclasses.replace(profile.aiw, trusted_owners=tuple(self.trusted_owners))
        if self.official_owners is not None:
            changes["udw"] = dataclasses.replace(profile.udw, official_owners=tuple(self.official_owners))
        if self.untrusted_contexts:
            changes["iw"] = dataclasses.replace(
                profile.iw, untrusted_contexts=profile.iw.untrusted_contexts + tuple(self.untrusted_contexts))
        if self.security_tools is not None:
            changes["hgw"] = dataclasses.replace(profile.hgw, security_tool_list=tuple(self.security_tools))
        sew = {}
        if self.entropy_threshold is not None:
            sew["entropy_threshold"] = self.entropy_threshold
        if self.min_token_length is not None:
            sew["min_token_length"] = self.min_token_length
        if sew:
            changes["sew"] = dataclasses.replace(profile.sew, **sew)
        return dataclasses.replace(profile, **changes)


_CAMEL_RE = re.compile(r"(?<!^)(?=[A-Z])")


def snake(key: str) -> str:
    """``ignoreRules`` and ``ignore-rules`` both become ``ignore_rules``."""
    return _CAMEL_RE.sub("_", key).replace("-", "_").lower()


_LIST_KEYS = ("ignore_rules", "ignore_paths", "trusted_owners", "official_owners", "untrusted_contexts",
              "security_tools")
_KNOWN_KEYS = frozenset(_LIST_KEYS) | {"profile", "advisory_fixture", "pin_fixture", "offline",
                                      "entropy_threshold", "min_token_length", "fail_severity"}


def _string_list(key: str, value: Any) -> list[str]:
    if not isinstance(value, list) or not all(isinstance(v, str) for v in value):
        raise ConfigError(f"{key} must be a list of strings")
    return list(value)


def parse_config(data: Any, base_dir: Path | None = None, source: Path | None = None) -> Config:
    if data is None:
        data = {}
    if not isinstance(data, dict):
        raise ConfigError("configuration must be a mapping")
    cfg = Config(source=source)
    for raw_key, value in data.items():
        key = snake(str(raw_key))
        if key not in _KNOWN_KEYS:
            raise ConfigError(f"unknown configuration key {raw_key!r}")
        if key in _LIST_KEYS:
            setattr(cfg, key, _string_list(raw_key, value))
        elif key == "profile":
            _profile(cfg, value)
        elif key in ("advisory_fixture", "pin_fixture"):
            if not isinstance(value, str):
                raise ConfigError(f"{raw_key} must be a path")
            path = Path(value)
            setattr(cfg, key, path if path.is_absolute() or base_dir is None else base_dir / path)
        elif key == "offline":
            if not isinstance(value, bool):
                raise ConfigError("offline must be true or false")
            cfg.offline = value
        elif key == "entropy_threshold":
            if not isinstance(value, (int, float)) or isinstance(value, bool) or value < 0:
                raise ConfigError("entropy_threshold must be a non-negative number")
            cfg.entropy_threshold = float(value)
        elif key == "min_token_length":
            if not isinstance(value, int) or isinstance(value, bool) or value < 1:
                raise ConfigError("min_token_length must be a positive integer")
            cfg.min_token_length = value
        elif key == "fail_severity":
            try:
                cfg.fail_severity = Severity(str(value).lower())
            except ValueError:
                raise ConfigError(f"fail_severity must be one of {', '.join(s.value for s in Severity)}") from None
    cfg.effective_profile()  # surface bad profile settings at load time
    return cfg


def _profile(cfg: Config, value: Any) -> None:
    if isinstance(value, str):
        cfg.profile = value
    elif isinstance(value, dict):
        extra = set(value) - {"base", "overrides"}
        if extra:
            raise ConfigError(f"unknown key {sorted(extra)[0]!r} in profile")
        cfg.profile = value.get("base", "balanced")
        overrides = value.get("overrides") or {}
        if not isinstance(overrides, dict):
            raise ConfigError("profile overrides must be a mapping")
        normalized = {}
        for group, opts in overrides.items():
            if not isinstance(opts, dict):
                raise ConfigError(f"profile override {group!r} must be a mapping")
            normalized[snake(str(group))] = {snake(str(k)): v for k, v in opts.items()}
        cfg.profile_overrides = normalized
    else:
        raise ConfigError("profile must be a name or a mapping with base/overrides")
    try:
        get_profile(cfg.profile)
    except KeyError as exc:
        raise ConfigError(exc.args[0]) from None


def load_config(path: str | Path | None = None, cwd: str | Path | None = None) -> Config:
    """Load ``path``, or ``./wf-sentinel.yml`` when present, or all defaults."""
    if path is None:
        candidate = Path(cwd or ".") / DEFAULT_CONFIG_NAME
        if not candidate.is_file():
            return Config()
        path = candidate
    path = Path(path)
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as exc:
        raise ConfigError(f"cannot read {path}: {exc.strerror or exc}") from None
    try:
        data = yaml.safe_load(text)
    except yaml.YAMLError as exc:
        raise ConfigError(f"{path}: invalid YAML: {exc}") from None
    return parse_config(data, path.parent, path)
