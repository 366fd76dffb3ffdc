"""Named detection postures, from conservative to permissive."""

from __future__ import annotations

import dataclasses
from dataclasses import dataclass, field
from typing import Any

OFFICIAL_OWNERS = ("actions", "github")

# Events whose payload can be shaped by someone outside the repository.
EXTERNALLY_TRIGGERABLE = frozenset({
    "pull_request", "pull_request_target", "issue_comment", "issues", "fork",
    "workflow_run", "discussion_comment",
})

# Events that run in the base repository context with a privileged token.
PRIVILEGED_TRIGGERS = frozenset({
    "pull_request_target", "workflow_run", "issue_comment", "issues", "discussion_comment",
})

DEFAULT_SECURITY_TOOLS = (
    "github/codeql-action",
    "ossf/scorecard-action",
    "aquasecurity/trivy-action",
    "anchore/scan-action",
    "snyk/actions",
    "returntocorp/semgrep-action",
    "semgrep/semgrep-action",
    "gitleaks/gitleaks-action",
    "trufflesecurity/trufflehog",
    "gitguardian/ggshield-action",
    "zricethezav/gitleaks-action",
    "step-security/harden-runner",
    "actions/dependency-review-action",
    "bridgecrewio/checkov-action",
    "sonarsource/sonarcloud-github-action",
    "sonarsource/sonarqube-scan-action",
    "zizmorcore/zizmor-action",
    "boostsecurityio/poutine-action",
    "rhysd/actionlint",
    "raven-actions/actionlint",
)

# Scanner binaries recognised when invoked directly from a run script.
DEFAULT_SECURITY_COMMANDS = (
    "codeql", "semgrep", "trivy", "grype", "snyk", "gitleaks", "trufflehog", "ggshield",
    "bandit", "gosec", "zizmor", "poutine", "actionlint", "checkov", "osv-scanner",
    "npm audit", "yarn audit", "pip-audit", "safety check", "cargo audit", "scorecard",
)


@dataclass(frozen=True)
class UdwOptions:
    official_exempt: bool = False
    skip_default_branch_refs: bool = False
    include_commented: bool = False
    include_reusable_workflows: bool = True
    include_docker_refs: bool = True
    official_owners: tuple[str, ...] = OFFICIAL_OWNERS


@dataclass(frozen=True)
class EpwOptions:
    flag_missing_top_level: bool = False
    externally_triggerable_only: bool = False
    job_level: bool = True


@dataclass(frozen=True)
class TmwOptions:
    flag_self_hosted: bool = True
    require_checkout_for_prt: bool = False


@dataclass(frozen=True)
class SewOptions:
    inherit_is_finding: bool = True
    env_file_write_is_finding: bool = True
    container_credentials: bool = True
    entropy_secrets: bool = True
    entropy_threshold: float = 3.5
    min_token_length: int = 16


@dataclass(frozen=True)
class AiwOptions:
    trusted_owners: tuple[str, ...] = ()
    require_checksum_after_download: bool = True


@dataclass(frozen=True)
class HgwOptions:
    enabled: bool = True
    security_tool_list: tuple[str, ...] = DEFAULT_SECURITY_TOOLS
    security_commands: tuple[str, ...] = DEFAULT_SECURITY_COMMANDS


@dataclass(frozen=True)
class IwOptions:
    deprecated_commands: bool = True
    env_path_sinks: bool = True
    conditional_untrusted: bool = False
    legacy_output_commands: bool = False
    untrusted_contexts: tuple[str, ...] = ()


@dataclass(frozen=True)
class CfwOptions:
    forced_run: bool = True


@dataclass(frozen=True)
class KvcwOptions:
    report_unresolved: bool = False


@dataclass(frozen=True)
class Profile:
    name: str
    udw: UdwOptions = field(default_factory=UdwOptions)
    epw: EpwOptions = field(default_factory=EpwOptions)
    tmw: TmwOptions = field(default_factory=TmwOptions)
    sew: SewOptions = field(default_factory=SewOptions)
    aiw: AiwOptions = field(default_factory=AiwOptions)
    hgw: HgwOptions = field(default_factory=HgwOptions)
    iw: IwOptions = field(default_factory=IwOptions)
    cfw: CfwOptions = field(default_factory=CfwOptions)
    kvcw: KvcwOptions = field(default_factory=KvcwOptions)

    def to_dict(self) -> dict[str, Any]:
        return dataclasses.asdict(self)

    def with_overrides(self, overrides: dict[str, Any], name: str | None = None) -> Profile:
        """Return a copy with ``{group: {option: value}}`` overrides applied.

        Unknown groups or options raise ``KeyError`` naming the offender.
        """
        changes: dict[str, Any] = {}
        for group, values in overrides.items():
            if group == "name" or group not in _GROUPS:
                raise KeyError(f"unknown profile group {group!r}")
            current = getattr(self, group)
            if not isinstance(values, dict):
                raise KeyError(f"profile group {group!r} must be a mapping")
            known = {f.name: f for f in dataclasses.fields(current)}
            coerced = {}
            for key, value in values.items():
                if key not in known:
                    raise KeyError(f"unknown option {group}.{key}")
                default = getattr(current, key)
                if isinstance(default, tuple):
                    value = tuple(value)
                elif isinstance(default, bool):
                    if not isinstance(value, bool):
                        raise KeyError(f"option {group}.{key} must be true or false")
                elif isinstance(default, (int, float)):
                    value = type(default)(value)
                coerced[key] = value
            changes[group] = dataclasses.replace(current, **coerced)
        return dataclasses.replace(self, name=name or self.name, **changes)


_GROUPS = {f.name for f in dataclasses.fields(Profile)} - {"name"}

CONSERVATIVE = Profile(
    name="conservative",
    udw=UdwOptions(official_exempt=True, skip_default_branch_refs=True, include_commented=False,
                   include_reusable_workflows=False, include_docker_refs=False),
    epw=EpwOptions(flag_missing_top_level=False, externally_triggerable_only=True, job_level=False),
    tmw=TmwOptions(flag_self_hosted=True, require_checkout_for_prt=True),
    sew=SewOptions(container_credentials=False, entropy_secrets=False),
    aiw=AiwOptions(require_checksum_after_download=False),
    hgw=HgwOptions(enabled=False),
    iw=IwOptions(env_path_sinks=False),
    cfw=CfwOptions(forced_run=False),
)

BALANCED = Profile(name="balanced")

PERMISSIVE = Profile(
    name="permissive",
    udw=UdwOptions(include_commented=True),
    epw=EpwOptions(flag_missing_top_level=True),
    iw=IwOptions(conditional_untrusted=True, legacy_output_commands=True),
    kvcw=KvcwOptions(report_unresolved=True),
)

BUILTIN_PROFILES = {p.name: p for p in (CONSERVATIVE, BALANCED, PERMISSIVE)}


def get_profile(name: str) -> Profile:
    try:
        return BUILTIN_PROFILES[name]
    except KeyError:
        raise KeyError(f"unknown profile {name!r}; choose from {', '.join(BUILTIN_PROFILES)}") from None
