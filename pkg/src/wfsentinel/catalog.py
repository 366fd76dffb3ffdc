"""The rule catalog: every rule id, its weakness class and when it is enabled."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

from .findings import Confidence, Severity, Weakness
from .profiles import BUILTIN_PROFILES, Profile


class UnknownRuleError(KeyError):
    pass


@dataclass(frozen=True)
class Rule:
    rule_id: str
    weakness: Weakness
    severity: Severity
    confidence: Confidence
    title: str
    rationale: str
    enabled: Callable[[Profile], bool] = lambda p: True

    @property
    def cwe(self) -> tuple[str, ...]:
        return self.weakness.cwe

    def profiles(self) -> list[str]:
        return [name for name, p in BUILTIN_PROFILES.items() if self.enabled(p)]

    def to_dict(self) -> dict:
        return {
            "rule_id": self.rule_id,
            "weakness": self.weakness.value,
            "cwe": list(self.cwe),
            "severity": self.severity.value,
            "confidence": self.confidence.value,
            "title": self.title,
            "rationale": self.rationale,
            "profiles": self.profiles(),
        }


S, C, W = Severity, Confidence, Weakness

RULES: tuple[Rule, ...] = (
    # unpinned dependencies
    Rule("udw.unpinned-uses", W.UDW, S.MEDIUM, C.HIGH,
         "Action referenced by a mutable tag or branch",
         "A tag or branch can be moved to different code after review; only a full commit SHA "
         "identifies immutable content."),
    Rule("udw.unpinned-reusable-workflow", W.UDW, S.MEDIUM, C.HIGH,
         "Reusable workflow referenced by a mutable tag or branch",
         "A called workflow runs with the caller's secrets, so a moved ref changes what runs with them.",
         lambda p: p.udw.include_reusable_workflows),
    Rule("udw.unpinned-docker", W.UDW, S.MEDIUM, C.HIGH,
         "Container image referenced without a digest",
         "Image tags are mutable; a sha256 digest fixes the exact image that executes.",
         lambda p: p.udw.include_docker_refs),
    Rule("udw.commented-uses", W.UDW, S.LOW, C.LOW,
         "Commented-out action reference is unpinned",
         "Commented references tend to be re-enabled verbatim; pinning them now avoids reintroducing a "
         "floating dependency.",
         lambda p: p.udw.include_commented),
    # trigger misuse
    Rule("tmw.pull-request-target", W.TMW, S.HIGH, C.MEDIUM,
         "Workflow triggered by pull_request_target",
         "pull_request_target runs in the base repository with a privileged token and secrets even for "
         "pull requests from forks."),
    Rule("tmw.workflow-run", W.TMW, S.HIGH, C.MEDIUM,
         "Workflow triggered by workflow_run",
         "workflow_run executes with base repository privileges after a possibly untrusted upstream run."),
    Rule("tmw.untrusted-checkout", W.TMW, S.HIGH, C.HIGH,
         "Privileged trigger checks out the pull request head",
         "Checking out attacker-controlled code in a privileged context lets it run with the base "
         "repository token and secrets."),
    Rule("tmw.self-hosted-runner", W.TMW, S.MEDIUM, C.MEDIUM,
         "Externally triggerable job on a self-hosted runner",
         "Self-hosted runners persist between jobs, so outside contributors can plant state on them.",
         lambda p: p.tmw.flag_self_hosted),
    # injection
    Rule("iw.untrusted-expression", W.IW, S.HIGH, C.HIGH,
         "Untrusted context expanded into a script",
         "Expressions are substituted textually before the shell runs, so attacker text becomes code."),
    Rule("iw.conditional-expression", W.IW, S.LOW, C.LOW,
         "Context of unknown trust expanded into a script",
         "Values such as step outputs may carry attacker data from earlier steps.",
         lambda p: p.iw.conditional_untrusted),
    Rule("iw.env-path-sink", W.IW, S.HIGH, C.MEDIUM,
         "Expression written to GITHUB_ENV or GITHUB_PATH",
         "Variables and PATH entries written here affect every later step of the job.",
         lambda p: p.iw.env_path_sinks),
    Rule("iw.deprecated-command", W.IW, S.HIGH, C.HIGH,
         "Deprecated set-env or add-path workflow command",
         "Stdout-parsed commands let any printed text change the environment of later steps.",
         lambda p: p.iw.deprecated_commands),
    Rule("iw.legacy-output-command", W.IW, S.LOW, C.HIGH,
         "Deprecated set-output or save-state workflow command",
         "Stdout-parsed output commands can be spoofed by printed attacker text.",
         lambda p: p.iw.legacy_output_commands),
    # secrets exposure
    Rule("sew.secrets-inherit", W.SEW, S.MEDIUM, C.HIGH,
         "All secrets passed to a reusable workflow",
         "secrets: inherit hands every repository secret to the callee instead of the ones it needs.",
         lambda p: p.sew.inherit_is_finding),
    Rule("sew.secret-to-env-file", W.SEW, S.HIGH, C.HIGH,
         "Secret written to GITHUB_ENV or GITHUB_OUTPUT",
         "Values written there escape log masking scope and reach every later step or job.",
         lambda p: p.sew.env_file_write_is_finding),
    Rule("sew.container-credentials", W.SEW, S.MEDIUM, C.MEDIUM,
         "Credentials inside a container or service definition",
         "Hardcoded registry passwords are readable by anyone with repository read access.",
         lambda p: p.sew.container_credentials),
    Rule("sew.hardcoded-secret", W.SEW, S.HIGH, C.HIGH,
         "Credential with a known provider format in the workflow",
         "Anything committed to the repository is visible to every reader and stays in history."),
    Rule("sew.high-entropy-secret", W.SEW, S.MEDIUM, C.MEDIUM,
         "High-entropy value assigned to a sensitive name",
         "Random-looking values under names like token or password are usually real credentials.",
         lambda p: p.sew.entropy_secrets),
    # excessive permissions
    Rule("epw.write-permissions", W.EPW, S.MEDIUM, C.HIGH,
         "Token granted write scopes",
         "Every write scope widens what a compromised step can do with GITHUB_TOKEN."),
    Rule("epw.missing-permissions", W.EPW, S.LOW, C.MEDIUM,
         "No top-level permissions block",
         "Without a declaration the token gets the repository default, which may be read-write.",
         lambda p: p.epw.flag_missing_top_level),
    # control flow
    Rule("cfw.always-true-condition", W.CFW, S.MEDIUM, C.HIGH,
         "Condition is always true",
         "Text around an expression makes the whole condition a non-empty string, which is truthy."),
    Rule("cfw.forced-run", W.CFW, S.LOW, C.MEDIUM,
         "Condition forces the step to run after failure or cancellation",
         "always() keeps running even when earlier gates failed, including after cancellation.",
         lambda p: p.cfw.forced_run),
    # runner compatibility
    Rule("grcw.deprecated-action", W.GRCW, S.MEDIUM, C.HIGH,
         "Action version depends on a retired runtime",
         "Old major versions run on Node versions the hosted runners no longer provide."),
    Rule("grcw.undefined-job", W.GRCW, S.MEDIUM, C.HIGH,
         "Reference to a job that is not defined or not a dependency",
         "needs entries and needs.* contexts only resolve for declared upstream jobs."),
    Rule("grcw.unknown-context", W.GRCW, S.LOW, C.MEDIUM,
         "Expression uses an unknown context",
         "Unknown contexts fail expression evaluation at run time."),
    Rule("grcw.invalid-expression", W.GRCW, S.LOW, C.HIGH,
         "Malformed expression",
         "Syntax errors in expressions fail the workflow when it is evaluated."),
    Rule("grcw.unknown-key", W.GRCW, S.LOW, C.HIGH,
         "Key not recognised by the workflow schema",
         "Misspelled keys are ignored or rejected by the runner, so the intended setting never applies."),
    Rule("grcw.duplicate-key", W.GRCW, S.LOW, C.HIGH,
         "Duplicate mapping key",
         "Only the last value of a duplicated key survives, silently discarding the others."),
    Rule("grcw.invalid-structure", W.GRCW, S.MEDIUM, C.HIGH,
         "Structurally invalid workflow",
         "The runner rejects workflows that miss required parts or use invalid values."),
    # hardening gap
    Rule("hgw.no-security-tooling", W.HGW, S.LOW, C.MEDIUM,
         "No security tooling in the workflow",
         "Pipelines without any scanner miss a cheap chance to catch vulnerable changes.",
         lambda p: p.hgw.enabled),
    # artifact integrity
    Rule("aiw.unverified-artifact", W.AIW, S.MEDIUM, C.MEDIUM,
         "Downloaded artifact used without verification",
         "Artifacts can be replaced by other runs; a checksum or signature check ties them to a producer.",
         lambda p: p.aiw.require_checksum_after_download),
    Rule("aiw.untrusted-checkout-exec", W.AIW, S.HIGH, C.MEDIUM,
         "Untrusted checkout followed by execution",
         "Building or running code from an untrusted ref in a privileged job executes unreviewed code."),
    # known vulnerable components
    Rule("kvcw.known-vulnerable-action", W.KVCW, S.MEDIUM, C.HIGH,
         "Action version has a published advisory",
         "The referenced version is inside an advisory's affected range."),
    Rule("kvcw.unresolved-version", W.KVCW, S.LOW, C.LOW,
         "Action version could not be matched against advisories",
         "Branches and unmapped SHAs have no version, so advisory coverage is unknown.",
         lambda p: p.kvcw.report_unresolved),
)

CATALOG: dict[str, Rule] = {r.rule_id: r for r in RULES}


def get_rule(rule_id: str) -> Rule:
    try:
        return CATALOG[rule_id]
    except KeyError:
        raise UnknownRuleError(rule_id) from None


def map_rule_to_weakness(rule_id: str) -> tuple[Weakness, tuple[str, ...]]:
    rule = get_rule(rule_id)
    return rule.weakness, rule.cwe


def enabled_rules(profile: Profile) -> set[str]:
    return {r.rule_id for r in RULES if r.enabled(profile)}
