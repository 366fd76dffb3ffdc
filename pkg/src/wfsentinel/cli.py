"""Command-line entry point."""

from __future__ import annotations

import argparse
import difflib
import json
import logging
import os
import sys
from pathlib import Path
from typing import Sequence

from . import __version__
from .catalog import CATALOG, RULES, UnknownRuleError, get_rule
from .config import Config, ConfigError, load_config
from .findings import Finding, Severity
from .model import WorkflowError, load_workflow
from .pinning import LiveForge, apply_edits, plan_pin_fixes
from .profiles import BUILTIN_PROFILES
from .reporting import ScanMeta, emit_json, emit_sarif, emit_text, matrix_csv, matrix_text
from .scan import discover, scan_paths
from .services import Services

EXIT_OK, EXIT_FINDINGS, EXIT_USAGE, EXIT_INTERNAL = 0, 1, 2, 3

log = logging.getLogger("wfsentinel")


class UsageError(Exception):
    pass


def _common(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--profile", choices=sorted(BUILTIN_PROFILES), help="detection profile (default: balanced)")
    parser.add_argument("--config", type=Path, help="configuration file (default: ./wf-sentinel.yml if present)")
    net = parser.add_mutually_exclusive_group()
    net.add_argument("--offline", dest="online", action="store_false", default=None,
                     help="use bundled and fixture data only (default)")
    net.add_argument("--online", dest="online", action="store_true",
                     help="query the forge and the advisory service")
    parser.add_argument("--advisory-fixture", type=Path, help="OSV-format advisory file for offline mode")
    parser.add_argument("--pin-fixture", type=Path, help='JSON map "owner/repo@ref" -> sha for offline mode')
    parser.add_argument("--jobs", type=int, default=os.cpu_count() or 1, help="parallel workers")
    parser.add_argument("-v", "--verbose", action="store_true", help="debug logging on stderr")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="wf-sentinel", description="Scan GitHub Actions workflows for security weaknesses.")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", metavar="COMMAND")
    sub.required = True

    p = sub.add_parser("scan", help="scan workflow files or directories")
    p.add_argument("paths", nargs="+")
    p.add_argument("--format", choices=("text", "json", "sarif"), default="text")
    p.add_argument("--fail-on", type=Severity, choices=list(Severity), metavar="SEVERITY",
                   help="lowest severity that makes the exit status 1 (default: from config, else medium)")
    p.add_argument("--color", action="store_true", help="colour severities in text output")
    p.add_argument("--timing", action="store_true", help="include per-file scan time in JSON output")
    _common(p)

    p = sub.add_parser("fix", help="pin floating action refs to commit SHAs in place")
    p.add_argument("paths", nargs="+")
    p.add_argument("--dry-run", action="store_true", help="print a unified diff instead of writing")
    _common(p)

    p = sub.add_parser("corpus", help="scan a corpus and write matrices, timings and figures")
    p.add_argument("root", type=Path)
    p.add_argument("--repeat", type=int, default=2, help="timing repetitions per workflow (default 2)")
    p.add_argument("--out-dir", type=Path, default=Path("wf-sentinel-report"))
    p.add_argument("--format", choices=("text", "json"), default="text")
    p.add_argument("--no-plots", action="store_true", help="skip the PNG figures")
    _common(p)

    p = sub.add_parser("diff", help="compare two profiles over a corpus")
    p.add_argument("root", type=Path)
    p.add_argument("--profiles", required=True, help="two profile names, comma separated")
    p.add_argument("--format", choices=("text", "json", "csv"), default="text")
    _common(p)

    p = sub.add_parser("explain", help="describe one rule")
    p.add_argument("rule_id")
    p.add_argument("--format", choices=("text", "json"), default="text")

    p = sub.add_parser("rules", help="list the rule catalog")
    p.add_argument("--format", choices=("text", "json"), default="text")
    return parser


def _config(args: argparse.Namespace) -> Config:
    cfg = load_config(args.config)
    if args.online is not None:
        cfg.offline = not args.online
    if args.advisory_fixture:
        cfg.advisory_fixture = args.advisory_fixture
    if args.pin_fixture:
        cfg.pin_fixture = args.pin_fixture
    return cfg


def _services(cfg: Config) -> Services:
    if cfg.offline:
        try:
            return Services.offline(cfg.advisory_fixture, cfg.pin_fixture)
        except (OSError, ValueError) as exc:
            raise ConfigError(f"cannot load fixture: {exc}") from None
    return Services.live()


def _out(text: str | bytes) -> None:
    if isinstance(text, bytes):
        sys.stdout.buffer.write(text)
    else:
        sys.stdout.write(text)
    sys.stdout.flush()


def _warn(msg: str) -> None:
    print(f"wf-sentinel: {msg}", file=sys.stderr)


def cmd_scan(args: argparse.Namespace) -> int:
    cfg = _config(args)
    profile = cfg.effective_profile(args.profile)
    files = discover(args.paths, cfg.ignore_paths)
    if not files:
        raise UsageError("no workflow files found")
    results = scan_paths(files, profile, _services(cfg), cfg.ignore_rules, args.jobs)
    findings: list[Finding] = []
    diagnostics: list[str] = []
    for r in results:
        findings.extend(r.findings)
        diagnostics.extend(r.diagnostics)
        if r.error:
            diagnostics.append(f"not scanned: {r.error}")
    for d in diagnostics:
        _warn(d)
    scanned = [r for r in results if r.error is None]
    meta = ScanMeta(profile.name, [r.path for r in results],
                    timing={r.path: r.duration for r in results} if args.timing else None,
                    diagnostics=diagnostics)
    if args.format == "json":
        _out(emit_json(findings, meta))
    elif args.format == "sarif":
        _out(emit_sarif(findings, meta))
    else:
        sources = {r.path: r.doc.source for r in scanned}
        _out(emit_text(findings, sources, color=args.color))
    threshold = args.fail_on or cfg.fail_severity
    return EXIT_FINDINGS if any(f.severity.at_least(threshold) for f in findings) else EXIT_OK


def cmd_fix(args: argparse.Namespace) -> int:
    cfg = _config(args)
    profile = cfg.effective_profile(args.profile)
    services = _services(cfg)
    if services.pins is None:
        raise UsageError("no resolution source; pass --pin-fixture or --online")
    files = discover(args.paths, cfg.ignore_paths)
    status = EXIT_OK
    for result in scan_paths(files, profile, services, cfg.ignore_rules, args.jobs):
        if result.error:
            _warn(f"not fixed: {result.error}")
            status = EXIT_FINDINGS
            continue
        doc = result.doc
        plan = plan_pin_fixes(doc, result.findings, services.pins)
        for finding, reason in plan.unresolved:
            _warn(f"{doc.path}:{finding.line}: cannot pin ({reason}): {finding.message}")
        if not plan.edits:
            continue
        fixed = apply_edits(doc.source, plan.edits)
        if args.dry_run:
            diff = difflib.unified_diff(
                doc.source.decode("utf-8").splitlines(keepends=True),
                fixed.decode("utf-8").splitlines(keepends=True),
                fromfile=f"a/{doc.path}", tofile=f"b/{doc.path}")
            _out("".join(diff))
        else:
            Path(doc.path).write_bytes(fixed)
            _warn(f"{doc.path}: pinned {len(plan.edits)} reference(s)")
    if isinstance(services.pins, LiveForge):
        services.pins.save_cache()
    return status


def cmd_corpus(args: argparse.Namespace) -> int:
    from .corpus import scan_corpus, timing_report

    cfg = _config(args)
    if args.repeat < 1:
        raise UsageError("--repeat must be at least 1")
    if not args.root.is_dir():
        raise UsageError(f"not a directory: {args.root}")
    profile = cfg.effective_profile(args.profile)
    report = scan_corpus(args.root, profile, args.repeat, _services(cfg), cfg.ignore_rules)
    timing = timing_report(report)
    out = args.out_dir
    out.mkdir(parents=True, exist_ok=True)
    columns = {profile.name: report.matrix}
    (out / "report.json").write_text(report.to_json(), encoding="utf-8")
    (out / "matrix.csv").write_text(matrix_csv(columns), encoding="utf-8")
    (out / "matrix.txt").write_text(matrix_text(columns), encoding="utf-8")
    (out / "timing.csv").write_text(timing.to_csv(), encoding="utf-8")
    if not args.no_plots:
        from .plots import plot_matrix, plot_timing
        plot_matrix(columns, out / "matrix.png")
        plot_timing({profile.name: timing}, out / "timing.png")
    for e in report.workflows:
        if e.error:
            _warn(f"not scanned: {e.error}")
    if args.format == "json":
        _out(report.to_json())
    else:
        s = timing.summary()
        _out(matrix_text(columns) + f"\n{len(report.workflows)} workflows; median scan "
             f"{s['median'] * 1000:.2f} ms (min {s['min'] * 1000:.2f}, max {s['max'] * 1000:.2f})\n")
    _warn(f"wrote report to {out}")
    return EXIT_OK


def cmd_diff(args: argparse.Namespace) -> int:
    from .corpus import diff_profiles

    cfg = _config(args)
    names = [n.strip() for n in args.profiles.split(",") if n.strip()]
    if len(names) != 2:
        raise UsageError("--profiles needs exactly two names, e.g. conservative,permissive")
    if not args.root.is_dir():
        raise UsageError(f"not a directory: {args.root}")
    a, b = (cfg.effective_profile(n) for n in names)
    diff = diff_profiles(args.root, a, b, _services(cfg))
    if args.format == "json":
        _out(json.dumps(diff.to_dict(), indent=2, sort_keys=True) + "\n")
    elif args.format == "csv":
        _out(diff.to_csv())
    else:
        _out(diff.to_text())
    return EXIT_OK


def cmd_explain(args: argparse.Namespace) -> int:
    rule = get_rule(args.rule_id)
    if args.format == "json":
        _out(json.dumps(rule.to_dict(), indent=2) + "\n")
        return EXIT_OK
    _out(f"{rule.rule_id}: {rule.title}\n"
         f"  weakness:   {rule.weakness.value} ({rule.weakness.title})\n"
         f"  cwe:        {', '.join(rule.cwe)}\n"
         f"  severity:   {rule.severity.value} (confidence {rule.confidence.value})\n"
         f"  profiles:   {', '.join(rule.profiles()) or 'none by default'}\n"
         f"  rationale:  {rule.rationale}\n")
    return EXIT_OK


def cmd_rules(args: argparse.Namespace) -> int:
    if args.format == "json":
        _out(json.dumps([r.to_dict() for r in RULES], indent=2) + "\n")
        return EXIT_OK
    width = max(len(r) for r in CATALOG)
    lines = [f"{r.rule_id.ljust(width)}  {r.weakness.value:<4}  {r.severity.value:<8}  "
             f"{','.join(p[0].upper() for p in r.profiles()):<5}  {r.title}" for r in RULES]
    _out("\n".join(lines) + "\n\nprofiles: C=conservative B=balanced P=permissive\n")
    return EXIT_OK


COMMANDS = {"scan": cmd_scan, "fix": cmd_fix, "corpus": cmd_corpus, "diff": cmd_diff,
            "explain": cmd_explain, "rules": cmd_rules}


def main(argv: Sequence[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_USAGE if exc.code not in (0, None) else EXIT_OK
    logging.basicConfig(level=logging.DEBUG if getattr(args, "verbose", False) else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s", stream=sys.stderr)
    try:
        return COMMANDS[args.command](args)
    except (UsageError, ConfigError, FileNotFoundError) as exc:
        _warn(str(exc))
        return EXIT_USAGE
    except UnknownRuleError as exc:
        _warn(f"unknown rule {exc.args[0]!r}; see 'wf-sentinel rules'")
        return EXIT_USAGE
    except WorkflowError as exc:
        _warn(str(exc))
        return EXIT_USAGE
    except Exception as exc:  # exit status 3 is the contract for anything unexpected
        log.debug("internal error", exc_info=True)
        _warn(f"internal error: {type(exc).__name__}: {exc}")
        return EXIT_INTERNAL


if __name__ == "__main__":
    sys.exit(main())
