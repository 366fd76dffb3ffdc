"""The nine acceptance criteria, each reported as one PASS/FAIL line."""

import contextlib
import difflib
import json
import statistics
import string
import subprocess
import sys
import time
from pathlib import Path

import jsonschema
import pytest
from hypothesis import given, settings, strategies as st

import synth
from oracles import (
    expected_rewrite, frequency_entropy, index_scan, reference_truthiness, unpinned_uses_lines,
)
from strategies import corpora
from taxonomy_cases import CASES, TAXONOMY_DIR
from wfsentinel.advisories import FixtureAdvisorySource, lookup_advisories
from wfsentinel.corpus import percentile, scan_corpus, timing_report
from wfsentinel.detectors import run_all
from wfsentinel.expressions import Truthiness, evaluate_condition, extract_expressions
from wfsentinel.findings import Weakness
from wfsentinel.model import ScalarStyle, parse_action_ref, parse_workflow
from wfsentinel.pinning import OfflineFixture, apply_edits, plan_pin_fixes
from wfsentinel.profiles import BALANCED, CONSERVATIVE, PERMISSIVE
from wfsentinel.reporting import ScanMeta, emit_sarif, summarize
from wfsentinel.secretscan import detect_candidate_secrets, shannon_entropy
from wfsentinel.services import Services

SARIF_SCHEMA = json.loads((Path(__file__).parent / "data" / "sarif-2.1.0-structural.json").read_text())
TOKEN_ALPHABET = string.ascii_letters + string.digits


@pytest.fixture
def criterion(capsys):
    @contextlib.contextmanager
    def report(number, label):
        detail = {}
        try:
            yield detail
        except BaseException as exc:
            with capsys.disabled():
                print(f"\nFAIL criterion {number}: {label}: {exc!s:.300}")
            raise
        with capsys.disabled():
            extra = "".join(f"; {k}={v}" for k, v in detail.items())
            print(f"\nPASS criterion {number}: {label}{extra}")
    return report


def udw(doc, profile, services=None):
    return [f for f in run_all(doc, profile, services or Services.offline()) if f.weakness is Weakness.UDW]


def test_criterion_1_taxonomy_exemplars(criterion):
    with criterion(1, "taxonomy exemplars 10/10 on offending lines") as d:
        t0 = time.perf_counter()
        passed = 0
        for name, weakness, lines in CASES:
            doc = parse_workflow((TAXONOMY_DIR / name).read_bytes(), name)
            hits = [f for f in run_all(doc, BALANCED, Services.offline()) if f.weakness is weakness]
            assert hits, f"{name}: no {weakness.value} finding"
            assert all(f.span.start_line in lines for f in hits), \
                f"{name}: {[(f.rule_id, f.span.start_line) for f in hits]} outside {sorted(lines)}"
            passed += 1
        elapsed = time.perf_counter() - t0
        assert passed == 10
        assert elapsed < 5.0, f"took {elapsed:.2f}s"
        d["runtime_s"] = f"{elapsed:.3f}"


def test_criterion_2_profile_nesting(criterion, tmp_path):
    with criterion(2, "UDW conservative <= balanced <= permissive on 30 workflows") as d:
        files = synth.write_corpus(tmp_path, synth.mixed_corpus())
        assert len(files) == 30
        sets = {}
        for profile in (CONSERVATIVE, BALANCED, PERMISSIVE):
            keys = set()
            for f in files:
                doc = parse_workflow(f.read_bytes(), f.name)
                keys |= {(x.path, x.span) for x in udw(doc, profile)}
            sets[profile.name] = keys
        assert sets["conservative"] <= sets["balanced"] <= sets["permissive"]
        assert len(sets["permissive"]) > len(sets["conservative"])
        d["counts"] = "/".join(str(len(sets[n])) for n in ("conservative", "balanced", "permissive"))


def test_criterion_3_download_artifact_bound(criterion):
    with criterion(3, "download-artifact 4.1.2 flagged, 4.1.3 not") as d:
        source = FixtureAdvisorySource.bundled()
        [match] = lookup_advisories(parse_action_ref("actions/download-artifact@v4.1.2"), source)
        assert not match.coarse
        assert lookup_advisories(parse_action_ref("actions/download-artifact@v4.1.3"), source) == []

        def kvcw(version):
            wf = (f"on: push\npermissions: {{}}\njobs:\n  j:\n    runs-on: ubuntu-latest\n    steps:\n"
                  f"      - uses: actions/download-artifact@{version}\n").encode()
            return [f.rule_id for f in run_all(parse_workflow(wf), BALANCED, Services.offline())
                    if f.weakness is Weakness.KVCW]
        assert kvcw("v4.1.2") == ["kvcw.known-vulnerable-action"]
        assert kvcw("v4.1.3") == []
        d["advisory"] = match.advisory.id


def _fix(source, pins):
    doc = parse_workflow(source, "wf.yml")
    plan = plan_pin_fixes(doc, run_all(doc, BALANCED, Services.offline()), OfflineFixture(pins))
    return plan, apply_edits(source, plan.edits)


def test_criterion_4_autofix_soundness(criterion):
    with criterion(4, "20-ref autofix exact, byte-preserving, idempotent") as d:
        text, pins, planted = synth.twenty_ref_fixture()
        assert len(planted) == 20
        plan, fixed = _fix(text.encode(), pins)
        assert len(plan.edits) == 20 and not plan.unresolved
        assert fixed.decode() == expected_rewrite(text, planted, pins)
        changed = 0
        for op, a0, a1, b0, b1 in difflib.SequenceMatcher(None, text.split("\n"), fixed.decode().split("\n"),
                                                          autojunk=False).get_opcodes():
            if op == "equal":
                continue
            assert op == "replace" and a1 - a0 == b1 - b0
            changed += a1 - a0
        assert changed == 20
        assert udw(parse_workflow(fixed), PERMISSIVE) == []
        again, refixed = _fix(fixed, pins)
        assert again.edits == [] and refixed == fixed
        d["edits"] = len(plan.edits)


def test_criterion_5_oracle_equivalence(criterion):
    with criterion(5, "UDW equals line scanner on 50 workflows; extraction equals index scan on 100 strings") as d:
        corpus = synth.comment_free_corpus()
        assert len(corpus) == 50
        total = 0
        for i, s in enumerate(corpus):
            got = sorted(f.span.start_line for f in udw(parse_workflow(s.text.encode(), f"w{i}"), PERMISSIVE))
            expected = unpinned_uses_lines(s.text)
            assert got == expected, f"workflow {i}: {got} != {expected}"
            total += len(expected)
        strings = synth.expression_strings()
        assert len(strings) == 100
        for text, _ in strings:
            got = [(e.offset, e.offset + len(e.raw)) for e in extract_expressions(text)]
            assert got == index_scan(text), text
        d["udw_findings"] = total


def test_criterion_6_condition_truthiness(criterion):
    with criterion(6, "block if: alwaysTrue, plain single expression dependsOnRuntime") as d:
        cases = synth.condition_suite()
        assert len(cases) == 50
        tally = {"block": 0, "plain": 0}
        for case in cases:
            cond = parse_workflow(synth.condition_workflow(case).encode()).jobs["j"].steps[0].condition
            verdict = evaluate_condition(cond).value
            assert verdict.value == reference_truthiness(cond.text), case.yaml_value
            if case.style == "block":
                assert cond.style is not ScalarStyle.PLAIN
                assert verdict is Truthiness.ALWAYS_TRUE, case.yaml_value
            else:
                assert verdict is Truthiness.DEPENDS_ON_RUNTIME, case.yaml_value
            tally[case.style] += 1
        d["block"], d["plain"] = tally["block"], tally["plain"]


def test_criterion_7_performance(criterion, tmp_path):
    with criterion(7, "median <= 1.0 s and p95 <= 2.0 s per workflow on 100 workflows") as d:
        corpus = synth.performance_corpus()
        assert len(corpus) == 100
        synth.write_corpus(tmp_path, corpus)
        report = scan_corpus(tmp_path, PERMISSIVE, repetitions=2, services=Services.offline())
        assert len(report.workflows) == 100
        assert all(len(e.timing_samples) == 2 for e in report.workflows)
        assert max(e.loc for e in report.workflows) <= 900
        t = timing_report(report)
        medians = [statistics.median(e.timing_samples) for e in report.workflows]
        assert t.median == statistics.median(medians) and t.p95 == percentile(medians, 95)
        assert t.median <= 1.0, f"median {t.median:.4f}s"
        assert t.p95 <= 2.0, f"p95 {t.p95:.4f}s"
        d["median_s"], d["p95_s"] = f"{t.median:.4f}", f"{t.p95:.4f}"
        d["max_loc"] = max(e.loc for e in report.workflows)


@settings(max_examples=200, deadline=None, database=None)
@given(corpora())
def _matrix_bound(per_workflow):
    for total, wfs in summarize(per_workflow).values():
        assert total >= wfs


def test_criterion_8_reporting_contracts(criterion, tmp_path):
    with criterion(8, "matrix bound (200 examples), SARIF schema, byte-deterministic JSON") as d:
        _matrix_bound()
        findings, files = [], []
        for name, _, _ in CASES:
            doc = parse_workflow((TAXONOMY_DIR / name).read_bytes(), name)
            findings += run_all(doc, PERMISSIVE, Services.offline())
            files.append(name)
        sarif = json.loads(emit_sarif(findings, ScanMeta("permissive", files)))
        jsonschema.validate(sarif, SARIF_SCHEMA)
        cmd = [sys.executable, "-m", "wfsentinel", "scan", str(TAXONOMY_DIR), "--format", "json",
               "--profile", "permissive"]
        runs = [subprocess.run(cmd, capture_output=True, cwd=tmp_path) for _ in range(2)]
        assert [r.returncode for r in runs] == [1, 1], runs[0].stderr
        assert runs[0].stdout == runs[1].stdout and runs[0].stdout
        d["sarif_results"] = len(sarif["runs"][0]["results"])
        d["json_bytes"] = len(runs[0].stdout)


def _secret_wf(env="", run="echo hi", with_=""):
    return (f"on: push\njobs:\n  j:\n    runs-on: ubuntu-latest\n    env:\n      X: y\n{env}    steps:\n"
            f"      - run: {run}\n      - uses: o/r@{'a' * 40}\n        with:\n          k: v\n{with_}").encode()


@settings(max_examples=200, deadline=None, database=None)
@given(st.sampled_from(["env", "run", "with"]), st.sampled_from(["", "'", '"']),
       st.sampled_from(["GITHUB_TOKEN", "TOKEN", "API_KEY", "PASSWORD"]))
def _safe_idiom_never_flagged(where, quote, name):
    safe = "${{ secrets.GITHUB_TOKEN }}"
    if where == "env":
        src = _secret_wf(env=f"      {name}: {quote}{safe}{quote}\n")
    elif where == "run":
        src = _secret_wf(run=f"{quote}echo {safe} | gh auth login --with-token{quote}")
    else:
        src = _secret_wf(with_=f"          {name.lower()}: {quote}{safe}{quote}\n")
    assert detect_candidate_secrets(parse_workflow(src)) == []


@settings(max_examples=200, deadline=None, database=None)
@given(st.sampled_from(["ghp_", "gho_", "ghu_", "ghs_", "ghr_"]),
       st.text(TOKEN_ALPHABET, min_size=36, max_size=36), st.sampled_from(["env", "run", "with"]))
def _prefixed_token_found(prefix, body, where):
    token = prefix + body
    src = {"env": lambda: _secret_wf(env=f"      VALUE: {token}\n"),
           "run": lambda: _secret_wf(run=f"curl -u x:{token} https://example.com"),
           "with": lambda: _secret_wf(with_=f"          value: {token}\n")}[where]()
    doc = parse_workflow(src)
    hits = [c for c in detect_candidate_secrets(doc) if c.token == token]
    assert hits and doc.source[hits[0].span.start_byte:hits[0].span.end_byte].decode() == token


@settings(max_examples=500, deadline=None, database=None)
@given(st.text(min_size=0, max_size=120))
def _entropy_matches(token):
    assert abs(shannon_entropy(token) - frequency_entropy(token)) <= 1e-9


def test_criterion_9_secret_gates(criterion):
    with criterion(9, "GITHUB_TOKEN idiom never flagged, prefixed tokens always found, entropy within 1e-9"):
        _safe_idiom_never_flagged()
        _prefixed_token_found()
        _entropy_matches()
