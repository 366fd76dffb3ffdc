import csv
import io
import json
import random

import pytest
from hypothesis import given, settings, strategies as st

import synth
from wfsentinel.corpus import (
    count_loc, diff_profiles, percentile, scan_corpus, timing_report, workflow_metrics,
)
from wfsentinel.findings import Weakness
from wfsentinel.model import parse_workflow
from wfsentinel.profiles import BALANCED, CONSERVATIVE, PERMISSIVE
from wfsentinel.scan import discover, rule_ignored, scan_paths


@pytest.fixture
def corpus(tmp_path):
    synth.write_corpus(tmp_path, synth.mixed_corpus(n=12), nested=True)
    (tmp_path / "repo0/.github/workflows/broken.yml").write_text("on: [push\n")
    return tmp_path


def test_discover_modes(tmp_path):
    (tmp_path / "loose").mkdir()
    (tmp_path / "loose/a.yml").write_text("on: push\njobs: {}\n")
    (tmp_path / "loose/b.YAML").write_text("on: push\njobs: {}\n")
    (tmp_path / "loose/c.txt").write_text("x")
    repo = tmp_path / "repo"
    (repo / ".github/workflows").mkdir(parents=True)
    (repo / ".github/workflows/ci.yml").write_text("on: push\njobs: {}\n")
    (repo / "other.yml").write_text("not a workflow")
    assert [p.name for p in discover([tmp_path / "loose"])] == ["a.yml", "b.YAML"]
    assert [p.name for p in discover([repo])] == ["ci.yml"]
    assert [p.name for p in discover([tmp_path])] == ["ci.yml"]
    assert discover([tmp_path / "loose"], ignore_paths=["*/b.*"])[0].name == "a.yml"
    with pytest.raises(FileNotFoundError):
        discover([tmp_path / "missing"])


def test_rule_ignore_globs():
    assert rule_ignored("hgw.no-security-tooling", ["hgw.*"])
    assert not rule_ignored("udw.unpinned-uses", ["hgw.*", "udw.unpinned-docker"])


def test_scan_paths_keeps_order_and_isolates_errors(corpus):
    files = discover([corpus])
    serial = scan_paths(files, BALANCED, jobs=1)
    parallel = scan_paths(files, BALANCED, jobs=4)
    assert [r.path for r in serial] == [str(f) for f in files] == [r.path for r in parallel]
    assert [r.findings for r in serial] == [r.findings for r in parallel]
    broken = [r for r in serial if r.path.endswith("broken.yml")]
    assert broken[0].error and broken[0].findings == []


def test_scan_corpus_records_entries_and_timings(corpus):
    report = scan_corpus(corpus, BALANCED, repetitions=2)
    assert len(report.workflows) == 13
    for e in report.workflows:
        assert len(e.timing_samples) == 2 and all(t > 0 for t in e.timing_samples)
        assert not e.path.startswith("/")
    broken = next(e for e in report.workflows if e.path.endswith("broken.yml"))
    assert broken.error and broken.loc == 1
    per = {e.path: e.findings for e in report.workflows}
    assert report.matrix[Weakness.HGW][1] == sum(any(f.weakness is Weakness.HGW for f in v) for v in per.values())
    d = json.loads(report.to_json(timings=False))
    assert "timing_samples" not in d["workflows"][0]
    assert set(d["matrix"]) == {w.value for w in Weakness}


def test_corpus_findings_deterministic(corpus):
    a = scan_corpus(corpus, PERMISSIVE).to_json(timings=False)
    b = scan_corpus(corpus, PERMISSIVE).to_json(timings=False)
    assert a == b


def test_workflow_metrics():
    src = b"# c\nname: x\non: [push, pull_request]\n\njobs:\n  a:\n    runs-on: x\n    steps:\n" \
          b"      - uses: o/r@v1\n      - uses: o/s@v1\n  b:\n    uses: o/w/.github/workflows/x.yml@v1\n"
    assert workflow_metrics(parse_workflow(src)) == (10, 2, 2, 3)
    assert count_loc(b"\n  # only comment\n  \nx: 1\n") == 1


@settings(max_examples=200, deadline=None)
@given(st.lists(st.floats(0, 10, allow_nan=False), min_size=1, max_size=50), st.floats(1, 100))
def test_percentile_nearest_rank(values, q):
    p = percentile(values, q)
    ordered = sorted(values)
    below = sum(v <= p for v in ordered)
    assert p in values
    assert below / len(values) >= q / 100 - 1e-12
    strictly_below = sum(v < p for v in ordered)
    assert strictly_below / len(values) < q / 100 + 1e-12


def test_timing_report(corpus):
    report = scan_corpus(corpus, BALANCED, repetitions=3)
    t = timing_report(report)
    assert [r[1] for r in t.rows] == sorted(r[1] for r in t.rows)
    assert t.minimum <= t.median <= t.p95 <= t.maximum
    rows = list(csv.DictReader(io.StringIO(t.to_csv())))
    assert len(rows) == 13 and set(rows[0]) == {"path", "loc", "median_seconds"}


def test_profile_diff(corpus):
    d = diff_profiles(corpus, CONSERVATIVE, PERMISSIVE)
    udw = d.per_weakness[Weakness.UDW]
    assert udw.only_a == set() and len(udw.only_b) > 0
    rows = list(csv.reader(io.StringIO(d.to_csv())))
    assert rows[0] == ["weakness", "common", "only_conservative", "only_permissive"] and len(rows) == 11
    assert "only permissive" in d.to_text()
    assert set(d.to_dict()["weaknesses"]) == {w.value for w in Weakness}


@settings(max_examples=25, deadline=None)
@given(st.integers(0, 10**9))
def test_matrix_bound_holds_on_scanned_random_corpora(seed):
    from wfsentinel.detectors import run_all
    from wfsentinel.reporting import summarize
    rng = random.Random(seed)
    per = {}
    for i in range(rng.randint(1, 6)):
        per[f"w{i}"] = run_all(parse_workflow(synth.random_workflow(rng).text.encode(), f"w{i}"), PERMISSIVE)
    for total, wfs in summarize(per).values():
        assert total >= wfs
