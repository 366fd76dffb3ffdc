import io
import random
import urllib.error

import pytest
from hypothesis import given, settings, strategies as st

import synth
from oracles import expected_rewrite
from wfsentinel.detectors import run_all
from wfsentinel.findings import TextEdit, Weakness
from wfsentinel.model import RefKind, SourceSpan, parse_action_ref, parse_workflow
from wfsentinel.pinning import (
    EditConflict, LiveForge, OfflineFixture, UnresolvedRef, apply_edits, plan_pin_fixes, resolve_many, resolve_ref,
)
from wfsentinel.profiles import BALANCED, PERMISSIVE
from wfsentinel.services import Services


def _span(s, t):
    return SourceSpan(s, t, 1, 1, s + 1, t + 1)


def fix_once(source: bytes, pins: dict[str, str]):
    doc = parse_workflow(source, "wf.yml")
    findings = run_all(doc, BALANCED, Services.offline())
    plan = plan_pin_fixes(doc, findings, OfflineFixture(pins))
    return plan, apply_edits(source, plan.edits)


def test_twenty_ref_fixture_fix_is_exact_and_idempotent():
    text, pins, planted = synth.twenty_ref_fixture()
    assert len(planted) == 20
    plan, fixed = fix_once(text.encode(), pins)
    assert len(plan.edits) == 20 and plan.unresolved == []
    assert fixed.decode() == expected_rewrite(text, planted, pins)
    again, refixed = fix_once(fixed, pins)
    assert again.edits == [] and refixed == fixed
    doc = parse_workflow(fixed)
    assert [f for f in run_all(doc, PERMISSIVE, Services.offline()) if f.weakness is Weakness.UDW] == []


def test_fix_leaves_other_bytes_alone():
    text, pins, _ = synth.twenty_ref_fixture()
    plan, fixed = fix_once(text.encode(), pins)
    # undo each edit with a reference splice and compare to the original
    src = text.encode()
    rebuilt, pos = bytearray(), 0
    for e in plan.edits:
        rebuilt += src[pos:e.span.start_byte] + e.replacement.encode()
        pos = e.span.end_byte
    rebuilt += src[pos:]
    stripped = b"\n".join(line.split(b" # ")[0] if b"@" in line and b"keep me" not in line else line
                          for line in fixed.split(b"\n"))
    assert stripped == bytes(rebuilt)


def test_unresolved_reported_with_reason():
    text, pins, planted = synth.twenty_ref_fixture()
    missing = f"{planted[0][0]}@{planted[0][1]}"
    partial = {k: v for k, v in pins.items() if k != missing}
    plan, _ = fix_once(text.encode(), partial)
    assert len(plan.edits) == 19
    assert [reason for _, reason in plan.unresolved] == ["not-in-fixture"]


def test_existing_comment_is_kept():
    src = b"on: push\njobs:\n  j:\n    runs-on: x\n    steps:\n      - uses: o/r@v1  # note\n"
    _, fixed = fix_once(src, {"o/r@v1": "a" * 40})
    assert fixed.endswith(b"      - uses: o/r@" + b"a" * 40 + b"  # note # v1\n")


def test_crlf_line_endings_survive():
    src = b"on: push\r\njobs:\r\n  j:\r\n    runs-on: x\r\n    steps:\r\n      - uses: o/r@v1\r\n"
    _, fixed = fix_once(src, {"o/r@v1": "b" * 40})
    assert fixed.endswith(b"o/r@" + b"b" * 40 + b" # v1\r\n")


def test_apply_edits_rejects_bad_plans():
    src = b"0123456789\nabcdef\n"
    with pytest.raises(EditConflict):
        apply_edits(src, [TextEdit(_span(2, 5), "x"), TextEdit(_span(4, 6), "y")])
    with pytest.raises(EditConflict):
        apply_edits(src, [TextEdit(_span(5, 6), "x"), TextEdit(_span(1, 2), "y")])
    with pytest.raises(EditConflict):
        apply_edits(src, [TextEdit(_span(5, 99), "x")])
    with pytest.raises(EditConflict):
        apply_edits(src, [TextEdit(_span(1, 2), "x", "c"), TextEdit(_span(4, 5), "y")])


@st.composite
def _source_and_edits(draw):
    src = draw(st.binary(min_size=1, max_size=80))
    cuts = sorted(draw(st.lists(st.integers(0, len(src)), max_size=10)))
    pairs = list(zip(cuts[::2], cuts[1::2]))
    edits = [TextEdit(_span(a, b), draw(st.text("xyz@", max_size=4))) for a, b in pairs]
    return src, edits


@settings(max_examples=200, deadline=None)
@given(_source_and_edits())
def test_apply_edits_matches_reference_splice(case):
    src, edits = case
    ref = src
    for e in reversed(edits):  # right to left keeps earlier offsets valid
        ref = ref[:e.span.start_byte] + e.replacement.encode() + ref[e.span.end_byte:]
    assert apply_edits(src, edits) == ref


@settings(max_examples=40, deadline=None)
@given(st.integers(0, 10**9))
def test_fix_is_idempotent_on_random_workflows(seed):
    s = synth.random_workflow(random.Random(seed), comments=False)
    pins = {}
    for r in s.refs:
        ref = parse_action_ref(r.value)
        if ref.ref_kind in (RefKind.TAG, RefKind.BRANCH):
            pins[f"{ref.slug}@{ref.ref}"] = synth.fake_sha(r.value)
    plan, fixed = fix_once(s.text.encode(), pins)
    again, refixed = fix_once(fixed, pins)
    assert again.edits == [] and refixed == fixed
    assert len(plan.edits) == sum(r.kind in ("tag", "branch") for r in s.refs)


def test_offline_fixture_validation_and_reverse():
    with pytest.raises(ValueError):
        OfflineFixture({"o/r@v1": "not-a-sha"})
    fx = OfflineFixture({"o/r@v1": "a" * 40, "o/r@v1.0.0": "b" * 40})
    assert fx.reverse("o/r", "a" * 40) == "v1"
    assert fx.reverse("o/r", "c" * 40) is None
    with pytest.raises(UnresolvedRef) as exc:
        fx.lookup("o/r", "v2")
    assert exc.value.reason == "not-in-fixture"


def test_resolve_ref_rejects_unpinnable():
    fx = OfflineFixture()
    for raw in ("./local", "docker://alpine:3", "o/r@" + "a" * 40):
        with pytest.raises(ValueError):
            resolve_ref(parse_action_ref(raw), fx)


def test_resolve_many_dedupes():
    fx = OfflineFixture({"o/r@v1": "a" * 40})
    out = resolve_many([parse_action_ref("o/r@v1"), parse_action_ref("o/r/sub@v1"), parse_action_ref("o/x@v1")], fx)
    assert out["o/r@v1"] == "a" * 40 and isinstance(out["o/x@v1"], UnresolvedRef)


class _Resp(io.BytesIO):
    def __enter__(self):
        return self

    def __exit__(self, *a):
        return False


def _http_error(code, headers=None):
    return urllib.error.HTTPError("u", code, "x", headers or {}, None)


@pytest.mark.parametrize("exc,reason", [
    (_http_error(401), "auth"),
    (_http_error(403, {"X-RateLimit-Remaining": "0"}), "rate-limit"),
    (_http_error(429, {"X-RateLimit-Remaining": "0"}), "rate-limit"),
    (_http_error(403), "auth"),
    (_http_error(404), "ambiguous"),
    (_http_error(500), "network-error"),
    (urllib.error.URLError("down"), "network-error"),
])
def test_live_forge_error_mapping(monkeypatch, exc, reason):
    def fake(req, timeout):
        raise exc
    monkeypatch.setattr("urllib.request.urlopen", fake)
    with pytest.raises(UnresolvedRef) as err:
        LiveForge(token="t").lookup("o/r", "v1")
    assert err.value.reason == reason


def test_live_forge_success_and_cache(monkeypatch, tmp_path):
    calls = []

    def fake(req, timeout):
        calls.append(req.full_url)
        assert req.get_header("Authorization") == "Bearer t"
        return _Resp(b"c" * 40)

    monkeypatch.setattr("urllib.request.urlopen", fake)
    forge = LiveForge(token="t", cache_path=tmp_path / "pins.json")
    assert forge.lookup("o/r", "v1") == "c" * 40
    assert forge.lookup("o/r", "v1") == "c" * 40
    assert calls == ["https://api.github.com/repos/o/r/commits/v1"]
    forge.save_cache()
    assert LiveForge(token="t", cache_path=tmp_path / "pins.json").lookup("o/r", "v1") == "c" * 40
