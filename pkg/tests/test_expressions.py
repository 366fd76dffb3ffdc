import math

import pytest
from hypothesis import given, settings, strategies as st

import synth
from oracles import index_scan, reference_truthiness
from wfsentinel.expressions import (
    Binary, Call, Context, ExpressionSyntaxError, Index, Literal, Member, Not, Trust, Truthiness,
    context_paths, evaluate, evaluate_condition, extract_expressions, iter_delimited, parse_expression,
    single_expression_body, to_source, truthy,
)
from wfsentinel.model import RawCondition, ScalarStyle, SourceSpan, parse_workflow


# -- extraction ----------------------------------------------------------------


def test_extraction_positions_match_index_scan_on_generated_strings():
    for text, planted in synth.expression_strings():
        got = [(e.offset, e.offset + len(e.raw)) for e in extract_expressions(text)]
        assert got == index_scan(text) == planted, text


def test_extraction_spans_are_byte_accurate_with_multibyte_prefix():
    text = "é ${{ github.sha }} ü ${{ inputs.x }}"
    base = SourceSpan(10, 10 + len(text.encode()), 3, 3, 5, 5 + len(text))
    src = b"x" * 10 + text.encode()
    for e in extract_expressions(text, base):
        assert src[e.span.start_byte:e.span.end_byte].decode() == e.raw
        assert text[e.span.start_col - 5:e.span.end_col - 5] == e.raw


def test_quoted_braces_do_not_close():
    [e] = extract_expressions("${{ format('}}', github.ref) }} tail")
    assert e.raw == "${{ format('}}', github.ref) }}"
    assert e.contexts == ("github.ref",)


def test_unterminated_is_malformed():
    [e] = extract_expressions("echo ${{ github.sha")
    assert e.malformed and list(iter_delimited("a ${{ b")) == [(2, 7, False)]


def test_block_scalar_expressions_are_located_in_source():
    src = b"on: push\njobs:\n  j:\n    runs-on: x\n    steps:\n      - run: |\n          echo ${{ github.head_ref }}\n"
    doc = parse_workflow(src)
    run = doc.jobs["j"].steps[0].run
    [e] = extract_expressions(run.value, run.span, doc.source)
    assert src[e.span.start_byte:e.span.end_byte] == b"${{ github.head_ref }}"
    assert e.span.start_line == 7 and e.trust is Trust.UNTRUSTED


# -- parsing -------------------------------------------------------------------


@pytest.mark.parametrize("text,ast", [
    ("github.sha", Member(Context("github"), "sha")),
    ("a['b']", Index(Context("a"), Literal("b"))),
    ("!true", Not(Literal(True))),
    ("a == 1 && b", Binary("&&", Binary("==", Context("a"), Literal(1)), Context("b"))),
    ("a || b && c", Binary("||", Context("a"), Binary("&&", Context("b"), Context("c")))),
    ("f(1, 'x')", Call("f", (Literal(1), Literal("x")))),
    ("x.*.name", Member(Member(Context("x"), "*"), "name")),
    ("'it''s'", Literal("it's")),
    ("null", Literal(None)),
])
def test_parse(text, ast):
    assert parse_expression(text) == ast


@pytest.mark.parametrize("bad", ["", "a ==", "(a", "a b", "'open", "f(1,", "a..b", "== 1"])
def test_parse_errors(bad):
    with pytest.raises(ExpressionSyntaxError):
        parse_expression(bad)


def test_context_paths():
    ast = parse_expression("contains(github.event.pull_request.labels.*.name, 'x') && steps.a.outputs['b']")
    assert context_paths(ast) == ["github.event.pull_request.labels.*.name", "steps.a.outputs.b"]


_idents = st.from_regex(r"[a-z][a-z0-9_]{0,6}", fullmatch=True).filter(
    lambda s: s not in {"true", "false", "null", "nan", "infinity"})
_literals = st.one_of(
    st.booleans().map(Literal), st.none().map(Literal),
    st.integers(-1000, 1000).map(Literal),
    st.text(alphabet="ab'c }{", max_size=5).map(Literal),
)


def _extend(children):
    return st.one_of(
        st.builds(Member, children, _idents),
        st.builds(Index, children, children),
        st.builds(Not, children),
        st.builds(Binary, st.sampled_from(["==", "!=", "<", "<=", ">", ">=", "&&", "||"]), children, children),
        st.builds(Call, _idents, st.lists(children, max_size=3).map(tuple)),
    )


_asts = st.recursive(st.one_of(_literals, _idents.map(Context)), _extend, max_leaves=12)


@settings(max_examples=300, deadline=None)
@given(_asts)
def test_to_source_round_trips(ast):
    assert parse_expression(to_source(ast)) == ast


# -- evaluation ----------------------------------------------------------------


@pytest.mark.parametrize("text,value", [
    ("'ABC' == 'abc'", True), ("'1' == 1", True), ("null == 0", True), ("true && 0", 0),
    ("'' || 'x'", "x"), ("format('{0}-{1}', 'a', 2)", "a-2"), ("contains('Hello', 'ell')", True),
    ("startsWith('abc', 'A')", True), ("fromJSON('[1,2]')", [1, 2]), ("1 < 2", True), ("!''", True),
    ("0x10 == 16", True), ("toJSON('a')", '"a"'), ("endsWith('abc', 'C')", True),
])
def test_evaluate_constants(text, value):
    assert evaluate(parse_expression(text)) == value


@pytest.mark.parametrize("value,expected", [
    (None, False), (False, False), (0, False), (-0.0, False), ("", False), (math.nan, False),
    (True, True), (1, True), ("false", True), ("0", True), ([], True), ({}, True),
])
def test_truthy(value, expected):
    assert truthy(value) is expected


# -- conditions ------------------------------------------------------------------

def test_condition_suite_matches_reference_evaluator():
    cases = synth.condition_suite()
    assert len(cases) == 50
    for case in cases:
        doc = parse_workflow(synth.condition_workflow(case).encode())
        cond = doc.jobs["j"].steps[0].condition
        assert (cond.style is not ScalarStyle.PLAIN) == (case.style == "block")
        verdict = evaluate_condition(cond)
        assert verdict.value.value == reference_truthiness(cond.text)
        expected = Truthiness.ALWAYS_TRUE if case.style == "block" else Truthiness.DEPENDS_ON_RUNTIME
        assert verdict.value is expected, (case.yaml_value, verdict)


def _cond(text, style=ScalarStyle.PLAIN):
    return RawCondition(text, style, SourceSpan(0, len(text), 1, 1, 1, len(text) + 1))


@pytest.mark.parametrize("text,expected", [
    ("${{ false }}", Truthiness.ALWAYS_FALSE),
    ("false", Truthiness.ALWAYS_FALSE),
    ("true", Truthiness.ALWAYS_TRUE),
    ("${{ github.ref }} == 'x'", Truthiness.ALWAYS_TRUE),
    ("github.ref == 'refs/heads/main'", Truthiness.DEPENDS_ON_RUNTIME),
    ("${{ 1 == 1 }}", Truthiness.ALWAYS_TRUE),
])
def test_condition_cases(text, expected):
    assert evaluate_condition(_cond(text)).value is expected


def test_always_is_forced_run_not_constant():
    v = evaluate_condition(_cond("${{ always() }}"))
    assert v.forced_run and v.value is Truthiness.DEPENDS_ON_RUNTIME


def test_single_expression_body():
    assert single_expression_body("${{ a }}") == " a "
    assert single_expression_body("${{ a }}\n") is None
    assert single_expression_body("${{ a }} && ${{ b }}") is None


@settings(max_examples=200, deadline=None)
@given(st.sampled_from(synth.RUNTIME_EXPRS), st.sampled_from(["|", ">", "|+"]), st.text("ab &", max_size=4))
def test_block_scalar_with_expression_is_always_true(expr, indicator, suffix):
    case = synth.CondCase(f"{indicator}\n        ${{{{ {expr} }}}}{suffix}\n", "block", "")
    doc = parse_workflow(synth.condition_workflow(case).encode())
    assert evaluate_condition(doc.jobs["j"].steps[0].condition).value is Truthiness.ALWAYS_TRUE
