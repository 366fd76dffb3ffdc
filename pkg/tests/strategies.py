"""Hypothesis strategies for report-level objects."""

from hypothesis import strategies as st

from wfsentinel.catalog import RULES
from wfsentinel.findings import Confidence, Finding, Severity, TextEdit
from wfsentinel.model import SourceSpan

PATHS = [f".github/workflows/w{i}.yml" for i in range(6)]


@st.composite
def spans(draw):
    start = draw(st.integers(0, 5000))
    length = draw(st.integers(0, 200))
    line = draw(st.integers(1, 300))
    col = draw(st.integers(1, 80))
    end_line = line + draw(st.integers(0, 3))
    end_col = draw(st.integers(1, 120)) if end_line > line else col + draw(st.integers(0, 40))
    return SourceSpan(start, start + length, line, end_line, col, end_col)


@st.composite
def findings(draw, paths=st.sampled_from(PATHS)):
    rule = draw(st.sampled_from(RULES))
    span = draw(spans())
    fix = None
    if rule.rule_id.startswith("udw.") and draw(st.booleans()):
        fix = TextEdit(span, "a" * 40, draw(st.one_of(st.none(), st.sampled_from(["v1", "main"]))))
    return Finding(
        rule_id=rule.rule_id, weakness=rule.weakness, cwe=rule.cwe,
        severity=draw(st.sampled_from(list(Severity))), confidence=draw(st.sampled_from(list(Confidence))),
        path=draw(paths), span=span, message=draw(st.text(min_size=1, max_size=40)),
        fix=fix, related=tuple(draw(st.lists(spans(), max_size=2))),
    )


def _light_finding(rule, path, line):
    span = SourceSpan(line, line + 1, line, line, 1, 2)
    return Finding(rule.rule_id, rule.weakness, rule.severity, rule.confidence, path, span, rule.title, rule.cwe)


def corpora(max_workflows=12, max_findings=15):
    """``{path: [Finding, ...]}``; only rule and location vary, which is all a tally reads."""
    workflow = st.lists(st.tuples(st.sampled_from(RULES), st.integers(1, 500)), max_size=max_findings)
    return st.lists(workflow, max_size=max_workflows).map(
        lambda groups: {f"wf{i}.yml": [_light_finding(r, f"wf{i}.yml", ln) for r, ln in g]
                        for i, g in enumerate(groups)})
