"""GitHub ``${{ ... }}`` expressions: extraction, parsing, taint and truthiness."""

from __future__ import annotations

import json
import math
import re
from dataclasses import dataclass, field
from enum import Enum
from typing import Any, Callable, Iterable, Sequence, Union

from .model import RawCondition, ScalarStyle, SourceSpan

# -- AST -----------------------------------------------------------------------


@dataclass(frozen=True)
class Literal:
    value: Any


@dataclass(frozen=True)
class Context:
    name: str


@dataclass(frozen=True)
class Member:
    obj: "Expr"
    name: str  # "*" for object filters


@dataclass(frozen=True)
class Index:
    obj: "Expr"
    index: "Expr"


@dataclass(frozen=True)
class Call:
    name: str
    args: tuple["Expr", ...] = ()


@dataclass(frozen=True)
class Not:
    operand: "Expr"


@dataclass(frozen=True)
class Binary:
    op: str
    left: "Expr"
    right: "Expr"


Expr = Union[Literal, Context, Member, Index, Call, Not, Binary]


class ExpressionSyntaxError(ValueError):
    pass


# -- tokenizer / parser ----------------------------------------------------------

_TOKEN_RE = re.compile(r"""
    (?P<ws>\s+)
  | (?P<string>'(?:[^']|'')*')
  | (?P<number>-?(?:0x[0-9a-fA-F]+|(?:\d+\.?\d*|\.\d+)(?:[eE][+-]?\d+)?))
  | (?P<ident>[A-Za-z_][A-Za-z0-9_-]*)
  | (?P<op>==|!=|<=|>=|&&|\|\||[!<>()\[\].,*])
""", re.VERBOSE)

_KEYWORDS = {"true": True, "false": False, "null": None, "NaN": math.nan, "Infinity": math.inf}
_COMPARISONS = ("<", "<=", ">", ">=")


def _tokenize(text: str) -> list[tuple[str, str]]:
    tokens = []
    pos = 0
    while pos < len(text):
        m = _TOKEN_RE.match(text, pos)
        if not m:
            raise ExpressionSyntaxError(f"unexpected character {text[pos]!r} at {pos}")
        pos = m.end()
        kind = m.lastgroup
        if kind != "ws":
            tokens.append((kind, m.group()))
    tokens.append(("eof", ""))
    return tokens


class _Parser:
    def __init__(self, text: str):
        self.tokens = _tokenize(text)
        self.pos = 0

    def peek(self) -> tuple[str, str]:
        return self.tokens[self.pos]

    def take(self, value: str | None = None) -> tuple[str, str]:
        tok = self.tokens[self.pos]
        if value is not None and tok[1] != value:
            raise ExpressionSyntaxError(f"expected {value!r}, got {tok[1] or 'end of input'!r}")
        self.pos += 1
        return tok

    def parse(self) -> Expr:
        if self.peek()[0] == "eof":
            raise ExpressionSyntaxError("empty expression")
        node = self.or_()
        if self.peek()[0] != "eof":
            raise ExpressionSyntaxError(f"unexpected {self.peek()[1]!r}")
        return node

    def or_(self) -> Expr:
        node = self.and_()
        while self.peek()[1] == "||":
            self.take()
            node = Binary("||", node, self.and_())
        return node

    def and_(self) -> Expr:
        node = self.equality()
        while self.peek()[1] == "&&":
            self.take()
            node = Binary("&&", node, self.equality())
        return node

    def equality(self) -> Expr:
        node = self.comparison()
        while self.peek()[1] in ("==", "!="):
            op = self.take()[1]
            node = Binary(op, node, self.comparison())
        return node

    def comparison(self) -> Expr:
        node = self.unary()
        while self.peek()[1] in _COMPARISONS:
            op = self.take()[1]
            node = Binary(op, node, self.unary())
        return node

    def unary(self) -> Expr:
        if self.peek()[1] == "!":
            self.take()
            return Not(self.unary())
        return self.postfix(self.primary())

    def primary(self) -> Expr:
        kind, value = self.take()
        if kind == "string":
            return Literal(value[1:-1].replace("''", "'"))
        if kind == "number":
            if value.lower().lstrip("-").startswith("0x"):
                return Literal(int(value, 16))
            number = float(value)
            return Literal(int(number) if number.is_integer() and re.fullmatch(r"-?\d+", value) else number)
        if kind == "ident":
            if value in _KEYWORDS:
                return Literal(_KEYWORDS[value])
            if self.peek()[1] == "(":
                self.take("(")
                args = []
                if self.peek()[1] != ")":
                    args.append(self.or_())
                    while self.peek()[1] == ",":
                        self.take()
                        args.append(self.or_())
                self.take(")")
                return Call(value, tuple(args))
            return Context(value)
        if value == "(":
            node = self.or_()
            self.take(")")
            return node
        raise ExpressionSyntaxError(f"unexpected {value or 'end of input'!r}")

    def postfix(self, node: Expr) -> Expr:
        while True:
            tok = self.peek()[1]
            if tok == ".":
                self.take()
                kind, name = self.take()
                if kind != "ident" and name != "*":
                    raise ExpressionSyntaxError(f"expected property name after '.', got {name!r}")
                node = Member(node, name)
            elif tok == "[":
                self.take()
                if self.peek()[1] == "*":
                    self.take()
                    index: Expr = Literal("*")
                else:
                    index = self.or_()
                self.take("]")
                node = Index(node, index)
            else:
                return node


def parse_expression(text: str) -> Expr:
    """Parse the body of an expression (without the ``${{ }}`` delimiters)."""
    return _Parser(text).parse()


def _lit(value: Any) -> str:
    if value is None:
        return "null"
    if value is True:
        return "true"
    if value is False:
        return "false"
    if isinstance(value, str):
        return "'" + value.replace("'", "''") + "'"
    if isinstance(value, float):
        if math.isnan(value):
            return "NaN"
        if math.isinf(value):
            return "Infinity" if value > 0 else "-Infinity"
    return repr(value)


def to_source(node: Expr) -> str:
    """Render an AST back to expression text; binary nodes are parenthesised."""
    if isinstance(node, Literal):
        return _lit(node.value)
    if isinstance(node, Context):
        return node.name
    if isinstance(node, Member):
        return f"{_postfix_operand(node.obj)}.{node.name}"
    if isinstance(node, Index):
        inner = "*" if node.index == Literal("*") else to_source(node.index)
        return f"{_postfix_operand(node.obj)}[{inner}]"
    if isinstance(node, Call):
        return f"{node.name}({', '.join(to_source(a) for a in node.args)})"
    if isinstance(node, Not):
        return f"!{to_source(node.operand)}"
    return f"({to_source(node.left)} {node.op} {to_source(node.right)})"


def _postfix_operand(node: Expr) -> str:
    # "!a.b" binds as "!(a.b)" and "1.b" lexes as a number, so wrap those
    text = to_source(node)
    if isinstance(node, Not) or (isinstance(node, Literal) and isinstance(node.value, (int, float))
                                 and not isinstance(node.value, bool)):
        return f"({text})"
    return text


# -- context paths ---------------------------------------------------------------


def _path_of(node: Expr) -> list[str] | None:
    if isinstance(node, Context):
        return [node.name]
    if isinstance(node, Member):
        base = _path_of(node.obj)
        return None if base is None else base + [node.name]
    if isinstance(node, Index):
        base = _path_of(node.obj)
        if base is None:
            return None
        idx = node.index
        if isinstance(idx, Literal) and isinstance(idx.value, str):
            return base + [idx.value]
        return base + ["*"]
    return None


def context_paths(node: Expr) -> list[str]:
    """Every maximal dotted context path in the tree, in source order."""
    out: list[str] = []

    def walk(n: Expr) -> None:
        path = _path_of(n)
        if path is not None:
            out.append(".".join(path))
            # index expressions can reference contexts of their own
            while isinstance(n, (Member, Index)):
                if isinstance(n, Index) and not isinstance(n.index, Literal):
                    walk(n.index)
                n = n.obj
            return
        if isinstance(n, Member):
            walk(n.obj)
        elif isinstance(n, Index):
            walk(n.obj)
            walk(n.index)
        elif isinstance(n, Call):
            for a in n.args:
                walk(a)
        elif isinstance(n, Not):
            walk(n.operand)
        elif isinstance(n, Binary):
            walk(n.left)
            walk(n.right)

    walk(node)
    return out


def function_names(node: Expr) -> list[str]:
    names: list[str] = []

    def walk(n: Expr) -> None:
        if isinstance(n, Call):
            names.append(n.name)
            for a in n.args:
                walk(a)
        elif isinstance(n, (Member,)):
            walk(n.obj)
        elif isinstance(n, Index):
            walk(n.obj)
            walk(n.index)
        elif isinstance(n, Not):
            walk(n.operand)
        elif isinstance(n, Binary):
            walk(n.left)
            walk(n.right)

    walk(node)
    return names


# -- taint -----------------------------------------------------------------------

DEFAULT_UNTRUSTED: tuple[str, ...] = (
    "github.event.issue.title",
    "github.event.issue.body",
    "github.event.pull_request.title",
    "github.event.pull_request.body",
    "github.event.comment.body",
    "github.event.review.body",
    "github.event.review_comment.body",
    "github.event.discussion.title",
    "github.event.discussion.body",
    "github.event.commits.*.message",
    "github.event.commits.*.author.email",
    "github.event.commits.*.author.name",
    "github.event.head_commit.message",
    "github.event.head_commit.author.email",
    "github.event.head_commit.author.name",
    "github.event.pages.*.page_name",
    "github.head_ref",
    "github.event.pull_request.head.ref",
    "github.event.pull_request.head.label",
    "github.event.pull_request.head.repo.*",
    "github.event.workflow_run.head_branch",
    "github.event.workflow_run.head_commit.message",
    "github.event.workflow_run.head_commit.author.email",
    "github.event.workflow_run.head_commit.author.name",
    "inputs.*",
    "github.event.inputs.*",
)

DEFAULT_TRUSTED: tuple[str, ...] = (
    "github.sha",
    "github.ref",
    "github.base_ref",
    "github.repository",
    "github.repository_id",
    "github.repository_owner",
    "github.repository_owner_id",
    "github.run_id",
    "github.run_number",
    "github.run_attempt",
    "github.retention_days",
    "github.workflow",
    "github.workflow_ref",
    "github.workflow_sha",
    "github.event_name",
    "github.server_url",
    "github.api_url",
    "github.graphql_url",
    "github.job",
    "github.action",
    "github.action_path",
    "github.token",
    "github.workspace",
    "github.event.number",
    "github.event.pull_request.number",
    "github.event.pull_request.head.sha",
    "github.event.pull_request.base.sha",
    "github.event.pull_request.base.ref",
    "github.event.before",
    "github.event.after",
    "secrets.*",
    "vars.*",
    "runner.*",
    "job.*",
    "strategy.*",
    "steps.*.outcome",
    "steps.*.conclusion",
)


class Trust(str, Enum):
    UNTRUSTED = "untrusted"
    CONDITIONAL = "conditional"
    TRUSTED = "trusted"


def path_matches(path: str, pattern: str) -> bool:
    """``*`` matches one segment; a path deeper than the pattern still matches."""
    segs = path.split(".")
    pats = pattern.split(".")
    if len(segs) < len(pats):
        return False
    return all(p == "*" or p == s or s == "*" for p, s in zip(pats, segs))


def classify_paths(paths: Iterable[str],
                   untrusted: Sequence[str] = DEFAULT_UNTRUSTED,
                   trusted: Sequence[str] = DEFAULT_TRUSTED) -> Trust:
    paths = list(paths)
    if any(path_matches(p, pat) for p in paths for pat in untrusted):
        return Trust.UNTRUSTED
    if all(any(path_matches(p, pat) for pat in trusted) for p in paths):
        return Trust.TRUSTED
    return Trust.CONDITIONAL


@dataclass(frozen=True)
class TaintedExpr:
    raw: str
    body: str
    span: SourceSpan | None
    ast: Expr | None = None
    contexts: tuple[str, ...] = ()
    trust: Trust = Trust.CONDITIONAL
    error: str | None = None
    offset: int = 0  # character offset of ``raw`` inside the scanned text

    @property
    def malformed(self) -> bool:
        return self.error is not None


def classify_taint(expr: TaintedExpr,
                   untrusted: Sequence[str] = DEFAULT_UNTRUSTED,
                   trusted: Sequence[str] = DEFAULT_TRUSTED) -> Trust:
    return classify_paths(expr.contexts, untrusted, trusted)


# -- extraction ------------------------------------------------------------------

_FALLBACK_PATH_RE = re.compile(r"(?<![\w.'-])([A-Za-z_][\w-]*(?:\.(?:[\w-]+|\*)|\[[^\]]*\])+)")


def _find_close(text: str, start: int) -> int:
    """Index of the ``}}`` closing an expression body starting at ``start``; -1 if none."""
    i, n, in_str = start, len(text), False
    while i < n:
        c = text[i]
        if in_str:
            if c == "'":
                if i + 1 < n and text[i + 1] == "'":
                    i += 1
                else:
                    in_str = False
        elif c == "'":
            in_str = True
        elif c == "}" and text.startswith("}}", i):
            return i
        i += 1
    return -1


def iter_delimited(text: str) -> Iterable[tuple[int, int, bool]]:
    """Yield ``(start, end, terminated)`` character ranges of ``${{ ... }}``."""
    pos = 0
    while True:
        start = text.find("${{", pos)
        if start == -1:
            return
        close = _find_close(text, start + 3)
        if close == -1:
            yield start, len(text), False
            return
        yield start, close + 2, True
        pos = close + 2


def _build(raw: str, body: str, span: SourceSpan | None, offset: int,
           untrusted: Sequence[str], trusted: Sequence[str], error: str | None = None) -> TaintedExpr:
    ast = None
    if error is None:
        try:
            ast = parse_expression(body)
        except ExpressionSyntaxError as exc:
            error = str(exc)
    if ast is not None:
        contexts = tuple(dict.fromkeys(context_paths(ast)))
    else:
        contexts = tuple(dict.fromkeys(m.group(1) for m in _FALLBACK_PATH_RE.finditer(body)))
    return TaintedExpr(raw, body.strip(), span, ast, contexts,
                       classify_paths(contexts, untrusted, trusted), error, offset)


def extract_expressions(text: str, span: SourceSpan | None = None, source: bytes | None = None,
                        untrusted: Sequence[str] = DEFAULT_UNTRUSTED,
                        trusted: Sequence[str] = DEFAULT_TRUSTED) -> list[TaintedExpr]:
    """Find every ``${{ ... }}`` in ``text``.

    With only ``span``, ``text`` is taken to start verbatim at ``span.start_byte``.
    With ``source`` as well, each expression is located inside the span's bytes
    (block scalars lose indentation, so offsets cannot be added directly); when
    it cannot be found the expression inherits the whole span.
    """
    out = []
    cursor = span.start_byte if span is not None else 0
    for start, end, terminated in iter_delimited(text):
        raw = text[start:end]
        body = raw[3:-2] if terminated else raw[3:]
        espan = None
        if span is not None:
            if source is None:
                espan = _simple_span(span, text, start, end)
            else:
                espan = _locate(source, span, raw, cursor)
                if espan is not None:
                    cursor = espan.end_byte
                else:
                    espan = span
        error = None if terminated else "unterminated '${{' delimiter"
        out.append(_build(raw, body, espan, start, untrusted, trusted, error))
    return out


def bare_expression(text: str, span: SourceSpan | None = None,
                    untrusted: Sequence[str] = DEFAULT_UNTRUSTED,
                    trusted: Sequence[str] = DEFAULT_TRUSTED) -> TaintedExpr:
    """Treat all of ``text`` as one expression body, as ``if:`` does without delimiters."""
    return _build(text, text, span, 0, untrusted, trusted)


def _simple_span(base: SourceSpan, text: str, start: int, end: int) -> SourceSpan:
    before, upto = text[:start], text[:end]
    b0 = base.start_byte + len(before.encode("utf-8"))
    b1 = base.start_byte + len(upto.encode("utf-8"))

    def line_col(prefix: str) -> tuple[int, int]:
        if "\n" in prefix:
            return base.start_line + prefix.count("\n"), len(prefix) - prefix.rfind("\n")
        return base.start_line, base.start_col + len(prefix)

    (l0, c0), (l1, c1) = line_col(before), line_col(upto)
    return SourceSpan(b0, b1, l0, l1, c0, c1)


def _locate(source: bytes, span: SourceSpan, raw: str, cursor: int) -> SourceSpan | None:
    needle = raw.encode("utf-8")
    pos = source.find(needle, max(cursor, span.start_byte), span.end_byte)
    if pos == -1:
        return None
    line = source.count(b"\n", 0, pos) + 1
    line_start = source.rfind(b"\n", 0, pos) + 1
    col = len(source[line_start:pos].decode("utf-8", "replace")) + 1
    end = pos + len(needle)
    end_line = line + needle.count(b"\n")
    end_line_start = source.rfind(b"\n", 0, end) + 1
    end_col = len(source[end_line_start:end].decode("utf-8", "replace")) + 1
    return SourceSpan(pos, end, line, end_line, col, end_col)


# -- evaluation ------------------------------------------------------------------


class NeedsRuntime(Exception):
    """Raised when a value depends on run-time context or status."""


_STATUS_FUNCTIONS = frozenset({"always", "success", "failure", "cancelled"})


def truthy(value: Any) -> bool:
    if value is None or value is False:
        return False
    if isinstance(value, (int, float)) and not isinstance(value, bool):
        return not (value == 0 or math.isnan(value))
    if isinstance(value, str):
        return value != ""
    return True


def _to_number(value: Any) -> float:
    if value is None:
        return 0.0
    if isinstance(value, bool):
        return 1.0 if value else 0.0
    if isinstance(value, (int, float)):
        return float(value)
    if isinstance(value, str):
        s = value.strip()
        if s == "":
            return 0.0
        try:
            return float(int(s, 16)) if s.lower().startswith("0x") else float(s)
        except ValueError:
            return math.nan
    return math.nan


def _loose_equal(a: Any, b: Any) -> bool:
    if isinstance(a, str) and isinstance(b, str):
        return a.casefold() == b.casefold()
    if type(a) is type(b) or (a is None and b is None):
        return a == b
    if isinstance(a, (dict, list)) or isinstance(b, (dict, list)):
        return a is b
    return _to_number(a) == _to_number(b)


def _compare(op: str, a: Any, b: Any) -> bool:
    if isinstance(a, str) and isinstance(b, str):
        x, y = a.casefold(), b.casefold()
    else:
        x, y = _to_number(a), _to_number(b)
        if math.isnan(x) or math.isnan(y):
            return False
    return {"<": x < y, "<=": x <= y, ">": x > y, ">=": x >= y}[op]


def _to_string(value: Any) -> str:
    if value is None:
        return ""
    if value is True:
        return "true"
    if value is False:
        return "false"
    if isinstance(value, float) and value.is_integer():
        return str(int(value))
    if isinstance(value, (dict, list)):
        return json.dumps(value)
    return str(value)


def evaluate(node: Expr, lookup: Callable[[str], Any] | None = None) -> Any:
    """Evaluate with GitHub's loose semantics.

    ``lookup`` resolves dotted context paths; without it any context access
    raises :class:`NeedsRuntime`, as do status functions other than ``always``.
    """
    if isinstance(node, Literal):
        return node.value
    if isinstance(node, (Context, Member, Index)):
        path = _path_of(node)
        if lookup is None or path is None:
            raise NeedsRuntime(to_source(node))
        return lookup(".".join(path))
    if isinstance(node, Not):
        return not truthy(evaluate(node.operand, lookup))
    if isinstance(node, Binary):
        left = evaluate(node.left, lookup)
        if node.op == "&&":
            return evaluate(node.right, lookup) if truthy(left) else left
        if node.op == "||":
            return left if truthy(left) else evaluate(node.right, lookup)
        right = evaluate(node.right, lookup)
        if node.op == "==":
            return _loose_equal(left, right)
        if node.op == "!=":
            return not _loose_equal(left, right)
        return _compare(node.op, left, right)
    return _call(node, lookup)


def _call(node: Call, lookup: Callable[[str], Any] | None) -> Any:
    name = node.name.lower()
    if name == "always":
        return True
    if name in _STATUS_FUNCTIONS or name == "hashfiles":
        raise NeedsRuntime(f"{node.name}()")
    args = [evaluate(a, lookup) for a in node.args]
    if name == "contains" and len(args) == 2:
        hay, needle = args
        if isinstance(hay, list):
            return any(_loose_equal(x, needle) for x in hay)
        return _to_string(needle).casefold() in _to_string(hay).casefold()
    if name == "startswith" and len(args) == 2:
        return _to_string(args[0]).casefold().startswith(_to_string(args[1]).casefold())
    if name == "endswith" and len(args) == 2:
        return _to_string(args[0]).casefold().endswith(_to_string(args[1]).casefold())
    if name == "format" and args:
        fmt = _to_string(args[0])
        return re.sub(r"\{(\d+)\}", lambda m: _to_string(args[1 + int(m.group(1))])
                      if 1 + int(m.group(1)) < len(args) else m.group(), fmt).replace("{{", "{").replace("}}", "}")
    if name == "join" and args:
        sep = _to_string(args[1]) if len(args) > 1 else ","
        return sep.join(_to_string(x) for x in args[0]) if isinstance(args[0], list) else _to_string(args[0])
    if name == "tojson" and len(args) == 1:
        return json.dumps(args[0], indent=2)
    if name == "fromjson" and len(args) == 1:
        try:
            return json.loads(_to_string(args[0]))
        except ValueError as exc:
            raise NeedsRuntime(f"fromJSON: {exc}") from exc
    raise NeedsRuntime(f"{node.name}()")


# -- condition truthiness ----------------------------------------------------------


class Truthiness(str, Enum):
    ALWAYS_TRUE = "alwaysTrue"
    ALWAYS_FALSE = "alwaysFalse"
    DEPENDS_ON_RUNTIME = "dependsOnRuntime"


@dataclass(frozen=True)
class TruthinessVerdict:
    value: Truthiness
    reason: str
    forced_run: bool = False


def single_expression_body(text: str) -> str | None:
    """Body of ``text`` when it is exactly one ``${{ }}`` and nothing else."""
    if not (text.startswith("${{") and text.endswith("}}")):
        return None
    spans = list(iter_delimited(text))
    if len(spans) == 1 and spans[0] == (0, len(text), True):
        return text[3:-2]
    return None


def evaluate_condition(cond: RawCondition) -> TruthinessVerdict:
    text = cond.text
    block = cond.style in (ScalarStyle.FOLDED, ScalarStyle.LITERAL)
    if text.strip() == "":
        return TruthinessVerdict(Truthiness.ALWAYS_FALSE, "empty condition")
    body = single_expression_body(text)
    if body is not None:
        return _analyze(body)
    if "${{" in text:
        why = "block scalar renders to a non-empty string" if block else "expression interpolated into a string"
        return TruthinessVerdict(Truthiness.ALWAYS_TRUE, f"{why}; any non-empty string is true")
    return _analyze(text)


def _analyze(body: str) -> TruthinessVerdict:
    try:
        ast = parse_expression(body)
    except ExpressionSyntaxError as exc:
        return TruthinessVerdict(Truthiness.DEPENDS_ON_RUNTIME, f"unparseable expression: {exc}")
    if "always" in (n.lower() for n in function_names(ast)):
        return TruthinessVerdict(Truthiness.DEPENDS_ON_RUNTIME, "forced run via always()", forced_run=True)
    try:
        value = evaluate(ast)
    except NeedsRuntime as exc:
        return TruthinessVerdict(Truthiness.DEPENDS_ON_RUNTIME, f"depends on {exc}")
    if truthy(value):
        return TruthinessVerdict(Truthiness.ALWAYS_TRUE, f"constant expression evaluates to {_lit(value)}")
    return TruthinessVerdict(Truthiness.ALWAYS_FALSE, f"constant expression evaluates to {_lit(value)}")
