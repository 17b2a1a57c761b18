"""Core language syntax: labeled AST, parser, printer, and trace substitution.

The surface language is a small JavaScript-like expression calculus.  Every
``fun``, ``new``, and ``trace`` expression carries a unique :class:`Label`;
labels are assigned in pre-order over the desugared tree, so they are stable
across re-parses of identical text and print as ``ℓ1``, ``ℓ2``, ...
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterable, Iterator, NamedTuple

from .errors import ParseError, UnboundVariableError

DEFAULT_MODES: tuple[str, ...] = ("T", "S")
DEFAULT_MODE = "T"

OPERATORS = ("+", "-", "*", "==", "<")


class Undefined:
    """The ``undefined`` constant (distinct from ``null``, which is None)."""

    _instance: "Undefined | None" = None

    def __new__(cls) -> "Undefined":
        if cls._instance is None:
            cls._instance = super().__new__(cls)
        return cls._instance

    def __repr__(self) -> str:
        return "undefined"


UNDEFINED = Undefined()

# Constants are booleans, floats, strings, None (null) or UNDEFINED.
Const_t = object


class Span(NamedTuple):
    file: str
    line: int
    col: int

    def __str__(self) -> str:
        return f"{self.file}:{self.line}:{self.col}"


@dataclass(frozen=True, order=True)
class Label:
    """Unique site identifier for lambda / new / trace expressions."""

    id: int
    origin: Span | None = field(default=None, compare=False, repr=False)

    @property
    def text(self) -> str:
        return f"ℓ{self.id}"

    def __str__(self) -> str:
        return self.text


class Mark(NamedTuple):
    """A dependency mark: trace-site label classified by mode and class id.

    Unclassified marks (plain ``trace(e)``) use the configured default mode
    and an auto-generated class id, so classified and unclassified marks
    share one shape.
    """

    label: Label
    mode: str
    cls: str

    def __str__(self) -> str:
        return f"{self.label.text}^{{{self.mode},{self.cls}}}"


MarkSet = frozenset  # frozenset[Mark]; joined with set union

EMPTY_MARKS: MarkSet = frozenset()


def rewrite_mode(marks: MarkSet, from_mode: str, to_mode: str, cls: str) -> MarkSet:
    """Substitute ``(ℓ, from_mode, cls) -> (ℓ, to_mode, cls)`` across a mark set."""
    return frozenset(
        Mark(m.label, to_mode, m.cls) if m.mode == from_mode and m.cls == cls else m
        for m in marks
    )


def auto_class(label: Label) -> str:
    """Class id assigned to one-argument ``trace`` sites."""
    return f"#{label.text}"


# --- AST ----------------------------------------------------------------------


@dataclass(frozen=True)
class Expr:
    span: Span | None = field(default=None, compare=False, repr=False, kw_only=True)


@dataclass(frozen=True)
class Const(Expr):
    value: object


@dataclass(frozen=True)
class Var(Expr):
    name: str


@dataclass(frozen=True)
class Lam(Expr):
    label: Label
    param: str
    body: Expr


@dataclass(frozen=True)
class App(Expr):
    fn: Expr
    arg: Expr


@dataclass(frozen=True)
class Op(Expr):
    op: str
    lhs: Expr
    rhs: Expr


@dataclass(frozen=True)
class If(Expr):
    cond: Expr
    then: Expr
    orelse: Expr


@dataclass(frozen=True)
class New(Expr):
    label: Label
    proto: Expr


@dataclass(frozen=True)
class Get(Expr):
    obj: Expr
    key: Expr


@dataclass(frozen=True)
class Put(Expr):
    obj: Expr
    key: Expr
    value: Expr


@dataclass(frozen=True)
class Trace(Expr):
    label: Label
    mode: str
    cls: str
    body: Expr


@dataclass(frozen=True)
class Untrace(Expr):
    from_mode: str
    to_mode: str
    cls: str
    body: Expr


def children(e: Expr) -> tuple[Expr, ...]:
    if isinstance(e, (Const, Var)):
        return ()
    if isinstance(e, Lam):
        return (e.body,)
    if isinstance(e, App):
        return (e.fn, e.arg)
    if isinstance(e, Op):
        return (e.lhs, e.rhs)
    if isinstance(e, If):
        return (e.cond, e.then, e.orelse)
    if isinstance(e, New):
        return (e.proto,)
    if isinstance(e, Get):
        return (e.obj, e.key)
    if isinstance(e, Put):
        return (e.obj, e.key, e.value)
    if isinstance(e, (Trace, Untrace)):
        return (e.body,)
    raise TypeError(f"not an expression: {e!r}")


def walk(e: Expr) -> Iterator[Expr]:
    """Pre-order traversal."""
    yield e
    for child in children(e):
        yield from walk(child)


def labels_of(e: Expr) -> list[Label]:
    """All site labels in pre-order."""
    return [node.label for node in walk(e) if isinstance(node, (Lam, New, Trace))]


def trace_sites(e: Expr) -> list[Trace]:
    return [node for node in walk(e) if isinstance(node, Trace)]


def node_count(e: Expr) -> int:
    return sum(1 for _ in walk(e))


def max_label_id(e: Expr) -> int:
    ids = [lab.id for lab in labels_of(e)]
    return max(ids, default=0)


def relabel(e: Expr, start: int = 1) -> Expr:
    """Reassign site labels in pre-order starting at ``start``.

    Auto-generated class ids of one-argument trace sites are kept in sync
    with the fresh labels; spans are preserved.
    """
    counter = [start]

    def fresh(old: Label) -> Label:
        lab = Label(counter[0], old.origin)
        counter[0] += 1
        return lab

    def go(node: Expr) -> Expr:
        if isinstance(node, Const):
            return node
        if isinstance(node, Var):
            return node
        if isinstance(node, Lam):
            lab = fresh(node.label)
            return Lam(lab, node.param, go(node.body), span=node.span)
        if isinstance(node, App):
            return App(go(node.fn), go(node.arg), span=node.span)
        if isinstance(node, Op):
            return Op(node.op, go(node.lhs), go(node.rhs), span=node.span)
        if isinstance(node, If):
            return If(go(node.cond), go(node.then), go(node.orelse), span=node.span)
        if isinstance(node, New):
            lab = fresh(node.label)
            return New(lab, go(node.proto), span=node.span)
        if isinstance(node, Get):
            return Get(go(node.obj), go(node.key), span=node.span)
        if isinstance(node, Put):
            return Put(go(node.obj), go(node.key), go(node.value), span=node.span)
        if isinstance(node, Trace):
            lab = fresh(node.label)
            cls = auto_class(lab) if node.cls == auto_class(node.label) else node.cls
            return Trace(lab, node.mode, cls, go(node.body), span=node.span)
        if isinstance(node, Untrace):
            return Untrace(
                node.from_mode, node.to_mode, node.cls, go(node.body), span=node.span
            )
        raise TypeError(f"not an expression: {node!r}")

    return go(e)


def substitute_trace(e: Expr, label: Label, replacement: Expr) -> Expr:
    """Replace the body of every ``trace`` site carrying ``label``.

    Homomorphic on every other node; an absent label yields an equal tree.
    """

    def go(node: Expr) -> Expr:
        if isinstance(node, (Const, Var)):
            return node
        if isinstance(node, Lam):
            return Lam(node.label, node.param, go(node.body), span=node.span)
        if isinstance(node, App):
            return App(go(node.fn), go(node.arg), span=node.span)
        if isinstance(node, Op):
            return Op(node.op, go(node.lhs), go(node.rhs), span=node.span)
        if isinstance(node, If):
            return If(go(node.cond), go(node.then), go(node.orelse), span=node.span)
        if isinstance(node, New):
            return New(node.label, go(node.proto), span=node.span)
        if isinstance(node, Get):
            return Get(go(node.obj), go(node.key), span=node.span)
        if isinstance(node, Put):
            return Put(go(node.obj), go(node.key), go(node.value), span=node.span)
        if isinstance(node, Trace):
            body = replacement if node.label == label else go(node.body)
            return Trace(node.label, node.mode, node.cls, body, span=node.span)
        if isinstance(node, Untrace):
            return Untrace(
                node.from_mode, node.to_mode, node.cls, go(node.body), span=node.span
            )
        raise TypeError(f"not an expression: {node!r}")

    return go(e)


def check_closed(e: Expr, filename: str = "<input>") -> None:
    """Raise :class:`UnboundVariableError` on the first free variable."""

    def go(node: Expr, bound: frozenset) -> None:
        if isinstance(node, Var):
            if node.name not in bound:
                span = node.span or Span(filename, 0, 0)
                raise UnboundVariableError(node.name, span.file, span.line, span.col)
            return
        if isinstance(node, Lam):
            go(node.body, bound | {node.param})
            return
        for child in children(node):
            go(child, bound)

    go(e, frozenset())


# --- Lexer --------------------------------------------------------------------

_KEYWORDS = {
    "fun", "if", "else", "new", "trace", "untrace", "let",
    "true", "false", "undefined", "null",
}

_PUNCT = ("==", "->", "(", ")", "{", "}", "[", "]", ";", ",", "+", "-", "*", "<", "=")


class _Token(NamedTuple):
    kind: str  # number | string | ident | keyword | punct | eof
    value: object
    span: Span


def _lex(text: str, filename: str) -> list[_Token]:
    tokens: list[_Token] = []
    i, line, col = 0, 1, 1
    n = len(text)

    def span() -> Span:
        return Span(filename, line, col)

    def err(msg: str) -> ParseError:
        return ParseError(msg, filename, line, col)

    while i < n:
        ch = text[i]
        if ch == "\n":
            i += 1
            line += 1
            col = 1
            continue
        if ch in " \t\r":
            i += 1
            col += 1
            continue
        if text.startswith("//", i):
            while i < n and text[i] != "\n":
                i += 1
            continue
        start = span()
        if ch.isdigit():
            j = i
            while j < n and text[j].isdigit():
                j += 1
            if j < n and text[j] == "." and j + 1 < n and text[j + 1].isdigit():
                j += 1
                while j < n and text[j].isdigit():
                    j += 1
            if j < n and text[j] in "eE":
                k = j + 1
                if k < n and text[k] in "+-":
                    k += 1
                if k < n and text[k].isdigit():
                    j = k
                    while j < n and text[j].isdigit():
                        j += 1
            tokens.append(_Token("number", float(text[i:j]), start))
            col += j - i
            i = j
            continue
        if ch == '"':
            j = i + 1
            out: list[str] = []
            while True:
                if j >= n or text[j] == "\n":
                    raise err("unterminated string literal")
                c = text[j]
                if c == '"':
                    j += 1
                    break
                if c == "\\":
                    if j + 1 >= n:
                        raise err("unterminated escape")
                    esc = text[j + 1]
                    mapped = {'"': '"', "\\": "\\", "n": "\n", "t": "\t", "r": "\r"}.get(esc)
                    if mapped is None:
                        raise err(f"unknown escape '\\{esc}'")
                    out.append(mapped)
                    j += 2
                    continue
                out.append(c)
                j += 1
            tokens.append(_Token("string", "".join(out), start))
            col += j - i
            i = j
            continue
        if ch.isalpha() or ch == "_":
            j = i
            while j < n and (text[j].isalnum() or text[j] == "_"):
                j += 1
            word = text[i:j]
            kind = "keyword" if word in _KEYWORDS else "ident"
            tokens.append(_Token(kind, word, start))
            col += j - i
            i = j
            continue
        for p in _PUNCT:
            if text.startswith(p, i):
                tokens.append(_Token("punct", p, start))
                i += len(p)
                col += len(p)
                break
        else:
            raise err(f"unexpected character {ch!r}")
    tokens.append(_Token("eof", None, span()))
    return tokens


# --- Parser -------------------------------------------------------------------


class _Parser:
    def __init__(self, tokens: list[_Token], filename: str,
                 default_mode: str, modes: frozenset):
        self.tokens = tokens
        self.pos = 0
        self.filename = filename
        self.default_mode = default_mode
        self.modes = modes
        self._next_label = 1

    # token plumbing

    def peek(self) -> _Token:
        return self.tokens[self.pos]

    def advance(self) -> _Token:
        tok = self.tokens[self.pos]
        self.pos += 1
        return tok

    def at(self, kind: str, value: object = None) -> bool:
        tok = self.peek()
        return tok.kind == kind and (value is None or tok.value == value)

    def expect(self, kind: str, value: object = None) -> _Token:
        tok = self.peek()
        if not self.at(kind, value):
            want = value if value is not None else kind
            raise self.err(f"expected {want!r}, found {tok.value!r}")
        return self.advance()

    def err(self, msg: str) -> ParseError:
        span = self.peek().span
        return ParseError(msg, span.file, span.line, span.col)

    def fresh_label(self, span: Span) -> Label:
        lab = Label(self._next_label, span)
        self._next_label += 1
        return lab

    def check_mode(self, mode: str, span: Span) -> str:
        if mode not in self.modes:
            raise ParseError(f"mode {mode!r} is not declared", span.file, span.line, span.col)
        return mode

    # grammar

    def parse_program(self) -> Expr:
        e = self.parse_expr()
        self.expect("eof")
        return e

    def parse_expr(self) -> Expr:
        if self.at("keyword", "let"):
            return self.parse_let()
        return self.parse_assign()

    def parse_let(self) -> Expr:
        tok = self.expect("keyword", "let")
        name = self.expect("ident").value
        self.expect("punct", "=")
        rhs = self.parse_expr()
        self.expect("punct", ";")
        body = self.parse_expr()
        # `let x = e1; e2` expands to `fun(x){ e2 }(e1)`
        lam = Lam(self.fresh_label(tok.span), str(name), body, span=tok.span)
        return App(lam, rhs, span=tok.span)

    def parse_assign(self) -> Expr:
        e = self.parse_cmp()
        if self.at("punct", "="):
            tok = self.advance()
            if not isinstance(e, Get):
                raise ParseError("assignment target must be a property reference",
                                 tok.span.file, tok.span.line, tok.span.col)
            value = self.parse_assign()
            return Put(e.obj, e.key, value, span=e.span)
        return e

    def parse_cmp(self) -> Expr:
        e = self.parse_add()
        while self.at("punct", "==") or self.at("punct", "<"):
            op = self.advance()
            rhs = self.parse_add()
            e = Op(str(op.value), e, rhs, span=op.span)
        return e

    def parse_add(self) -> Expr:
        e = self.parse_mul()
        while self.at("punct", "+") or self.at("punct", "-"):
            op = self.advance()
            rhs = self.parse_mul()
            e = Op(str(op.value), e, rhs, span=op.span)
        return e

    def parse_mul(self) -> Expr:
        e = self.parse_postfix()
        while self.at("punct", "*"):
            op = self.advance()
            rhs = self.parse_postfix()
            e = Op("*", e, rhs, span=op.span)
        return e

    def parse_postfix(self) -> Expr:
        e = self.parse_primary()
        while True:
            if self.at("punct", "("):
                tok = self.advance()
                arg = self.parse_expr()
                self.expect("punct", ")")
                e = App(e, arg, span=tok.span)
            elif self.at("punct", "["):
                tok = self.advance()
                key = self.parse_expr()
                self.expect("punct", "]")
                e = Get(e, key, span=tok.span)
            else:
                return e

    def parse_primary(self) -> Expr:
        tok = self.peek()
        if tok.kind == "number":
            self.advance()
            return Const(tok.value, span=tok.span)
        if tok.kind == "string":
            self.advance()
            return Const(tok.value, span=tok.span)
        if tok.kind == "ident":
            self.advance()
            return Var(str(tok.value), span=tok.span)
        if tok.kind == "keyword":
            word = tok.value
            if word == "true":
                self.advance()
                return Const(True, span=tok.span)
            if word == "false":
                self.advance()
                return Const(False, span=tok.span)
            if word == "undefined":
                self.advance()
                return Const(UNDEFINED, span=tok.span)
            if word == "null":
                self.advance()
                return Const(None, span=tok.span)
            if word == "fun":
                return self.parse_fun()
            if word == "if":
                return self.parse_if()
            if word == "new":
                return self.parse_new()
            if word == "trace":
                return self.parse_trace()
            if word == "untrace":
                return self.parse_untrace()
        if self.at("punct", "("):
            self.advance()
            e = self.parse_expr()
            self.expect("punct", ")")
            return e
        raise self.err(f"unexpected token {tok.value!r}")

    def parse_fun(self) -> Expr:
        tok = self.expect("keyword", "fun")
        self.expect("punct", "(")
        param = self.expect("ident").value
        self.expect("punct", ")")
        self.expect("punct", "{")
        body = self.parse_expr()
        self.expect("punct", "}")
        return Lam(self.fresh_label(tok.span), str(param), body, span=tok.span)

    def parse_if(self) -> Expr:
        tok = self.expect("keyword", "if")
        self.expect("punct", "(")
        cond = self.parse_expr()
        self.expect("punct", ")")
        self.expect("punct", "{")
        then = self.parse_expr()
        self.expect("punct", "}")
        self.expect("keyword", "else")
        self.expect("punct", "{")
        orelse = self.parse_expr()
        self.expect("punct", "}")
        return If(cond, then, orelse, span=tok.span)

    def parse_new(self) -> Expr:
        tok = self.expect("keyword", "new")
        self.expect("punct", "(")
        proto = self.parse_expr()
        self.expect("punct", ")")
        return New(self.fresh_label(tok.span), proto, span=tok.span)

    def parse_trace(self) -> Expr:
        tok = self.expect("keyword", "trace")
        self.expect("punct", "(")
        body = self.parse_expr()
        label = self.fresh_label(tok.span)
        if self.at("punct", ","):
            self.advance()
            mode_tok = self.expect("string")
            mode = self.check_mode(str(mode_tok.value), mode_tok.span)
            self.expect("punct", ",")
            cls_tok = self.expect("string")
            cls = str(cls_tok.value)
            if not cls:
                raise ParseError("class id must be non-empty",
                                 cls_tok.span.file, cls_tok.span.line, cls_tok.span.col)
        else:
            mode = self.default_mode
            cls = auto_class(label)
        self.expect("punct", ")")
        return Trace(label, mode, cls, body, span=tok.span)

    def parse_untrace(self) -> Expr:
        tok = self.expect("keyword", "untrace")
        self.expect("punct", "(")
        body = self.parse_expr()
        self.expect("punct", ",")
        from_tok = self.expect("string")
        from_mode = self.check_mode(str(from_tok.value), from_tok.span)
        self.expect("punct", "->")
        to_tok = self.expect("string")
        to_mode = self.check_mode(str(to_tok.value), to_tok.span)
        self.expect("punct", ",")
        cls_tok = self.expect("string")
        cls = str(cls_tok.value)
        if not cls:
            raise ParseError("class id must be non-empty",
                             cls_tok.span.file, cls_tok.span.line, cls_tok.span.col)
        self.expect("punct", ")")
        return Untrace(from_mode, to_mode, cls, body, span=tok.span)


def parse(text: str, *, filename: str = "<input>", default_mode: str = DEFAULT_MODE,
          modes: Iterable[str] = DEFAULT_MODES) -> Expr:
    """Parse source text into a fully labeled, closed expression.

    ``let x = e1; e2`` sugar is expanded to ``fun(x){ e2 }(e1)``.  Labels are
    reassigned in pre-order over the desugared tree so identical input text
    always yields identical labels.
    """
    mode_set = frozenset(modes)
    if default_mode not in mode_set:
        raise ValueError(f"default mode {default_mode!r} not in declared modes")
    parser = _Parser(_lex(text, filename), filename, default_mode, mode_set)
    raw = parser.parse_program()
    e = relabel(raw, 1)
    check_closed(e, filename)
    return e


# --- Printer ------------------------------------------------------------------

_PREC_PUT = 1
_PREC_CMP = 2
_PREC_ADD = 3
_PREC_MUL = 4
_PREC_POSTFIX = 5
_PREC_ATOM = 6


def render_const(value: object) -> str:
    if value is UNDEFINED:
        return "undefined"
    if value is None:
        return "null"
    if value is True:
        return "true"
    if value is False:
        return "false"
    if isinstance(value, float):
        if value == int(value) and abs(value) < 1e15:
            return str(int(value))
        return repr(value)
    if isinstance(value, str):
        escaped = (value.replace("\\", "\\\\").replace('"', '\\"')
                   .replace("\n", "\\n").replace("\t", "\\t").replace("\r", "\\r"))
        return f'"{escaped}"'
    raise TypeError(f"not a constant: {value!r}")


def pretty_print(e: Expr, *, default_mode: str = DEFAULT_MODE) -> str:
    """Render an expression as parseable source text.

    ``parse(pretty_print(e))`` is structurally equal to ``e`` whenever the
    labels of ``e`` are in pre-order (as produced by :func:`parse` and the
    program generator).
    """

    def quoted(s: str) -> str:
        return render_const(s)

    def go(node: Expr, prec: int) -> str:
        if isinstance(node, Const):
            # The grammar has no unary minus.
            if isinstance(node.value, float) and node.value < 0:
                return f"(0 - {render_const(-node.value)})"
            return render_const(node.value)
        if isinstance(node, Var):
            return node.name
        if isinstance(node, Lam):
            return f"fun({node.param}){{ {go(node.body, 0)} }}"
        if isinstance(node, App):
            return wrap(f"{go(node.fn, _PREC_POSTFIX)}({go(node.arg, 0)})",
                        _PREC_POSTFIX, prec)
        if isinstance(node, Op):
            level = {"==": _PREC_CMP, "<": _PREC_CMP,
                     "+": _PREC_ADD, "-": _PREC_ADD, "*": _PREC_MUL}[node.op]
            text = f"{go(node.lhs, level)} {node.op} {go(node.rhs, level + 1)}"
            return wrap(text, level, prec)
        if isinstance(node, If):
            return (f"if ({go(node.cond, 0)}) {{ {go(node.then, 0)} }}"
                    f" else {{ {go(node.orelse, 0)} }}")
        if isinstance(node, New):
            return f"new({go(node.proto, 0)})"
        if isinstance(node, Get):
            return wrap(f"{go(node.obj, _PREC_POSTFIX)}[{go(node.key, 0)}]",
                        _PREC_POSTFIX, prec)
        if isinstance(node, Put):
            text = (f"{go(node.obj, _PREC_POSTFIX)}[{go(node.key, 0)}]"
                    f" = {go(node.value, _PREC_PUT)}")
            return wrap(text, _PREC_PUT, prec)
        if isinstance(node, Trace):
            if node.mode == default_mode and node.cls == auto_class(node.label):
                return f"trace({go(node.body, 0)})"
            return f"trace({go(node.body, 0)}, {quoted(node.mode)}, {quoted(node.cls)})"
        if isinstance(node, Untrace):
            return (f"untrace({go(node.body, 0)}, {quoted(node.from_mode)}"
                    f" -> {quoted(node.to_mode)}, {quoted(node.cls)})")
        raise TypeError(f"not an expression: {node!r}")

    def wrap(text: str, level: int, prec: int) -> str:
        return f"({text})" if level < prec else text

    return go(e, 0)
