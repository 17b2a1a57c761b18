"""Parser, labeling, substitution, and printer round-trips."""

from __future__ import annotations

import random

import pytest

from depcore.errors import ParseError, UnboundVariableError
from depcore.generator import ProgramGenerator
from depcore.syntax import (
    App, Const, Get, If, Lam, New, Op, Put, Trace, UNDEFINED, Untrace, Var,
    Label, auto_class, labels_of, node_count, parse, pretty_print, relabel,
    substitute_trace, trace_sites, walk,
)


def test_parse_trace_default_mode_and_auto_class():
    e = parse("trace(4711)")
    assert isinstance(e, Trace)
    assert e.mode == "T"
    assert e.cls == auto_class(e.label)
    assert e.body == Const(4711.0)


def test_parse_application_of_lambda():
    e = parse("fun(x){ x }(5)")
    assert e == App(Lam(Label(1), "x", Var("x")), Const(5.0))


def test_let_sugar_expands_to_application():
    e = parse("let y = 1; y + 2")
    assert e == App(Lam(Label(1), "y", Op("+", Var("y"), Const(2.0))), Const(1.0))


def test_parse_classified_trace_and_untrace():
    e = parse('untrace(trace(1, "T", "#DOM"), "T" -> "S", "#DOM")')
    assert isinstance(e, Untrace)
    assert (e.from_mode, e.to_mode, e.cls) == ("T", "S", "#DOM")
    assert isinstance(e.body, Trace)
    assert e.body.mode == "T" and e.body.cls == "#DOM"


def test_parse_literals():
    e = parse('if (true) { undefined } else { null }')
    assert e == If(Const(True), Const(UNDEFINED), Const(None))
    assert parse('"a\\nb"') == Const("a\nb")
    assert parse("1.5e2") == Const(150.0)


def test_put_parses_lowest_precedence():
    e = parse('let o = new(null); o["f"] = 1 + 2')
    put = e.fn.body
    assert isinstance(put, Put)
    assert put.value == Op("+", Const(1.0), Const(2.0))


def test_operator_precedence_and_associativity():
    assert parse("1 + 2 * 3") == Op("+", Const(1.0), Op("*", Const(2.0), Const(3.0)))
    assert parse("1 - 2 - 3") == Op("-", Op("-", Const(1.0), Const(2.0)), Const(3.0))
    assert parse("1 + 2 < 4") == Op("<", Op("+", Const(1.0), Const(2.0)), Const(4.0))


def test_application_is_left_associative():
    e = parse("f(1)(2)" .replace("f", "fun(x){ x }"))
    assert isinstance(e, App) and isinstance(e.fn, App)


def test_labels_are_distinct_and_preorder():
    e = parse('let f = fun(x){ trace(x) }; f(new(null))')
    labels = labels_of(e)
    assert [l.id for l in labels] == sorted(l.id for l in labels)
    assert len(set(labels)) == len(labels)


def test_labels_stable_across_reparse():
    text = 'let f = fun(x){ trace(x) }; f(new(null))'
    assert parse(text) == parse(text)
    assert [l.id for l in labels_of(parse(text))] == \
           [l.id for l in labels_of(parse(text))]


def test_unbound_variable_reports_name_and_position():
    with pytest.raises(UnboundVariableError) as exc:
        parse("let x = 1; y")
    assert exc.value.name == "y"
    assert exc.value.line == 1


def test_syntax_error_reports_position():
    with pytest.raises(ParseError) as exc:
        parse("fun(x){ x }(")
    assert exc.value.line == 1


def test_undeclared_mode_rejected():
    with pytest.raises(ParseError):
        parse('trace(1, "X", "#DOM")')
    parse('trace(1, "X", "#DOM")', modes=("T", "S", "X"))


def test_substitute_trace_replaces_matching_body():
    e = parse("trace(1)")
    out = substitute_trace(e, e.label, Const(2.0))
    assert out == Trace(e.label, e.mode, e.cls, Const(2.0))


def test_substitute_trace_identity_when_label_absent():
    e = Const(5.0)
    assert substitute_trace(e, Label(3), Const(0.0)) == e


def test_substitute_trace_nested_sites():
    e = parse("trace(trace(7))")
    inner = e.body
    replacement = Const(1.0)
    out = substitute_trace(e, inner.label, replacement)
    assert out == Trace(e.label, e.mode, e.cls,
                        Trace(inner.label, inner.mode, inner.cls, replacement))


def test_substitute_trace_preserves_node_count_outside_sites():
    e = parse("let u = trace(3); u + trace(4)")
    sites = trace_sites(e)
    target = sites[0]
    out = substitute_trace(e, target.label, Const(9.0))
    # Replacement has the same size as the original body here, so the whole
    # tree keeps its node count; every non-trace node is rebuilt unchanged.
    assert node_count(out) == node_count(e)
    others = [t for t in trace_sites(out) if t.label != target.label]
    assert others == [t for t in trace_sites(e) if t.label != target.label]


def test_pretty_print_examples():
    assert pretty_print(Const(True)) == "true"
    e = App(Lam(Label(1), "x", Var("x")), Const(5.0))
    assert pretty_print(e) == "fun(x){ x }(5)"


def test_pretty_print_negative_constant_reparses():
    e = Op("+", Const(-5.0), Const(1.0))
    again = parse(pretty_print(e))
    assert again == Op("+", Op("-", Const(0.0), Const(5.0)), Const(1.0))


@pytest.mark.parametrize("seed", range(60))
def test_roundtrip_generated_programs(seed):
    gen = ProgramGenerator(random.Random(seed))
    program = gen.program()
    again = parse(pretty_print(program))
    assert again == program


def test_relabel_rewrites_auto_classes():
    e = parse("trace(1)")
    shifted = relabel(e, 10)
    assert shifted.label == Label(10)
    assert shifted.cls == auto_class(Label(10))


def test_generated_labels_distinct():
    gen = ProgramGenerator(random.Random(3))
    for _ in range(30):
        program = gen.program()
        labels = labels_of(program)
        assert len(set(labels)) == len(labels)
        for node in walk(program):
            if isinstance(node, (Lam, New, Trace)):
                assert node.label.id >= 1
