"""Consistency relation between concrete and abstract results."""

from __future__ import annotations

import random

from conftest import rand_marks, rand_state, rand_value, rand_concrete
from depcore.concrete import Closure, Location, Storable, TaintedValue, evaluate
from depcore.consistency import (
    consistent_heap, consistent_value, differential_check,
)
from depcore.generator import ProgramGenerator
from depcore.lattice import (
    AbstractClosure, AbstractObject, AbstractStorable, AbstractValue,
    BaseLattice, Flat, Scope, State, UNDEFINED_DEFAULT, alpha,
)
from depcore.syntax import Const, Lam, Label, Mark, parse


def mk_mark(i=1, mode="T", cls="#t") -> Mark:
    return Mark(Label(i), mode, cls)


def test_value_consistency_requires_mark_inclusion():
    t, u = mk_mark(1), mk_mark(2)
    omega = TaintedValue(4711.0, frozenset({t}))
    wide = AbstractValue(BaseLattice.embed(4711.0), frozenset(), frozenset({t, u}))
    assert consistent_value(omega, wide).ok
    empty = AbstractValue(BaseLattice.embed(4711.0))
    verdict = consistent_value(omega, empty)
    assert not verdict.ok and "deps" in verdict.failure_path


def test_value_consistency_requires_lattice_membership():
    omega = TaintedValue(4711.0)
    assert not consistent_value(omega, AbstractValue(BaseLattice.embed(1.0))).ok
    assert consistent_value(omega, AbstractValue(BaseLattice(num=Flat.top()))).ok


def test_location_consistency_is_label_membership():
    omega = TaintedValue(Location(3, Label(4)))
    assert consistent_value(
        omega, AbstractValue(BaseLattice.bottom(), frozenset({Label(4)}))).ok
    assert not consistent_value(
        omega, AbstractValue(BaseLattice.bottom(), frozenset({Label(5)}))).ok


def test_empty_heap_is_consistent_with_anything():
    rng = random.Random(1)
    for _ in range(20):
        assert consistent_heap({}, rand_state(rng)).ok


def test_heap_consistency_clause_by_clause():
    label = Label(2)
    loc = Location(1, label)
    heap = {loc: Storable(obj={"f": TaintedValue(1.0)}, proto=None)}
    entries = {Flat.const("f"): AbstractValue(BaseLattice.embed(1.0)),
               Flat.top(): UNDEFINED_DEFAULT}
    state = State({label: AbstractStorable(AbstractObject(entries))},
                  frozenset())
    assert consistent_heap(heap, state).ok


def test_heap_consistency_fails_on_missing_label():
    loc = Location(1, Label(2))
    heap = {loc: Storable(obj={"f": TaintedValue(1.0)})}
    verdict = consistent_heap(heap, State.bottom())
    assert not verdict.ok and "ℓ2" in verdict.failure_path


def test_heap_consistency_checks_closures_and_prototypes():
    lam = Lam(Label(3), "x", Const(0.0))
    omega = TaintedValue(2.0, frozenset({mk_mark()}))
    heap = {
        Location(1, Label(3)): Storable(closure=Closure({"y": omega}, lam)),
        Location(2, Label(4)): Storable(proto=Location(1, Label(3))),
    }
    good_scope = Scope({"y": alpha(omega), "extra": AbstractValue.bottom()})
    state = State({
        Label(3): AbstractStorable(AbstractObject.empty(),
                                   AbstractClosure(good_scope, lam),
                                   frozenset()),
        Label(4): AbstractStorable(AbstractObject.empty(), None,
                                   frozenset({Label(3)})),
    }, frozenset())
    assert consistent_heap(heap, state).ok

    # Missing environment binding in the abstract scope is a failure.
    bad_state = State({
        Label(3): AbstractStorable(AbstractObject.empty(),
                                   AbstractClosure(Scope.empty(), lam),
                                   frozenset()),
        Label(4): state.store[Label(4)],
    }, frozenset())
    assert not consistent_heap(heap, bad_state).ok

    # A prototype location must be covered by the prototype label set.
    bad_proto = State({
        Label(3): state.store[Label(3)],
        Label(4): AbstractStorable(AbstractObject.empty(), None, frozenset()),
    }, frozenset())
    verdict = consistent_heap(heap, bad_proto)
    assert not verdict.ok and "proto" in verdict.failure_path


def test_upward_closure_of_consistency():
    rng = random.Random(9)
    hits = 0
    for _ in range(4000):
        omega = rand_concrete(rng)
        small = alpha(omega).join(rand_value(rng)) if rng.random() < 0.5 \
            else rand_value(rng)
        if not consistent_value(omega, small).ok:
            continue
        hits += 1
        bigger = small.join(rand_value(rng))
        assert consistent_value(omega, bigger).ok
    assert hits > 500


def test_dependency_join_compatibility():
    rng = random.Random(10)
    for _ in range(2000):
        omega = rand_concrete(rng)
        theta = alpha(omega).join(rand_value(rng))
        extra_marks = rand_marks(rng)
        extra_deps = frozenset(extra_marks | rand_marks(rng))
        joined_omega = TaintedValue(omega.value, omega.marks | extra_marks)
        joined_theta = AbstractValue(theta.lattice, theta.objs,
                                     theta.deps | extra_deps)
        assert consistent_value(joined_omega, joined_theta).ok


def test_property_update_preserves_storable_consistency():
    rng = random.Random(11)
    for _ in range(1500):
        key = rng.choice(("f", "g"))
        omega = rand_concrete(rng)
        cell = Storable(obj={key: omega})
        abstract = AbstractStorable(
            AbstractObject({Flat.const(key): alpha(omega)}))
        state = State({Label(1): abstract}, frozenset())
        heap = {Location(1, Label(1)): cell}
        assert consistent_heap(heap, state).ok
        # Weak update with an arbitrary value keeps the heap consistent.
        updated = AbstractStorable(
            abstract.obj.updated(Flat.const(key), rand_value(rng)))
        assert consistent_heap(heap, State({Label(1): updated},
                                           frozenset())).ok


def test_differential_simple_examples():
    assert differential_check(parse("trace(1) + 2")).is_pass
    assert differential_check(parse("fun(x){ x }(7)")).is_pass
    assert differential_check(parse('let o = new(null); let u = o["f"] = trace(1); o["f"]')).is_pass


def test_differential_branch_put_divergence_between_engines():
    # Concrete takes one branch; the analysis joins both, leaving an entry
    # the concrete object never got.  Reads stay sound via the undefined
    # default, so the finals remain consistent.
    src = """
        let a = new(null);
        let o = new(null);
        let x = if (a == a) { 0 } else { o["f"] = 1 };
        o["g"]
    """
    assert differential_check(parse(src)).is_pass


def test_differential_inconclusive_on_divergence():
    src = 'let w = fun(g){ g(g) }; w(w)'
    verdict = differential_check(parse(src), budget=2_000)
    assert verdict.kind == "inconclusive"


def test_differential_inconclusive_on_stuck_program():
    verdict = differential_check(parse("1(2)"))
    assert verdict.kind == "inconclusive"


def test_differential_corpus_sample():
    rng = random.Random(77)
    gen = ProgramGenerator(rng)
    fails = sum(differential_check(gen.program()).is_fail for _ in range(120))
    assert fails == 0


def test_concrete_marks_subset_of_abstract_deps():
    # The over-approximation direction: unmarked abstractly implies
    # independent concretely.
    rng = random.Random(78)
    gen = ProgramGenerator(rng)
    from depcore.abstract import analyze_program
    checked = 0
    for _ in range(60):
        program = gen.program()
        try:
            _, omega = evaluate(program)
        except Exception:
            continue
        report = analyze_program(program)
        assert omega.marks <= report.final_value.deps
        checked += 1
    assert checked > 40
