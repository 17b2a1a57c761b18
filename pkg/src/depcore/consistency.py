"""Executable consistency relation between concrete and abstract results.

A concrete heap / value is consistent with an abstract state / value when
every concrete component is contained in its abstract counterpart: marks by
set inclusion, constants by lattice membership, locations by allocation-site
label membership.  The differential oracle runs both engines on one program
and checks the finals.
"""

from __future__ import annotations

from dataclasses import dataclass

from .abstract import analyze_program, DEFAULT_ITERATION_CAP
from .concrete import (
    DEFAULT_STEP_BUDGET, Heap, Location, Storable, TaintedValue, Verdict,
    evaluate,
)
from .errors import EvalTypeError, ResourceError
from .lattice import AbstractStorable, AbstractValue, State
from .syntax import Expr, MarkSet


@dataclass(frozen=True)
class ConsistencyVerdict:
    ok: bool
    failure_path: str = ""

    @classmethod
    def good(cls) -> "ConsistencyVerdict":
        return cls(True)

    @classmethod
    def bad(cls, path: str) -> "ConsistencyVerdict":
        return cls(False, path)

    def __bool__(self) -> bool:
        return self.ok


_OK = ConsistencyVerdict.good()


def _marks_consistent(marks: MarkSet, deps: MarkSet, path: str) -> ConsistencyVerdict:
    if marks <= deps:
        return _OK
    missing = next(iter(marks - deps))
    return ConsistencyVerdict.bad(f"{path}: mark {missing} not in dependency set")


def consistent_value(omega: TaintedValue, theta: AbstractValue,
                     path: str = "value") -> ConsistencyVerdict:
    """Check ``ω ≺ ϑ``: mark inclusion plus value membership."""
    marks = _marks_consistent(omega.marks, theta.deps, f"{path}.deps")
    if not marks:
        return marks
    if isinstance(omega.value, Location):
        if omega.value.label not in theta.objs:
            return ConsistencyVerdict.bad(
                f"{path}: location label {omega.value.label.text} not in object set")
        return _OK
    if omega.value not in theta.lattice:
        return ConsistencyVerdict.bad(
            f"{path}: constant {omega.value!r} not in lattice element")
    return _OK


def _consistent_object(obj: dict, abstract: AbstractStorable,
                       path: str) -> ConsistencyVerdict:
    # Every present property must be covered by some abstract entry whose
    # key lattice contains it.
    for key, omega in obj.items():
        covered = False
        last_failure = None
        for entry_key, entry_val in abstract.obj.entries.items():
            if key in entry_key:
                verdict = consistent_value(omega, entry_val, f"{path}[{key!r}]")
                if verdict:
                    covered = True
                    break
                last_failure = verdict
        if not covered:
            return last_failure or ConsistencyVerdict.bad(
                f"{path}[{key!r}]: no abstract entry covers the key")
    return _OK


def _consistent_closure(cell: Storable, abstract: AbstractStorable, heap: Heap,
                        state: State, path: str) -> ConsistencyVerdict:
    # The clause is an implication: it only constrains storables where both
    # sides carry a closure.
    if cell.closure is None or abstract.closure is None:
        return _OK
    env, lam = cell.closure
    if lam != abstract.closure.lam:
        return ConsistencyVerdict.bad(f"{path}.closure: lambda bodies differ")
    scope = abstract.closure.scope
    for name, omega in env.items():
        if name not in scope.bindings:
            return ConsistencyVerdict.bad(
                f"{path}.closure.env[{name!r}]: unbound in abstract scope")
        verdict = consistent_value(omega, scope.bindings[name],
                                   f"{path}.closure.env[{name!r}]")
        if not verdict:
            return verdict
    return _OK


def _consistent_storable(cell: Storable, abstract: AbstractStorable, heap: Heap,
                         state: State, path: str) -> ConsistencyVerdict:
    verdict = _consistent_object(cell.obj, abstract, f"{path}.object")
    if not verdict:
        return verdict
    verdict = _consistent_closure(cell, abstract, heap, state, path)
    if not verdict:
        return verdict
    if isinstance(cell.proto, Location) and cell.proto.label not in abstract.protos:
        return ConsistencyVerdict.bad(
            f"{path}.proto: label {cell.proto.label.text} not in prototype set")
    return _OK


def consistent_heap(heap: Heap, state: State) -> ConsistencyVerdict:
    """Check ``H ≺ Γ``: every concrete storable is consistent with the
    abstract storable at its allocation label."""
    for loc in sorted(heap):
        path = f"heap[{loc}]"
        if loc.label not in state.store:
            return ConsistencyVerdict.bad(
                f"{path}: label {loc.label.text} not in abstract store")
        verdict = _consistent_storable(heap[loc], state.store[loc.label],
                                       heap, state, path)
        if not verdict:
            return verdict
    return _OK


def differential_check(e: Expr, *, budget: int = DEFAULT_STEP_BUDGET,
                       iteration_cap: int = DEFAULT_ITERATION_CAP) -> Verdict:
    """Run both engines on ``e`` and check the finals under ≺.

    A concrete run cut off by the budget or stuck on a type error leaves the
    check inconclusive: the property only speaks about successful concrete
    derivations.
    """
    try:
        heap, omega = evaluate(e, budget=budget)
    except ResourceError:
        return Verdict.inconclusive("concrete run exceeded the step budget")
    except EvalTypeError as exc:
        return Verdict.inconclusive(f"concrete run stuck: {exc}")

    report = analyze_program(e, iteration_cap=iteration_cap)
    value_verdict = consistent_value(omega, report.final_value)
    if not value_verdict:
        return Verdict.failed(value_verdict.failure_path, witness=(e, omega))
    heap_verdict = consistent_heap(heap, report.final_state)
    if not heap_verdict:
        return Verdict.failed(heap_verdict.failure_path, witness=(e, omega))
    return Verdict.passed()
