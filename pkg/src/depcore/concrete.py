"""Concrete big-step evaluator with dependency-mark propagation.

Evaluation threads a heap, an environment, and a context mark set κ; every
rule joins the marks that influenced a value into its annotation.  The marks
are bookkeeping for the oracles, not a runtime security monitor.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Iterable, Mapping, NamedTuple

from .errors import EvalTypeError, ResourceError
from .syntax import (
    App, Const, Expr, Get, If, Lam, Mark, MarkSet, New, Op, Put, Trace,
    UNDEFINED, Untrace, Var, EMPTY_MARKS, Label, max_label_id, relabel,
    rewrite_mode, substitute_trace, render_const,
)

DEFAULT_STEP_BUDGET = 10**6


@dataclass(frozen=True, order=True)
class Location:
    """Heap address tagged with the label of the allocating site."""

    id: int
    label: Label

    def __str__(self) -> str:
        return f"ξ{self.id}^{self.label.text}"


# A concrete value is a base constant or a Location.


def kind_of(value: object) -> str:
    if isinstance(value, Location):
        return "loc"
    if value is UNDEFINED:
        return "undefined"
    if value is None:
        return "null"
    if isinstance(value, bool):
        return "bool"
    if isinstance(value, float):
        return "num"
    if isinstance(value, str):
        return "str"
    raise TypeError(f"not a concrete value: {value!r}")


def values_equal(v0: object, v1: object) -> bool:
    """Structural equality on base constants, identity on locations."""
    k0, k1 = kind_of(v0), kind_of(v1)
    if k0 != k1:
        return False
    return v0 == v1


@dataclass(frozen=True)
class TaintedValue:
    value: object
    marks: MarkSet = EMPTY_MARKS

    def with_marks(self, extra: MarkSet) -> "TaintedValue":
        if not extra:
            return self
        return TaintedValue(self.value, self.marks | extra)

    def __str__(self) -> str:
        rendered = str(self.value) if isinstance(self.value, Location) \
            else render_const(self.value)
        marks = ",".join(sorted(str(m) for m in self.marks))
        return f"{rendered}:{{{marks}}}"


class Closure(NamedTuple):
    env: dict  # dict[str, TaintedValue]; extended by copy, never mutated
    lam: Lam


@dataclass
class Storable:
    """Heap cell: property map, optional closure, prototype value."""

    obj: dict = field(default_factory=dict)  # dict[str, TaintedValue]
    closure: Closure | None = None
    proto: object = None  # ConcreteValue; null by default


Heap = dict  # dict[Location, Storable]


def proto_lookup(heap: Mapping, storable: Storable, key: str) -> TaintedValue:
    """Property lookup through the prototype chain.

    Returns ``undefined`` with no marks when the chain ends at a base
    constant; a visited set keeps the lookup total on prototype cycles.
    """
    visited: set = set()
    current = storable
    while True:
        if key in current.obj:
            return current.obj[key]
        proto = current.proto
        if not isinstance(proto, Location) or proto in visited or proto not in heap:
            return TaintedValue(UNDEFINED)
        visited.add(proto)
        current = heap[proto]


def op_apply(op: str, v0: object, v1: object) -> object:
    """Total operator semantics: ill-matched operand kinds yield undefined."""
    k0, k1 = kind_of(v0), kind_of(v1)
    if op == "==":
        return values_equal(v0, v1)
    if op == "+":
        if k0 == "num" and k1 == "num":
            return v0 + v1
        if k0 == "str" and k1 == "str":
            return v0 + v1
        return UNDEFINED
    if op in ("-", "*"):
        if k0 == "num" and k1 == "num":
            return v0 - v1 if op == "-" else v0 * v1
        return UNDEFINED
    if op == "<":
        if (k0 == "num" and k1 == "num") or (k0 == "str" and k1 == "str"):
            return v0 < v1
        return UNDEFINED
    raise ValueError(f"unknown operator {op!r}")


class Interp:
    """One evaluation run: owns the heap, allocation counter, and budget.

    ``observer(ctx, result)`` fires at every successful rule return and
    ``put_observer(ctx, receiver_marks, key_marks, stored)`` at every heap
    write; both exist for the property-test oracles.
    """

    def __init__(self, *, budget: int = DEFAULT_STEP_BUDGET,
                 observer: Callable | None = None,
                 put_observer: Callable | None = None):
        self.heap: Heap = {}
        self.budget = budget
        self.steps = 0
        self.observer = observer
        self.put_observer = put_observer
        self._next_loc = 1

    def alloc(self, label: Label, storable: Storable) -> Location:
        loc = Location(self._next_loc, label)
        self._next_loc += 1
        self.heap[loc] = storable
        return loc

    def eval(self, env: dict, ctx: MarkSet, e: Expr) -> TaintedValue:
        self.steps += 1
        if self.steps > self.budget:
            raise ResourceError(f"step budget of {self.budget} exceeded")
        result = self._eval(env, ctx, e)
        if self.observer is not None:
            self.observer(ctx, result)
        return result

    def _eval(self, env: dict, ctx: MarkSet, e: Expr) -> TaintedValue:
        if isinstance(e, Const):
            return TaintedValue(e.value, ctx)

        if isinstance(e, Var):
            return env[e.name].with_marks(ctx)

        if isinstance(e, Lam):
            loc = self.alloc(e.label, Storable(closure=Closure(env, e)))
            return TaintedValue(loc, ctx)

        if isinstance(e, Op):
            w0 = self.eval(env, ctx, e.lhs)
            w1 = self.eval(env, ctx, e.rhs)
            return TaintedValue(op_apply(e.op, w0.value, w1.value), w0.marks | w1.marks)

        if isinstance(e, New):
            proto = self.eval(env, ctx, e.proto)
            loc = self.alloc(e.label, Storable(proto=proto.value))
            return TaintedValue(loc, proto.marks)

        if isinstance(e, App):
            fn = self.eval(env, ctx, e.fn)
            if not isinstance(fn.value, Location):
                raise EvalTypeError(f"applied a non-function: {fn}")
            cell = self.heap[fn.value]
            if cell.closure is None:
                raise EvalTypeError(f"applied an object without closure: {fn}")
            arg = self.eval(env, ctx, e.arg)
            closure_env, lam = cell.closure
            callee_env = dict(closure_env)
            callee_env[lam.param] = arg
            return self.eval(callee_env, ctx | fn.marks, lam.body)

        if isinstance(e, If):
            cond = self.eval(env, ctx, e.cond)
            branch = e.then if cond.value is True else e.orelse
            return self.eval(env, ctx | cond.marks, branch)

        if isinstance(e, Get):
            obj = self.eval(env, ctx, e.obj)
            if not isinstance(obj.value, Location):
                raise EvalTypeError(f"property read on a non-object: {obj}")
            key = self.eval(env, ctx, e.key)
            if kind_of(key.value) != "str":
                raise EvalTypeError(f"property key is not a string: {key}")
            found = proto_lookup(self.heap, self.heap[obj.value], key.value)
            return found.with_marks(obj.marks | key.marks)

        if isinstance(e, Put):
            obj = self.eval(env, ctx, e.obj)
            if not isinstance(obj.value, Location):
                raise EvalTypeError(f"property write on a non-object: {obj}")
            key = self.eval(env, ctx, e.key)
            if kind_of(key.value) != "str":
                raise EvalTypeError(f"property key is not a string: {key}")
            val = self.eval(env, ctx, e.value)
            stored = val.with_marks(obj.marks | key.marks)
            self.heap[obj.value].obj[key.value] = stored
            if self.put_observer is not None:
                self.put_observer(ctx, obj.marks, key.marks, stored)
            return val

        if isinstance(e, Trace):
            mark = Mark(e.label, e.mode, e.cls)
            return self.eval(env, ctx | {mark}, e.body)

        if isinstance(e, Untrace):
            body = self.eval(env, ctx, e.body)
            return TaintedValue(
                body.value, rewrite_mode(body.marks, e.from_mode, e.to_mode, e.cls))

        raise TypeError(f"not an expression: {e!r}")


def evaluate(e: Expr, *, env: dict | None = None, ctx: MarkSet = EMPTY_MARKS,
             budget: int = DEFAULT_STEP_BUDGET,
             observer: Callable | None = None,
             put_observer: Callable | None = None) -> tuple[Heap, TaintedValue]:
    """Evaluate a closed expression from an empty heap; returns (heap, value).

    Deep object-language recursion maps onto interpreter recursion, so an
    exhausted Python stack counts as resource exhaustion just like the step
    budget.
    """
    interp = Interp(budget=budget, observer=observer, put_observer=put_observer)
    try:
        result = interp.eval(dict(env or {}), ctx, e)
    except RecursionError:
        raise ResourceError("evaluation recursion exceeded the interpreter stack")
    return interp.heap, result


# --- Noninterference oracle -----------------------------------------------------


@dataclass(frozen=True)
class Verdict:
    """Outcome of a sampling oracle: pass, fail (with witness), or inconclusive."""

    kind: str  # "pass" | "fail" | "inconclusive"
    reason: str = ""
    witness: tuple = ()

    @classmethod
    def passed(cls, reason: str = "") -> "Verdict":
        return cls("pass", reason)

    @classmethod
    def failed(cls, reason: str, witness: tuple = ()) -> "Verdict":
        return cls("fail", reason, witness)

    @classmethod
    def inconclusive(cls, reason: str) -> "Verdict":
        return cls("inconclusive", reason)

    @property
    def is_fail(self) -> bool:
        return self.kind == "fail"

    @property
    def is_pass(self) -> bool:
        return self.kind == "pass"


def values_equal_mod_renaming(v0: object, v1: object) -> bool:
    """Equality modulo an allocation-site-preserving renaming of locations.

    A renaming may map a location only to a location carrying the same site
    label, so two location results agree exactly when their labels do;
    base constants must be equal outright.
    """
    if isinstance(v0, Location) and isinstance(v1, Location):
        return v0.label == v1.label
    if isinstance(v0, Location) or isinstance(v1, Location):
        return False
    return values_equal(v0, v1)


def check_noninterference(e: Expr, label: Label, bodies: Iterable[Expr],
                          budget: int = DEFAULT_STEP_BUDGET) -> Verdict:
    """Sample the noninterference property at one trace site.

    Each candidate body is substituted for the site's body and the program is
    evaluated.  Whenever two runs terminate and neither result's mark set
    contains the site label, the result values must be equal modulo a
    location renaming; runs cut off by the budget make the verdict
    inconclusive rather than failing.
    """
    bodies = list(bodies)
    next_id = max_label_id(e) + 1
    outcomes: list = []
    for body in bodies:
        fresh_body = relabel(body, next_id)
        next_id = max(next_id, max_label_id(fresh_body) + 1)
        substituted = substitute_trace(e, label, fresh_body)
        try:
            _, result = evaluate(substituted, budget=budget)
        except ResourceError:
            outcomes.append(None)
            continue
        except EvalTypeError:
            outcomes.append(None)
            continue
        outcomes.append(result)

    conclusive = [(i, r) for i, r in enumerate(outcomes) if r is not None]
    if len(conclusive) < 2:
        return Verdict.inconclusive("fewer than two runs terminated in budget")

    for a in range(len(conclusive)):
        for b in range(a + 1, len(conclusive)):
            i, ri = conclusive[a]
            j, rj = conclusive[b]
            if any(m.label == label for m in ri.marks | rj.marks):
                continue  # marked results are exempt from the equality requirement
            if not values_equal_mod_renaming(ri.value, rj.value):
                return Verdict.failed(
                    f"results differ for bodies #{i} and #{j}: {ri} vs {rj}",
                    witness=(bodies[i], bodies[j], ri, rj))
    return Verdict.passed()
