"""Abstract big-step evaluator and whole-program fixpoint driver.

The evaluator mirrors the concrete rules over abstract values: allocation
sites share one storable per label, property writes are weak updates, calls
go through a function store of joined input/output summaries, and branches
whose condition is not exactly ``true`` or ``false`` are both evaluated and
joined.  The driver re-runs the program (persisting the function store,
restarting the state) until the analysis triple becomes stable.
"""

from __future__ import annotations

from dataclasses import dataclass, field

from .errors import ResourceError
from .lattice import (
    AbstractClosure, AbstractObject, AbstractStorable, AbstractValue,
    BaseLattice, Flat, FunctionStore, Scope, State, UNDEFINED_DEFAULT,
    abstract_op, canonical_key, FALSE_ONLY, TRUE_ONLY,
)
from .syntax import (
    App, Const, Expr, Get, If, Lam, Mark, New, Op, Put, Trace, Untrace, Var,
    Label, rewrite_mode, trace_sites,
)

DEFAULT_ITERATION_CAP = 1000


@dataclass
class AnalysisState:
    """One iterate of the program fixpoint: ⟨function store, state, value⟩."""

    fstore: dict  # FunctionStore snapshot
    state: State
    value: AbstractValue

    def leq(self, other: "AnalysisState") -> bool:
        return (FunctionStore.snapshot_leq(self.fstore, other.fstore)
                and self.state.leq(other.state)
                and self.value.leq(other.value))

    @classmethod
    def bottom(cls) -> "AnalysisState":
        return cls({}, State.bottom(), AbstractValue.bottom())


@dataclass
class AnalysisReport:
    """Result of a whole-program analysis."""

    final_value: AbstractValue
    final_state: State
    iterations: int
    per_site_reachability: dict  # dict[Label, frozenset[Mark]]
    fstore: FunctionStore
    trajectory: list = field(default_factory=list)  # list[AnalysisState]


def _exactly(value: AbstractValue, singleton: BaseLattice) -> bool:
    return value.lattice == singleton and not value.objs


class Analyzer:
    """Evaluator for one analysis; shares a function store across runs."""

    def __init__(self, fstore: FunctionStore | None = None):
        self.fstore = fstore if fstore is not None else FunctionStore()
        # Labels whose body was already (re)analyzed in the current program
        # round.  A summary may only answer a call once its body has been
        # confirmed against the current function store; otherwise a stale
        # output recorded earlier would never re-propagate and the driver
        # would stabilize on it.  Recursive calls within a round still cut
        # through the summary.
        self.refreshed: set = set()

    def eval(self, state: State, scope: Scope, e: Expr) -> tuple:
        out_state, value = self._eval(state, scope, e)
        # Every rule restores the caller's context dependency.
        assert out_state.deps == state.deps
        return out_state, value

    def _eval(self, state: State, scope: Scope, e: Expr) -> tuple:
        if isinstance(e, Const):
            return state, AbstractValue(BaseLattice.embed(e.value), frozenset(),
                                        state.deps)

        if isinstance(e, Var):
            return state, scope[e.name].with_deps(state.deps)

        if isinstance(e, Op):
            s1, v0 = self.eval(state, scope, e.lhs)
            s2, v1 = self.eval(s1, scope, e.rhs)
            lat, objs = abstract_op(e.op, v0, v1)
            return s2, AbstractValue(lat, objs, v0.deps | v1.deps)

        if isinstance(e, New):
            s1, proto = self.eval(state, scope, e.proto)
            delta = AbstractStorable(AbstractObject.empty(), None, proto.objs)
            s2 = s1.joined_into(e.label, delta)
            return s2, AbstractValue(BaseLattice.bottom(), frozenset({e.label}),
                                     state.deps | proto.deps)

        if isinstance(e, Lam):
            self.fstore.ensure(e.label)
            delta = AbstractStorable(AbstractObject.empty(),
                                     AbstractClosure(scope, e), frozenset())
            s1 = state.joined_into(e.label, delta)
            return s1, AbstractValue(BaseLattice.bottom(), frozenset({e.label}),
                                     state.deps)

        if isinstance(e, App):
            s1, fn = self.eval(state, scope, e.fn)
            s2, arg = self.eval(s1, scope, e.arg)
            callees = s2.storables(fn.objs)
            ctx = s2.with_deps(s2.deps | fn.deps)
            s3, result = self.app_iterate(ctx, callees, arg)
            return s3.with_deps(state.deps), result

        if isinstance(e, If):
            s1, cond = self.eval(state, scope, e.cond)
            ctx = s1.with_deps(s1.deps | cond.deps)
            if _exactly(cond, TRUE_ONLY):
                s2, val = self.eval(ctx, scope, e.then)
                return s2.with_deps(state.deps), val
            if _exactly(cond, FALSE_ONLY):
                s2, val = self.eval(ctx, scope, e.orelse)
                return s2.with_deps(state.deps), val
            s_then, v_then = self.eval(ctx, scope, e.then)
            s_else, v_else = self.eval(ctx, scope, e.orelse)
            joined = s_then.join(s_else)
            return joined.with_deps(state.deps), v_then.join(v_else)

        if isinstance(e, Get):
            s1, obj = self.eval(state, scope, e.obj)
            s2, key = self.eval(s1, scope, e.key)
            key_lattice = key.lattice.string
            if key_lattice.is_bottom:
                found = AbstractValue.bottom()  # no string key: empty iteration
            else:
                found = self.get_iterate(s2, s2.storables(obj.objs), key_lattice)
            return s2, AbstractValue(found.lattice, found.objs,
                                     obj.deps | key.deps | found.deps)

        if isinstance(e, Put):
            s1, obj = self.eval(state, scope, e.obj)
            s2, key = self.eval(s1, scope, e.key)
            s3, val = self.eval(s2, scope, e.value)
            key_lattice = key.lattice.string
            if key_lattice.is_bottom:
                return s3, val
            stored = AbstractValue(val.lattice, val.objs,
                                   obj.deps | key.deps | val.deps)
            s4 = self.put_iterate(s3, obj.objs, key_lattice, stored)
            return s4, val

        if isinstance(e, Trace):
            mark = Mark(e.label, e.mode, e.cls)
            sub = state.with_deps(state.deps | {mark})
            s1, val = self.eval(sub, scope, e.body)
            return s1.with_deps(state.deps), val

        if isinstance(e, Untrace):
            s1, val = self.eval(state, scope, e.body)
            deps = rewrite_mode(val.deps, e.from_mode, e.to_mode, e.cls)
            return (s1.with_deps(state.deps),
                    AbstractValue(val.lattice, val.objs, deps))

        raise TypeError(f"not an expression: {e!r}")

    # --- auxiliary iteration systems ---

    def app_iterate(self, state: State, callees: list,
                    arg: AbstractValue) -> tuple:
        """Fold a call over every referenced storable, joining results.

        Per callee with a closure, the function store either answers from
        its summary (input subsumed) or joins the input, re-analyzes the
        body, and grows the stored output.  Storables without closures are
        skipped; no callees yield ⊥.
        """
        result = AbstractValue.bottom()
        current = state
        for cell in callees:
            if cell.closure is None:
                continue
            current, value = self._apply_closure(current, cell.closure, arg)
            result = result.join(value)
        return current, result

    def _apply_closure(self, state: State, closure: AbstractClosure,
                       arg: AbstractValue) -> tuple:
        label = closure.lam.label
        self.fstore.ensure(label)
        fresh = label not in self.refreshed
        self.refreshed.add(label)
        if not fresh and self.fstore.covers_input(label, state, arg):
            summary = self.fstore.get(label)
            return summary.out_state, summary.out_value
        in_state, in_value = self.fstore.join_input(label, state, arg)
        self.fstore.count_eval(label)
        body_scope = closure.scope.bound(closure.lam.param, in_value)
        out_state, out_value = self.eval(in_state, body_scope, closure.lam.body)
        return self.fstore.join_output(label, out_state, out_value)

    def get_iterate(self, state: State, receivers: list,
                    key: Flat) -> AbstractValue:
        """Join all entries meeting the key over every receiver, its
        prototype chain, and the absent-property ``undefined`` default."""
        visited: set = set()

        def from_cells(cells: list) -> AbstractValue:
            acc = AbstractValue.bottom()
            for cell in cells:
                acc = acc.join(from_cell(cell))
            return acc

        def from_cell(cell: AbstractStorable) -> AbstractValue:
            acc = UNDEFINED_DEFAULT
            for entry_key, entry_val in cell.obj.entries.items():
                if not key.meet(entry_key).is_bottom:
                    acc = acc.join(entry_val)
            fresh = [l for l in sorted(cell.protos, key=lambda lab: lab.id)
                     if l in state.store and l not in visited]
            visited.update(fresh)
            return acc.join(from_cells([state.store[l] for l in fresh]))

        return from_cells(receivers)

    def put_iterate(self, state: State, targets: frozenset, key: Flat,
                    value: AbstractValue) -> State:
        """Weak update of the canonical key entry on every target label;
        labels outside the store are skipped."""
        canon = canonical_key(key)
        store = dict(state.store)
        for label in sorted(targets, key=lambda lab: lab.id):
            if label not in store:
                continue
            cell = store[label]
            store[label] = AbstractStorable(cell.obj.updated(canon, value),
                                            cell.closure, cell.protos)
        return State(store, state.deps)


def analyze_program(e: Expr, *, iteration_cap: int = DEFAULT_ITERATION_CAP,
                    keep_trajectory: bool = False) -> AnalysisReport:
    """Iterate the abstract evaluation of a closed program to a fixpoint.

    Each round re-evaluates from the empty state and scope while the
    function store persists; the driver stops when the ⟨store, state,
    value⟩ triple repeats.  Exceeding the cap indicates a monotonicity bug
    and raises :class:`ResourceError`.
    """
    analyzer = Analyzer()
    previous = AnalysisState.bottom()
    trajectory = [previous] if keep_trajectory else []
    for iteration in range(1, iteration_cap + 1):
        analyzer.refreshed.clear()
        state, value = analyzer.eval(State.bottom(), Scope.empty(), e)
        current = AnalysisState(analyzer.fstore.snapshot(), state, value)
        if keep_trajectory:
            trajectory.append(current)
        if current == previous:
            reachability = {
                site.label: frozenset(m for m in value.deps if m.label == site.label)
                for site in trace_sites(e)
            }
            return AnalysisReport(value, state, iteration, reachability,
                                  analyzer.fstore, trajectory)
        previous = current
    raise ResourceError(f"fixpoint iteration cap of {iteration_cap} exceeded")
