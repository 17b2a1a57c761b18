"""Abstract value domains: base-type lattice, dependency sets, stores.

The base-type lattice is a product of powerset components for undefined /
null / booleans and flat lattices for numbers and strings (⊥ below every
constant, ⊤ above; distinct constants join to ⊤).  An abstract value is a
triple of a lattice element, a set of allocation-site labels, and a
dependency set.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterable, NamedTuple

from .concrete import Location, TaintedValue, kind_of
from .syntax import Lam, Label, Mark, MarkSet, UNDEFINED, EMPTY_MARKS, render_const

# --- Flat lattice ---------------------------------------------------------------

_BOT = "bot"
_TOP = "top"
_CONST = "const"


@dataclass(frozen=True)
class Flat:
    """Flat lattice over an unbounded constant set: ⊥ | Const(v) | ⊤."""

    kind: str = _BOT
    value: object = None

    @classmethod
    def bottom(cls) -> "Flat":
        return _FLAT_BOT

    @classmethod
    def top(cls) -> "Flat":
        return _FLAT_TOP

    @classmethod
    def const(cls, value: object) -> "Flat":
        return cls(_CONST, value)

    @property
    def is_bottom(self) -> bool:
        return self.kind == _BOT

    @property
    def is_top(self) -> bool:
        return self.kind == _TOP

    @property
    def is_const(self) -> bool:
        return self.kind == _CONST

    def join(self, other: "Flat") -> "Flat":
        if self.is_bottom:
            return other
        if other.is_bottom:
            return self
        if self == other:
            return self
        return _FLAT_TOP

    def meet(self, other: "Flat") -> "Flat":
        if self.is_top:
            return other
        if other.is_top:
            return self
        if self == other:
            return self
        return _FLAT_BOT

    def leq(self, other: "Flat") -> bool:
        return self.is_bottom or other.is_top or self == other

    def __contains__(self, value: object) -> bool:
        return self.is_top or (self.is_const and self.value == value)

    def __str__(self) -> str:
        if self.is_bottom:
            return "⊥"
        if self.is_top:
            return "⊤"
        return render_const(self.value)


_FLAT_BOT = Flat(_BOT)
_FLAT_TOP = Flat(_TOP)


# --- Base type value lattice ------------------------------------------------------


@dataclass(frozen=True)
class BaseLattice:
    """Product lattice ⟨Undefined, Null, Bool, Num, String⟩."""

    undef: bool = False
    null: bool = False
    bools: frozenset = frozenset()
    num: Flat = _FLAT_BOT
    string: Flat = _FLAT_BOT

    @classmethod
    def bottom(cls) -> "BaseLattice":
        return _BASE_BOT

    @classmethod
    def embed(cls, const: object) -> "BaseLattice":
        """Singleton embedding of a base constant."""
        kind = kind_of(const)
        if kind == "undefined":
            return cls(undef=True)
        if kind == "null":
            return cls(null=True)
        if kind == "bool":
            return cls(bools=frozenset({const}))
        if kind == "num":
            return cls(num=Flat.const(const))
        if kind == "str":
            return cls(string=Flat.const(const))
        raise TypeError(f"not a base constant: {const!r}")

    def join(self, other: "BaseLattice") -> "BaseLattice":
        return BaseLattice(
            self.undef or other.undef,
            self.null or other.null,
            self.bools | other.bools,
            self.num.join(other.num),
            self.string.join(other.string),
        )

    def meet(self, other: "BaseLattice") -> "BaseLattice":
        return BaseLattice(
            self.undef and other.undef,
            self.null and other.null,
            self.bools & other.bools,
            self.num.meet(other.num),
            self.string.meet(other.string),
        )

    def leq(self, other: "BaseLattice") -> bool:
        return (self.undef <= other.undef
                and self.null <= other.null
                and self.bools <= other.bools
                and self.num.leq(other.num)
                and self.string.leq(other.string))

    @property
    def is_bottom(self) -> bool:
        return self == _BASE_BOT

    def __contains__(self, const: object) -> bool:
        kind = kind_of(const)
        if kind == "undefined":
            return self.undef
        if kind == "null":
            return self.null
        if kind == "bool":
            return const in self.bools
        if kind == "num":
            return const in self.num
        if kind == "str":
            return const in self.string
        return False

    def __str__(self) -> str:
        undef = "undefined" if self.undef else "⊥"
        null = "null" if self.null else "⊥"
        if not self.bools:
            bools = "⊥"
        else:
            bools = "{" + ",".join(sorted("true" if b else "false" for b in self.bools)) + "}"
        return f"⟨{undef},{null},{bools},{self.num},{self.string}⟩"


_BASE_BOT = BaseLattice()

BOOL_BOTH = BaseLattice(bools=frozenset({True, False}))
NUM_TOP = BaseLattice(num=_FLAT_TOP)
STRING_TOP = BaseLattice(string=_FLAT_TOP)
UNDEF_ONLY = BaseLattice(undef=True)

TRUE_ONLY = BaseLattice(bools=frozenset({True}))
FALSE_ONLY = BaseLattice(bools=frozenset({False}))


# --- Abstract values ---------------------------------------------------------------


@dataclass(frozen=True)
class AbstractValue:
    """Triple ⟨lattice element, abstract object labels, dependency set⟩."""

    lattice: BaseLattice = _BASE_BOT
    objs: frozenset = frozenset()  # frozenset[Label]
    deps: MarkSet = EMPTY_MARKS

    @classmethod
    def bottom(cls) -> "AbstractValue":
        return _VALUE_BOT

    @classmethod
    def of_const(cls, const: object, deps: MarkSet = EMPTY_MARKS) -> "AbstractValue":
        return cls(BaseLattice.embed(const), frozenset(), deps)

    def join(self, other: "AbstractValue") -> "AbstractValue":
        return AbstractValue(self.lattice.join(other.lattice),
                             self.objs | other.objs,
                             self.deps | other.deps)

    def leq(self, other: "AbstractValue") -> bool:
        return (self.lattice.leq(other.lattice)
                and self.objs <= other.objs
                and self.deps <= other.deps)

    def with_deps(self, extra: MarkSet) -> "AbstractValue":
        if extra <= self.deps:
            return self
        return AbstractValue(self.lattice, self.objs, self.deps | extra)

    def __str__(self) -> str:
        objs = "{" + ",".join(l.text for l in sorted(self.objs)) + "}"
        deps = "{" + ",".join(sorted(str(m) for m in self.deps)) + "}"
        return f"⟨{self.lattice},{objs},{deps}⟩"


_VALUE_BOT = AbstractValue()

# Default read result for properties that may be absent (Get-Empty).
UNDEFINED_DEFAULT = AbstractValue(UNDEF_ONLY)


def alpha(omega: TaintedValue) -> AbstractValue:
    """Abstraction of a tainted value.

    Locations map to their allocation-site label with a ⊥ lattice part;
    base constants map to their singleton embedding.  Marks carry over
    unchanged.
    """
    deps = frozenset(omega.marks)
    if isinstance(omega.value, Location):
        return AbstractValue(BaseLattice.bottom(), frozenset({omega.value.label}), deps)
    return AbstractValue(BaseLattice.embed(omega.value), frozenset(), deps)


# --- Abstract operator semantics ----------------------------------------------------

# Atoms enumerate the value kinds an abstract operand may contain.  The flat
# num / string components contribute either one constant or an anonymous ⊤
# witness; the label set contributes a single "obj" atom.
_Atom = tuple


def _atoms(value: AbstractValue) -> list:
    lat = value.lattice
    atoms: list = []
    if lat.undef:
        atoms.append(("undefined", None))
    if lat.null:
        atoms.append(("null", None))
    for b in lat.bools:
        atoms.append(("bool", b))
    if lat.num.is_const:
        atoms.append(("num", lat.num.value))
    elif lat.num.is_top:
        atoms.append(("num", _FLAT_TOP))
    if lat.string.is_const:
        atoms.append(("str", lat.string.value))
    elif lat.string.is_top:
        atoms.append(("str", _FLAT_TOP))
    if value.objs:
        atoms.append(("obj", value.objs))
    return atoms


def _pair_result(op: str, a: _Atom, b: _Atom) -> BaseLattice:
    ka, va = a
    kb, vb = b
    top_a = va is _FLAT_TOP
    top_b = vb is _FLAT_TOP

    if op == "==":
        if ka != kb:
            return FALSE_ONLY
        if ka in ("undefined", "null"):
            return TRUE_ONLY
        if ka == "bool":
            return BaseLattice.embed(va == vb)
        if ka in ("num", "str"):
            if top_a or top_b:
                return BOOL_BOTH
            return BaseLattice.embed(va == vb)
        if ka == "obj":
            # Same-site locations may or may not be identical; distinct
            # sites always compare unequal.
            return BOOL_BOTH if (va & vb) else FALSE_ONLY
        raise AssertionError(ka)

    if op == "+":
        if ka == "num" and kb == "num":
            return NUM_TOP if (top_a or top_b) else BaseLattice.embed(va + vb)
        if ka == "str" and kb == "str":
            return STRING_TOP if (top_a or top_b) else BaseLattice.embed(va + vb)
        return UNDEF_ONLY

    if op in ("-", "*"):
        if ka == "num" and kb == "num":
            if top_a or top_b:
                return NUM_TOP
            return BaseLattice.embed(va - vb if op == "-" else va * vb)
        return UNDEF_ONLY

    if op == "<":
        if ka == kb and ka in ("num", "str"):
            if top_a or top_b:
                return BOOL_BOTH
            return BaseLattice.embed(va < vb)
        return UNDEF_ONLY

    raise ValueError(f"unknown operator {op!r}")


def abstract_op(op: str, v0: AbstractValue, v1: AbstractValue) -> tuple:
    """Closed form of the big-join of the concrete operator over two
    abstract operands.  Returns ``(lattice, labels)``; operators only ever
    produce base constants, so the label component is empty.
    """
    result = BaseLattice.bottom()
    for a in _atoms(v0):
        for b in _atoms(v1):
            result = result.join(_pair_result(op, a, b))
    return result, frozenset()


# --- Abstract objects, storables, scopes ---------------------------------------------


class AbstractClosure(NamedTuple):
    scope: "Scope"
    lam: Lam


@dataclass
class AbstractObject:
    """Map from canonical string-key lattice elements to abstract values.

    Keys are restricted to ``Flat.const(s)`` and ``Flat.top()``; a write
    with any non-singleton string key collapses into the single ⊤ entry.
    """

    entries: dict = field(default_factory=dict)  # dict[Flat, AbstractValue]

    @classmethod
    def empty(cls) -> "AbstractObject":
        return cls({})

    def join(self, other: "AbstractObject") -> "AbstractObject":
        merged = dict(self.entries)
        for key, val in other.entries.items():
            merged[key] = merged[key].join(val) if key in merged else val
        return AbstractObject(merged)

    def leq(self, other: "AbstractObject") -> bool:
        return all(key in other.entries and val.leq(other.entries[key])
                   for key, val in self.entries.items())

    def updated(self, key: Flat, value: AbstractValue) -> "AbstractObject":
        """Weak update: join into an existing entry, bind otherwise."""
        entries = dict(self.entries)
        entries[key] = entries[key].join(value) if key in entries else value
        return AbstractObject(entries)


def canonical_key(string_lattice: Flat) -> Flat:
    """Canonicalize a property-key lattice: a constant stays, anything
    wider collapses to ⊤."""
    if string_lattice.is_const:
        return string_lattice
    return Flat.top()


@dataclass
class Scope:
    bindings: dict = field(default_factory=dict)  # dict[str, AbstractValue]

    @classmethod
    def empty(cls) -> "Scope":
        return cls({})

    def join(self, other: "Scope") -> "Scope":
        merged = dict(self.bindings)
        for name, val in other.bindings.items():
            merged[name] = merged[name].join(val) if name in merged else val
        return Scope(merged)

    def leq(self, other: "Scope") -> bool:
        return all(name in other.bindings and val.leq(other.bindings[name])
                   for name, val in self.bindings.items())

    def bound(self, name: str, value: AbstractValue) -> "Scope":
        bindings = dict(self.bindings)
        bindings[name] = value
        return Scope(bindings)

    def __getitem__(self, name: str) -> AbstractValue:
        return self.bindings[name]


@dataclass
class AbstractStorable:
    """Abstract heap cell: object map, optional closure, prototype labels."""

    obj: AbstractObject = field(default_factory=AbstractObject.empty)
    closure: AbstractClosure | None = None
    protos: frozenset = frozenset()  # frozenset[Label]

    @classmethod
    def bottom(cls) -> "AbstractStorable":
        return cls()

    def join(self, other: "AbstractStorable") -> "AbstractStorable":
        if self.closure is None:
            closure = other.closure
        elif other.closure is None:
            closure = self.closure
        else:
            if self.closure.lam != other.closure.lam:
                raise ValueError("joining storables of distinct lambdas")
            closure = AbstractClosure(
                self.closure.scope.join(other.closure.scope), self.closure.lam)
        return AbstractStorable(self.obj.join(other.obj), closure,
                                self.protos | other.protos)

    def leq(self, other: "AbstractStorable") -> bool:
        if self.closure is not None:
            if other.closure is None or self.closure.lam != other.closure.lam:
                return False
            if not self.closure.scope.leq(other.closure.scope):
                return False
        return self.obj.leq(other.obj) and self.protos <= other.protos


# --- Analysis state -------------------------------------------------------------------


@dataclass
class State:
    """Abstract object store Σ plus the context dependency set D."""

    store: dict = field(default_factory=dict)  # dict[Label, AbstractStorable]
    deps: MarkSet = EMPTY_MARKS

    @classmethod
    def bottom(cls) -> "State":
        return cls({}, EMPTY_MARKS)

    def join(self, other: "State") -> "State":
        merged = dict(self.store)
        for label, cell in other.store.items():
            merged[label] = merged[label].join(cell) if label in merged else cell
        return State(merged, self.deps | other.deps)

    def leq(self, other: "State") -> bool:
        if not self.deps <= other.deps:
            return False
        return all(label in other.store and cell.leq(other.store[label])
                   for label, cell in self.store.items())

    def with_deps(self, deps: MarkSet) -> "State":
        return State(self.store, deps)

    def joined_into(self, label: Label, delta: AbstractStorable) -> "State":
        store = dict(self.store)
        store[label] = store[label].join(delta) if label in store else delta
        return State(store, self.deps)

    def storables(self, labels: Iterable) -> list:
        """Storables for the labels present in the store, in label order."""
        return [self.store[l] for l in sorted(labels, key=lambda lab: lab.id)
                if l in self.store]


# --- Function store --------------------------------------------------------------------


class Summary(NamedTuple):
    in_state: State
    in_value: AbstractValue
    out_state: State
    out_value: AbstractValue

    def leq(self, other: "Summary") -> bool:
        return (self.in_state.leq(other.in_state)
                and self.in_value.leq(other.in_value)
                and self.out_state.leq(other.out_state)
                and self.out_value.leq(other.out_value))


_BOTTOM_SUMMARY = Summary(State.bottom(), AbstractValue.bottom(),
                          State.bottom(), AbstractValue.bottom())


class FunctionStore:
    """Per-analysis memo table of joined input/output summaries per lambda.

    Entries only grow: inputs and outputs are joined on update, never
    replaced, so iterated analyses form an ascending chain.  ``eval_counts``
    records how often each body was (re)analyzed, which makes memoization
    observable in tests.
    """

    def __init__(self) -> None:
        self.summaries: dict = {}  # dict[Label, Summary]
        self.eval_counts: dict = {}  # dict[Label, int]

    def ensure(self, label: Label) -> None:
        if label not in self.summaries:
            self.summaries[label] = _BOTTOM_SUMMARY

    def get(self, label: Label) -> Summary:
        return self.summaries.get(label, _BOTTOM_SUMMARY)

    def covers_input(self, label: Label, state: State, value: AbstractValue) -> bool:
        summary = self.get(label)
        return state.leq(summary.in_state) and value.leq(summary.in_value)

    def join_input(self, label: Label, state: State,
                   value: AbstractValue) -> tuple:
        old = self.get(label)
        joined_state = old.in_state.join(state)
        joined_value = old.in_value.join(value)
        self.summaries[label] = Summary(joined_state, joined_value,
                                        old.out_state, old.out_value)
        return joined_state, joined_value

    def join_output(self, label: Label, state: State,
                    value: AbstractValue) -> tuple:
        old = self.get(label)
        joined_state = old.out_state.join(state)
        joined_value = old.out_value.join(value)
        self.summaries[label] = Summary(old.in_state, old.in_value,
                                        joined_state, joined_value)
        return joined_state, joined_value

    def count_eval(self, label: Label) -> None:
        self.eval_counts[label] = self.eval_counts.get(label, 0) + 1

    def snapshot(self) -> dict:
        """Immutable-enough copy for cross-iteration equality checks."""
        return dict(self.summaries)

    @staticmethod
    def snapshot_leq(a: dict, b: dict) -> bool:
        return all(label in b and summary.leq(b[label])
                   for label, summary in a.items())
