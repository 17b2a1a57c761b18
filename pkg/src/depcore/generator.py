"""Seeded random program generator for the sampling oracles.

Programs are built shape-aware: property accesses only ever target
definitely-object variables and calls only target definitely-function
variables, so generated programs never get stuck, and without recursion
they always terminate.  Conditions occasionally compare object references
(statically undecidable) and functions are sometimes called twice with
different constants, which drives the abstract engine through its joining
paths.
"""

from __future__ import annotations

import random
from dataclasses import dataclass, field

from .syntax import (
    App, Const, Expr, Get, If, Lam, New, Op, Put, Trace, UNDEFINED, Untrace,
    Var, Label, relabel, trace_sites,
)

_CONST_POOL = (True, False, 0.0, 1.0, 2.0, 3.0, 7.0, 42.0,
               "", "a", "b", "key", "uid", None, UNDEFINED)
_KEY_POOL = ("f", "g", "name", "data")
_OP_POOL = ("+", "-", "*", "==", "<")
_CLASS_POOL = ("#DOM", "#NET", "#IO")

_DUMMY = Label(0)


@dataclass
class _Env:
    base: list = field(default_factory=list)
    objs: list = field(default_factory=list)
    funs: list = field(default_factory=list)
    counter: int = 0

    def fresh(self, prefix: str) -> str:
        self.counter += 1
        return f"{prefix}{self.counter}"

    def snapshot(self) -> "_Env":
        return _Env(list(self.base), list(self.objs), list(self.funs), self.counter)


class ProgramGenerator:
    """Draws closed, fully labeled programs from a seeded RNG."""

    def __init__(self, rng: random.Random, *, max_depth: int = 4,
                 trace_probability: float = 0.25, modes: tuple = ("T", "S"),
                 default_mode: str = "T", allow_untrace: bool = True):
        self.rng = rng
        self.max_depth = max_depth
        self.trace_probability = trace_probability
        self.modes = modes
        self.default_mode = default_mode
        # Mode rewriting can remove context marks from a result, so the
        # context-dependency oracle samples the untrace-free fragment.
        self.allow_untrace = allow_untrace

    # --- public entry points ---

    def program(self) -> Expr:
        env = _Env()
        body = self._lets(env, self.rng.randint(1, 4), self.max_depth)
        return relabel(body, 1)

    def single_trace_program(self) -> tuple:
        """A program with exactly one trace site, plus that site's label.

        The site wraps a value-position constant, so substituted bodies of
        any base kind keep the program well-formed.
        """
        saved = self.trace_probability
        self.trace_probability = 0.0
        try:
            env = _Env()
            body = self._lets(env, self.rng.randint(1, 4), self.max_depth)
        finally:
            self.trace_probability = saved
        wrapped = self._wrap_one_const(body)
        program = relabel(wrapped, 1)
        sites = trace_sites(program)
        assert len(sites) == 1
        return program, sites[0].label

    def substitution_bodies(self, count: int = 2) -> list:
        """Closed constant-valued replacement bodies for a trace site."""
        bodies = []
        for _ in range(count):
            if self.rng.random() < 0.3:
                bodies.append(Op(self.rng.choice(("+", "*", "<")),
                                 Const(self._num()), Const(self._num())))
            else:
                bodies.append(Const(self.rng.choice(_CONST_POOL)))
        return bodies

    # --- expression generation ---

    def _num(self) -> float:
        return float(self.rng.randint(0, 9))

    def _const(self) -> Expr:
        return Const(self.rng.choice(_CONST_POOL))

    def _key(self) -> Expr:
        key = Const(self.rng.choice(_KEY_POOL))
        if self.trace_probability > 0 and self.rng.random() < 0.2:
            return self._traced(key)
        return key

    def _traced(self, body: Expr) -> Expr:
        if self.rng.random() < 0.4:
            mode = self.rng.choice(self.modes)
            cls = self.rng.choice(_CLASS_POOL)
            return Trace(_DUMMY, mode, cls, body)
        from .syntax import auto_class
        return Trace(_DUMMY, self.default_mode, auto_class(_DUMMY), body)

    def _base(self, env: _Env, depth: int) -> Expr:
        rng = self.rng
        if rng.random() < self.trace_probability:
            saved = self.trace_probability
            self.trace_probability = saved * 0.5
            try:
                inner = self._base(env, depth)
            finally:
                self.trace_probability = saved
            return self._traced(inner)
        choices = ["const", "const"]
        if env.base:
            choices += ["var", "var"]
        if depth > 0:
            choices += ["op", "op", "if", "let"]
            if env.objs:
                choices += ["get", "get", "put"]
            if env.funs:
                choices += ["app", "app"]
            if self.allow_untrace:
                choices += ["untrace"]
        pick = rng.choice(choices)
        if pick == "const":
            return self._const()
        if pick == "var":
            return Var(rng.choice(env.base))
        if pick == "op":
            return Op(rng.choice(_OP_POOL),
                      self._base(env, depth - 1), self._base(env, depth - 1))
        if pick == "if":
            return If(self._condition(env, depth - 1),
                      self._base(env, depth - 1), self._base(env, depth - 1))
        if pick == "get":
            return Get(Var(rng.choice(env.objs)), self._key())
        if pick == "put":
            return Put(Var(rng.choice(env.objs)), self._key(),
                       self._base(env, depth - 1))
        if pick == "app":
            return App(Var(rng.choice(env.funs)), self._base(env, depth - 1))
        if pick == "untrace":
            mode_from = rng.choice(self.modes)
            mode_to = rng.choice(self.modes)
            return Untrace(mode_from, mode_to, rng.choice(_CLASS_POOL),
                           self._base(env, depth - 1))
        if pick == "let":
            return self._lets(env.snapshot(), 1, depth - 1)
        raise AssertionError(pick)

    def _condition(self, env: _Env, depth: int) -> Expr:
        if env.objs and self.rng.random() < 0.3:
            # Reference comparisons are undecidable for the analysis.
            return Op("==", Var(self.rng.choice(env.objs)),
                      Var(self.rng.choice(env.objs)))
        return self._base(env, depth)

    def _lets(self, env: _Env, bindings: int, depth: int) -> Expr:
        if bindings <= 0:
            return self._base(env, depth)
        rng = self.rng
        kind = rng.choice(["base", "base", "obj", "fun"])
        if kind == "base":
            name = env.fresh("v")
            rhs = self._base(env, depth - 1)
            env.base.append(name)
            rest = self._lets(env, bindings - 1, depth)
        elif kind == "obj":
            name = env.fresh("o")
            proto = Var(rng.choice(env.objs)) if env.objs and rng.random() < 0.3 \
                else Const(None)
            rhs = New(_DUMMY, proto)
            env.objs.append(name)
            rest = self._seed_properties(env, name, bindings - 1, depth)
        else:
            name = env.fresh("f")
            param = env.fresh("x")
            body_env = env.snapshot()
            body_env.base.append(param)
            rhs = Lam(_DUMMY, param, self._base(body_env, depth - 1))
            env.funs.append(name)
            rest = self._maybe_call_twice(env, name, bindings - 1, depth)
        lam = Lam(_DUMMY, name, rest)
        return App(lam, rhs)

    def _seed_properties(self, env: _Env, obj_name: str, bindings: int,
                         depth: int) -> Expr:
        if self.rng.random() < 0.6:
            put = Put(Var(obj_name), self._key(), self._base(env, depth - 1))
            rest = self._lets(env, bindings, depth)
            ignore = env.fresh("_")
            return App(Lam(_DUMMY, ignore, rest), put)
        return self._lets(env, bindings, depth)

    def _maybe_call_twice(self, env: _Env, fn_name: str, bindings: int,
                          depth: int) -> Expr:
        if self.rng.random() < 0.35:
            # Two calls with distinct constants force a joined summary.
            first = App(Var(fn_name), Const(self._num()))
            rest = self._lets(env, bindings, depth)
            ignore = env.fresh("_")
            return App(Lam(_DUMMY, ignore, rest), first)
        return self._lets(env, bindings, depth)

    # --- trace-site injection ---

    def _wrap_one_const(self, e: Expr) -> Expr:
        """Wrap one value-position constant in a default-mode trace."""
        positions = self._const_positions(e)
        if not positions:
            return self._traced_default(e)
        target = self.rng.choice(positions)
        counter = [0]

        def go(node: Expr, in_key: bool) -> Expr:
            if isinstance(node, Const):
                if not in_key:
                    counter[0] += 1
                    if counter[0] - 1 == target:
                        return self._traced_default(node)
                return node
            if isinstance(node, Var):
                return node
            if isinstance(node, Lam):
                return Lam(node.label, node.param, go(node.body, False))
            if isinstance(node, App):
                return App(go(node.fn, False), go(node.arg, False))
            if isinstance(node, Op):
                return Op(node.op, go(node.lhs, False), go(node.rhs, False))
            if isinstance(node, If):
                return If(go(node.cond, False), go(node.then, False),
                          go(node.orelse, False))
            if isinstance(node, New):
                return New(node.label, go(node.proto, False))
            if isinstance(node, Get):
                return Get(go(node.obj, False), go(node.key, True))
            if isinstance(node, Put):
                return Put(go(node.obj, False), go(node.key, True),
                           go(node.value, False))
            if isinstance(node, Trace):
                return Trace(node.label, node.mode, node.cls, go(node.body, in_key))
            if isinstance(node, Untrace):
                return Untrace(node.from_mode, node.to_mode, node.cls,
                               go(node.body, in_key))
            raise TypeError(f"not an expression: {node!r}")

        return go(e, False)

    def _traced_default(self, body: Expr) -> Expr:
        from .syntax import auto_class
        return Trace(_DUMMY, self.default_mode, auto_class(_DUMMY), body)

    def _const_positions(self, e: Expr) -> list:
        found = [0]
        positions = []

        def go(node: Expr, in_key: bool) -> None:
            if isinstance(node, Const):
                if not in_key:
                    positions.append(found[0])
                    found[0] += 1
                return
            if isinstance(node, Get):
                go(node.obj, False)
                go(node.key, True)
                return
            if isinstance(node, Put):
                go(node.obj, False)
                go(node.key, True)
                go(node.value, False)
                return
            if isinstance(node, (Trace, Untrace)):
                go(node.body, in_key)
                return
            from .syntax import children
            for child in children(node):
                go(child, False)

        go(e, False)
        return positions
