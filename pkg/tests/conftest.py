"""Shared helpers: fixture paths and random builders for lattice values."""

from __future__ import annotations

import random
from pathlib import Path

import pytest

from depcore.concrete import Location, TaintedValue
from depcore.lattice import (
    AbstractClosure, AbstractObject, AbstractStorable, AbstractValue,
    BaseLattice, Flat, Scope, State,
)
from depcore.syntax import Const, Lam, Label, Mark, UNDEFINED

FIXTURES_DIR = Path(__file__).resolve().parent.parent / "fixtures"


@pytest.fixture
def fixtures_dir() -> Path:
    return FIXTURES_DIR


def fixture_path(name: str) -> str:
    return str(FIXTURES_DIR / name)


# --- random builders (shared by property tests and the acceptance suite) ---

CONST_CHOICES = (True, False, 0.0, 1.0, 2.0, 3.5, 7.0, "", "a", "b", "key",
                 None, UNDEFINED)

_LABELS = tuple(Label(i) for i in range(1, 7))
_MODES = ("T", "S")
_CLASSES = ("#DOM", "#NET")

# One canonical lambda shared by random closures, so random storables of the
# same label always join.
_SHARED_LAM = Lam(Label(90), "x", Const(0.0))


def rand_mark(rng: random.Random) -> Mark:
    return Mark(rng.choice(_LABELS), rng.choice(_MODES), rng.choice(_CLASSES))


def rand_marks(rng: random.Random, max_size: int = 4) -> frozenset:
    return frozenset(rand_mark(rng) for _ in range(rng.randint(0, max_size)))


def rand_flat(rng: random.Random, consts) -> Flat:
    roll = rng.random()
    if roll < 0.3:
        return Flat.bottom()
    if roll < 0.5:
        return Flat.top()
    return Flat.const(rng.choice(consts))


def rand_base(rng: random.Random) -> BaseLattice:
    return BaseLattice(
        undef=rng.random() < 0.4,
        null=rng.random() < 0.4,
        bools=frozenset(b for b in (True, False) if rng.random() < 0.4),
        num=rand_flat(rng, (0.0, 1.0, 2.0)),
        string=rand_flat(rng, ("a", "b")),
    )


def rand_value(rng: random.Random) -> AbstractValue:
    return AbstractValue(
        rand_base(rng),
        frozenset(l for l in _LABELS if rng.random() < 0.2),
        rand_marks(rng),
    )


def rand_object(rng: random.Random) -> AbstractObject:
    entries = {}
    for key in ("f", "g"):
        if rng.random() < 0.5:
            entries[Flat.const(key)] = rand_value(rng)
    if rng.random() < 0.3:
        entries[Flat.top()] = rand_value(rng)
    return AbstractObject(entries)


def rand_scope(rng: random.Random) -> Scope:
    return Scope({name: rand_value(rng) for name in ("x", "y")
                  if rng.random() < 0.5})


def rand_storable(rng: random.Random) -> AbstractStorable:
    closure = AbstractClosure(rand_scope(rng), _SHARED_LAM) \
        if rng.random() < 0.4 else None
    return AbstractStorable(rand_object(rng), closure,
                            frozenset(l for l in _LABELS if rng.random() < 0.15))


def rand_state(rng: random.Random) -> State:
    store = {l: rand_storable(rng) for l in _LABELS if rng.random() < 0.3}
    return State(store, rand_marks(rng))


def rand_concrete(rng: random.Random) -> TaintedValue:
    if rng.random() < 0.25:
        loc = Location(rng.randint(1, 9), rng.choice(_LABELS))
        return TaintedValue(loc, rand_marks(rng))
    return TaintedValue(rng.choice(CONST_CHOICES), rand_marks(rng))
