"""Uniform query objects: program-backed or opaque Python evaluators."""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache
from importlib import resources
from typing import Callable, Optional

from ..relcore import Fact, RelSymbol, Schema, adom
from .engine import evaluate
from .syntax import DatalogError, Program, parse_program


class SchemaMismatchError(DatalogError):
    pass


@dataclass(frozen=True, eq=False)
class Query:
    """A deterministic map from instances over ``input_schema`` to instances.

    Exactly one of ``program`` and ``evaluator`` is set. Equality is identity,
    which keeps results cacheable per query object.
    """

    name: str
    input_schema: Schema
    output_schema: Schema
    program: Optional[Program] = None
    evaluator: Optional[Callable] = None

    def __post_init__(self):
        if (self.program is None) == (self.evaluator is None):
            raise ValueError("a query needs exactly one of program / evaluator")

    @classmethod
    def from_program(cls, program: Program, name: str = "program") -> "Query":
        return cls(name, program.edb, program.output_schema, program=program)

    @classmethod
    def opaque(cls, name, input_schema, output_schema, evaluator) -> "Query":
        return cls(name, input_schema, output_schema, evaluator=evaluator)

    def __call__(self, inst):
        return eval_query(self, inst)

    def __repr__(self):
        return f"Query({self.name})"


@lru_cache(maxsize=1 << 16)
def _eval_cached(query: Query, inst: frozenset) -> frozenset:
    if query.program is not None:
        return evaluate(query.program, inst)
    return frozenset(query.evaluator(inst))


def eval_query(query: Query, inst) -> frozenset:
    inst = frozenset(inst)
    for f in inst:
        if f.symbol not in query.input_schema.relations:
            raise SchemaMismatchError(
                f"fact {f} is not over the input schema {{{query.input_schema}}} of {query.name}")
    return _eval_cached(query, inst)


# -- win-move ---------------------------------------------------------------

def winmove(inst) -> frozenset:
    """Won positions of the game whose moves are the ``move/2`` facts.

    Alternating fixpoint from (won, lost) = (empty, empty): a position is lost
    once all its successors are won, won once some successor is lost. Drawn
    positions end up in neither set and are not reported.
    """
    succ = {}
    for f in inst:
        if f.relation != "move" or f.arity != 2:
            raise SchemaMismatchError(f"winmove expects move/2 facts, got {f}")
        succ.setdefault(f.args[0], set()).add(f.args[1])
    positions = adom(inst)
    won, lost = set(), set()
    while True:
        new_lost = {x for x in positions if succ.get(x, set()) <= won}
        new_won = {x for x in positions if succ.get(x, set()) & new_lost}
        if new_lost == lost and new_won == won:
            break
        won, lost = new_won, new_lost
    return frozenset(Fact("won", (x,)) for x in won)


# -- builtins ---------------------------------------------------------------

E2 = Schema([RelSymbol("e", 2)])


def _tc(inst):
    edges = {f.args for f in inst}
    closure = set(edges)
    while True:
        step = {(x, z) for (x, y) in closure for (y2, z) in edges if y == y2}
        if step <= closure:
            break
        closure |= step
    return {Fact("t", p) for p in closure}


def _asym(inst):
    edges = {f.args for f in inst}
    return {Fact("asym", (x, y)) for (x, y) in edges if (y, x) not in edges}


def _edge_without_two_path(inst):
    edges = {f.args for f in inst}
    has_two_path = any(y == y2 for (_, y) in edges for (y2, _) in edges)
    return {Fact("answer", ())} if edges and not has_two_path else set()


@lru_cache(maxsize=None)
def builtin_query(name: str) -> Query:
    """The four reference queries as hand-written Python evaluators."""
    if name == "tc":
        return Query.opaque("tc", E2, Schema([RelSymbol("t", 2)]), _tc)
    if name == "asym":
        return Query.opaque("asym", E2, Schema([RelSymbol("asym", 2)]), _asym)
    if name == "remark33":
        return Query.opaque("remark33", E2, Schema([RelSymbol("answer", 0)]), _edge_without_two_path)
    if name == "winmove":
        return Query.opaque("winmove", Schema([RelSymbol("move", 2)]),
                            Schema([RelSymbol("won", 1)]), winmove)
    raise KeyError(f"unknown builtin query {name!r}")


BUILTINS = ("tc", "asym", "remark33", "winmove")
SEMIPOSITIVE_CORPUS = ("asym", "noloop", "guarded_tc", "diff", "halt_guard", "open_triangle")


def corpus_text(name: str) -> str:
    return resources.files("calmlab.corpus").joinpath(f"{name}.dl").read_text()


@lru_cache(maxsize=None)
def corpus_program(name: str) -> Program:
    return parse_program(corpus_text(name))


@lru_cache(maxsize=None)
def corpus_query(name: str) -> Query:
    """Program-backed query parsed from the bundled ``<name>.dl`` file."""
    return Query.from_program(corpus_program(name), name)
