"""Constants, schemas, facts and instances.

Constants are plain strings ordered lexicographically. An instance is a
``frozenset`` of :class:`Fact` objects; helpers in this module never mutate
their arguments.
"""

from __future__ import annotations

import bisect
import itertools
import re
from dataclasses import dataclass
from functools import lru_cache
from typing import Iterable, Iterator

IDENT = re.compile(r"[a-z][a-zA-Z0-9_]*")
CANONICAL_PREFIX = "c"
FRESH_PREFIX = "f"

Constant = str
Instance = frozenset  # frozenset[Fact]


class RelcoreError(ValueError):
    pass


class FactSyntaxError(RelcoreError):
    def __init__(self, msg, line=None, col=None):
        self.line, self.col = line, col
        where = f"line {line}, col {col}: " if line is not None else ""
        super().__init__(where + msg)


@dataclass(frozen=True, order=True)
class RelSymbol:
    name: str
    arity: int

    def __post_init__(self):
        if self.arity < 0:
            raise RelcoreError(f"negative arity for {self.name}")

    def __str__(self):
        return f"{self.name}/{self.arity}"


@dataclass(frozen=True)
class Schema:
    relations: frozenset

    def __init__(self, relations: Iterable[RelSymbol] = ()):
        rels = frozenset(relations)
        names = [r.name for r in rels]
        if len(names) != len(set(names)):
            dup = sorted(n for n in set(names) if names.count(n) > 1)
            raise RelcoreError(f"relation names not unique: {dup}")
        object.__setattr__(self, "relations", rels)

    @classmethod
    def parse(cls, text: str) -> "Schema":
        """Build a schema from ``"e/2, q/0"``."""
        rels = []
        for part in filter(None, (p.strip() for p in text.split(","))):
            name, _, arity = part.partition("/")
            rels.append(RelSymbol(name.strip(), int(arity)))
        return cls(rels)

    def __iter__(self) -> Iterator[RelSymbol]:
        return iter(sorted(self.relations))

    def __len__(self):
        return len(self.relations)

    def __contains__(self, item) -> bool:
        if isinstance(item, RelSymbol):
            return item in self.relations
        return any(r.name == item for r in self.relations)

    @property
    def names(self) -> frozenset:
        return frozenset(r.name for r in self.relations)

    def arity(self, name: str) -> int:
        for r in self.relations:
            if r.name == name:
                return r.arity
        raise KeyError(name)

    def union(self, other: "Schema") -> "Schema":
        return Schema(self.relations | other.relations)

    def non_nullary(self) -> "Schema":
        return Schema(r for r in self.relations if r.arity > 0)

    def __str__(self):
        return ", ".join(str(r) for r in self)


@dataclass(frozen=True, order=True)
class Fact:
    relation: str
    args: tuple = ()

    def __post_init__(self):
        if not isinstance(self.args, tuple):
            object.__setattr__(self, "args", tuple(self.args))

    @property
    def arity(self) -> int:
        return len(self.args)

    @property
    def symbol(self) -> RelSymbol:
        return RelSymbol(self.relation, len(self.args))

    def constants(self) -> frozenset:
        return frozenset(self.args)

    def __str__(self):
        return f"{self.relation}({','.join(self.args)})"

    def __repr__(self):
        return f"Fact({self})"


def fact(text: str) -> Fact:
    """Parse a single fact such as ``e(a,b)`` (trailing dot optional)."""
    text = text.strip()
    if text.endswith("."):
        text = text[:-1]
    facts = parse_facts(text + ".")
    if len(facts) != 1:
        raise FactSyntaxError(f"expected exactly one fact in {text!r}")
    return next(iter(facts))


def instance(*facts) -> Instance:
    """``instance("e(a,b)", "e(b,c)")`` or ``instance(fact_obj, ...)``."""
    return frozenset(f if isinstance(f, Fact) else fact(f) for f in facts)


def check_instance(inst: Iterable[Fact], schema: Schema) -> None:
    for f in inst:
        if f.symbol not in schema.relations:
            raise RelcoreError(f"fact {f} is not over schema {{{schema}}}")


def schema_of(inst: Iterable[Fact]) -> Schema:
    return Schema({f.symbol for f in inst})


def adom(inst: Iterable[Fact]) -> frozenset:
    return frozenset(c for f in inst for c in f.args)


@lru_cache(maxsize=4096)
def _slice(schema: Schema, constants: frozenset, include_nullary: bool) -> frozenset:
    ordered = sorted(constants)
    out = []
    for r in schema:
        if r.arity == 0:
            if include_nullary:
                out.append(Fact(r.name, ()))
            continue
        out.extend(Fact(r.name, args) for args in itertools.product(ordered, repeat=r.arity))
    return frozenset(out)


def herbrand_slice(schema: Schema, constants: Iterable[Constant],
                   include_nullary: bool = False) -> frozenset:
    """All facts over ``schema`` whose arguments lie in ``constants``."""
    return _slice(schema, frozenset(constants), include_nullary)


def canonical_constants(n: int) -> list:
    return [f"{CANONICAL_PREFIX}{i}" for i in range(1, n + 1)]


def enumerate_instances(schema: Schema, domain_size: int, max_facts: int,
                        constants=None, include_nullary: bool = True,
                        min_facts: int = 0) -> Iterator[Instance]:
    """Yield every instance over the given constants with at most ``max_facts`` facts.

    Constants default to ``c1..c<domain_size>``. Instances come smallest first,
    then in lexicographic order of their sorted fact lists; no isomorphism
    reduction is done.
    """
    if constants is None:
        constants = canonical_constants(domain_size)
    universe = sorted(herbrand_slice(schema, constants, include_nullary))
    for k in range(min_facts, min(max_facts, len(universe)) + 1):
        for combo in itertools.combinations(universe, k):
            yield frozenset(combo)


def fresh_constants(avoid: Iterable[Constant], count: int,
                    prefix: str = FRESH_PREFIX) -> list:
    """``count`` distinct constants ``f1, f2, ...`` skipping anything in ``avoid``."""
    avoid = set(avoid)
    out = []
    i = 1
    while len(out) < count:
        c = f"{prefix}{i}"
        if c not in avoid:
            out.append(c)
        i += 1
    return out


# -- fact text format -------------------------------------------------------

_TOKEN = re.compile(r"\s*(?:(%[^\n]*)|([a-z][a-zA-Z0-9_]*)|([(),.])|(\S))")


def _tokens(text):
    line_starts = [0] + [m.end() for m in re.finditer("\n", text)]

    def where(pos):
        ln = bisect.bisect_right(line_starts, pos) - 1
        return ln + 1, pos - line_starts[ln] + 1

    pos = 0
    while pos < len(text):
        m = _TOKEN.match(text, pos)
        if m is None:  # trailing whitespace
            break
        pos = m.end()
        if m.group(1) is not None:
            continue
        if m.group(4) is not None:
            raise FactSyntaxError(f"unexpected character {m.group(4)!r}", *where(m.start(4)))
        tok = m.group(2) or m.group(3)
        start = m.start(2) if m.group(2) else m.start(3)
        yield tok, where(start)


def parse_facts(text: str) -> Instance:
    """Parse the line-oriented fact format (``rel(a,b).``, ``%`` comments)."""
    toks = list(_tokens(text))
    out = set()
    i = 0

    def expect(pred, what):
        nonlocal i
        if i >= len(toks):
            raise FactSyntaxError(f"unexpected end of input, expected {what}")
        tok, (ln, col) = toks[i]
        if not pred(tok):
            raise FactSyntaxError(f"expected {what}, got {tok!r}", ln, col)
        i += 1
        return tok

    while i < len(toks):
        rel = expect(IDENT.fullmatch, "relation name")
        expect("(".__eq__, "'('")
        args = []
        if i < len(toks) and toks[i][0] == ")":
            i += 1
        else:
            while True:
                args.append(expect(IDENT.fullmatch, "constant"))
                sep = expect(lambda t: t in ",)", "',' or ')'")
                if sep == ")":
                    break
        expect(".".__eq__, "'.'")
        out.add(Fact(rel, tuple(args)))
    return frozenset(out)


def format_facts(inst: Iterable[Fact]) -> str:
    """Canonical text: one fact per line, sorted, trailing newline when non-empty."""
    return "".join(f"{f}.\n" for f in sorted(inst))


def format_fact_list(inst: Iterable[Fact]) -> str:
    return "[" + ",".join(str(f) for f in sorted(inst)) + "]"
