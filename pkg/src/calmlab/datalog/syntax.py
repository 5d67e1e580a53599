"""Datalog with negation: terms, rules, programs and the text parser."""

from __future__ import annotations

import bisect
import re
from dataclasses import dataclass, field
from typing import Optional

from ..relcore import Fact, RelSymbol, Schema

COMPLEMENT_SUFFIX = "__c"


class DatalogError(ValueError):
    pass


class ParseError(DatalogError):
    def __init__(self, msg, line=None, col=None):
        self.line, self.col = line, col
        where = f"line {line}, col {col}: " if line is not None else ""
        super().__init__(where + msg)


class ArityError(DatalogError):
    pass


class RangeRestrictionError(DatalogError):
    pass


class HeadOnEdbError(DatalogError):
    pass


class ReservedNameError(DatalogError):
    pass


@dataclass(frozen=True, order=True)
class Term:
    name: str
    is_var: bool

    def __str__(self):
        return self.name


def var(name: str) -> Term:
    return Term(name, True)


def const(name: str) -> Term:
    return Term(name, False)


@dataclass(frozen=True)
class Atom:
    relation: str
    terms: tuple = ()

    @property
    def arity(self):
        return len(self.terms)

    def variables(self) -> set:
        return {t.name for t in self.terms if t.is_var}

    def __str__(self):
        return f"{self.relation}({','.join(map(str, self.terms))})"


@dataclass(frozen=True)
class Literal:
    atom: Atom
    positive: bool = True

    def __str__(self):
        return str(self.atom) if self.positive else f"not {self.atom}"


@dataclass(frozen=True)
class Rule:
    head: Atom
    body: tuple = ()

    def positive_body(self):
        return [l.atom for l in self.body if l.positive]

    def negative_body(self):
        return [l.atom for l in self.body if not l.positive]

    def __str__(self):
        if not self.body:
            return f"{self.head}."
        return f"{self.head} :- {', '.join(map(str, self.body))}."


@dataclass(frozen=True)
class Program:
    rules: tuple
    edb: Schema
    idb: Schema
    outputs: frozenset = field(default_factory=frozenset)

    def __post_init__(self):
        overlap = self.edb.names & self.idb.names
        if overlap:
            raise HeadOnEdbError(f"relations both edb and idb: {sorted(overlap)}")
        unknown = set(self.outputs) - self.idb.names
        if unknown:
            raise DatalogError(f"@output names non-idb relations: {sorted(unknown)}")

    @property
    def schema(self) -> Schema:
        return self.edb.union(self.idb)

    @property
    def output_schema(self) -> Schema:
        return Schema(r for r in self.idb if r.name in self.outputs)

    def __str__(self):
        lines = [str(r) for r in self.rules]
        lines += [f"@output {name}." for name in sorted(self.outputs)]
        return "\n".join(lines) + "\n"


def check_range_restricted(rule: Rule) -> None:
    bound = set()
    for a in rule.positive_body():
        bound |= a.variables()
    loose = rule.head.variables() - bound
    for a in rule.negative_body():
        loose |= a.variables() - bound
    if loose:
        raise RangeRestrictionError(
            f"rule {rule} is not range-restricted: unbound {sorted(loose)}")


def build_program(rules, outputs=None, edb: Optional[Schema] = None) -> Program:
    """Validate ``rules`` and infer edb/idb schemas.

    Relations never used in a head are edb. ``edb`` may declare extra input
    relations (or pin arities); a declared edb relation used as a head is an
    error. ``outputs`` defaults to every idb relation.
    """
    rules = tuple(rules)
    arities = {}

    def note(rel, arity):
        if rel.endswith(COMPLEMENT_SUFFIX):
            raise ReservedNameError(
                f"relation name {rel!r} uses reserved suffix {COMPLEMENT_SUFFIX}")
        seen = arities.setdefault(rel, arity)
        if seen != arity:
            raise ArityError(f"relation {rel} used with arities {seen} and {arity}")

    if edb is not None:
        for r in edb:
            note(r.name, r.arity)
    heads = set()
    for rule in rules:
        note(rule.head.relation, rule.head.arity)
        heads.add(rule.head.relation)
        for lit in rule.body:
            note(lit.atom.relation, lit.atom.arity)
        check_range_restricted(rule)
    if edb is not None:
        bad = heads & edb.names
        if bad:
            raise HeadOnEdbError(f"rule heads on edb relations: {sorted(bad)}")
    idb = Schema(RelSymbol(n, arities[n]) for n in heads)
    edb_schema = Schema(RelSymbol(n, a) for n, a in arities.items() if n not in heads)
    if outputs is None:
        outputs = idb.names
    return Program(rules, edb_schema, idb, frozenset(outputs))


# -- parser -----------------------------------------------------------------

_TOKEN = re.compile(r"""
    \s*(?:
      (?P<comment>%[^\n]*)
    | (?P<directive>@[a-z]+)
    | (?P<implies>:-)
    | (?P<lower>[a-z][a-zA-Z0-9_]*)
    | (?P<upper>[A-Z][a-zA-Z0-9_]*)
    | (?P<punct>[(),.])
    | (?P<bad>\S)
    )""", re.VERBOSE)


def _lex(text):
    line_starts = [0] + [m.end() for m in re.finditer("\n", text)]

    def where(pos):
        ln = bisect.bisect_right(line_starts, pos) - 1
        return ln + 1, pos - line_starts[ln] + 1

    pos = 0
    toks = []
    while True:
        m = _TOKEN.match(text, pos)
        if m is None:
            break
        pos = m.end()
        kind = m.lastgroup
        if kind == "comment":
            continue
        loc = where(m.start(kind))
        if kind == "bad":
            raise ParseError(f"unexpected character {m.group(kind)!r}", *loc)
        toks.append((kind, m.group(kind), loc))
    return toks, where(len(text))


class _Parser:
    def __init__(self, text):
        self.toks, self.eof = _lex(text)
        self.i = 0

    def peek(self):
        return self.toks[self.i] if self.i < len(self.toks) else ("eof", None, self.eof)

    def take(self, kind, value=None, what=None):
        k, v, loc = self.peek()
        if k != kind or (value is not None and v != value):
            shown = "end of input" if k == "eof" else repr(v)
            raise ParseError(f"expected {what or value or kind}, got {shown}", *loc)
        self.i += 1
        return v

    def atom(self):
        rel = self.take("lower", what="relation name")
        self.take("punct", "(")
        terms = []
        if self.peek()[:2] == ("punct", ")"):
            self.i += 1
            return Atom(rel, ())
        while True:
            k, v, loc = self.peek()
            if k == "lower":
                terms.append(const(v))
            elif k == "upper":
                terms.append(var(v))
            else:
                raise ParseError(f"expected term, got {v!r}", *loc)
            self.i += 1
            sep = self.take("punct", what="',' or ')'")
            if sep == ")":
                break
            if sep != ",":
                raise ParseError(f"expected ',' or ')', got {sep!r}", *self.toks[self.i - 1][2])
        return Atom(rel, tuple(terms))

    def literal(self):
        k, v, _ = self.peek()
        nxt = self.toks[self.i + 1] if self.i + 1 < len(self.toks) else None
        # "not" is a keyword only when followed by an atom, so not(...) stays a relation
        if k == "lower" and v == "not" and nxt is not None and nxt[0] == "lower":
            self.i += 1
            return Literal(self.atom(), False)
        return Literal(self.atom(), True)

    def program(self):
        rules, outputs = [], []
        while self.peek()[0] != "eof":
            k, v, loc = self.peek()
            if k == "directive":
                self.i += 1
                if v != "@output":
                    raise ParseError(f"unknown directive {v}", *loc)
                outputs.append(self.take("lower", what="relation name"))
                self.take("punct", ".")
                continue
            head = self.atom()
            body = []
            if self.peek()[0] == "implies":
                self.i += 1
                body.append(self.literal())
                while self.peek()[:2] == ("punct", ","):
                    self.i += 1
                    body.append(self.literal())
            self.take("punct", ".")
            rules.append(Rule(head, tuple(body)))
        return rules, outputs


def parse_program(text: str, edb: Optional[Schema] = None) -> Program:
    rules, outputs = _Parser(text).program()
    return build_program(rules, outputs or None, edb)


def ground(atom: Atom) -> Fact:
    if atom.variables():
        raise DatalogError(f"atom {atom} is not ground")
    return Fact(atom.relation, tuple(t.name for t in atom.terms))
