"""Classification and bottom-up evaluation of Datalog programs with negation."""

from __future__ import annotations

import enum
import itertools
from collections import defaultdict

from ..relcore import Fact, RelSymbol, Schema, adom
from .syntax import (COMPLEMENT_SUFFIX, Atom, DatalogError, Literal, Program,
                     Rule, check_range_restricted)


class NotStratifiedError(DatalogError):
    pass


class NotSemiPositiveError(DatalogError):
    pass


class ProgramClass(enum.Enum):
    POSITIVE = "positive"
    SEMIPOSITIVE = "semi-positive"
    STRATIFIED = "stratified"
    NONSTRATIFIED = "non-stratified"

    def __str__(self):
        return self.value


def stratify(program: Program) -> dict:
    """Stratum number per idb relation; raises on a cycle through negation."""
    idb = program.idb.names
    level = {name: 0 for name in idb}
    limit = len(idb)
    changed = True
    while changed:
        changed = False
        for rule in program.rules:
            h = rule.head.relation
            for lit in rule.body:
                b = lit.atom.relation
                if b not in idb:
                    continue
                need = level[b] + (0 if lit.positive else 1)
                if level[h] < need:
                    if need > limit:
                        raise NotStratifiedError(f"negation cycle through {h}")
                    level[h] = need
                    changed = True
    return level


def classify_program(program: Program) -> ProgramClass:
    negated = {l.atom.relation for r in program.rules for l in r.body if not l.positive}
    if not negated:
        return ProgramClass.POSITIVE
    if negated <= program.edb.names:
        return ProgramClass.SEMIPOSITIVE
    try:
        stratify(program)
    except NotStratifiedError:
        return ProgramClass.NONSTRATIFIED
    return ProgramClass.STRATIFIED


# -- rule firing ------------------------------------------------------------

def _unify(atom: Atom, tup: tuple, binding: dict):
    out = binding
    for term, value in zip(atom.terms, tup):
        if term.is_var:
            cur = out.get(term.name)
            if cur is None:
                if out is binding:
                    out = dict(binding)
                out[term.name] = value
            elif cur != value:
                return None
        elif term.name != value:
            return None
    return out


def _instantiate(atom: Atom, binding: dict) -> tuple:
    return tuple(binding[t.name] if t.is_var else t.name for t in atom.terms)


def _fire(rule: Rule, db, delta=None, delta_at=None):
    """Head tuples derivable by ``rule``; literal ``delta_at`` ranges over ``delta``."""
    positives = rule.positive_body()
    negatives = rule.negative_body()
    results = set()

    def walk(k, binding):
        if k == len(positives):
            for a in negatives:
                if _instantiate(a, binding) in db.get(a.relation, ()):
                    return
            results.add(_instantiate(rule.head, binding))
            return
        atom = positives[k]
        source = delta if k == delta_at else db
        for tup in source.get(atom.relation, ()):
            b = _unify(atom, tup, binding)
            if b is not None:
                walk(k + 1, b)

    walk(0, {})
    return results


def _to_db(inst) -> dict:
    db = defaultdict(set)
    for f in inst:
        db[f.relation].add(f.args)
    return db


def _strata_rules(program: Program):
    level = stratify(program)
    by_level = defaultdict(list)
    for rule in program.rules:
        by_level[level[rule.head.relation]].append(rule)
    return [(by_level[s], {r.head.relation for r in by_level[s]}) for s in sorted(by_level)]


def _naive(rules, db):
    while True:
        new = []
        for rule in rules:
            rel = rule.head.relation
            new.extend((rel, t) for t in _fire(rule, db) if t not in db[rel])
        if not new:
            return
        for rel, t in new:
            db[rel].add(t)


def _seminaive(rules, heads, db):
    delta = defaultdict(set)
    for rule in rules:
        rel = rule.head.relation
        for t in _fire(rule, db):
            if t not in db[rel]:
                delta[rel].add(t)
    while any(delta.values()):
        for rel, ts in delta.items():
            db[rel] |= ts
        new = defaultdict(set)
        for rule in rules:
            rel = rule.head.relation
            for k, atom in enumerate(rule.positive_body()):
                if atom.relation in heads and delta.get(atom.relation):
                    for t in _fire(rule, db, delta, k):
                        if t not in db[rel]:
                            new[rel].add(t)
        delta = new


def evaluate_model(program: Program, inst, method: str = "seminaive") -> frozenset:
    """Full least model (edb plus every derived idb fact)."""
    if method == "complement":
        positive = positivize(program)
        return evaluate_model(positive, frozenset(inst) | complement(inst, program.edb))
    db = _to_db(inst)
    for rules, heads in _strata_rules(program):
        if method == "seminaive":
            _seminaive(rules, heads, db)
        elif method == "naive":
            _naive(rules, db)
        else:
            raise ValueError(f"unknown evaluation method {method!r}")
    return frozenset(Fact(rel, t) for rel, ts in db.items() for t in ts)


def evaluate(program: Program, inst, method: str = "seminaive") -> frozenset:
    """Evaluate a stratifiable program and keep only its output relations.

    ``method`` is ``seminaive`` (default), ``naive``, or ``complement``; the
    last positivizes a semi-positive program and runs it on ``I`` plus the
    active-domain complement of ``I``. That path assumes negated atoms carry
    no program constants outside ``adom(I)``.
    """
    if classify_program(program) is ProgramClass.NONSTRATIFIED:
        raise NotStratifiedError("program is not stratifiable; use an opaque evaluator")
    model = evaluate_model(program, inst, method)
    return frozenset(f for f in model if f.relation in program.outputs)


# -- complement construction ------------------------------------------------

def complement_name(rel: str) -> str:
    return rel + COMPLEMENT_SUFFIX


def complement(inst, schema: Schema) -> frozenset:
    """Facts over ``adom(inst)`` absent from ``inst``, under ``__c`` relation names."""
    inst = frozenset(inst)
    dom = sorted(adom(inst))
    out = set()
    for r in schema:
        name = complement_name(r.name)
        for args in itertools.product(dom, repeat=r.arity):
            if Fact(r.name, args) not in inst:
                out.add(Fact(name, args))
    return frozenset(out)


def positivize(program: Program) -> Program:
    """Replace every negated edb literal ``not R(..)`` by ``R__c(..)``."""
    if classify_program(program) not in (ProgramClass.POSITIVE, ProgramClass.SEMIPOSITIVE):
        raise NotSemiPositiveError(
            "positivize needs a semi-positive program (negation on edb only)")
    rules = []
    for rule in program.rules:
        body = tuple(
            l if l.positive else Literal(Atom(complement_name(l.atom.relation), l.atom.terms))
            for l in rule.body)
        rules.append(Rule(rule.head, body))
    for rule in rules:
        check_range_restricted(rule)
    edb = program.edb.union(Schema(RelSymbol(complement_name(r.name), r.arity)
                                   for r in program.edb))
    return Program(tuple(rules), edb, program.idb, program.outputs)
