"""Bounded brute-force checks for monotonicity and its weakened forms.

All verdicts hold only within the enumerated bounds: a refutation is a real
counterexample, a "holds" verdict is evidence. Additions draw their new
constants from the ``f1, f2, ...`` pool, which never overlaps the canonical
``c1, c2, ...`` constants of enumerated instances.
"""

from __future__ import annotations

import enum
import itertools
from dataclasses import dataclass, field
from typing import Iterator, Optional

from .datalog import Query, eval_query
from .relcore import (Fact, adom, canonical_constants, enumerate_instances,
                      format_facts, fresh_constants, herbrand_slice, parse_facts)


class CheckClass(enum.Enum):
    MONOTONE = "monotone"
    ADOM = "adom-monotone"
    WEAK_ADOM = "weak-adom-monotone"
    WEAK_ADOM_INSTANCE = "weak-adom-monotone-instance"

    def __str__(self):
        return self.value


HIERARCHY = (CheckClass.MONOTONE, CheckClass.ADOM, CheckClass.WEAK_ADOM,
             CheckClass.WEAK_ADOM_INSTANCE)


class InconsistentVerdicts(AssertionError):
    pass


@dataclass(frozen=True)
class Bounds:
    domain_size: int
    max_facts: int
    extra_fresh: int = 1

    def __post_init__(self):
        if min(self.domain_size, self.max_facts, self.extra_fresh) < 0:
            raise ValueError(f"bounds must be non-negative: {self}")

    def __str__(self):
        return f"{self.domain_size},{self.max_facts},{self.extra_fresh}"

    @classmethod
    def parse(cls, text: str) -> "Bounds":
        d, f, x = (int(v) for v in text.split(","))
        return cls(d, f, x)


@dataclass(frozen=True)
class Counterexample:
    base: frozenset
    addition: frozenset
    lost_witness: Fact


@dataclass(frozen=True)
class ClassVerdict:
    cls: CheckClass
    bounds: Bounds
    counterexample: Optional[Counterexample] = None

    @property
    def holds(self) -> bool:
        return self.counterexample is None


def side_condition(cls: CheckClass, base, addition) -> bool:
    """Does ``addition`` satisfy the restriction that ``cls`` places on added facts?"""
    addition = frozenset(addition)
    if not addition:
        return False
    dom = adom(base)
    if cls is CheckClass.MONOTONE:
        return True
    if cls is CheckClass.WEAK_ADOM_INSTANCE:
        return all(f.arity > 0 for f in addition) and not (adom(addition) & dom)
    if len(addition) != 1:
        return False
    (f,) = addition
    if cls is CheckClass.ADOM:
        return any(c not in dom for c in f.args)
    return f.arity > 0 and not (f.constants() & dom)


def validate(query: Query, cex: Counterexample, cls: CheckClass) -> bool:
    """Replay ``cex`` and check it refutes ``cls``."""
    if not side_condition(cls, cex.base, cex.addition):
        return False
    return (cex.lost_witness in eval_query(query, cex.base)
            and cex.lost_witness not in eval_query(query, cex.base | cex.addition))


def _lost(query, base, addition):
    lost = eval_query(query, base) - eval_query(query, base | addition)
    return min(lost) if lost else None


def _shrink(query, cls, cex: Counterexample) -> Counterexample:
    """Greedily drop base facts, then addition facts, while the violation persists."""
    base, addition, w = set(cex.base), set(cex.addition), cex.lost_witness

    def still(b, a):
        b, a = frozenset(b), frozenset(a)
        return (side_condition(cls, b, a) and w in eval_query(query, b)
                and w not in eval_query(query, b | a))

    changed = True
    while changed:
        changed = False
        for f in sorted(base):
            if still(base - {f}, addition):
                base.discard(f)
                changed = True
        if len(addition) > 1:
            for f in sorted(addition):
                if len(addition) > 1 and still(base, addition - {f}):
                    addition.discard(f)
                    changed = True
    return Counterexample(frozenset(base), frozenset(addition), w)


def _fresh(bounds: Bounds) -> list:
    return fresh_constants(canonical_constants(bounds.domain_size), bounds.extra_fresh)


def _single_additions(query, cls, base, fresh) -> Iterator[frozenset]:
    dom = adom(base)
    schema = query.input_schema
    if cls is CheckClass.MONOTONE:
        pool = herbrand_slice(schema, dom | set(fresh), include_nullary=True)
        cands = (f for f in pool if f not in base)
    elif cls is CheckClass.ADOM:
        pool = herbrand_slice(schema, dom | set(fresh))
        cands = (f for f in pool if any(c not in dom for c in f.args))
    else:
        cands = herbrand_slice(schema, fresh)
    for f in sorted(cands):
        yield frozenset([f])


def _instance_additions(query, bounds, fresh) -> Iterator[frozenset]:
    yield from enumerate_instances(query.input_schema.non_nullary(), 0, bounds.max_facts,
                                   constants=fresh, min_facts=1)


def _search(query: Query, cls: CheckClass, bounds: Bounds) -> ClassVerdict:
    fresh = _fresh(bounds)
    for base in enumerate_instances(query.input_schema, bounds.domain_size, bounds.max_facts):
        if not eval_query(query, base):
            continue
        if cls is CheckClass.WEAK_ADOM_INSTANCE:
            additions = _instance_additions(query, bounds, fresh)
        else:
            additions = _single_additions(query, cls, base, fresh)
        for addition in additions:
            w = _lost(query, base, addition)
            if w is not None:
                cex = _shrink(query, cls, Counterexample(base, addition, w))
                return ClassVerdict(cls, bounds, cex)
    return ClassVerdict(cls, bounds)


def check_monotone(query: Query, bounds: Bounds) -> ClassVerdict:
    return _search(query, CheckClass.MONOTONE, bounds)


def check_adom_monotone(query: Query, bounds: Bounds) -> ClassVerdict:
    _need_fresh(bounds)
    return _search(query, CheckClass.ADOM, bounds)


def check_weak_adom_monotone(query: Query, bounds: Bounds) -> ClassVerdict:
    _need_fresh(bounds)
    return _search(query, CheckClass.WEAK_ADOM, bounds)


def check_weak_adom_instance(query: Query, bounds: Bounds) -> ClassVerdict:
    _need_fresh(bounds)
    return _search(query, CheckClass.WEAK_ADOM_INSTANCE, bounds)


def _need_fresh(bounds):
    if bounds.extra_fresh < 1:
        raise ValueError("adom-style checks need extra_fresh >= 1")


CHECKERS = {
    CheckClass.MONOTONE: check_monotone,
    CheckClass.ADOM: check_adom_monotone,
    CheckClass.WEAK_ADOM: check_weak_adom_monotone,
    CheckClass.WEAK_ADOM_INSTANCE: check_weak_adom_instance,
}


@dataclass
class QueryReport:
    query: str
    bounds: Bounds
    verdicts: list = field(default_factory=list)

    def verdict(self, cls: CheckClass) -> ClassVerdict:
        return next(v for v in self.verdicts if v.cls is cls)

    @property
    def weak_forms_diverge(self) -> bool:
        """Single-fact and instance forms of weak-adom disagree within these bounds."""
        return (self.verdict(CheckClass.WEAK_ADOM).holds
                != self.verdict(CheckClass.WEAK_ADOM_INSTANCE).holds)


def classify_query(query: Query, bounds: Bounds) -> QueryReport:
    report = QueryReport(query.name, bounds, [CHECKERS[c](query, bounds) for c in HIERARCHY])
    # single-fact addition spaces are nested, so verdicts must respect the chain
    holds = [report.verdict(c).holds for c in HIERARCHY[:3]]
    for stronger, weaker in itertools.combinations(range(3), 2):
        if holds[stronger] and not holds[weaker]:
            raise InconsistentVerdicts(
                f"{HIERARCHY[stronger]} holds but {HIERARCHY[weaker]} is refuted for {query.name}")
    return report


# -- report text ------------------------------------------------------------

def format_verdict(v: ClassVerdict) -> str:
    lines = [f"class={v.cls} result={'holds' if v.holds else 'refuted'} bounds={v.bounds}\n"]
    if not v.holds:
        cex = v.counterexample
        lines.append("% base\n" + format_facts(cex.base))
        lines.append("% addition\n" + format_facts(cex.addition))
        lines.append("% witness\n" + format_facts([cex.lost_witness]))
    return "".join(lines)


def format_report(report: QueryReport) -> str:
    return "".join(format_verdict(v) for v in report.verdicts)


def parse_verdicts(text: str) -> list:
    """Inverse of :func:`format_verdict` over a concatenation of verdicts."""
    verdicts = []
    header, blocks, current = None, {}, None

    def flush():
        if header is None:
            return
        cls, result, bounds = header
        cex = None
        if result == "refuted":
            (w,) = parse_facts("".join(blocks["witness"]))
            cex = Counterexample(parse_facts("".join(blocks["base"])),
                                 parse_facts("".join(blocks["addition"])), w)
        verdicts.append(ClassVerdict(cls, bounds, cex))

    for line in text.splitlines(keepends=True):
        if line.startswith("class="):
            flush()
            fields = dict(part.split("=", 1) for part in line.split())
            header = (CheckClass(fields["class"]), fields["result"], Bounds.parse(fields["bounds"]))
            blocks, current = {}, None
        elif line.startswith("% "):
            current = line[2:].strip()
            blocks[current] = []
        elif current is not None:
            blocks[current].append(line)
    flush()
    return verdicts
