import pytest
from hypothesis import given, strategies as st

from calmlab.relcore import (Fact, FactSyntaxError, RelSymbol, RelcoreError, Schema, adom,
                             canonical_constants, check_instance, enumerate_instances, fact,
                             format_fact_list, format_facts, fresh_constants, herbrand_slice,
                             instance, parse_facts, schema_of)

E2 = Schema.parse("e/2")

consts = st.sampled_from(["a", "b", "c", "d"])
facts = st.builds(lambda x, y: Fact("e", (x, y)), consts, consts)
instances = st.frozensets(facts, max_size=6)


def test_schema_parse_and_lookup():
    s = Schema.parse("e/2, q/0")
    assert s.arity("e") == 2 and s.arity("q") == 0
    assert s.names == frozenset({"e", "q"})
    assert [r.name for r in s.non_nullary()] == ["e"]
    with pytest.raises(RelcoreError):
        Schema([RelSymbol("e", 2), RelSymbol("e", 1)])


def test_fact_text_roundtrip():
    f = fact("e(a,b).")
    assert f == Fact("e", ("a", "b"))
    assert str(f) == "e(a,b)"
    assert str(fact("p()")) == "p()"
    assert f.constants() == frozenset({"a", "b"})


def test_parse_facts_reports_position():
    with pytest.raises(FactSyntaxError) as exc:
        parse_facts("e(a,b).\ne(a b).")
    assert exc.value.line == 2


def test_parse_facts_skips_comments():
    assert parse_facts("% nothing\ne(a,b). % trailing\n") == {fact("e(a,b)")}


def test_adom_and_schema_of():
    inst = instance("e(a,b)", "q()", "r(c)")
    assert adom(inst) == {"a", "b", "c"}
    assert schema_of(inst) == Schema.parse("e/2, q/0, r/1")


def test_check_instance_rejects_foreign_relation():
    check_instance({fact("e(a,b)")}, E2)
    with pytest.raises(RelcoreError):
        check_instance({fact("r(a)")}, E2)


def test_herbrand_slice_sizes():
    s = Schema.parse("e/2, b/1, q/0")
    assert len(herbrand_slice(s, ["a", "b", "c"])) == 9 + 3
    assert len(herbrand_slice(s, ["a", "b", "c"], include_nullary=True)) == 13


def test_enumerate_instances_counts_and_order():
    got = list(enumerate_instances(E2, 2, 2))
    # 4 possible facts: 1 + 4 + 6 instances
    assert len(got) == 11
    assert [len(i) for i in got] == sorted(len(i) for i in got)
    assert got[0] == frozenset()


def test_fresh_constants_avoid_existing():
    got = fresh_constants({"f1", "a"}, 2)
    assert len(got) == 2 and "f1" not in got and "a" not in got
    assert canonical_constants(3) == ["c1", "c2", "c3"]


@given(instances)
def test_format_parse_roundtrip(inst):
    assert parse_facts(format_facts(inst)) == inst


@given(instances)
def test_format_is_canonical(inst):
    text = format_facts(inst)
    assert text.splitlines() == sorted(text.splitlines())
    assert format_fact_list(inst) == "[" + ",".join(str(f) for f in sorted(inst)) + "]"
