import pytest
from hypothesis import given, settings, strategies as st

from calmlab.datalog import (BUILTINS, SEMIPOSITIVE_CORPUS, SchemaMismatchError, builtin_query,
                             complement, corpus_program, corpus_query, eval_query, evaluate,
                             evaluate_model, parse_program, winmove)
from calmlab.relcore import Fact, Schema, adom, enumerate_instances, fact, instance

from oracles import ORACLES, winmove_oracle

E2 = Schema.parse("e/2")

consts = st.sampled_from(["a", "b", "c", "d"])
edge_sets = st.frozensets(st.builds(lambda x, y: Fact("e", (x, y)), consts, consts), max_size=7)
move_sets = st.frozensets(st.builds(lambda x, y: Fact("move", (x, y)), consts, consts),
                          max_size=7)


def test_remark33_goldens():
    p = corpus_program("remark33")
    assert evaluate(p, instance("e(a,b)")) == {fact("answer()")}
    assert evaluate(p, instance("e(a,b)", "e(b,c)")) == frozenset()


def test_tc_golden():
    got = evaluate(corpus_program("tc"), instance("e(a,b)", "e(b,c)"))
    assert got == instance("t(a,b)", "t(b,c)", "t(a,c)")


def test_tc_empty():
    assert eval_query(builtin_query("tc"), set()) == frozenset()


@pytest.mark.parametrize("inst,expected", [
    (["move(a,b)"], ["won(a)"]),
    (["move(a,b)", "move(b,c)"], ["won(b)"]),
    (["move(c,c)"], []),
    (["move(a,b)", "move(b,a)"], []),
    (["move(a,b)", "move(b,a)", "move(b,c)"], ["won(b)"]),
])
def test_winmove_goldens(inst, expected):
    assert winmove(instance(*inst)) == instance(*expected)


@pytest.mark.parametrize("inst,expected", [
    (["e(a,b)"], ["e__c(a,a)", "e__c(b,a)", "e__c(b,b)"]),
    ([], []),
])
def test_complement_goldens(inst, expected):
    assert complement(instance(*inst), E2) == instance(*expected)


def test_complement_of_present_nullary_is_empty():
    assert complement(instance("q()"), Schema.parse("q/0")) == frozenset()


def test_schema_mismatch_is_reported():
    with pytest.raises(SchemaMismatchError):
        eval_query(builtin_query("tc"), instance("move(a,b)"))


@pytest.mark.parametrize("name", ["tc", "asym", "remark33"])
@settings(max_examples=60, deadline=None)
@given(inst=edge_sets)
def test_builtin_and_corpus_and_oracle_agree(name, inst):
    expected = ORACLES[name](inst)
    assert eval_query(builtin_query(name), inst) == expected
    assert eval_query(corpus_query(name), inst) == expected


@settings(max_examples=150, deadline=None)
@given(inst=move_sets)
def test_winmove_matches_retrograde_analysis(inst):
    assert winmove(inst) == winmove_oracle(inst)


@settings(max_examples=80, deadline=None)
@given(a=move_sets, b=move_sets)
def test_winmove_disjoint_union(a, b):
    rename = {c: c + "x" for c in adom(b)}
    b = frozenset(Fact("move", tuple(rename[c] for c in f.args)) for f in b)
    assert winmove(a | b) == winmove(a) | winmove(b)


@pytest.mark.parametrize("name", ["tc", "asym", "remark33", "guarded_tc", "open_triangle"])
@settings(max_examples=40, deadline=None)
@given(inst=edge_sets)
def test_naive_equals_seminaive(name, inst):
    p = corpus_program(name)
    inst = frozenset(f for f in inst if f.symbol in p.edb.relations)
    assert evaluate_model(p, inst, "naive") == evaluate_model(p, inst, "seminaive")


@pytest.mark.parametrize("name", SEMIPOSITIVE_CORPUS)
def test_complement_construction_small_exhaustive(name):
    p = corpus_program(name)
    for inst in enumerate_instances(p.edb, 2, 3):
        assert evaluate(p, inst) == evaluate(p, inst, "complement"), inst


def test_program_constants_are_matched():
    p = parse_program("hit(X) :- e(X,c).\n@output hit.")
    assert evaluate(p, instance("e(a,c)", "e(b,d)")) == instance("hit(a)")


def test_corpus_covers_builtins():
    for name in BUILTINS:
        assert corpus_program(name).rules
