import pytest
from hypothesis import given, settings, strategies as st

from calmlab.datalog import Query, builtin_query, corpus_query
from calmlab.monocheck import (Bounds, CheckClass, Counterexample, HIERARCHY,
                               check_adom_monotone, check_monotone, check_weak_adom_instance,
                               check_weak_adom_monotone, classify_query, format_report,
                               parse_verdicts, side_condition, validate)
from calmlab.relcore import Schema, fact, instance

from oracles import equivalent_under_renaming

B331 = Bounds(3, 3, 1)
B332 = Bounds(3, 3, 2)


def _cex(base, addition, w):
    return Counterexample(instance(*base), instance(*addition), fact(w))


def test_bounds_parse():
    assert Bounds.parse("3,4,1") == Bounds(3, 4, 1)
    assert str(Bounds(2, 2, 2)) == "2,2,2"


def test_side_conditions():
    base = instance("e(a,b)")
    assert side_condition(CheckClass.MONOTONE, base, instance("e(b,a)"))
    assert not side_condition(CheckClass.ADOM, base, instance("e(b,a)"))
    assert side_condition(CheckClass.ADOM, base, instance("e(b,c)"))
    assert not side_condition(CheckClass.WEAK_ADOM, base, instance("e(b,c)"))
    assert side_condition(CheckClass.WEAK_ADOM, base, instance("e(c,c)"))
    assert not side_condition(CheckClass.WEAK_ADOM, instance("e(a,b)"), instance("q()"))
    assert side_condition(CheckClass.WEAK_ADOM_INSTANCE, base, instance("e(c,d)", "e(d,e)"))
    assert not side_condition(CheckClass.WEAK_ADOM_INSTANCE, base, instance("e(c,d)", "e(d,a)"))


@pytest.mark.parametrize("query,cls,cex", [
    ("asym", CheckClass.MONOTONE, (["e(a,b)"], ["e(b,a)"], "asym(a,b)")),
    ("remark33", CheckClass.MONOTONE, (["e(a,b)"], ["e(b,c)"], "answer()")),
    ("remark33", CheckClass.ADOM, (["e(a,b)"], ["e(b,c)"], "answer()")),
    ("winmove", CheckClass.ADOM, (["move(a,b)"], ["move(b,c)"], "won(a)")),
    ("remark33", CheckClass.WEAK_ADOM, (["e(a,b)"], ["e(c,c)"], "answer()")),
    ("remark33", CheckClass.WEAK_ADOM_INSTANCE, (["e(a,b)"], ["e(c,d)", "e(d,e)"], "answer()")),
])
def test_known_counterexamples_validate(query, cls, cex):
    assert validate(builtin_query(query), _cex(*cex), cls)


def test_validate_rejects_non_violation_and_wrong_side_condition():
    q = builtin_query("asym")
    assert not validate(q, _cex(["e(a,b)"], ["e(c,d)"], "asym(a,b)"), CheckClass.ADOM)
    assert not validate(q, _cex(["e(a,b)"], ["e(b,a)"], "asym(a,b)"), CheckClass.ADOM)


def test_tc_holds_everywhere():
    q = builtin_query("tc")
    assert check_monotone(q, B331).holds
    assert check_weak_adom_monotone(q, Bounds(2, 2, 2)).holds
    assert all(v.holds for v in classify_query(q, B332).verdicts)


def test_asym_hierarchy():
    r = classify_query(builtin_query("asym"), B331)
    cex = r.verdict(CheckClass.MONOTONE).counterexample
    assert equivalent_under_renaming((cex.base, cex.addition),
                                     (instance("e(a,b)"), instance("e(b,a)")))
    assert [r.verdict(c).holds for c in HIERARCHY] == [False, True, True, True]


def test_winmove_hierarchy_and_witness():
    r = classify_query(builtin_query("winmove"), B332)
    assert [r.verdict(c).holds for c in HIERARCHY] == [False, False, True, True]
    cex = r.verdict(CheckClass.ADOM).counterexample
    assert equivalent_under_renaming((cex.base, cex.addition),
                                     (instance("move(a,b)"), instance("move(b,c)")))
    assert not r.weak_forms_diverge


def test_remark33_all_refuted():
    r = classify_query(builtin_query("remark33"), B332)
    assert not any(v.holds for v in r.verdicts)
    weak = r.verdict(CheckClass.WEAK_ADOM).counterexample
    assert equivalent_under_renaming((weak.base, weak.addition),
                                     (instance("e(a,b)"), instance("e(c,c)")))


def test_instance_form_on_remark33():
    v = check_weak_adom_instance(builtin_query("remark33"), Bounds(2, 2, 3))
    assert not v.holds
    assert validate(builtin_query("remark33"), v.counterexample, CheckClass.WEAK_ADOM_INSTANCE)
    assert check_weak_adom_instance(builtin_query("winmove"), Bounds(2, 2, 2)).holds


def test_empty_query_holds():
    q = Query.opaque("nothing", Schema.parse("e/2"), Schema.parse("o/0"), lambda inst: set())
    assert all(v.holds for v in classify_query(q, Bounds(2, 2, 1)).verdicts)


def test_adom_checks_need_fresh_constants():
    with pytest.raises(ValueError):
        check_adom_monotone(builtin_query("asym"), Bounds(2, 2, 0))


@pytest.mark.parametrize("name", ["asym", "remark33", "winmove"])
def test_report_roundtrip_and_replay(name):
    q = builtin_query(name)
    r = classify_query(q, B332)
    parsed = parse_verdicts(format_report(r))
    assert parsed == r.verdicts
    for v in parsed:
        if not v.holds:
            assert validate(q, v.counterexample, v.cls)


def test_counterexamples_are_minimal_in_base():
    q = corpus_query("remark33")
    cex = check_adom_monotone(q, B331).counterexample
    assert len(cex.base) == 1 and len(cex.addition) == 1


# any refutation of a stronger-restricted class is also a refutation of a weaker one
@settings(max_examples=30, deadline=None)
@given(st.sampled_from(["tc", "asym", "remark33", "winmove"]),
       st.sampled_from([Bounds(2, 2, 1), Bounds(2, 3, 1), Bounds(3, 2, 1)]))
def test_verdict_chain(name, bounds):
    r = classify_query(builtin_query(name), bounds)
    for stronger, weaker in [(0, 1), (1, 2), (0, 2)]:
        if r.verdict(HIERARCHY[stronger]).holds:
            assert r.verdict(HIERARCHY[weaker]).holds
    for v in r.verdicts:
        if not v.holds:
            assert validate(builtin_query(name), v.counterexample, v.cls)
            # a counterexample for a more restricted class also refutes plain monotonicity
            assert validate(builtin_query(name), v.counterexample, CheckClass.MONOTONE)
