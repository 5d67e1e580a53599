import pytest
from hypothesis import given, settings, strategies as st

from calmlab.datalog import builtin_query
from calmlab.netmodel import (ConstantAssignment, HashPolicy, ModelTag, Oracle, SingleNodePolicy,
                              all_on_one, compatible_policy, line)
from calmlab.relcore import Fact, fact, instance
from calmlab.simulator import NetworkState, run
from calmlab.transducer import (HEARTBEAT, MessageSchemaError, System, deliver, make_protocol,
                                next_memory, state_equal, StepOutput)

from oracles import asym_oracle, tc_oracle, winmove_oracle


def _state(protocol, local, policy=SingleNodePolicy(0), node=0, nodes=(0,)):
    system = System(node, frozenset(nodes), Oracle(policy, node))
    return protocol.initial_state(frozenset(local), system)


def _heartbeat(protocol, state):
    out = protocol.step(state, HEARTBEAT)
    state.apply(out)
    return out


def test_mono_first_heartbeat_floods_input():
    p = make_protocol("t_mono", builtin_query("tc"))
    s = _state(p, instance("e(a,b)"))
    out = _heartbeat(p, s)
    assert fact("fact__e(a,b)") in out.messages
    assert fact("sent__fact__e(a,b)") in s.memory
    assert s.emitted == instance("t(a,b)")


@pytest.mark.parametrize("name,query,model", [
    ("t_mono", "tc", ModelTag.N1),
    ("t_adom", "asym", ModelTag.N1),
    ("t_repl", "winmove", ModelTag.N2),
])
def test_heartbeat_at_fixpoint_is_noop(name, query, model):
    p = make_protocol(name, builtin_query(query))
    inst = instance("move(a,b)", "move(b,c)") if query == "winmove" else instance("e(a,b)")
    s = _state(p, inst, all_on_one(model))
    for _ in range(3):
        _heartbeat(p, s)
    s.stable = False  # force a real evaluation rather than the memo
    assert p.step(s, HEARTBEAT).is_noop


def test_adom_constant_delivery_is_stored():
    p = make_protocol("t_adom", builtin_query("asym"))
    s = _state(p, instance("e(a,b)"))
    out = p.step(s, deliver(fact("const(c)")))
    assert fact("adomM(c)") in out.mem_insert


def test_adom_single_node_ready_after_one_heartbeat():
    p = make_protocol("t_adom", builtin_query("asym"))
    s = _state(p, instance("e(a,b)", "e(b,a)", "e(b,c)"))
    _heartbeat(p, s)
    assert s.emitted == instance("asym(b,c)")


def test_repl_single_node_ready_after_one_heartbeat():
    p = make_protocol("t_repl", builtin_query("winmove"))
    inst = instance("move(a,b)", "move(b,c)")
    s = _state(p, inst, all_on_one(ModelTag.N2))
    _heartbeat(p, s)
    assert s.emitted == instance("won(b)")


def test_message_schema_is_enforced():
    p = make_protocol("t_mono", builtin_query("tc"))
    s = _state(p, set())
    with pytest.raises(MessageSchemaError):
        p.step(s, deliver(fact("fact__move(a,b)")))
    with pytest.raises(MessageSchemaError):
        p.step(s, deliver(fact("e(a,b)")))


def test_next_memory_insert_wins():
    mem = instance("m(a)", "m(b)")
    out = StepOutput(mem_insert=instance("m(b)", "m(c)"), mem_delete=instance("m(a)", "m(b)"))
    assert next_memory(mem, out) == instance("m(b)", "m(c)")


def test_state_equal_cases():
    p = make_protocol("t_adom", builtin_query("asym"))
    inst = instance("e(a,b)")
    s1 = _state(p, inst, SingleNodePolicy(0))
    s2 = _state(p, inst, SingleNodePolicy(0))
    assert state_equal(s1, s2)
    _heartbeat(p, s1)
    _heartbeat(p, s2)
    assert state_equal(s1, s2)
    s2.emitted = frozenset()
    assert not state_equal(s1, s2)


@pytest.mark.parametrize("name,query,model,inst,policy,expected", [
    ("t_mono", "tc", ModelTag.N1, ["e(a,b)", "e(b,c)"],
     HashPolicy((0, 1)), ["t(a,b)", "t(b,c)", "t(a,c)"]),
    ("t_adom", "asym", ModelTag.N1, ["e(a,b)", "e(b,a)"], HashPolicy((0, 1)), []),
    ("t_adom", "asym", ModelTag.N1, ["e(a,b)"], SingleNodePolicy(1), ["asym(a,b)"]),
    ("t_repl", "winmove", ModelTag.N2, ["move(a,b)", "move(c,d)"],
     compatible_policy(ConstantAssignment({"a": frozenset([0]), "b": frozenset([0]),
                                           "c": frozenset([1]), "d": frozenset([1])})),
     ["won(a)", "won(c)"]),
    ("t_repl", "winmove", ModelTag.N2, ["move(a,b)", "move(b,c)"],
     compatible_policy(ConstantAssignment({"a": frozenset([0]), "b": frozenset([0, 1]),
                                           "c": frozenset([1])})),
     ["won(b)"]),
])
def test_two_node_examples(name, query, model, inst, policy, expected):
    p = make_protocol(name, builtin_query(query))
    res = run(p, line(2), instance(*inst), policy, model=model)
    assert res.converged
    assert res.output == instance(*expected)


def test_all_facts_on_one_node_reach_the_other():
    p = make_protocol("t_mono", builtin_query("tc"))
    res = run(p, line(2), instance("e(a,b)", "e(b,c)"), SingleNodePolicy(0))
    assert res.network.states[1].emitted == tc_oracle(instance("e(a,b)", "e(b,c)"))


consts = st.sampled_from(["a", "b", "c"])
edge_sets = st.frozensets(st.builds(lambda x, y: Fact("e", (x, y)), consts, consts),
                          min_size=1, max_size=5)


@settings(max_examples=25, deadline=None)
@given(inst=edge_sets, choices=st.lists(st.integers(0, 100), max_size=40))
def test_step_invariants_under_arbitrary_schedules(inst, choices):
    # input is fixed, output only grows, and steps are deterministic
    p = make_protocol("t_adom", builtin_query("asym"))
    net = NetworkState.initialize(p, line(2), inst, HashPolicy((0, 1)), ModelTag.N1)
    inputs = {n: s.input for n, s in net.states.items()}
    prev = {n: s.emitted for n, s in net.states.items()}
    for c in choices:
        node = c % 2
        buf = net.buffers[node]
        before = net.states[node].copy()
        if buf and c % 3:
            msg = buf[c % len(buf)].fact
            assert p.step(before.copy(), deliver(msg)) == p.step(before.copy(), deliver(msg))
            net.deliver_at(node, c % len(buf))
        else:
            net.fire(node)
        for n, s in net.states.items():
            assert s.input == inputs[n]
            assert prev[n] <= s.emitted
            assert s.emitted <= asym_oracle(inst)
            prev[n] = s.emitted


def test_winmove_oracle_on_run_example():
    assert winmove_oracle(instance("move(a,b)", "move(c,d)")) == instance("won(a)", "won(c)")
