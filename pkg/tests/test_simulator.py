import re
from pathlib import Path

import pytest

from calmlab.datalog import builtin_query
from calmlab.netmodel import (ConstantAssignment, HashPolicy, ModelTag, SingleNodePolicy,
                              compatible_policy, complete, line, star)
from calmlab.relcore import instance
from calmlab.simulator import (FairScheduler, NetworkState, RunConfig, ScenarioError,
                               explore_schedules, heartbeat_round, run, run_heartbeat_only)
from calmlab.transducer import make_protocol

GOLDEN = Path(__file__).parent / "golden"
TRACE_LINE = re.compile(r"step=(\d+) node=n(\d+) ev=(hb|dv) fact=(\S+) sent=(\d+) emit=\[(.*)\]")

TC_INPUT = instance("e(a,b)", "e(b,c)", "e(c,d)")
ASYM_INPUT = instance("e(a,b)", "e(b,a)", "e(b,c)", "e(c,d)")
WM_INPUT = instance("move(a,b)", "move(b,c)", "move(c,d)")
WM_POLICY = compatible_policy(ConstantAssignment({}, ("hash", (0, 1, 2)), 0))

CASES = [
    ("t_mono", "tc", TC_INPUT, HashPolicy((0, 1, 2)), ModelTag.N1),
    ("t_adom", "asym", ASYM_INPUT, HashPolicy((0, 1, 2)), ModelTag.N1),
    ("t_repl", "winmove", WM_INPUT, WM_POLICY, ModelTag.N2),
]


def _run(case, seed, graph=None, k=4):
    name, q, inst, policy, model = case
    return run(make_protocol(name, builtin_query(q)), graph or complete(3), inst, policy,
               RunConfig(seed=seed, fairness_bound=k), model)


def test_golden_trace():
    r = run(make_protocol("t_mono", builtin_query("tc")), line(2), instance("e(a,b)", "e(b,c)"),
            HashPolicy((0, 1)), RunConfig(seed=5))
    assert r.trace_text() == (GOLDEN / "tc_line2_seed5.trace").read_text()


def test_trace_format():
    text = _run(CASES[0], 3).trace_text()
    *events, last = text.splitlines()
    assert all(TRACE_LINE.fullmatch(line) for line in events)
    assert re.fullmatch(r"result converged=(true|false) steps=\d+", last)


@pytest.mark.parametrize("case", CASES, ids=lambda c: c[0])
def test_replayable(case):
    a, b = _run(case, 11), _run(case, 11)
    assert a.trace_text() == b.trace_text()
    assert a.output == b.output


@pytest.mark.parametrize("case", CASES, ids=lambda c: c[0])
def test_confluent_across_seeds(case):
    outs = {_run(case, seed).output for seed in range(8)}
    assert len(outs) == 1
    assert _run(case, 0).trace_text() != _run(case, 1).trace_text()


@pytest.mark.parametrize("k", [1, 2, 4])
@pytest.mark.parametrize("case", CASES, ids=lambda c: c[0])
def test_fairness_bounds_hold_in_traces(case, k):
    graph = star(3)
    name, q, inst, policy, model = case
    net = NetworkState.initialize(make_protocol(name, builtin_query(q)), graph, inst, policy,
                                  model)
    sched = FairScheduler(net, RunConfig(seed=2, fairness_bound=k))
    events = []
    while not net.quiescent():
        events.append(sched.step())
        # no buffered message was overtaken more than k-1 times
        assert all(e.bypassed <= k - 1 for b in net.buffers.values() for e in b)
    n = len(graph)
    last, streak = {v: -1 for v in graph.nodes}, {v: 0 for v in graph.nodes}
    for e in events:
        assert e.step - last[e.node] <= k * n
        last[e.node] = e.step
        streak[e.node] = 0 if e.message is None else streak[e.node] + 1
        assert streak[e.node] <= k


@pytest.mark.parametrize("case", CASES, ids=lambda c: c[0])
def test_quiescence_is_a_fixpoint(case):
    res = _run(case, 4)
    assert res.converged
    net = res.network
    before = {n: (s.memory, s.emitted) for n, s in net.states.items()}
    for s in net.states.values():
        s.stable = False
    events = heartbeat_round(net)
    assert all(not e.sent and not e.emitted for e in events)
    assert {n: (s.memory, s.emitted) for n, s in net.states.items()} == before


@pytest.mark.parametrize("case", CASES, ids=lambda c: c[0])
def test_output_grows_along_trace(case):
    res = _run(case, 6)
    per_node, union = {}, set()
    for e in res.trace:
        mine = per_node.setdefault(e.node, set())
        assert not (e.emitted & mine)
        mine |= e.emitted
        assert e.emitted <= res.output
        union |= e.emitted
    assert union == res.output


def test_heartbeat_only_single_policy():
    p = make_protocol("t_adom", builtin_query("asym"))
    res = run_heartbeat_only(p, line(3), ASYM_INPUT, SingleNodePolicy(0))
    assert res.output == instance("asym(b,c)", "asym(c,d)")
    assert res.deliveries == 0 and res.fixpoint


def test_max_steps_reports_non_convergence():
    res = _run(CASES[1], 0, graph=complete(3))
    capped = run(make_protocol("t_adom", builtin_query("asym")), complete(3), ASYM_INPUT,
                 HashPolicy((0, 1, 2)), RunConfig(seed=0, max_steps=3))
    assert res.converged and not capped.converged
    assert capped.steps_taken == 3
    assert capped.trace_text().endswith("result converged=false steps=3\n")


def test_scenario_validation():
    with pytest.raises(ScenarioError):
        run(make_protocol("t_repl", builtin_query("winmove")), line(2), WM_INPUT,
            HashPolicy((0, 1)), model=ModelTag.N2)
    with pytest.raises(ScenarioError):
        run(make_protocol("t_adom", builtin_query("asym")), line(2), ASYM_INPUT,
            HashPolicy((0, 1)), model=ModelTag.N0)
    with pytest.raises(ScenarioError):
        run(make_protocol("t_mono", builtin_query("tc")), line(2), TC_INPUT,
            HashPolicy((0, 5)))


def test_explore_depth_zero_is_one_run():
    p = make_protocol("t_mono", builtin_query("tc"))
    v = explore_schedules(p, line(2), TC_INPUT, HashPolicy((0, 1)), 0)
    assert v.branches == 1 and v.outputs == {builtin_query("tc")(TC_INPUT)}


def test_n3_exposes_global_adom():
    p = make_protocol("t_mono", builtin_query("tc"))
    net = NetworkState.initialize(p, line(2), TC_INPUT, SingleNodePolicy(0), ModelTag.N3)
    assert net.states[1].system.global_adom == {"a", "b", "c", "d"}
