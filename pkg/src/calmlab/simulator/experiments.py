"""Sampled correctness, coordination-freeness and indistinguishability experiments."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Iterable, Optional

from ..datalog import Query, eval_query
from ..netmodel import (ConstantAssignment, ConstantMapPolicy, ConstructibilityError,
                        ExplicitPolicy, HashPolicy, ModelTag, NetworkGraph, Policy,
                        SingleNodePolicy, all_on_one, compatible_policy,
                        isolate_constants_assignment, isolate_fact_policy, line, single)
from ..relcore import Fact, adom, format_fact_list
from ..transducer import Protocol, state_equal
from .network import (NetworkState, RunConfig, heartbeat_round, run,
                      fixed_schedule_round, run_heartbeat_only, validate_scenario)


@dataclass(frozen=True)
class Failure:
    kind: str  # wrong-output | not-converged | unsound | constructibility | diverged
    network: str
    policy: str
    seed: Optional[int]
    input: frozenset
    observed: frozenset
    expected: frozenset
    detail: str = ""

    def __str__(self):
        return (f"{self.kind} network={self.network} policy={self.policy} seed={self.seed} "
                f"input={format_fact_list(self.input)} observed={format_fact_list(self.observed)} "
                f"expected={format_fact_list(self.expected)} {self.detail}").rstrip()


@dataclass
class Verdict:
    failures: list = field(default_factory=list)
    runs: int = 0
    unsound_runs: int = 0
    constructibility_errors: int = 0

    @property
    def computes(self) -> bool:
        return not self.failures

    def merge(self, other: "Verdict") -> "Verdict":
        self.failures += other.failures
        self.runs += other.runs
        self.unsound_runs += other.unsound_runs
        self.constructibility_errors += other.constructibility_errors
        return self


def _policy_label(policy: Policy) -> str:
    return str(policy.to_config())


def check_computes(protocol: Protocol, query: Query, inputs: Iterable, networks: Iterable,
                   policies: Callable, seeds: Iterable, model: ModelTag = ModelTag.N1,
                   cfg: RunConfig = RunConfig()) -> Verdict:
    """Run every (input, network, policy, seed) to quiescence and compare with Q(I).

    ``policies(graph, instance)`` yields the policies to try. Emitted facts
    outside Q(I) are counted separately as unsound runs.
    """
    verdict = Verdict()
    seeds = list(seeds)
    networks = list(networks)
    for inst in inputs:
        inst = frozenset(inst)
        expected = eval_query(query, inst)
        for graph in networks:
            for policy in policies(graph, inst):
                for seed in seeds:
                    verdict.runs += 1
                    where = dict(network=str(graph), policy=_policy_label(policy), seed=seed,
                                 input=inst, expected=expected)
                    try:
                        res = run(protocol, graph, inst, policy,
                                  RunConfig(seed, cfg.fairness_bound, cfg.max_steps),
                                  model, keep_trace=False)
                    except ConstructibilityError as exc:
                        verdict.constructibility_errors += 1
                        verdict.failures.append(Failure("constructibility", observed=frozenset(),
                                                        detail=str(exc), **where))
                        continue
                    if not res.output <= expected:
                        verdict.unsound_runs += 1
                        verdict.failures.append(Failure("unsound", observed=res.output, **where))
                    elif not res.converged:
                        verdict.failures.append(Failure("not-converged", observed=res.output,
                                                        detail=f"steps={res.steps_taken}", **where))
                    elif res.output != expected:
                        verdict.failures.append(Failure("wrong-output", observed=res.output,
                                                        **where))
    return verdict


def check_coordination_free(protocol: Protocol, query: Query, model: ModelTag,
                            inputs: Iterable, networks: Iterable, rounds: int = 100) -> Verdict:
    """Witness the definition with the all-on-one-node policy and heartbeats only."""
    verdict = Verdict()
    for inst in inputs:
        inst = frozenset(inst)
        expected = eval_query(query, inst)
        for graph in networks:
            policy = all_on_one(model, min(graph.nodes))
            verdict.runs += 1
            res = run_heartbeat_only(protocol, graph, inst, policy, rounds, model)
            where = dict(network=str(graph), policy=_policy_label(policy), seed=None,
                         input=inst, expected=expected, observed=res.output)
            if not res.output <= expected:
                verdict.unsound_runs += 1
                verdict.failures.append(Failure("unsound", **where))
            elif res.output != expected or res.deliveries:
                verdict.failures.append(Failure("wrong-output", detail=f"rounds={res.rounds}",
                                                **where))
    return verdict


@dataclass
class IndistinguishabilityReport:
    states_equal_per_round: list
    spurious_output: frozenset
    scenario1_output: frozenset
    scenario2_node0_output: frozenset
    expected_with_f: frozenset

    @property
    def states_equal(self) -> bool:
        return all(self.states_equal_per_round)


def indistinguishability(protocol: Protocol, query: Query, inst, f: Fact, model: ModelTag,
                         rounds: int = 10) -> IndistinguishabilityReport:
    """Run I alone on one node, and I plus ``f`` split over two nodes; compare node 0.

    Both scenarios step heartbeats only. For N1 ``f`` goes to node 1 by an
    explicit override; for N2 the constants of ``f`` are assigned to node 1.
    """
    inst = frozenset(inst)
    if model is ModelTag.N1:
        if f in inst or f.constants() <= adom(inst):
            raise ValueError(f"{f} must be new and carry a constant outside adom(I)")
        policy2 = isolate_fact_policy(inst, f, 0, 1)
    elif model is ModelTag.N2:
        policy2 = compatible_policy(isolate_constants_assignment(inst, f, 0, 1))
    else:
        raise ValueError("indistinguishability experiments are defined for N1 and N2")
    policy1 = all_on_one(model, 0)
    g1, g2 = single(), line(2)
    validate_scenario(protocol, g1, policy1, model)
    validate_scenario(protocol, g2, policy2, model)
    net1 = NetworkState.initialize(protocol, g1, inst, policy1, model)
    net2 = NetworkState.initialize(protocol, g2, inst | {f}, policy2, model)
    equal = [state_equal(net1.states[0], net2.states[0])]
    for _ in range(rounds):
        heartbeat_round(net1)
        heartbeat_round(net2)
        equal.append(state_equal(net1.states[0], net2.states[0]))
    expected = eval_query(query, inst | {f})
    node0 = net2.states[0].emitted
    return IndistinguishabilityReport(equal, node0 - expected, net1.output, node0, expected)


@dataclass
class ExploreVerdict(Verdict):
    outputs: set = field(default_factory=set)
    branches: int = 0
    distinct_states: int = 0
    complete: bool = True
    explored_fraction: float = 1.0


class ExplorationBudgetExceeded(RuntimeError):
    def __init__(self, verdict: ExploreVerdict):
        self.verdict = verdict
        super().__init__(f"exploration budget exceeded after {verdict.branches} branches "
                         f"(about {verdict.explored_fraction:.1%} explored)")


def _complete(net: NetworkState, max_steps: int, memo: dict):
    """Fixed fair completion; returns (quiesced, output) with outcomes memoized per state."""
    path = []
    outcome = None
    while net.step_count < max_steps:
        if net.quiescent():
            outcome = (True, net.output)
            break
        sig = net.signature()
        if sig in memo:
            outcome = memo[sig]
            break
        path.append(sig)
        fixed_schedule_round(net)
    if outcome is None:
        return net.quiescent(), net.output
    for sig in path:
        memo[sig] = outcome
    return outcome


def _choices(net: NetworkState):
    for n in sorted(net.states):
        yield n, None
        seen = set()
        for i, env in enumerate(net.buffers[n]):
            if env.fact not in seen:
                seen.add(env.fact)
                yield n, i


def explore_schedules(protocol: Protocol, graph: NetworkGraph, inst, policy: Policy,
                      depth: int, model: ModelTag = ModelTag.N1,
                      expected: Optional[frozenset] = None, max_branches: int = 50_000,
                      max_steps: int = 100_000, raise_on_budget: bool = True) -> ExploreVerdict:
    """Enumerate every choice prefix of length ``depth``, finish each fairly, compare outputs.

    A choice is (node, heartbeat) or (node, one of the distinct buffered
    facts). Prefixes reaching an already-seen network state (buffers taken
    as bags) at the same depth are merged.
    """
    validate_scenario(protocol, graph, policy, model)
    inst = frozenset(inst)
    root = NetworkState.initialize(protocol, graph, inst, policy, model)
    verdict = ExploreVerdict()
    seen = set()
    memo = {}
    stack = [(root, 0)]
    while stack:
        net, d = stack.pop()
        key = (d, net.signature(ordered=False))
        if key in seen:
            continue
        seen.add(key)
        if d == depth or net.quiescent():
            verdict.branches += 1
            verdict.runs += 1
            done, out = _complete(net, net.step_count + max_steps, memo)
            verdict.outputs.add(out)
            ref = expected if expected is not None else next(iter(verdict.outputs))
            if expected is not None and not out <= expected:
                verdict.unsound_runs += 1
            if not done or out != ref:
                verdict.failures.append(Failure(
                    "not-converged" if not done else "diverged", str(graph),
                    _policy_label(policy), None, inst, out, ref, f"branch={verdict.branches}"))
            if verdict.branches >= max_branches and stack:
                verdict.complete = False
                verdict.explored_fraction = verdict.branches / (verdict.branches + len(stack))
                if raise_on_budget:
                    raise ExplorationBudgetExceeded(verdict)
                break
            continue
        children = []
        for node, index in _choices(net):
            child = net.clone()
            if index is None:
                child.fire(node)
            else:
                child.deliver_at(node, index)
            children.append((child, d + 1))
        stack.extend(reversed(children))
    verdict.distinct_states = len(seen)
    if len(verdict.outputs) > 1 and not any(f.kind == "diverged" for f in verdict.failures):
        verdict.failures.append(Failure("diverged", str(graph), _policy_label(policy), None,
                                        inst, frozenset(), frozenset(),
                                        f"{len(verdict.outputs)} distinct outputs"))
    return verdict


# -- policy families ----------------------------------------------------------

def arbitrary_policies(graph: NetworkGraph, inst) -> list:
    """Policies with no structure requirement, for protocols correct under N1."""
    nodes = sorted(graph.nodes)
    ordered = sorted(inst)
    out = [SingleNodePolicy(nodes[-1]), HashPolicy(tuple(nodes)), HashPolicy(tuple(nodes), "x")]
    # fact i goes to node i mod |V|; the last fact is also replicated everywhere
    overrides = {f: frozenset([nodes[i % len(nodes)]]) for i, f in enumerate(ordered)}
    if ordered:
        overrides[ordered[-1]] = frozenset(nodes)
    out.append(ExplicitPolicy(frozenset([nodes[0]]), overrides))
    out.append(ConstantMapPolicy(ConstantAssignment({}, ("hash", tuple(nodes)), nodes[-1])))
    return out


def compatible_policies(graph: NetworkGraph, inst) -> list:
    """Six distinct constant-map policies over the graph's nodes."""
    nodes = sorted(graph.nodes)
    consts = sorted(adom(inst))
    every = frozenset(nodes)
    first, last = nodes[0], nodes[-1]
    round_robin = {c: frozenset([nodes[i % len(nodes)]]) for i, c in enumerate(consts)}
    two_replicas = {c: frozenset([nodes[i % len(nodes)], nodes[(i + 1) % len(nodes)]])
                    for i, c in enumerate(consts)}
    assignments = [
        ConstantAssignment({}, frozenset([first]), first),
        ConstantAssignment({}, ("hash", tuple(nodes)), last),
        ConstantAssignment(two_replicas, frozenset([first]), first),
        ConstantAssignment(round_robin, frozenset([last]), last),
        ConstantAssignment({}, every, first),
        ConstantAssignment({}, frozenset([last]), first),
    ]
    return [compatible_policy(a) for a in assignments]
