"""Seeded execution of a transducer network.

Fairness on finite runs, with ``K`` the fairness bound and ``|V|`` the node
count:

* every node steps at least once in every ``K * |V|`` consecutive steps;
* a node never makes more than ``K`` deliveries in a row without a heartbeat;
* at most ``K - 1`` messages enqueued later than a buffered message are
  delivered at that node before it.

Random draws per step, in order: node (``randrange``), heartbeat-or-deliver
(``random``, only when both are allowed), buffered message (``randrange``).
"""

from __future__ import annotations

import enum
import random
from dataclasses import dataclass, field
from typing import Optional

from ..netmodel import (ModelTag, NetModelError, NetworkGraph, Oracle, Policy,
                        distribute, node_name, validate_for_model)
from ..relcore import Fact, adom, format_fact_list
from ..transducer import HEARTBEAT, Protocol, StepInput, System
from ..transducer.base import SENT, tag

HEARTBEAT_PROBABILITY = 0.25


class ScenarioError(ValueError):
    pass


class Mode(enum.Enum):
    FAIR_RANDOM = "fair-random"
    HEARTBEAT_ONLY = "heartbeat-only"
    EXHAUSTIVE = "exhaustive"

    def __str__(self):
        return self.value


@dataclass(frozen=True)
class RunConfig:
    seed: int = 0
    fairness_bound: int = 4
    max_steps: int = 200_000
    mode: Mode = Mode.FAIR_RANDOM
    depth: int = 4  # exhaustive mode only

    def __post_init__(self):
        if self.fairness_bound < 1 or self.max_steps < 1:
            raise ValueError("fairness_bound and max_steps must be >= 1")


@dataclass
class Envelope:
    seq: int
    fact: Fact
    bypassed: int = 0


@dataclass(frozen=True)
class Event:
    step: int
    node: int
    message: Optional[Fact]
    sent: frozenset
    emitted: frozenset

    def __str__(self):
        ev = "hb" if self.message is None else "dv"
        return (f"step={self.step} node={node_name(self.node)} ev={ev} "
                f"fact={self.message if self.message is not None else '-'} "
                f"sent={len(self.sent)} emit={format_fact_list(self.emitted)}")


def format_trace(events, converged: bool, steps: int) -> str:
    lines = [str(e) for e in events]
    lines.append(f"result converged={'true' if converged else 'false'} steps={steps}")
    return "\n".join(lines) + "\n"


def validate_scenario(protocol: Protocol, graph: NetworkGraph, policy: Policy,
                      model: ModelTag) -> None:
    try:
        validate_for_model(policy, model, graph)
    except NetModelError as exc:
        raise ScenarioError(str(exc)) from exc
    if protocol.needs_oracle and model is ModelTag.N0:
        raise ScenarioError(f"{protocol.name} needs the policy oracle, which N0 does not grant")
    if protocol.name == "t_repl" and model is not ModelTag.N2:
        raise ScenarioError("t_repl is only correct under N2-compatible policies")


class NetworkState:
    """Per-node transducer states plus per-node message bags."""

    def __init__(self, protocol: Protocol, graph: NetworkGraph, states: dict, buffers: dict):
        self.protocol = protocol
        self.graph = graph
        self.states = states
        self.buffers = buffers
        self.neighbors = {n: graph.neighbors(n) for n in graph.nodes}
        self.step_count = 0
        self.seq = 0
        self.deliveries = 0

    @classmethod
    def initialize(cls, protocol: Protocol, graph: NetworkGraph, inst, policy: Policy,
                   model: ModelTag = ModelTag.N1) -> "NetworkState":
        inst = frozenset(inst)
        local = distribute(inst, policy, graph)
        global_adom = adom(inst) if model is ModelTag.N3 else None
        states = {}
        for n in sorted(graph.nodes):
            oracle = Oracle(None if model is ModelTag.N0 else policy, n)
            system = System(n, graph.nodes, oracle, global_adom)
            states[n] = protocol.initial_state(local[n], system)
        return cls(protocol, graph, states, {n: [] for n in states})

    def clone(self) -> "NetworkState":
        other = NetworkState.__new__(NetworkState)
        other.protocol, other.graph, other.neighbors = self.protocol, self.graph, self.neighbors
        other.states = {n: s.copy() for n, s in self.states.items()}
        other.buffers = {n: [Envelope(e.seq, e.fact, e.bypassed) for e in b]
                         for n, b in self.buffers.items()}
        other.step_count, other.seq, other.deliveries = self.step_count, self.seq, self.deliveries
        return other

    @property
    def output(self) -> frozenset:
        out = frozenset()
        for s in self.states.values():
            out |= s.emitted
        return out

    def fire(self, node: int, inp: StepInput = HEARTBEAT) -> Event:
        state = self.states[node]
        # a repeat delivery is absorbed idempotently, so it behaves like a heartbeat
        like_heartbeat = inp.is_heartbeat or tag(SENT, inp.message) in state.memory
        out = self.protocol.step(state, inp)
        state.apply(out)
        if like_heartbeat and out.is_noop:
            state.stable = True
        if not inp.is_heartbeat:
            self.deliveries += 1
        for m in self.neighbors[node]:
            for msg in sorted(out.messages):
                self.buffers[m].append(Envelope(self.seq, msg))
                self.seq += 1
        event = Event(self.step_count, node, inp.message, out.messages, out.new_output)
        self.step_count += 1
        return event

    def deliver_at(self, node: int, index: int) -> Event:
        env = self.buffers[node].pop(index)
        for older in self.buffers[node][:index]:
            older.bypassed += 1
        return self.fire(node, StepInput(env.fact))

    def buffers_empty(self) -> bool:
        return not any(self.buffers.values())

    def quiescent(self) -> bool:
        return self.buffers_empty() and all(s.stable for s in self.states.values())

    def signature(self, ordered: bool = True):
        """Hashable snapshot; with ``ordered=False`` buffers compare as bags."""
        def buf(n):
            facts = [e.fact for e in self.buffers[n]]
            return tuple(facts if ordered else sorted(facts))
        return tuple((n, s.memory, s.emitted, buf(n)) for n, s in sorted(self.states.items()))


@dataclass
class RunResult:
    output: frozenset
    converged: bool
    steps_taken: int
    trace: list = field(default_factory=list)
    deliveries: int = 0
    fixpoint: bool = False  # every node at heartbeat fixpoint
    rounds: int = 0  # heartbeat-only runs
    network: Optional[NetworkState] = None

    def trace_text(self) -> str:
        return format_trace(self.trace, self.converged, self.steps_taken)


class FairScheduler:
    def __init__(self, net: NetworkState, cfg: RunConfig):
        self.net = net
        self.k = cfg.fairness_bound
        self.rng = random.Random(cfg.seed)
        self.nodes = sorted(net.graph.nodes)
        self.last = {n: -1 for n in self.nodes}
        self.run_of_deliveries = {n: 0 for n in self.nodes}
        # a node this long without a step is served first; keeps every gap <= K*|V|
        self.urgent_after = (self.k - 1) * len(self.nodes) + 1

    def pick_node(self) -> int:
        t = self.net.step_count
        overdue = [n for n in self.nodes if t - self.last[n] >= self.urgent_after]
        if overdue:
            return min(overdue, key=lambda n: (self.last[n], n))
        return self.nodes[self.rng.randrange(len(self.nodes))]

    def step(self) -> Event:
        node = self.pick_node()
        buf = self.net.buffers[node]
        self.last[node] = self.net.step_count
        if not buf or self.run_of_deliveries[node] >= self.k:
            self.run_of_deliveries[node] = 0
            return self.net.fire(node, HEARTBEAT)
        if self.rng.random() < HEARTBEAT_PROBABILITY:
            self.run_of_deliveries[node] = 0
            return self.net.fire(node, HEARTBEAT)
        limit = len(buf)
        for i, env in enumerate(buf):
            if env.bypassed >= self.k - 1:
                limit = i + 1
                break
        index = self.rng.randrange(limit)
        self.run_of_deliveries[node] += 1
        return self.net.deliver_at(node, index)


def run(protocol: Protocol, graph: NetworkGraph, inst, policy: Policy,
        cfg: RunConfig = RunConfig(), model: ModelTag = ModelTag.N1,
        keep_trace: bool = True) -> RunResult:
    """Fair random run until quiescence or ``cfg.max_steps``."""
    validate_scenario(protocol, graph, policy, model)
    net = NetworkState.initialize(protocol, graph, inst, policy, model)
    sched = FairScheduler(net, cfg)
    trace = []
    converged = False
    while net.step_count < cfg.max_steps:
        if net.quiescent():
            converged = True
            break
        event = sched.step()
        if keep_trace:
            trace.append(event)
    else:
        converged = net.quiescent()
    return RunResult(net.output, converged, net.step_count, trace, net.deliveries,
                     fixpoint=all(s.stable for s in net.states.values()), network=net)


def heartbeat_round(net: NetworkState) -> list:
    return [net.fire(n, HEARTBEAT) for n in sorted(net.states)]


def run_heartbeat_only(protocol: Protocol, graph: NetworkGraph, inst, policy: Policy,
                       rounds: int = 100, model: ModelTag = ModelTag.N1) -> RunResult:
    """Round-robin heartbeats; messages pile up in buffers and are never delivered."""
    if rounds < 1:
        raise ValueError("rounds must be >= 1")
    validate_scenario(protocol, graph, policy, model)
    net = NetworkState.initialize(protocol, graph, inst, policy, model)
    trace = []
    done = 0
    while done < rounds:
        trace.extend(heartbeat_round(net))
        done += 1
        if all(s.stable for s in net.states.values()):
            break
    fixpoint = all(s.stable for s in net.states.values())
    return RunResult(net.output, fixpoint and net.buffers_empty(), net.step_count, trace,
                     net.deliveries, fixpoint=fixpoint, rounds=done, network=net)


def fixed_schedule_round(net: NetworkState) -> None:
    """One round-robin pass: every node delivers its oldest message, or heartbeats."""
    for n in sorted(net.states):
        if net.buffers[n]:
            net.deliver_at(n, 0)
        else:
            net.fire(n, HEARTBEAT)


def run_fixed_schedule(net: NetworkState, max_steps: int) -> bool:
    """Deterministic fair completion; returns whether the network quiesced."""
    while net.step_count < max_steps:
        if net.quiescent():
            return True
        fixed_schedule_round(net)
    return net.quiescent()
