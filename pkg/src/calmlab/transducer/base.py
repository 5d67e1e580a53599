"""Relational transducer step contract shared by all protocols.

A protocol is a deterministic step function over a node's read-only input,
its memory instance, its system relations and at most one delivered message.
Memory and message facts are ordinary :class:`Fact` objects whose relation
names carry a ``kind__`` prefix, e.g. ``fact__e(a,b)`` is a flooded copy of
``e(a,b)`` and ``sent__fact__e(a,b)`` records that this node already sent it.

Every protocol runs on the same flood substrate: a message fact is sent to
all neighbours at most once per node (originated or relayed), and every
message a node sends is also absorbed by the node itself in the same step.
"""

from __future__ import annotations

from collections import defaultdict
from dataclasses import dataclass, field
from typing import Optional

from ..datalog import Query, eval_query
from ..netmodel import Oracle, node_name
from ..relcore import Fact, adom

SENT = "sent"


class MessageSchemaError(ValueError):
    """A delivered fact is not over the protocol's message schema."""


def tag(kind: str, f: Fact, *extra) -> Fact:
    return Fact(f"{kind}__{f.relation}", f.args + tuple(extra))


def untag(f: Fact):
    """Split ``kind__rel(args)`` into ``(kind, rel, args)``."""
    kind, _, rel = f.relation.partition("__")
    return kind, rel, f.args


@dataclass(frozen=True)
class System:
    node: int
    nodes: frozenset
    oracle: Oracle
    global_adom: Optional[frozenset] = None


@dataclass(frozen=True)
class StepInput:
    message: Optional[Fact] = None

    @property
    def is_heartbeat(self) -> bool:
        return self.message is None

    def __str__(self):
        return "hb" if self.message is None else f"dv {self.message}"


HEARTBEAT = StepInput()


def deliver(message: Fact) -> StepInput:
    return StepInput(message)


@dataclass(frozen=True)
class StepOutput:
    new_output: frozenset = frozenset()
    messages: frozenset = frozenset()
    mem_insert: frozenset = frozenset()
    mem_delete: frozenset = frozenset()

    @property
    def is_noop(self) -> bool:
        return not (self.new_output or self.messages or self.mem_insert or self.mem_delete)


NOOP = StepOutput()


def next_memory(memory: frozenset, out: StepOutput) -> frozenset:
    # delete first, then insert, so a fact in both ends up present
    return (memory - out.mem_delete) | out.mem_insert


@dataclass
class TransducerState:
    node: int
    input: frozenset
    system: System
    memory: frozenset = frozenset()
    emitted: frozenset = frozenset()
    # memo kept by the runtime: True when a heartbeat is known to change nothing
    stable: bool = field(default=False, compare=False)

    def apply(self, out: StepOutput) -> None:
        if out.is_noop:
            return
        self.memory = next_memory(self.memory, out)
        self.emitted = self.emitted | out.new_output
        self.stable = False

    def copy(self) -> "TransducerState":
        return TransducerState(self.node, self.input, self.system, self.memory,
                               self.emitted, self.stable)

    def __str__(self):
        return f"{node_name(self.node)}: |mem|={len(self.memory)} |out|={len(self.emitted)}"


def state_equal(s1: TransducerState, s2: TransducerState) -> bool:
    """Same input, memory and output; node ids and oracle handles are ignored."""
    return s1.input == s2.input and s1.memory == s2.memory and s1.emitted == s2.emitted


class StepContext:
    """What one step may look at: the state, the delivered message, the oracle."""

    def __init__(self, protocol, state: TransducerState, message: Optional[Fact]):
        self.protocol = protocol
        self.state = state
        self.message = message
        self.me = state.node
        self._known = None

    @property
    def known_constants(self) -> frozenset:
        if self._known is None:
            known = adom(self.state.input) | adom(self.state.memory)
            if self.message is not None:
                known |= self.message.constants()
            self._known = known
        return self._known

    def ask(self, f: Fact) -> bool:
        return self.state.system.oracle.ask(f, self.known_constants)

    def query(self, inst) -> frozenset:
        return eval_query(self.protocol.query, inst)


class Protocol:
    """Base class; subclasses fill in load / absorb / derive / emit / store."""

    name = "protocol"
    message_kinds: frozenset = frozenset()
    # kinds whose relation part is not an edb relation name
    payload_free_kinds: frozenset = frozenset()
    needs_oracle = False

    def __init__(self, query: Query):
        self.query = query
        self.edb = query.input_schema
        self._arity = {r.name: r.arity for r in self.edb}

    def __repr__(self):
        return f"{self.name}({self.query.name})"

    def init_memory(self, local_input: frozenset, system: System) -> frozenset:
        return frozenset()

    def initial_state(self, local_input, system: System) -> TransducerState:
        local_input = frozenset(local_input)
        return TransducerState(system.node, local_input, system,
                               self.init_memory(local_input, system))

    # -- message schema --------------------------------------------------------

    def extra_args(self, kind: str) -> int:
        """Arguments appended after the embedded fact for message ``kind``."""
        return 0

    def accepts(self, msg: Fact) -> bool:
        kind, rel, args = untag(msg)
        if kind not in self.message_kinds:
            return False
        if kind in self.payload_free_kinds:
            return True
        arity = self._arity.get(rel)
        return arity is not None and len(args) == arity + self.extra_args(kind)

    # -- the step --------------------------------------------------------------

    def step(self, state: TransducerState, inp: StepInput = HEARTBEAT) -> StepOutput:
        msg = inp.message
        if msg is not None and not self.accepts(msg):
            raise MessageSchemaError(f"{self.name} cannot consume {msg}")
        if state.stable and (msg is None or tag(SENT, msg) in state.memory):
            # absorption is idempotent, so a repeat delivery acts like a heartbeat
            return NOOP
        ctx = StepContext(self, state, msg)
        groups = defaultdict(list)
        sent = set()
        for f in state.memory:
            kind, rel, args = untag(f)
            if kind == SENT:
                sent.add(Fact(rel, args))
            else:
                groups[kind].append((rel, args))
        kb = self.load(ctx, groups)
        outgoing = set()
        if msg is not None:
            self.absorb(ctx, kb, msg)
            if msg not in sent:
                outgoing.add(msg)
        while True:
            fresh = self.derive(ctx, kb) - sent - outgoing
            if not fresh:
                break
            for m in sorted(fresh):
                self.absorb(ctx, kb, m)
            outgoing |= fresh
        candidates = self.emit(ctx, kb)
        memory = frozenset(self.store(ctx, kb)) | {tag(SENT, m) for m in sent | outgoing}
        return StepOutput(
            new_output=frozenset(candidates) - state.emitted,
            messages=frozenset(outgoing),
            mem_insert=memory - state.memory,
            mem_delete=state.memory - memory,
        )

    def load(self, ctx: StepContext, groups) -> object:
        raise NotImplementedError

    def absorb(self, ctx: StepContext, kb, msg: Fact) -> None:
        raise NotImplementedError

    def derive(self, ctx: StepContext, kb) -> set:
        raise NotImplementedError

    def emit(self, ctx: StepContext, kb) -> frozenset:
        raise NotImplementedError

    def store(self, ctx: StepContext, kb) -> set:
        raise NotImplementedError


def step(protocol: Protocol, state: TransducerState, inp: StepInput = HEARTBEAT) -> StepOutput:
    return protocol.step(state, inp)
