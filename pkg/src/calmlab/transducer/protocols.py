"""The three transducer constructions: monotone flooding, adom emulation, replication."""

from __future__ import annotations

from dataclasses import dataclass, field

from ..netmodel import node_name, parse_node
from ..relcore import Fact, adom, herbrand_slice
from .base import Protocol, tag, untag


def _facts(groups, kind):
    return {Fact(rel, args) for rel, args in groups.get(kind, ())}


class MonoProtocol(Protocol):
    """Flood every known input fact; emit Q over everything seen, every step.

    Only correct for monotone queries; running it on anything else is allowed
    and is how over-emission gets demonstrated.
    """

    name = "t_mono"
    message_kinds = frozenset({"fact"})

    def load(self, ctx, groups):
        return set(ctx.state.input) | _facts(groups, "known")

    def absorb(self, ctx, kb, msg):
        _, rel, args = untag(msg)
        kb.add(Fact(rel, args))

    def derive(self, ctx, kb):
        return {tag("fact", f) for f in kb}

    def emit(self, ctx, kb):
        return ctx.query(kb)

    def store(self, ctx, kb):
        return {tag("known", f) for f in kb - ctx.state.input}


@dataclass
class _AdomKB:
    pos: set
    neg: set
    dom: set


class AdomProtocol(Protocol):
    """Model N1: emulate the active domain and wait until it looks complete.

    Memory holds ``adomM`` (constants seen so far), ``pos__R`` (facts known
    present) and ``absent__R`` (facts certified absent). A node that the
    oracle names as an owner of a constructible fact it does not hold
    certifies that fact absent and floods the certificate. The node is ready
    once every fact over ``adomM`` is known present or absent, and then emits
    Q over the present facts.
    """

    name = "t_adom"
    message_kinds = frozenset({"fact", "const", "neg"})
    payload_free_kinds = frozenset({"const"})
    needs_oracle = True

    def accepts(self, msg):
        if msg.relation == "const":
            return msg.arity == 1
        return msg.relation != "const" and super().accepts(msg)

    def load(self, ctx, groups):
        pos = set(ctx.state.input) | _facts(groups, "pos")
        dom = {args[0] for _, args in groups.get("adomM", ())} | adom(pos)
        return _AdomKB(pos, _facts(groups, "absent"), dom)

    def absorb(self, ctx, kb, msg):
        kind, rel, args = untag(msg)
        if kind == "fact":
            kb.pos.add(Fact(rel, args))
            kb.dom.update(args)
        elif kind == "const":
            kb.dom.add(args[0])
        else:
            kb.neg.add(Fact(rel, args))

    def _undecided(self, kb):
        return herbrand_slice(self.edb, kb.dom, include_nullary=True) - kb.pos - kb.neg

    def derive(self, ctx, kb):
        out = {tag("fact", f) for f in kb.pos}
        # dom covers every column of every known fact
        out.update(Fact("const", (c,)) for c in kb.dom)
        out.update(tag("neg", f) for f in kb.neg)
        for g in self._undecided(kb):
            if ctx.ask(g):
                out.add(tag("neg", g))
        return out

    def ready(self, kb) -> bool:
        return not self._undecided(kb)

    def emit(self, ctx, kb):
        return ctx.query(kb.pos) if self.ready(kb) else frozenset()

    def store(self, ctx, kb):
        mem = {tag("pos", f) for f in kb.pos - ctx.state.input}
        mem.update(tag("absent", f) for f in kb.neg)
        mem.update(Fact("adomM", (c,)) for c in kb.dom)
        return mem


@dataclass
class _ReplKB:
    known: set
    acks: dict  # node -> set of facts it acknowledged
    done: set  # (relation, column, constant) certificates addressed to this node
    own: set
    not_own: set
    nullary: dict = field(default_factory=dict)  # relation -> present?


def _col(i: int) -> str:
    return f"i{i + 1}"


def _uncol(text: str) -> int:
    return int(text[1:]) - 1


class ReplProtocol(Protocol):
    """Model N2: per-constant completeness certificates over acknowledged floods.

    Every node floods its facts and acknowledges every fact it knows with
    ``ack__R(args.., me)``. A node owns constant ``a`` when the oracle places
    ``R0(a,..,a)`` on it (``R0`` the first non-nullary input relation); under a
    compatible policy an owner holds every input fact mentioning ``a``. Once
    node ``m`` has acknowledged all of an owner's facts with ``a`` in column
    ``i`` of ``R``, the owner floods ``done__R(i, a, m)``. The home node of
    nullary facts floods ``npos__q()`` or ``nneg__q()``. Node ``m`` is ready
    when each constant it knows is owned by it or certified for every
    relation and column, and every nullary relation has a status.
    """

    name = "t_repl"
    message_kinds = frozenset({"fact", "ack", "done", "npos", "nneg"})
    needs_oracle = True

    def __init__(self, query):
        super().__init__(query)
        self.columns = [(r.name, i) for r in self.edb if r.arity > 0 for i in range(r.arity)]
        self.nullaries = [r.name for r in self.edb if r.arity == 0]
        non_nullary = [r for r in self.edb if r.arity > 0]
        self.probe = non_nullary[0] if non_nullary else None

    def extra_args(self, kind):
        return {"ack": 1}.get(kind, 0)

    def accepts(self, msg):
        kind, rel, args = untag(msg)
        if kind == "done":
            return rel in self._arity and len(args) == 3
        if kind in ("npos", "nneg"):
            return self._arity.get(rel) == 0 and not args
        return super().accepts(msg)

    def load(self, ctx, groups):
        acks = {}
        for rel, args in groups.get("ackd", ()):
            acks.setdefault(parse_node(args[-1]), set()).add(Fact(rel, args[:-1]))
        kb = _ReplKB(
            known=set(ctx.state.input) | _facts(groups, "known"),
            acks=acks,
            done={(rel, _uncol(args[0]), args[1]) for rel, args in groups.get("complete", ())},
            own={args[0] for _, args in groups.get("own", ())},
            not_own={args[0] for _, args in groups.get("nown", ())},
        )
        for rel, _ in groups.get("npos", ()):
            kb.nullary[rel] = True
        for rel, _ in groups.get("nneg", ()):
            kb.nullary[rel] = False
        return kb

    def absorb(self, ctx, kb, msg):
        kind, rel, args = untag(msg)
        if kind == "fact":
            kb.known.add(Fact(rel, args))
        elif kind == "ack":
            kb.acks.setdefault(parse_node(args[-1]), set()).add(Fact(rel, args[:-1]))
        elif kind == "done":
            if parse_node(args[2]) == ctx.me:
                kb.done.add((rel, _uncol(args[0]), args[1]))
        else:
            kb.nullary[rel] = kind == "npos"

    def _update_ownership(self, ctx, kb):
        for a in sorted(adom(kb.known) - kb.own - kb.not_own):
            probe = Fact(self.probe.name, (a,) * self.probe.arity)
            (kb.own if ctx.ask(probe) else kb.not_own).add(a)

    def derive(self, ctx, kb):
        me = node_name(ctx.me)
        out = {tag("fact", f) for f in kb.known}
        out.update(tag("ack", f, me) for f in kb.known)
        self._update_ownership(ctx, kb)
        held = ctx.state.input
        for a in kb.own:
            for rel, i in self.columns:
                relevant = {g for g in held if g.relation == rel and g.args[i] == a}
                for m, acked in kb.acks.items():
                    if relevant <= acked:
                        out.add(Fact(f"done__{rel}", (_col(i), a, node_name(m))))
        for q in self.nullaries:
            g = Fact(q, ())
            if ctx.ask(g):
                out.add(Fact(f"{'npos' if g in held else 'nneg'}__{q}", ()))
        return out

    def ready(self, kb) -> bool:
        if any(q not in kb.nullary for q in self.nullaries):
            return False
        for a in adom(kb.known):
            if a in kb.own:
                continue
            if any((rel, i, a) not in kb.done for rel, i in self.columns):
                return False
        return True

    def emit(self, ctx, kb):
        return ctx.query(kb.known) if self.ready(kb) else frozenset()

    def store(self, ctx, kb):
        mem = {tag("known", f) for f in kb.known - ctx.state.input}
        for m, facts in kb.acks.items():
            mem.update(tag("ackd", f, node_name(m)) for f in facts)
        mem.update(Fact(f"complete__{rel}", (_col(i), a)) for rel, i, a in kb.done)
        mem.update(Fact("own", (a,)) for a in kb.own)
        mem.update(Fact("nown", (a,)) for a in kb.not_own)
        mem.update(Fact(f"{'npos' if v else 'nneg'}__{q}", ()) for q, v in kb.nullary.items())
        return mem


PROTOCOLS = {"t_mono": MonoProtocol, "t_adom": AdomProtocol, "t_repl": ReplProtocol}


def make_t_mono(query) -> MonoProtocol:
    return MonoProtocol(query)


def make_t_adom(query) -> AdomProtocol:
    return AdomProtocol(query)


def make_t_repl(query) -> ReplProtocol:
    return ReplProtocol(query)


def make_protocol(name: str, query) -> Protocol:
    try:
        return PROTOCOLS[name](query)
    except KeyError:
        raise ValueError(f"unknown protocol {name!r}; choose from {sorted(PROTOCOLS)}") from None
