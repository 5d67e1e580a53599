"""Network graphs, distribution policies and the guarded policy oracle.

Nodes are small integers and print as ``n0``, ``n1``, ... . Policies are
rules over the whole (infinite) Herbrand base, never enumerated tables.
"""

from __future__ import annotations

import enum
import zlib
from dataclasses import dataclass, field
from typing import Iterable, Mapping, Optional, Union

from .relcore import Fact, Schema, adom, format_fact_list


class NetModelError(ValueError):
    pass


class ConstructibilityError(RuntimeError):
    """A node asked the oracle about a fact it cannot construct yet (a protocol bug)."""


class OracleUnavailable(RuntimeError):
    pass


class ModelTag(enum.Enum):
    N0 = "N0"
    N1 = "N1"
    N2 = "N2"
    N3 = "N3"

    def __str__(self):
        return self.value


def node_name(n: int) -> str:
    return f"n{n}"


def parse_node(value) -> int:
    if isinstance(value, int):
        return value
    text = str(value)
    return int(text[1:] if text.startswith("n") else text)


# -- graphs -----------------------------------------------------------------

@dataclass(frozen=True)
class NetworkGraph:
    nodes: frozenset
    edges: frozenset  # of frozenset({u, v})
    label: str = field(default="", compare=False)

    def __post_init__(self):
        for e in self.edges:
            if len(e) != 2:
                raise NetModelError(f"self-loop or malformed edge {set(e)}")
            if not e <= self.nodes:
                raise NetModelError(f"edge {sorted(e)} leaves the node set")
        if not self.nodes:
            raise NetModelError("a network needs at least one node")
        if not self._connected():
            raise NetModelError("network graph is not connected")

    @classmethod
    def build(cls, nodes: Iterable[int], edges: Iterable, label="") -> "NetworkGraph":
        return cls(frozenset(nodes), frozenset(frozenset(e) for e in edges), label)

    def _connected(self):
        start = min(self.nodes)
        seen, todo = {start}, [start]
        while todo:
            u = todo.pop()
            for v in self.neighbors(u):
                if v not in seen:
                    seen.add(v)
                    todo.append(v)
        return seen == set(self.nodes)

    def neighbors(self, n: int) -> list:
        return sorted(next(iter(e - {n})) for e in self.edges if n in e)

    def __len__(self):
        return len(self.nodes)

    def __str__(self):
        return self.label or f"graph({len(self.nodes)} nodes)"


def single() -> NetworkGraph:
    return NetworkGraph.build([0], [], "single")


def line(n: int) -> NetworkGraph:
    return NetworkGraph.build(range(n), [(i, i + 1) for i in range(n - 1)], f"line{n}")


def star(n: int) -> NetworkGraph:
    return NetworkGraph.build(range(n), [(0, i) for i in range(1, n)], f"star{n}")


def complete(n: int) -> NetworkGraph:
    return NetworkGraph.build(range(n), [(i, j) for i in range(n) for j in range(i + 1, n)],
                              f"complete{n}")


def standard_networks(max_nodes: int = 4) -> list:
    """Line, star and complete graphs on 1..max_nodes nodes, without duplicates."""
    out, seen = [single()], set()
    for n in range(2, max_nodes + 1):
        for g in (line(n), star(n), complete(n)):
            key = (g.nodes, g.edges)
            if key not in seen:
                seen.add(key)
                out.append(g)
    return out


# -- policies ---------------------------------------------------------------

class Policy:
    """Assigns every possible input fact a non-empty set of nodes."""

    kind = "abstract"

    def owners(self, f: Fact) -> frozenset:
        raise NotImplementedError

    def named_nodes(self) -> frozenset:
        """Nodes mentioned by the finite part of the representation."""
        raise NotImplementedError

    def validate(self, graph: NetworkGraph) -> None:
        stray = self.named_nodes() - graph.nodes
        if stray:
            raise NetModelError(f"{self.kind} policy names nodes outside the network: "
                                f"{sorted(stray)}")

    def to_config(self) -> dict:
        raise NotImplementedError


@dataclass(frozen=True)
class SingleNodePolicy(Policy):
    node: int = 0
    kind = "single_node"

    def owners(self, f):
        return frozenset([self.node])

    def named_nodes(self):
        return frozenset([self.node])

    def to_config(self):
        return {"kind": self.kind, "node": self.node}


def stable_hash(text: str) -> int:
    """CRC-32 of the UTF-8 text; identical on every platform."""
    return zlib.crc32(text.encode("utf-8"))


@dataclass(frozen=True)
class HashPolicy(Policy):
    """One node per fact: ``nodes[crc32(canonical fact text) % len(nodes)]``."""

    nodes: tuple = (0,)
    salt: str = ""
    kind = "hash"

    def owners(self, f):
        ordered = sorted(self.nodes)
        return frozenset([ordered[stable_hash(self.salt + str(f)) % len(ordered)]])

    def named_nodes(self):
        return frozenset(self.nodes)

    def to_config(self):
        return {"kind": self.kind, "nodes": sorted(self.nodes), "salt": self.salt}


@dataclass(frozen=True)
class ExplicitPolicy(Policy):
    default: frozenset = frozenset([0])
    overrides: Mapping = field(default_factory=dict)
    kind = "explicit"

    def __hash__(self):
        return hash((self.default, frozenset(self.overrides.items())))

    def owners(self, f):
        return self.overrides.get(f, self.default)

    def named_nodes(self):
        out = set(self.default)
        for v in self.overrides.values():
            out |= v
        return frozenset(out)

    def validate(self, graph):
        super().validate(graph)
        if not self.default or not all(self.overrides.values()):
            raise NetModelError("explicit policy maps some fact to an empty node set")

    def to_config(self):
        return {"kind": self.kind, "default": sorted(self.default),
                "overrides": {str(f): sorted(v) for f, v in sorted(self.overrides.items())}}


@dataclass(frozen=True)
class ConstantAssignment:
    """Constant-to-nodes map ``F``; unmapped constants use ``default``.

    ``default`` is a node set, or ``("hash", nodes)`` to spread unmapped
    constants with the stable hash.
    """

    mapping: Mapping = field(default_factory=dict)
    default: Union[frozenset, tuple] = frozenset([0])
    nullary_home: int = 0

    def __hash__(self):
        return hash((frozenset(self.mapping.items()), self.default, self.nullary_home))

    def nodes_for(self, c: str) -> frozenset:
        if c in self.mapping:
            return self.mapping[c]
        if isinstance(self.default, tuple) and self.default and self.default[0] == "hash":
            ordered = sorted(self.default[1])
            return frozenset([ordered[stable_hash(c) % len(ordered)]])
        return self.default

    def named_nodes(self) -> frozenset:
        out = {self.nullary_home}
        for v in self.mapping.values():
            out |= v
        if isinstance(self.default, tuple) and self.default and self.default[0] == "hash":
            out |= set(self.default[1])
        else:
            out |= self.default
        return frozenset(out)


@dataclass(frozen=True)
class ConstantMapPolicy(Policy):
    assignment: ConstantAssignment = field(default_factory=ConstantAssignment)
    kind = "constant_map"

    def owners(self, f):
        if f.arity == 0:
            return frozenset([self.assignment.nullary_home])
        out = frozenset()
        for c in f.args:
            out |= self.assignment.nodes_for(c)
        return out

    def named_nodes(self):
        return self.assignment.named_nodes()

    def validate(self, graph):
        super().validate(graph)
        if any(not v for v in self.assignment.mapping.values()):
            raise NetModelError("constant assignment maps a constant to no node")
        d = self.assignment.default
        if not (isinstance(d, tuple) and d and d[0] == "hash") and not d:
            raise NetModelError("constant assignment has an empty default")

    def to_config(self):
        a = self.assignment
        if isinstance(a.default, tuple):
            default = {"hash": sorted(a.default[1])}
        else:
            default = sorted(a.default)
        return {"kind": self.kind, "F": {c: sorted(v) for c, v in sorted(a.mapping.items())},
                "default": default, "nullary_home": a.nullary_home}


def compatible_policy(assignment: ConstantAssignment, schema: Optional[Schema] = None) -> Policy:
    """The policy placing ``R(c1..cn)`` on the union of the nodes of its constants."""
    return ConstantMapPolicy(assignment)


def all_on_one(model: ModelTag, node: int = 0) -> Policy:
    """The policy that puts every fact on ``node``, in the representation ``model`` requires."""
    if model is ModelTag.N2:
        return compatible_policy(ConstantAssignment({}, frozenset([node]), node))
    return SingleNodePolicy(node)


def validate_for_model(policy: Policy, model: ModelTag, graph: NetworkGraph) -> None:
    policy.validate(graph)
    if model is ModelTag.N2 and not isinstance(policy, ConstantMapPolicy):
        raise NetModelError(f"model N2 needs a constant_map policy, got {policy.kind}")


def distribute(inst, policy: Policy, graph: NetworkGraph) -> dict:
    local = {n: set() for n in sorted(graph.nodes)}
    for f in inst:
        owners = policy.owners(f)
        if not owners:
            raise NetModelError(f"policy assigns {f} to no node")
        for n in owners:
            if n not in local:
                raise NetModelError(f"policy assigns {f} to {node_name(n)}, outside the network")
            local[n].add(f)
    return {n: frozenset(v) for n, v in local.items()}


def oracle_query(policy: Policy, asker: int, f: Fact, known) -> bool:
    """Answer "is ``asker`` in P(f)?" for a fact the asker can construct."""
    missing = f.constants() - frozenset(known)
    if missing:
        raise ConstructibilityError(
            f"{node_name(asker)} asked about {f} without knowing {sorted(missing)}")
    return asker in policy.owners(f)


@dataclass(frozen=True)
class Oracle:
    """A node's handle on the policy oracle (self-membership questions only)."""

    policy: Optional[Policy]
    node: int

    def ask(self, f: Fact, known) -> bool:
        if self.policy is None:
            raise OracleUnavailable("this model grants no policy oracle")
        return oracle_query(self.policy, self.node, f, known)


def isolate_fact_policy(inst, f: Fact, n0: int, n1: int) -> Policy:
    """Everything on ``n0`` except the single fact ``f``, which lives on ``n1``."""
    if n0 == n1:
        raise NetModelError("the two scenario nodes must differ")
    return ExplicitPolicy(frozenset([n0]), {f: frozenset([n1])})


def isolate_constants_assignment(inst, f: Fact, n0: int, n1: int) -> ConstantAssignment:
    """Constants of ``inst`` on ``n0``, constants of ``f`` on ``n1``."""
    if n0 == n1:
        raise NetModelError("the two scenario nodes must differ")
    if f.arity == 0:
        raise NetModelError(f"{f} is nullary")
    shared = adom(inst) & f.constants()
    if shared:
        raise NetModelError(f"{f} shares constants {sorted(shared)} with the base instance")
    mapping = {c: frozenset([n0]) for c in adom(inst)}
    mapping.update({c: frozenset([n1]) for c in f.constants()})
    return ConstantAssignment(mapping, frozenset([n0]), n0)


def policy_from_config(cfg: dict) -> Policy:
    kind = cfg.get("kind")
    if kind == "single_node":
        return SingleNodePolicy(parse_node(cfg.get("node", 0)))
    if kind == "hash":
        return HashPolicy(tuple(parse_node(n) for n in cfg["nodes"]), cfg.get("salt", ""))
    if kind == "explicit":
        from .relcore import fact
        overrides = {fact(k): frozenset(parse_node(n) for n in v)
                     for k, v in cfg.get("overrides", {}).items()}
        return ExplicitPolicy(frozenset(parse_node(n) for n in cfg.get("default", [0])), overrides)
    if kind == "constant_map":
        default = cfg.get("default", [0])
        if isinstance(default, dict):
            default = ("hash", tuple(parse_node(n) for n in default["hash"]))
        else:
            default = frozenset(parse_node(n) for n in default)
        mapping = {c: frozenset(parse_node(n) for n in v) for c, v in cfg.get("F", {}).items()}
        return ConstantMapPolicy(ConstantAssignment(mapping, default,
                                                    parse_node(cfg.get("nullary_home", 0))))
    raise NetModelError(f"unknown policy kind {kind!r}")


def describe_placement(local: dict) -> str:
    return " ".join(f"{node_name(n)}:{format_fact_list(v)}" for n, v in sorted(local.items()))
