"""Command-line entry point: classify, eval, run and experiment commands.

Exit status is 0 when every checked property held, 1 when a violation was
found and 2 on usage, parse or validation errors. With ``--expect-refuted``
the meaning of 0 and 1 is swapped, for experiments meant to refute.
"""

from __future__ import annotations

import argparse
import json
import re
import sys
from pathlib import Path

from .datalog import (BUILTINS, DatalogError, Query, builtin_query, classify_program,
                      corpus_program, corpus_text, parse_program)
from .datalog.queries import eval_query
from .monocheck import Bounds, classify_query, format_report
from .netmodel import (ModelTag, NetModelError, NetworkGraph, all_on_one, complete,
                       compatible_policy, ConstantAssignment, HashPolicy, line,
                       policy_from_config, single, standard_networks, star)
from .relcore import (RelcoreError, enumerate_instances, fact, format_fact_list,
                      format_facts, parse_facts)
from .simulator import (ExplorationBudgetExceeded, Mode, RunConfig, ScenarioError,
                        check_coordination_free, explore_schedules, indistinguishability,
                        run, run_heartbeat_only)
from .transducer import PROTOCOLS, make_protocol

SHAPES = {"single": lambda n: single(), "line": line, "star": star, "complete": complete}
FACT_RE = re.compile(r"[A-Za-z_][A-Za-z0-9_]*\([^()]*\)")


class UsageError(Exception):
    pass


# -- loading ------------------------------------------------------------------

def load_query(target: str, base: Path = Path(".")):
    """Return (query, program or None) for a builtin name, corpus name or .dl path."""
    path = base / target
    if path.suffix == ".dl" or path.is_file():
        if not path.is_file():
            raise UsageError(f"no such program file: {path}")
        program = parse_program(path.read_text())
        return Query.from_program(program, path.stem), program
    if target in BUILTINS:
        return builtin_query(target), corpus_program(target)
    try:
        corpus_text(target)
    except FileNotFoundError:
        raise UsageError(f"{target!r} is neither a file nor a bundled query "
                         f"({', '.join(BUILTINS)})") from None
    program = corpus_program(target)
    return Query.from_program(program, target), program


def parse_fact_text(text: str, base: Path = Path(".")) -> frozenset:
    """Facts from a file path, ``rel(a,b).`` text, or a ``[rel(a,b),...]`` list."""
    text = text.strip()
    path = base / text
    if text and "(" not in text and path.is_file():
        text = path.read_text()
    if text.startswith("["):
        inner = text[1:-1] if text.endswith("]") else text[1:]
        facts = FACT_RE.findall(inner)
        leftover = FACT_RE.sub("", inner).replace(",", "").strip()
        if leftover:
            raise RelcoreError(f"cannot read fact list {text!r}")
        return frozenset(fact(f) for f in facts)
    return parse_facts(text)


def build_network(desc) -> NetworkGraph:
    if isinstance(desc, str):
        m = re.fullmatch(r"(single|line|star|complete)(\d*)", desc)
        if not m:
            raise UsageError(f"unknown network {desc!r}")
        return SHAPES[m.group(1)](int(m.group(2) or 1))
    n = desc["nodes"]
    if "shape" in desc:
        return SHAPES[desc["shape"]](n)
    return NetworkGraph.build(range(n), [tuple(e) for e in desc.get("edges", [])],
                              desc.get("label", f"graph{n}"))


def default_policy(graph: NetworkGraph, model: ModelTag):
    nodes = tuple(sorted(graph.nodes))
    if model is ModelTag.N2:
        return compatible_policy(ConstantAssignment({}, ("hash", nodes), nodes[0]))
    return HashPolicy(nodes)


def load_scenario(path: Path) -> dict:
    try:
        raw = json.loads(path.read_text())
    except json.JSONDecodeError as exc:
        raise UsageError(f"{path}: invalid JSON at line {exc.lineno}: {exc.msg}") from None
    base = path.parent
    q = raw.get("query")
    if isinstance(q, dict):
        if "program" in q:
            program = parse_program(q["program"])
            query = Query.from_program(program, q.get("name", "program"))
        else:
            query, _ = load_query(q.get("file") or q["builtin"], base)
    elif isinstance(q, str):
        query, _ = load_query(q, base)
    else:
        raise UsageError(f"{path}: scenario needs a 'query'")
    inp = raw.get("input", [])
    if isinstance(inp, list):
        inst = frozenset(fact(f) for f in inp)
    elif isinstance(inp, dict):
        inst = parse_fact_text(str(base / inp["file"]))
    else:
        inst = parse_fact_text(inp, base)
    graph = build_network(raw.get("network", "single"))
    model = ModelTag(raw.get("model", "N1"))
    policy = (policy_from_config(raw["policy"]) if "policy" in raw
              else default_policy(graph, model))
    protocol = raw.get("protocol", "t_mono")
    if protocol not in PROTOCOLS:
        raise UsageError(f"unknown protocol {protocol!r}")
    expected = raw.get("expected")
    return {
        "query": query, "input": inst, "network": graph, "model": model, "policy": policy,
        "protocol": make_protocol(protocol, query), "run": dict(raw.get("run", {})),
        "expected": None if expected is None else frozenset(fact(f) for f in expected),
    }


# -- output helpers -------------------------------------------------------------

def _bool(v: bool) -> str:
    return "true" if v else "false"


def _facts_block(title: str, facts) -> str:
    return f"% {title}\n" + format_facts(facts)


def _exit(violation: bool, args) -> int:
    if args.expect_refuted:
        return 0 if violation else 1
    return 1 if violation else 0


# -- commands -------------------------------------------------------------------

def cmd_classify(args) -> int:
    query, program = load_query(args.target)
    bounds = Bounds.parse(args.bounds)
    report = classify_query(query, bounds)
    cls = classify_program(program).value if program is not None else "opaque"
    print(f"query={query.name} program_class={cls} bounds={bounds}")
    sys.stdout.write(format_report(report))
    return _exit(not all(v.holds for v in report.verdicts), args)


def cmd_eval(args) -> int:
    query, _ = load_query(args.target)
    inst = parse_fact_text(args.input)
    sys.stdout.write(format_facts(eval_query(query, inst)))
    return 0


def _run_config(sc: dict, args) -> RunConfig:
    r = sc["run"]
    return RunConfig(
        seed=args.seed if args.seed is not None else r.get("seed", 0),
        fairness_bound=(args.fairness_bound if args.fairness_bound is not None
                        else r.get("fairness_bound", 4)),
        max_steps=args.max_steps if args.max_steps is not None else r.get("max_steps", 200_000),
        mode=Mode(r.get("mode", "fair-random")),
        depth=args.depth if getattr(args, "depth", None) is not None else r.get("depth", 4),
    )


def cmd_run(args) -> int:
    sc = load_scenario(Path(args.scenario))
    cfg = _run_config(sc, args)
    protocol, graph, inst = sc["protocol"], sc["network"], sc["input"]
    model = sc["model"]
    policy = all_on_one(model, min(graph.nodes)) if sc["run"].get("all_on_one") else sc["policy"]
    expected = sc["expected"] if sc["expected"] is not None else eval_query(sc["query"], inst)
    print(f"protocol={protocol.name} query={sc['query'].name} model={model} network={graph} "
          f"mode={cfg.mode} seed={cfg.seed} fairness_bound={cfg.fairness_bound} "
          f"max_steps={cfg.max_steps}")
    if cfg.mode is Mode.EXHAUSTIVE:
        verdict = explore_schedules(protocol, graph, inst, policy, cfg.depth, model,
                                    expected=expected, max_steps=cfg.max_steps)
        print(f"branches={verdict.branches} distinct_outputs={len(verdict.outputs)} "
              f"agree={_bool(verdict.computes)}")
        for out in sorted(verdict.outputs, key=lambda o: sorted(o)):
            print(f"output={format_fact_list(out)}")
        return _exit(not verdict.computes, args)
    if cfg.mode is Mode.HEARTBEAT_ONLY:
        res = run_heartbeat_only(protocol, graph, inst, policy,
                                 sc["run"].get("rounds", 100), model)
    else:
        res = run(protocol, graph, inst, policy, cfg, model)
    if args.trace_out:
        Path(args.trace_out).write_text(res.trace_text())
    correct = res.output == expected
    print(f"converged={_bool(res.converged)} fixpoint={_bool(res.fixpoint)} "
          f"steps={res.steps_taken} deliveries={res.deliveries} correct={_bool(correct)}")
    sys.stdout.write(_facts_block("output", res.output))
    if not correct:
        sys.stdout.write(_facts_block("expected", expected))
    if args.trace_out:
        print(f"trace={args.trace_out}")
    ok = correct and (res.converged or cfg.mode is Mode.HEARTBEAT_ONLY)
    return _exit(not ok, args)


def _experiment_setup(args):
    query, _ = load_query(args.query)
    model = ModelTag(args.model)
    protocol = make_protocol(args.protocol, query)
    return query, model, protocol


def cmd_cf_check(args) -> int:
    query, model, protocol = _experiment_setup(args)
    if args.input:
        inputs = [parse_fact_text(t) for t in args.input]
    else:
        inputs = list(enumerate_instances(query.input_schema, args.domain, args.max_facts,
                                          include_nullary=True))
    networks = standard_networks(args.max_nodes)
    verdict = check_coordination_free(protocol, query, model, inputs, networks, args.rounds)
    print(f"experiment=cf-check protocol={protocol.name} query={query.name} model={model} "
          f"inputs={len(inputs)} networks={len(networks)} runs={verdict.runs}")
    for f in verdict.failures:
        print(f"failure {f}")
    print(f"witnessed={_bool(verdict.computes)} failures={len(verdict.failures)}")
    return _exit(not verdict.computes, args)


def cmd_indist(args) -> int:
    query, model, protocol = _experiment_setup(args)
    inst = parse_fact_text(args.input[0] if args.input else "")
    extra = fact(args.extra)
    report = indistinguishability(protocol, query, inst, extra, model, args.rounds)
    print(f"experiment=indist protocol={protocol.name} query={query.name} model={model} "
          f"input={format_fact_list(inst)} extra={extra} rounds={args.rounds}")
    print("states_equal=" + "".join("1" if e else "0" for e in report.states_equal_per_round))
    print(f"states_equal_all={_bool(report.states_equal)}")
    print(f"scenario1_output={format_fact_list(report.scenario1_output)}")
    print(f"scenario2_node0_output={format_fact_list(report.scenario2_node0_output)}")
    print(f"expected_with_extra={format_fact_list(report.expected_with_f)}")
    print(f"spurious_output={format_fact_list(report.spurious_output)}")
    return _exit(bool(report.spurious_output), args)


def cmd_explore(args) -> int:
    query, model, protocol = _experiment_setup(args)
    inst = parse_fact_text(args.input[0] if args.input else "")
    graph = build_network(args.network)
    policy = (policy_from_config(json.loads(args.policy)) if args.policy
              else default_policy(graph, model))
    expected = eval_query(query, inst)
    print(f"experiment=explore protocol={protocol.name} query={query.name} model={model} "
          f"network={graph} depth={args.depth} input={format_fact_list(inst)}")
    try:
        verdict = explore_schedules(protocol, graph, inst, policy, args.depth, model,
                                    expected=expected, max_branches=args.budget)
    except ExplorationBudgetExceeded as exc:
        print(f"error {exc}", file=sys.stderr)
        return 2
    for out in sorted(verdict.outputs, key=lambda o: sorted(o)):
        print(f"output={format_fact_list(out)}")
    print(f"branches={verdict.branches} states={verdict.distinct_states} "
          f"agree={_bool(verdict.computes)}")
    return _exit(not verdict.computes, args)


# -- parser ---------------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--seed", type=int, default=None)
    common.add_argument("--max-steps", type=int, default=None)
    common.add_argument("--fairness-bound", type=int, default=None)
    common.add_argument("--trace-out", default=None)
    common.add_argument("--expect-refuted", action="store_true",
                        help="exit 0 only if a violation was found")

    parser = argparse.ArgumentParser(prog="calmlab", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("classify", parents=[common], help="bounded monotonicity checks")
    p.add_argument("target", help="program file or bundled query name")
    p.add_argument("--bounds", default="3,3,2", help="domain,facts,fresh (default 3,3,2)")
    p.set_defaults(func=cmd_classify)

    p = sub.add_parser("eval", parents=[common], help="evaluate a query on an instance")
    p.add_argument("target")
    p.add_argument("--input", "-i", default="", help="fact file or inline facts")
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser("run", parents=[common], help="simulate a scenario file")
    p.add_argument("scenario")
    p.add_argument("--depth", type=int, default=None, help="exhaustive mode only")
    p.set_defaults(func=cmd_run)

    p = sub.add_parser("experiment", help="coordination experiments")
    exp = p.add_subparsers(dest="experiment", required=True)
    shared = argparse.ArgumentParser(add_help=False, parents=[common])
    shared.add_argument("--protocol", required=True, choices=sorted(PROTOCOLS))
    shared.add_argument("--query", required=True)
    shared.add_argument("--model", default="N1", choices=[m.value for m in ModelTag])
    shared.add_argument("--input", action="append", default=[],
                        help="fact file or inline facts (repeatable for cf-check)")

    e = exp.add_parser("cf-check", parents=[shared])
    e.add_argument("--max-nodes", type=int, default=4)
    e.add_argument("--domain", type=int, default=3)
    e.add_argument("--max-facts", type=int, default=2)
    e.add_argument("--rounds", type=int, default=100)
    e.set_defaults(func=cmd_cf_check)

    e = exp.add_parser("indist", parents=[shared])
    e.add_argument("--extra", required=True, help="the added fact f")
    e.add_argument("--rounds", type=int, default=10)
    e.set_defaults(func=cmd_indist)

    e = exp.add_parser("explore", parents=[shared])
    e.add_argument("--network", default="line2")
    e.add_argument("--policy", default=None, help="policy as JSON")
    e.add_argument("--depth", type=int, default=4)
    e.add_argument("--budget", type=int, default=50_000)
    e.set_defaults(func=cmd_explore)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (UsageError, DatalogError, RelcoreError, NetModelError, ScenarioError,
            ValueError, KeyError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
