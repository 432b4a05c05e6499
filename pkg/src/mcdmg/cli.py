"""Command-line entry point wiring all modules.

Exit codes: 0 success (including positive verdicts), 1 computed negative
verdict (not recoverable, not derived, incompatible, replay failure, oracle
mismatch), 2 input or usage error. All structured output goes to stdout,
diagnostics to stderr. Outputs are byte-identical across runs for the same
inputs; ``MCDMG_SEED`` overrides the default seed.
"""

from __future__ import annotations

import argparse
import csv
import itertools
import json
import os
import sys
from typing import Optional

import numpy as np

from . import fixtures
from .abstraction import Budget, enumerate_compatible, is_compatible, merge_indicators
from .docalc import Derivation, NotDerived, recover_effect, replay, residual_masked_symbols
from .errors import BudgetTooSmall, McdmgError, ParseError, ValidationError
from .expressions import latex, render
from .gfiles import emit_dot, emit_graph, emit_json, parse_graph
from .graphs import validate
from .oracle import (
    Grounding,
    evaluate_all,
    exact_tables,
    interventional_table,
    random_scm,
)
from .recovery import check_joint
from .separation import MutilationSpec, active_path, mutilate

_FIXTURE_HINT = "bundled fixtures: " + ", ".join(
    f"{n}.mcg" for n in fixtures.NAMES
)


def _dump(obj) -> None:
    print(json.dumps(obj, indent=2, sort_keys=True))


def _read_graph(path: str):
    if path in fixtures.NAMES:
        text = fixtures.fixture_text(path)
    else:
        with open(path, "r", encoding="utf-8") as fh:
            text = fh.read()
    return parse_graph(text)


def _split(arg: Optional[str]):
    return set(x for x in (arg or "").split(",") if x)


def default_seed(args_seed: Optional[int]) -> int:
    if args_seed is not None:
        return args_seed
    return int(os.environ.get("MCDMG_SEED", "0"))


# ---------------------------------------------------------------------------
# Subcommands
# ---------------------------------------------------------------------------


def cmd_parse(args) -> int:
    g = _read_graph(args.file)
    if args.format == "dot":
        print(emit_dot(g), end="")
    elif args.format == "text":
        print(emit_graph(g), end="")
    else:
        _dump(emit_json(g))
    return 0


def cmd_validate(args) -> int:
    if args.file in fixtures.NAMES:
        text = fixtures.fixture_text(args.file)
    else:
        with open(args.file, "r", encoding="utf-8") as fh:
            text = fh.read()
    g = parse_graph(text, validate=False)
    violations = validate(g)
    _dump(
        {
            "valid": not violations,
            "violations": [
                {"code": v.code, "message": v.message, "subjects": list(v.subjects)}
                for v in violations
            ],
        }
    )
    return 0 if not violations else 1


def cmd_dsep(args) -> int:
    g = _read_graph(args.file)
    spec = MutilationSpec.of(_split(args.overline), _split(args.underline))
    cut = mutilate(g, spec)
    witness = active_path(cut, _split(args.x), _split(args.y), _split(args.given))
    _dump(
        {
            "separated": witness is None,
            "witness_path": witness.tokens() if witness is not None else None,
        }
    )
    return 0


def cmd_abstract(args) -> int:
    g = _read_graph(args.file)
    out = merge_indicators(g)
    if args.format == "dot":
        print(emit_dot(out), end="")
    elif args.format == "json":
        _dump(emit_json(out))
    else:
        print(emit_graph(out), end="")
    return 0


def cmd_compatible(args) -> int:
    abstract = _read_graph(args.abstract)
    madmg = _read_graph(args.madmg)
    clustering = _read_graph(args.clustering).clustering if args.clustering else None
    report = is_compatible(madmg, abstract, clustering)
    _dump(
        {
            "compatible": report.compatible,
            "missing_realizations": [list(e) for e in report.missing_realizations],
            "forbidden_edges": [list(e) for e in report.forbidden_edges],
        }
    )
    return 0 if report.compatible else 1


def cmd_enumerate(args) -> int:
    abstract = _read_graph(args.file)
    budget = Budget(args.max_vars, args.max_edges)
    try:
        stream = enumerate_compatible(abstract, budget=budget)
        graphs = list(itertools.islice(stream, args.limit))
    except BudgetTooSmall as exc:
        _dump({"count": 0, "graphs": [], "error": str(exc)})
        return 1
    _dump({"count": len(graphs), "graphs": [emit_json(g) for g in graphs]})
    return 0


def cmd_check_joint(args) -> int:
    g = _read_graph(args.file)
    verdict = check_joint(g)
    if args.format == "latex":
        if verdict.recoverable:
            print(latex(verdict.formula))
        else:
            for v in verdict.violations:
                print(f"% not recoverable: {v.cluster} [{v.reason}] {v.witness.text()}")
    elif args.format == "text":
        print("recoverable" if verdict.recoverable else "not recoverable")
        for v in verdict.violations:
            print(f"  {v.cluster}: {v.reason} via {v.witness.text()}")
        if verdict.formula is not None:
            print(f"  {render(verdict.formula)}")
    else:
        _dump(verdict.to_json())
    return 0 if verdict.recoverable else 1


def cmd_recover_effect(args) -> int:
    g = _read_graph(args.file)
    result = recover_effect(g, _split(args.treatment), _split(args.outcome), args.depth)
    if isinstance(result, NotDerived):
        if args.format == "json":
            _dump(result.to_json())
        else:
            print("not derived within depth", result.depth)
        return 1
    if args.format == "latex":
        lines = ["\\begin{align*}"]
        for s in result.steps:
            note = s.rule
            if s.certificate is not None:
                c = s.certificate
                cond = ", ".join(sorted(set(c.z) | set(c.w))) or "\\emptyset"
                note += (
                    f": {', '.join(c.y)} \\perp {', '.join(c.x)} \\mid {cond}"
                    f" \\text{{ in }} G[\\overline{{{ ','.join(c.overline) or '-' }}};"
                    f" \\underline{{{ ','.join(c.underline) or '-' }}}]"
                )
            lines.append(f"&= {latex(s.after)} && \\text{{{note}}} \\\\")
        lines.append("\\end{align*}")
        print("\n".join(lines))
    elif args.format == "text":
        print(render(result.query))
        for i, s in enumerate(result.steps, 1):
            print(f"  [{i}] {s.rule} {dict(s.params)} -> {render(s.after)}")
    else:
        out = result.to_json()
        out["residual_partially_observed"] = list(residual_masked_symbols(g, result.result))
        _dump(out)
    return 0


def cmd_replay(args) -> int:
    g = _read_graph(args.file)
    with open(args.derivation, "r", encoding="utf-8") as fh:
        d = Derivation.from_json(json.load(fh))
    result = replay(g, d)
    _dump(result.to_json())
    return 0 if result.ok else 1


def cmd_oracle(args) -> int:
    abstract = _read_graph(args.file)
    seed = default_seed(args.seed)
    tol = args.tol

    if args.query == "joint":
        verdict = check_joint(abstract)
        if not verdict.recoverable:
            _dump({"error": "joint not recoverable on this graph"})
            return 1
        expr = verdict.formula
        outcome_of_truth = None
    elif args.query.startswith("effect:"):
        _, treat, outc = args.query.split(":")
        result = recover_effect(abstract, {treat}, {outc})
        if isinstance(result, NotDerived):
            _dump({"error": "effect not derived on this graph"})
            return 1
        expr = result.result
        outcome_of_truth = (treat, outc)
    else:
        raise ValueError("query must be 'joint' or 'effect:<CX>:<CY>'")

    graphs = list(
        itertools.islice(
            enumerate_compatible(abstract, budget=Budget(args.max_vars, args.max_edges)),
            args.graphs,
        )
    )
    failures = []
    max_err = 0.0
    scms = 0
    for gi, madmg in enumerate(graphs):
        for s in range(args.seeds):
            scm = random_scm(madmg, seed=seed + s)
            scms += 1
            joint, manifest = exact_tables(scm)
            grounding = Grounding.from_scm(scm, abstract=abstract)
            atoms, table = evaluate_all(expr, manifest, grounding)
            for env_vals, got in sorted(table.items()):
                want = _truth(
                    scm, grounding, atoms, env_vals, joint, outcome_of_truth
                )
                err = abs(got - want)
                max_err = max(max_err, err)
                if err > tol:
                    failures.append(
                        {"graph": gi, "seed": seed + s, "cell": [list(v) for v in env_vals], "error": err}
                    )
    _dump(
        {
            "graphs_tested": len(graphs),
            "scms_tested": scms,
            "max_abs_error": max_err,
            "failures": failures[:50],
        }
    )
    return 0 if not failures else 1


def _truth(scm, grounding, atoms, env_vals, joint, effect):
    if effect is None:
        assign = {}
        for a, vals in zip(atoms, env_vals):
            for var, x in zip(grounding.members(a.ref), vals):
                assign[var] = x
        return joint.prob(assign)
    treat, outc = effect
    env = dict(zip(atoms, env_vals))
    do_vals = None
    out_vals = None
    rest = {}
    for a, vals in env.items():
        if a.ref == treat:
            do_vals = vals
        elif a.ref == outc:
            out_vals = vals
        else:
            rest[a] = vals
    do = dict(zip(grounding.members(treat), do_vals))
    table = interventional_table(scm, do, grounding.clustering)
    assign = dict(zip(grounding.members(outc), out_vals))
    for a, vals in rest.items():
        assign.update(zip(grounding.members(a.ref), vals))
    return table.prob(assign)


def cmd_simulate(args) -> int:
    madmg = _read_graph(args.file)
    seed = default_seed(args.seed)
    scm = random_scm(madmg, seed=seed)
    _, manifest = exact_tables(scm)
    rng = np.random.default_rng(seed)
    flat = manifest.probs.reshape(-1)
    rows = rng.choice(flat.size, size=args.rows, p=flat / flat.sum())
    idx = np.unravel_index(rows, manifest.probs.shape)

    proxies = {scm.proxy_name(v): scm.card(v) for v in scm.variables if scm.masked(v)}
    out_fh = open(args.out, "w", newline="") if args.out else None
    writer = csv.writer(out_fh if out_fh else sys.stdout)
    writer.writerow(manifest.variables)
    for r in range(args.rows):
        record = []
        for col, values in zip(manifest.variables, idx):
            v = int(values[r])
            if col in proxies and v == proxies[col]:
                record.append("NA")
            else:
                record.append(v)
        writer.writerow(record)
    if out_fh:
        out_fh.close()
    return 0


# ---------------------------------------------------------------------------
# Parser
# ---------------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(
        prog="mcdmg",
        description="Recoverability of queries from cluster-level missingness graphs.",
        epilog=_FIXTURE_HINT,
    )
    sub = p.add_subparsers(dest="command", required=True)

    def add(name, fn, help_, example):
        sp = sub.add_parser(name, help=help_, epilog=f"example: {example}")
        sp.set_defaults(fn=fn)
        return sp

    sp = add("parse", cmd_parse, "parse and echo a graph file", "mcdmg parse fig2b --format dot")
    sp.add_argument("file")
    sp.add_argument("--format", choices=["json", "dot", "text"], default="json")

    sp = add("validate", cmd_validate, "list invariant violations", "mcdmg validate fig2b")
    sp.add_argument("file")

    sp = add("dsep", cmd_dsep, "d-separation query, optionally on a mutilated graph",
             "mcdmg dsep fig2b --x CY --y R_CY --given CX --overline CX")
    sp.add_argument("file")
    sp.add_argument("--x", required=True)
    sp.add_argument("--y", required=True)
    sp.add_argument("--given", default="")
    sp.add_argument("--overline", default="")
    sp.add_argument("--underline", default="")

    sp = add("abstract", cmd_abstract, "merge variable-level indicators per cluster",
             "mcdmg abstract fig2a")
    sp.add_argument("file")
    sp.add_argument("--format", choices=["text", "json", "dot"], default="text")

    sp = add("compatible", cmd_compatible, "check a variable-level graph against an abstract one",
             "mcdmg compatible fig1c fig1a")
    sp.add_argument("abstract")
    sp.add_argument("madmg")
    sp.add_argument("--clustering", default=None)

    sp = add("enumerate", cmd_enumerate, "stream the compatibility class within a budget",
             "mcdmg enumerate fig1c --max-vars 2 --max-edges 12 --limit 5")
    sp.add_argument("file")
    sp.add_argument("--max-vars", type=int, default=2)
    sp.add_argument("--max-edges", type=int, default=12)
    sp.add_argument("--limit", type=int, default=100)

    sp = add("check-joint", cmd_check_joint, "joint-distribution recoverability verdict",
             "mcdmg check-joint fig2b")
    sp.add_argument("file")
    sp.add_argument("--format", choices=["json", "latex", "text"], default="json")

    sp = add("recover-effect", cmd_recover_effect, "derive a macro causal effect",
             "mcdmg recover-effect fig3 --treatment CX --outcome CY")
    sp.add_argument("file")
    sp.add_argument("--treatment", required=True)
    sp.add_argument("--outcome", required=True)
    sp.add_argument("--depth", type=int, default=12)
    sp.add_argument("--format", choices=["json", "latex", "text"], default="json")

    sp = add("replay", cmd_replay, "re-verify a derivation proof object on a graph",
             "mcdmg replay fig2b derivation.json")
    sp.add_argument("file")
    sp.add_argument("derivation")

    sp = add("oracle", cmd_oracle, "exhaustive SCM check of a verdict or derivation",
             "mcdmg oracle fig2b --graphs 5 --seeds 10 --query joint")
    sp.add_argument("file")
    sp.add_argument("--max-vars", type=int, default=2)
    sp.add_argument("--max-edges", type=int, default=12)
    sp.add_argument("--graphs", type=int, default=20)
    sp.add_argument("--seeds", type=int, default=100)
    sp.add_argument("--seed", type=int, default=None)
    sp.add_argument("--tol", type=float, default=1e-9)
    sp.add_argument("--query", default="joint")

    sp = add("simulate", cmd_simulate, "sample a dataset with NA cells from a seeded SCM",
             "mcdmg simulate fig1a --rows 20 --seed 1")
    sp.add_argument("file")
    sp.add_argument("--rows", type=int, default=100)
    sp.add_argument("--seed", type=int, default=None)
    sp.add_argument("--out", default=None)

    return p


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.fn(args)
    except (ParseError, ValidationError, FileNotFoundError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except McdmgError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
