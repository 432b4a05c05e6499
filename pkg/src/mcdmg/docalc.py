"""Do-calculus on cluster missingness graphs and bounded derivation search.

The three rules reduce to d-separation statements in mutilated graphs:

- Rule 1 (insert/delete observations):  Y indep X | Z,W  in  G over Z;
- Rule 2 (exchange do and see):         Y indep X | Z,W  in  G over Z under X;
- Rule 3 (delete interventions):        Y indep X | Z,W  in  G over Z, over X(W),
  where X(W) are the X-vertices that are not ancestors of any W-vertex in
  G over Z.

`recover_effect` searches breadth-first over canonical expression states,
combining the rules with proxy substitution and probability manipulations,
until the query contains no do-operator and every partially observed symbol
appears as a proxy alongside its R=0 literals. Derivations are replayable
proof objects: every step stores the rule, its parameters and the expression
before and after, and `replay` re-verifies all of it against a graph.
"""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass
from typing import FrozenSet, Iterable, Optional, Tuple, Union

from .errors import DepthNonPositive, OverlappingSets, UnknownVertex
from .expressions import (
    PROXY,
    RZERO,
    VAL,
    Atom,
    Expr,
    Product,
    Quotient,
    Sum,
    Term,
    apply_proxy,
    canonical,
    chain_split,
    expand_total_probability,
    expr_from_json,
    expr_to_json,
    marginalize,
    proxy,
    render,
    replace_term,
    rzero,
    symbols_of,
    term,
    terms_of,
    val,
)
from .graphs import Kind, MixedGraph
from .separation import MutilationSpec, d_separated, descendants, mutilate

RULES = ("R1", "R2", "R3", "ProxyEq1", "TotalProb", "ChainRule", "Marginalize")


@dataclass(frozen=True)
class RuleCertificate:
    """A d-separation statement in a mutilated graph, with its verdict."""

    rule: str
    y: Tuple[str, ...]
    x: Tuple[str, ...]
    z: Tuple[str, ...]
    w: Tuple[str, ...]
    overline: Tuple[str, ...]
    underline: Tuple[str, ...]
    holds: bool

    def to_json(self) -> dict:
        return {
            "rule": self.rule,
            "y": list(self.y),
            "x": list(self.x),
            "z": list(self.z),
            "w": list(self.w),
            "overline": list(self.overline),
            "underline": list(self.underline),
            "holds": self.holds,
        }


def rule_applicable(
    g: MixedGraph,
    rule: str,
    Y: Iterable[str],
    X: Iterable[str],
    Z: Iterable[str],
    W: Iterable[str],
) -> RuleCertificate:
    """Check one do-calculus rule; the certificate records the mutilation.

    Y is the outcome set, X the set being inserted/exchanged/deleted, Z the
    retained interventions, W the other conditioned vertices. Indicators may
    appear in W (they are conditioned at R=0 throughout) but are never
    intervened on.
    """
    Ys, Xs, Zs, Ws = (tuple(sorted(set(s))) for s in (Y, X, Z, W))
    sets = [set(Ys), set(Xs), set(Zs), set(Ws)]
    for i in range(len(sets)):
        for j in range(i + 1, len(sets)):
            if sets[i] & sets[j]:
                raise OverlappingSets("rule sets must be pairwise disjoint")
    for vid in (*Ys, *Xs, *Zs, *Ws):
        g.vertex(vid)
    for vid in Zs:
        if g.kind(vid) is Kind.INDICATOR:
            raise UnknownVertex(f"indicator {vid!r} cannot be intervened on")
    if rule in ("R2", "R3"):
        for vid in Xs:
            if g.kind(vid) is Kind.INDICATOR:
                raise UnknownVertex(f"indicator {vid!r} cannot be intervened on")

    if rule == "R1":
        spec = MutilationSpec.of(overline=Zs)
    elif rule == "R2":
        spec = MutilationSpec.of(overline=Zs, underline=Xs)
    elif rule == "R3":
        base = mutilate(g, MutilationSpec.of(overline=Zs))
        xw = tuple(
            x for x in Xs if not (descendants(base, {x}) & set(Ws))
        )
        spec = MutilationSpec.of(overline=tuple(sorted(set(Zs) | set(xw))))
    else:
        raise ValueError(f"unknown rule {rule!r}")

    cut = mutilate(g, spec)
    holds = d_separated(cut, set(Ys), set(Xs), set(Zs) | set(Ws))
    return RuleCertificate(
        rule,
        Ys,
        Xs,
        Zs,
        Ws,
        tuple(sorted(spec.remove_incoming)),
        tuple(sorted(spec.remove_outgoing)),
        holds,
    )


# ---------------------------------------------------------------------------
# Derivations
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class Step:
    rule: str
    params: Tuple[Tuple[str, str], ...]  # sorted (key, value) pairs
    before: Expr
    after: Expr
    certificate: Optional[RuleCertificate] = None

    def to_json(self) -> dict:
        out = {
            "rule": self.rule,
            "params": {k: v for k, v in self.params},
            "before": expr_to_json(self.before),
            "after": expr_to_json(self.after),
            "before_text": render(self.before),
            "after_text": render(self.after),
        }
        if self.certificate is not None:
            out["certificate"] = self.certificate.to_json()
        return out


@dataclass(frozen=True)
class Derivation:
    """A replayable sequence of justified rewrites from query to result."""

    graph_name: str
    query: Expr
    steps: Tuple[Step, ...]

    @property
    def result(self) -> Expr:
        return self.steps[-1].after if self.steps else self.query

    def to_json(self) -> dict:
        return {
            "graph": self.graph_name,
            "query": expr_to_json(self.query),
            "query_text": render(self.query),
            "steps": [s.to_json() for s in self.steps],
            "result": expr_to_json(self.result),
            "result_text": render(self.result),
            "residual_partially_observed": [],
        }

    @staticmethod
    def from_json(d: dict) -> "Derivation":
        steps = []
        for s in d["steps"]:
            cert = None
            if "certificate" in s:
                c = s["certificate"]
                cert = RuleCertificate(
                    c["rule"],
                    tuple(c["y"]),
                    tuple(c["x"]),
                    tuple(c["z"]),
                    tuple(c["w"]),
                    tuple(c["overline"]),
                    tuple(c["underline"]),
                    c["holds"],
                )
            steps.append(
                Step(
                    s["rule"],
                    tuple(sorted((k, v) for k, v in s["params"].items())),
                    expr_from_json(s["before"]),
                    expr_from_json(s["after"]),
                    cert,
                )
            )
        return Derivation(d["graph"], expr_from_json(d["query"]), tuple(steps))


@dataclass(frozen=True)
class NotDerived:
    """Search exhausted the depth bound; says nothing about recoverability."""

    query: Expr
    depth: int
    states_explored: int

    def to_json(self) -> dict:
        return {
            "derived": False,
            "query": expr_to_json(self.query),
            "query_text": render(self.query),
            "depth": self.depth,
            "states_explored": self.states_explored,
        }


# ---------------------------------------------------------------------------
# Search
# ---------------------------------------------------------------------------


def _observable(g: MixedGraph, e: Expr) -> bool:
    """No do-sets; partially observed symbols appear only as proxies with
    their R=0 literals in the same term."""
    masked = set(g.partially_observed)
    for t in terms_of(e):
        if t.do:
            return False
        present = t.outcomes | t.cond
        for a in present:
            if a.kind == VAL and a.ref in masked:
                return False
            if a.kind == PROXY:
                need = {rzero(r) for r in g.indicators_of_cluster(a.ref)}
                if not need <= present:
                    return False
    return True


def residual_masked_symbols(g: MixedGraph, e: Expr) -> Tuple[str, ...]:
    """Partially observed clusters still appearing as true-value symbols."""
    masked = set(g.partially_observed)
    out = set()
    for t in terms_of(e):
        for a in t.outcomes | t.cond:
            if a.kind == VAL and a.ref in masked:
                out.add(a.ref)
    return tuple(sorted(out))


def atom_vertices(g: MixedGraph, a: Atom) -> FrozenSet[str]:
    """Graph vertices an atom stands for in separation statements.

    Cluster proxies at m-level expand to every member proxy vertex.
    """
    if a.kind != PROXY:
        return frozenset({a.ref})
    if a.ref in g.proxy_by_owner:
        return frozenset({g.proxy_by_owner[a.ref]})
    owners = [g.vertex(r).owner for r in g.indicators_of_cluster(a.ref)]
    pids = [g.proxy_by_owner[o] for o in owners if o in g.proxy_by_owner]
    if not pids:
        raise UnknownVertex(f"{a.ref!r} has no proxy vertices")
    return frozenset(pids)


def _term_moves(g: MixedGraph, whole: Expr, t: Term):
    """Candidate rewrites of one term, in the fixed rule order."""
    masked = set(g.partially_observed)
    moves = []

    def sep(moved_atoms):
        y = set().union(*(atom_vertices(g, a) for a in t.outcomes))
        x = set().union(*(atom_vertices(g, a) for a in moved_atoms))
        z = {a.ref for a in t.do} - x
        w = set()
        for a in t.cond:
            if a not in moved_atoms:
                w |= atom_vertices(g, a)
        return y, x, z, w - y - x - z

    # R1: insert an R=0 literal for an indicator whose owner symbol is present
    present_clusters = {a.ref for a in t.outcomes | t.cond if a.kind in (VAL, PROXY)}
    for r in sorted(g.indicators):
        lit = rzero(r)
        if lit in t.cond or lit in t.outcomes:
            continue
        if g.owner_cluster(r) not in present_clusters:
            continue
        moves.append(("R1", {"insert": r}, sep([lit]), t.replace(cond=t.cond | {lit})))
    # R1: drop a conditioned atom
    for a in sorted(t.cond):
        moves.append(("R1", {"drop": a.render()}, sep([a]), t.replace(cond=t.cond - {a})))
    # R2: exchange one do(atom) for conditioning
    for a in sorted(t.do):
        moves.append(
            ("R2", {"observe": a.render()}, sep([a]), Term(t.outcomes, t.do - {a}, t.cond | {a}))
        )
    # R3: delete one do(atom)
    for a in sorted(t.do):
        moves.append(("R3", {"delete": a.render()}, sep([a]), t.replace(do=t.do - {a})))
    # ProxyEq1: switch a masked symbol to its proxy when licensed
    for a in sorted(t.outcomes | t.cond):
        if a.kind == VAL and a.ref in masked:
            need = {rzero(r) for r in g.indicators_of_cluster(a.ref)}
            if need <= (t.outcomes | t.cond):
                moves.append(("ProxyEq1", {"target": a.ref}, None, _swap_proxy(t, a)))
    # TotalProb: introduce an adjacent cluster into a do-carrying term
    if t.do:
        adjacent = set()
        for a in t.outcomes | t.do | t.cond:
            for vid in atom_vertices(g, a):
                if vid in g.ids:
                    adjacent |= {n for n in g.neighbors(vid) if g.kind(n) is Kind.CLUSTER}
        used = {a.ref for a in symbols_of(whole)}
        for c in sorted(adjacent):
            if c not in used:
                moves.append(("TotalProb", {"over": c}, None, expand_total_probability(t, c)))
    # ChainRule: split one outcome off a joint term
    if len(t.outcomes) > 1:
        for a in sorted(t.outcomes):
            if a.kind != RZERO:
                moves.append(("ChainRule", {"split": a.render()}, None, chain_split(t, a)))
    return moves


def _swap_proxy(t: Term, a: Atom) -> Term:
    p = proxy(a.ref)
    outs = frozenset(p if x == a else x for x in t.outcomes)
    cond = frozenset(p if x == a else x for x in t.cond)
    return Term(outs, t.do, cond)


def _sum_moves(e: Expr):
    """Marginalize moves over any collapsible sum node."""
    moves = []

    def visit(x: Expr):
        if isinstance(x, Sum):
            try:
                collapsed = marginalize(x)
            except (TypeError, ValueError):
                collapsed = None
            if collapsed is not None:
                moves.append((x, collapsed))
            visit(x.body)
        elif isinstance(x, Product):
            for f in x.factors:
                visit(f)
        elif isinstance(x, Quotient):
            visit(x.num)
            visit(x.den)

    visit(e)
    return moves


def _replace_sum(e: Expr, old: Sum, new: Expr) -> Expr:
    done = [False]

    def go(x: Expr) -> Expr:
        if done[0]:
            return x
        if x == old:
            done[0] = True
            return new
        if isinstance(x, Sum):
            return Sum(x.bound, go(x.body))
        if isinstance(x, Product):
            return Product(tuple(go(f) for f in x.factors))
        if isinstance(x, Quotient):
            return Quotient(go(x.num), go(x.den))
        return x

    return go(e)


def recover_effect(
    g: MixedGraph,
    treatment: Iterable[str],
    outcome: Iterable[str],
    depth: int = 12,
) -> Union[Derivation, NotDerived]:
    """Search for a derivation of P(outcome | do(treatment)) into observables.

    Breadth-first over canonical expression states with a fixed rule and
    parameter order, so results are deterministic and shortest. Success means
    the final expression has no do-operators and mentions partially observed
    clusters only through proxies guarded by their R=0 literals. Failure is
    reported as NotDerived: the criterion is sound, not complete.
    """
    if depth < 1:
        raise DepthNonPositive("depth must be >= 1")
    ts = tuple(sorted(set(treatment)))
    os = tuple(sorted(set(outcome)))
    for vid in ts + os:
        if g.kind(vid) is not Kind.CLUSTER:
            raise UnknownVertex(f"{vid!r} is not a cluster vertex")
    query = canonical(term(outcomes={val(o) for o in os}, do={val(t) for t in ts}))

    start = (query, ())
    seen = {query}
    frontier = deque([start])
    explored = 0
    while frontier:
        expr, steps = frontier.popleft()
        explored += 1
        if _observable(g, expr):
            return Derivation(g.name, query, steps)
        if len(steps) >= depth:
            continue
        for nxt, step in _expand(g, expr):
            if nxt not in seen:
                seen.add(nxt)
                frontier.append((nxt, steps + (step,)))
    return NotDerived(query, depth, explored)


def _expand(g: MixedGraph, expr: Expr):
    """All legal successor states of an expression, in deterministic order."""
    out = []
    for t in terms_of(expr):
        for rule, params, sep, replacement in _term_moves(g, expr, t):
            cert = None
            if sep is not None:
                y, x, z, w = sep
                cert = rule_applicable(g, rule, y, x, z, w)
                if not cert.holds:
                    continue
            nxt = canonical(replace_term(expr, t, replacement))
            step = Step(
                rule,
                tuple(sorted(params.items())),
                canonical(expr),
                nxt,
                cert,
            )
            out.append((nxt, step))
    for old, new in _sum_moves(expr):
        nxt = canonical(_replace_sum(expr, old, new))
        step = Step("Marginalize", (), canonical(expr), nxt, None)
        out.append((nxt, step))
    return out


# ---------------------------------------------------------------------------
# Replay
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class ReplayResult:
    ok: bool
    failed_at: Optional[int] = None  # 1-based step index
    reason: str = ""

    def __bool__(self) -> bool:
        return self.ok

    def to_json(self) -> dict:
        return {"ok": self.ok, "failed_at": self.failed_at, "reason": self.reason}


def replay(g: MixedGraph, d: Derivation) -> ReplayResult:
    """Re-verify a derivation against a graph, step by step.

    Every rule step's d-separation certificate is recomputed and every
    algebraic step is re-applied and compared in canonical form. Returns the
    first failing step when the derivation does not carry over.
    """
    current = canonical(d.query)
    for i, step in enumerate(d.steps, start=1):
        if canonical(step.before) != current:
            return ReplayResult(False, i, "step does not continue the previous expression")
        try:
            if step.certificate is not None:
                c = step.certificate
                fresh = rule_applicable(g, c.rule, c.y, c.x, c.z, c.w)
                if not fresh.holds:
                    return ReplayResult(False, i, f"{c.rule} certificate fails on {g.name}")
            if not _reapply_matches(g, step):
                return ReplayResult(False, i, "rewrite is not canonical-form-checkable")
        except (UnknownVertex, OverlappingSets) as exc:
            return ReplayResult(False, i, str(exc))
        current = canonical(step.after)
    return ReplayResult(True)


def _reapply_matches(g: MixedGraph, step: Step) -> bool:
    """Recompute the rewrite from ``before`` and compare with ``after``."""
    before = canonical(step.before)
    after = canonical(step.after)
    for nxt, s in _expand(g, before):
        if s.rule == step.rule and s.params == step.params and nxt == after:
            return True
    # a proxy substitution outside the bounded search is still checkable
    if step.rule == "ProxyEq1":
        target = dict(step.params).get("target")
        try:
            return target is not None and canonical(apply_proxy(before, target, g)) == after
        except Exception:
            return False
    return False
