"""Joint-distribution recoverability on cluster missingness graphs.

The graphical test: the joint over all clusters is recoverable exactly when
no partially observed cluster is adjacent to one of its own missingness
indicators, nor connected to one by a path whose interior vertices are all
colliders and all cluster vertices. On success a closed-form quotient is
emitted; on failure a variable-level witness graph realizes the violation.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional, Tuple

from .abstraction import is_compatible
from .errors import PreconditionError, UnknownVertex, WrongGraphClass
from .expressions import Expr, Product, Quotient, apply_proxy, canonical, rzero, term, val
from .graphs import Clustering, GraphClass, Kind, MixedGraph, Vertex, require_valid
from .separation import Walk

_MB_MODES = ("district", "local", "cluster")


@dataclass(frozen=True)
class MarkovBlanket:
    """Blanket of an indicator split into observed and missing clusters.

    ``sibling_indicators`` are other indicators inside the same bidirected
    district; the emitted formula conditions each factor on the earlier
    siblings so the chain rule stays exact.
    """

    observed: Tuple[str, ...]
    missing: Tuple[str, ...]
    sibling_indicators: Tuple[str, ...] = ()


@dataclass(frozen=True)
class Violation:
    """Why a cluster breaks recoverability: adjacency or a collider path."""

    cluster: str
    indicator: str
    reason: str  # "neighbor" | "collider_path"
    witness: Walk

    def to_json(self) -> dict:
        return {
            "cluster": self.cluster,
            "indicator": self.indicator,
            "reason": self.reason,
            "witness_path": self.witness.text(),
        }


@dataclass(frozen=True)
class JointVerdict:
    recoverable: bool
    violations: Tuple[Violation, ...]
    formula: Optional[Expr]

    def to_json(self) -> dict:
        from .expressions import expr_to_json, render

        out = {
            "recoverable": self.recoverable,
            "violations": [v.to_json() for v in self.violations],
        }
        if self.formula is not None:
            out["formula"] = expr_to_json(self.formula)
            out["formula_text"] = render(self.formula)
        return out


def _require_missingness_cluster_graph(g: MixedGraph) -> None:
    if g.graph_class not in (GraphClass.MCDMG, GraphClass.CMCDMG):
        raise WrongGraphClass(
            f"joint recoverability is defined on m-c-dmg/cm-c-dmg, got {g.graph_class.value}"
        )


def _check_side_conditions(g: MixedGraph) -> None:
    rs = set(g.indicators)
    for a, b in sorted(g.directed):
        if a in rs and a == b:
            raise PreconditionError(f"self-loop on indicator {a!r}")
        if a in rs and b in rs:
            raise PreconditionError(f"edge between indicators {a!r} and {b!r}")
    for a, b in sorted(g.bidirected):
        if a in rs and b in rs:
            raise PreconditionError(f"edge between indicators {a!r} and {b!r}")


# ---------------------------------------------------------------------------
# Markov blankets
# ---------------------------------------------------------------------------


def markov_blanket(g: MixedGraph, r: str, mode: str = "district") -> MarkovBlanket:
    """Markov blanket used in the denominator factor of the recovery formula.

    Modes
    -----
    district (default)
        Around the indicator: parents, non-proxy children with their parents,
        the bidirected district and the district's parents. Exact on every
        compatible variable-level model (enforced by the oracle tests).
    local
        Around the indicator but without the district's parents.
    cluster
        Around the owning cluster instead of the indicator.
    """
    if mode not in _MB_MODES:
        raise ValueError(f"mode must be one of {_MB_MODES}")
    _require_missingness_cluster_graph(g)
    if g.kind(r) is not Kind.INDICATOR:
        raise UnknownVertex(f"{r!r} is not an indicator")

    center = g.owner_cluster(r) if mode == "cluster" else r
    proxies = set(g.proxies)

    members: set = set()
    members |= g.parents(center)
    kids = {c for c in g.children(center) if c not in proxies}
    members |= kids
    for k in kids:
        members |= g.parents(k)
    district = g.district(center)
    if mode == "local":
        members |= g.spouses(center)
    else:
        members |= district
        for d in district:
            members |= g.parents(d)
    members -= proxies
    members.discard(center)
    members.discard(r)

    missing = set(g.partially_observed)
    mb_o = tuple(sorted(m for m in members if g.kind(m) is Kind.CLUSTER and m not in missing))
    mb_m = tuple(sorted(m for m in members if g.kind(m) is Kind.CLUSTER and m in missing))
    sibs = tuple(sorted(m for m in members if g.kind(m) is Kind.INDICATOR))
    return MarkovBlanket(mb_o, mb_m, sibs)


# ---------------------------------------------------------------------------
# The graphical condition
# ---------------------------------------------------------------------------


def _neighbor_witness(g: MixedGraph, cluster: str, r: str) -> Optional[Walk]:
    if (cluster, r) in g.directed:
        return Walk((cluster, r), ("->",))
    if (r, cluster) in g.directed:
        return Walk((cluster, r), ("<-",))
    if tuple(sorted((cluster, r))) in g.bidirected:
        return Walk((cluster, r), ("<->",))
    return None


def _collider_path_witness(g: MixedGraph, cluster: str, r: str) -> Optional[Walk]:
    """Shortest path cluster ... r whose interior is all colliders, all clusters.

    Interior vertices must take arrowheads from both path edges, so interior
    steps ride bidirected edges; the first edge leaves the cluster with an
    arrowhead into the interior and the last takes an arrowhead from r.
    """
    cluster_kind = {v for v in g.clusters}

    first_syms = {}
    for v in sorted(g.children(cluster) | g.spouses(cluster)):
        if v in cluster_kind and v != cluster:
            first_syms.setdefault(v, "->" if v in g.children(cluster) else "<->")
    last_syms = {}
    for u in sorted(g.children(r) | g.spouses(r)):
        if u in cluster_kind and u != cluster:
            last_syms.setdefault(u, "<-" if u in g.children(r) else "<->")

    # breadth-first over bidirected cluster-cluster edges from the entry set
    from collections import deque

    prev = {}
    queue = deque()
    for v in sorted(first_syms):
        prev[v] = None
        queue.append(v)
    goal = None
    while queue:
        v = queue.popleft()
        if v in last_syms:
            goal = v
            break
        for u in sorted(g.spouses(v)):
            if u in cluster_kind and u != cluster and u not in prev:
                prev[u] = v
                queue.append(u)
    if goal is None:
        return None
    chain = [goal]
    while prev[chain[-1]] is not None:
        chain.append(prev[chain[-1]])
    chain.reverse()
    vs = [cluster] + chain + [r]
    es = [first_syms[chain[0]]] + ["<->"] * (len(chain) - 1) + [last_syms[goal]]
    return Walk(tuple(vs), tuple(es))


def check_joint(g: MixedGraph, mb_mode: str = "district") -> JointVerdict:
    """Decide joint recoverability and emit the recovery formula.

    Requires an m-C-DMG or cm-C-DMG without indicator self-loops or edges
    between indicators (PreconditionError otherwise).
    """
    _require_missingness_cluster_graph(g)
    _check_side_conditions(g)

    violations = []
    for r in sorted(g.indicators):
        cluster = g.owner_cluster(r)
        w = _neighbor_witness(g, cluster, r)
        if w is not None:
            violations.append(Violation(cluster, r, "neighbor", w))
            continue
        w = _collider_path_witness(g, cluster, r)
        if w is not None:
            violations.append(Violation(cluster, r, "collider_path", w))
    if violations:
        return JointVerdict(False, tuple(violations), None)
    return JointVerdict(True, (), recovery_formula(g, mb_mode))


def recovery_formula(g: MixedGraph, mb_mode: str = "district") -> Expr:
    """The quotient P(R=0, c) / prod_i P(R_i=0 | blanket, R_blanket=0).

    Emitted in proxy form so every symbol resolves against manifest tables:
    partially observed cluster values appear as proxies next to their R=0
    literals.
    """
    all_r = sorted(g.indicators)
    numerator = term(
        outcomes={val(c) for c in g.clusters} | {rzero(r) for r in all_r},
    )
    factors = []
    for r in all_r:
        mb = markov_blanket(g, r, mb_mode)
        cond = {val(c) for c in mb.observed} | {val(c) for c in mb.missing}
        for m in mb.missing:
            cond |= {rzero(x) for x in g.indicators_of_cluster(m)}
        cond |= {rzero(s) for s in mb.sibling_indicators if s < r}
        cond.discard(rzero(r))
        factors.append(term(outcomes={rzero(r)}, cond=cond))
    expr: Expr = Quotient(numerator, Product(tuple(factors)))
    for c in g.partially_observed:
        expr = apply_proxy(expr, c, g)
    return canonical(expr)


# ---------------------------------------------------------------------------
# Witness construction
# ---------------------------------------------------------------------------


def construct_witness(g: MixedGraph, violation: Violation) -> MixedGraph:
    """A variable-level m-ADMG realizing a violation, compatible with ``g``.

    One representative variable per cluster realizes every inter-cluster
    edge; the violating adjacency or collider path runs over those
    representatives, so the witness contains a variable adjacent to its own
    indicator or an all-collider substantive path to it. Self-looped clusters
    receive a second variable solely to realize the loop, and that second
    variable also absorbs directed edges whose representative realization
    would close a variable-level cycle (it never has outgoing edges).
    """
    _require_missingness_cluster_graph(g)
    if g.kind(violation.indicator) is not Kind.INDICATOR:
        raise UnknownVertex(f"{violation.indicator!r} is not an indicator")

    declared = g.clustering.as_dict
    self_looped = {a for a, b in g.directed if a == b and g.kind(a) is Kind.CLUSTER}
    members = {}
    for c in sorted(g.clusters):
        pool = list(declared.get(c, ())) or [f"{c}_1"]
        size = 2 if c in self_looped else 1
        while len(pool) < size:
            pool.append(f"{c}_{len(pool) + 1}")
        members[c] = list(pool[:size])

    # the violated cluster's representative must be the masked variable itself
    if g.graph_class is GraphClass.MCDMG:
        owner = g.vertex(violation.indicator).owner
        pool = members[violation.cluster]
        if owner not in pool:
            pool[1 if len(pool) > 1 else 0] = owner
        pool.sort(key=lambda v: v != owner)
    rep = {c: members[c][0] for c in members}

    masked = set(g.partially_observed)
    if g.graph_class is GraphClass.CMCDMG:
        rvars = [(f"R_{v}", v) for c in sorted(masked) for v in members[c]]
        r_image = {r: f"R_{rep[g.vertex(r).owner]}" for r in g.indicators}
    else:
        rvars = [(r, g.vertex(r).owner) for r in sorted(g.indicators)]
        r_image = {r: r for r in g.indicators}

    def image(vid: str) -> str:
        return rep[vid] if g.kind(vid) is Kind.CLUSTER else r_image[vid]

    def second(c: str) -> str:
        if len(members[c]) == 1:
            members[c].append(f"{c}_{len(members[c]) + 1}")
        return members[c][1]

    directed: set = set()
    bidirected: set = set()
    sinks: set = set()  # second variables: never sources, can't cycle

    def reaches(a: str, b: str) -> bool:
        seen, todo = {a}, [a]
        while todo:
            cur = todo.pop()
            for x, y in directed:
                if x != cur:
                    continue
                if y == b:
                    return True
                if y not in seen:
                    seen.add(y)
                    todo.append(y)
        return False

    # violating structure first, so it is never re-routed
    path_edges = list(zip(violation.witness.vertices, violation.witness.edges, violation.witness.vertices[1:]))
    ordered = []
    for a, sym, b in path_edges:
        if sym == "->":
            ordered.append(("->", a, b))
        elif sym == "<-":
            ordered.append(("->", b, a))
        else:
            ordered.append(("<->", a, b))
    for a, b in sorted(g.directed):
        if a != b and g.kind(b) is not Kind.PROXY and ("->", a, b) not in ordered:
            ordered.append(("->", a, b))
    for a, b in sorted(g.bidirected):
        if ("<->", a, b) not in ordered and ("<->", b, a) not in ordered:
            ordered.append(("<->", a, b))

    for kind, a, b in ordered:
        ia, ib = image(a), image(b)
        if kind == "<->":
            bidirected.add(tuple(sorted((ia, ib))))
            continue
        if ia == ib or reaches(ib, ia):
            if g.kind(b) is not Kind.CLUSTER:
                raise WrongGraphClass("cannot acyclically realize a cycle through an indicator")
            ib = second(b)  # second variables never get outgoing edges
            sinks.add(ib)
        directed.add((ia, ib))
    for c in sorted(self_looped):
        directed.add((rep[c], second(c)))

    if g.graph_class is GraphClass.CMCDMG:
        rvars = [(f"R_{v}", v) for c in sorted(masked) for v in members[c]]

    clustering = Clustering(tuple((c, tuple(members[c])) for c in sorted(members)))
    verts = [Vertex(v, Kind.VARIABLE) for c in sorted(members) for v in members[c]]
    verts += [Vertex(r, Kind.INDICATOR, o) for r, o in rvars]
    witness = require_valid(
        MixedGraph.build(
            f"{g.name}.witness",
            GraphClass.MADMG,
            verts,
            directed,
            bidirected,
            clustering=clustering,
        )
    )
    report = is_compatible(witness, g, clustering)
    if not report.compatible:
        raise AssertionError(f"witness construction incompatible: {report}")
    return witness
