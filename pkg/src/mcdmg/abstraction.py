"""Abstraction between variable-level missingness graphs and cluster graphs.

Three directions of travel:

- ``project``: collapse an (m-)ADMG onto a clustering, at variable-indicator
  (m-C-DMG) or merged-indicator (cm-C-DMG) granularity;
- ``merge_indicators``: the map from an m-C-DMG to its cm-C-DMG, merging each
  cluster's indicators into one vertex with the union of their adjacencies;
- ``enumerate_compatible``: stream every variable-level m-ADMG whose
  projection reproduces an abstract graph exactly, within a budget.

Compatibility is edge-set equality after projection: a cluster edge asserts
at least one realizing variable edge, and an absent cluster edge forbids all
of them. Cluster self-loops stand for intra-cluster directed edges;
intra-cluster bidirected edges have no cluster-level syntax and are therefore
unlicensed.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from typing import Dict, Iterator, List, Optional, Sequence, Tuple

from .errors import BudgetTooSmall, InvalidClustering, WrongGraphClass
from .graphs import (
    Clustering,
    GraphClass,
    Kind,
    MixedGraph,
    Vertex,
    require_valid,
)

Edge = Tuple[str, str, str]  # (kind "->"|"<->", a, b)


@dataclass(frozen=True)
class CompatibilityReport:
    """Outcome of checking a variable-level graph against an abstract one.

    ``missing_realizations`` lists abstract edges with no variable-level
    witness; ``forbidden_edges`` lists variable-level edges (projected) that
    the abstract graph does not license, including indicator-presence
    mismatches.
    """

    missing_realizations: Tuple[Edge, ...]
    forbidden_edges: Tuple[Edge, ...]

    @property
    def compatible(self) -> bool:
        return not self.missing_realizations and not self.forbidden_edges


def _level_of(abstract: MixedGraph) -> GraphClass:
    if abstract.graph_class in (GraphClass.MCDMG, GraphClass.CMCDMG, GraphClass.CDMG):
        return abstract.graph_class
    raise WrongGraphClass(f"not an abstract cluster graph: {abstract.graph_class.value}")


def _project_endpoint(vid: str, g: MixedGraph, clustering: Clustering, level: GraphClass) -> str:
    """Map a variable-level endpoint to its cluster-level counterpart."""
    kind = g.kind(vid)
    if kind is Kind.VARIABLE:
        try:
            return clustering.cluster_of[vid]
        except KeyError:
            raise InvalidClustering(f"variable {vid!r} not covered by the clustering") from None
    if kind is Kind.INDICATOR:
        if level is GraphClass.MCDMG:
            return vid
        owner = g.vertex(vid).owner
        cluster = clustering.cluster_of.get(owner)
        if cluster is None:
            raise InvalidClustering(f"indicator owner {owner!r} is unclustered")
        return _merged_indicator_id(cluster)
    raise InvalidClustering(f"cannot project a {kind.value} vertex")


def _merged_indicator_id(cluster: str) -> str:
    return f"R_{cluster}"


def project(
    madmg: MixedGraph, clustering: Clustering, level: GraphClass
) -> MixedGraph:
    """Project a variable-level (m-)ADMG onto its cluster graph.

    Cluster edges appear exactly when some member-pair edge realizes them;
    intra-cluster directed edges become self-loops; indicators are kept
    per-variable (m-C-DMG) or merged per cluster (cm-C-DMG). Intra-cluster
    bidirected edges have no image and are dropped (`is_compatible` reports
    them as forbidden).
    """
    if madmg.graph_class not in (GraphClass.ADMG, GraphClass.MADMG):
        raise WrongGraphClass("projection starts from an (m-)ADMG")
    if level is GraphClass.CDMG and madmg.indicators:
        raise WrongGraphClass("an m-ADMG cannot project to a plain C-DMG")
    clustering.check_partition()
    covered = set(clustering.variables)
    if set(madmg.variables) != covered:
        raise InvalidClustering("clustering must cover exactly the graph's variables")

    directed = set()
    bidirected = set()
    for a, b in madmg.directed:
        if madmg.kind(b) is Kind.PROXY:
            continue
        pa = _project_endpoint(a, madmg, clustering, level)
        pb = _project_endpoint(b, madmg, clustering, level)
        directed.add((pa, pb))
    for a, b in madmg.bidirected:
        pa = _project_endpoint(a, madmg, clustering, level)
        pb = _project_endpoint(b, madmg, clustering, level)
        if pa == pb:
            continue  # intra-cluster confounding is invisible at cluster level
        bidirected.add(tuple(sorted((pa, pb))))

    verts = [Vertex(c, Kind.CLUSTER) for c, _ in clustering.clusters]
    if level is GraphClass.MCDMG:
        verts += [
            Vertex(r, Kind.INDICATOR, madmg.vertex(r).owner) for r in madmg.indicators
        ]
    elif level is GraphClass.CMCDMG:
        masked = sorted(
            {clustering.cluster_of[madmg.vertex(r).owner] for r in madmg.indicators}
        )
        verts += [Vertex(_merged_indicator_id(c), Kind.INDICATOR, c) for c in masked]
    return require_valid(
        MixedGraph.build(
            f"{madmg.name}@cluster",
            level,
            verts,
            directed,
            bidirected,
            clustering=clustering,
        )
    )


def merge_indicators(mcdmg: MixedGraph) -> MixedGraph:
    """Abstract an m-C-DMG into its cm-C-DMG.

    Each cluster's variable-level indicators collapse into one cluster-level
    indicator inheriting the union of their adjacencies, edge types
    preserved; proxies are re-owned accordingly.
    """
    if mcdmg.graph_class is not GraphClass.MCDMG:
        raise WrongGraphClass("merge starts from an m-c-dmg")
    clustering = mcdmg.clustering
    group: Dict[str, str] = {}
    for r in mcdmg.indicators:
        cluster = clustering.cluster_of[mcdmg.vertex(r).owner]
        group[r] = _merged_indicator_id(cluster)

    def image(v: str) -> Optional[str]:
        if mcdmg.kind(v) is Kind.PROXY:
            return None
        return group.get(v, v)

    directed = set()
    for a, b in mcdmg.directed:
        ia, ib = image(a), image(b)
        if ia is None or ib is None:
            continue
        directed.add((ia, ib))
    bidirected = set()
    for a, b in mcdmg.bidirected:
        ia, ib = image(a), image(b)
        bidirected.add(tuple(sorted((ia, ib))))

    masked = sorted({group[r] for r in mcdmg.indicators})
    verts = [Vertex(c, Kind.CLUSTER) for c in mcdmg.clusters]
    verts += [Vertex(rid, Kind.INDICATOR, rid[len("R_"):]) for rid in masked]
    return require_valid(
        MixedGraph.build(
            f"{mcdmg.name}@cm",
            GraphClass.CMCDMG,
            verts,
            directed,
            bidirected,
            clustering=clustering,
        )
    )


# ---------------------------------------------------------------------------
# Compatibility
# ---------------------------------------------------------------------------


def _edge_set(g: MixedGraph) -> frozenset:
    """Non-proxy edges as ("->"|"<->", a, b) triples, bidirected sorted."""
    proxies = set(g.proxies)
    out = set()
    for a, b in g.directed:
        if b in proxies or a in proxies:
            continue
        out.add(("->", a, b))
    for a, b in g.bidirected:
        out.add(("<->", a, b))
    return frozenset(out)


def _indicator_keys(g: MixedGraph) -> frozenset:
    """Indicators keyed by owner so that names cancel out at cm level."""
    if g.graph_class is GraphClass.CMCDMG:
        return frozenset(("cluster", g.vertex(r).owner) for r in g.indicators)
    return frozenset(("variable", g.vertex(r).owner) for r in g.indicators)


def is_compatible(
    madmg: MixedGraph, abstract: MixedGraph, clustering: Optional[Clustering] = None
) -> CompatibilityReport:
    """Edge-equality compatibility of a variable-level graph with an abstract one.

    The variable-level graph is projected at the abstract graph's level and
    the two edge sets must coincide; indicator presence must match
    owner-for-owner. Intra-cluster bidirected edges are reported as forbidden.
    """
    level = _level_of(abstract)
    clustering = clustering or madmg.clustering or abstract.clustering
    if clustering is None:
        raise InvalidClustering("no clustering available")
    projected = project(madmg, clustering, level)

    abstract_edges = _canon_indicator_names(abstract)
    projected_edges = _canon_indicator_names(projected)
    missing = sorted(abstract_edges - projected_edges)
    forbidden = sorted(projected_edges - abstract_edges)

    want = _indicator_keys(abstract)
    have = _indicator_keys(projected)
    for kind, owner in sorted(want - have):
        missing.append(("rvar", kind, owner))
    for kind, owner in sorted(have - want):
        forbidden.append(("rvar", kind, owner))

    for a, b in sorted(madmg.bidirected):
        ca = clustering.cluster_of.get(a)
        if ca is not None and ca == clustering.cluster_of.get(b):
            forbidden.append(("<->", a, b))

    return CompatibilityReport(tuple(missing), tuple(forbidden))


def _canon_indicator_names(g: MixedGraph) -> frozenset:
    """Edge set with cm-level indicator ids rewritten to their owner key.

    The merged indicator's particular name must not matter when comparing a
    projection against a hand-written abstract graph.
    """
    if g.graph_class is not GraphClass.CMCDMG:
        return _edge_set(g)
    alias = {r: _merged_indicator_id(g.vertex(r).owner) for r in g.indicators}

    def fix(v: str) -> str:
        return alias.get(v, v)

    out = set()
    for kind, a, b in _edge_set(g):
        a, b = fix(a), fix(b)
        if kind == "<->":
            a, b = sorted((a, b))
        out.add((kind, a, b))
    return frozenset(out)


# ---------------------------------------------------------------------------
# Enumeration of compatibility classes
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class Budget:
    """Bounds that make compatibility-class enumeration finite."""

    max_vars_per_cluster: int = 2
    max_edges: int = 24
    min_vars_per_cluster: int = 1


def enumerate_compatible(
    abstract: MixedGraph,
    clustering: Optional[Clustering] = None,
    budget: Budget = Budget(),
    *,
    canonicalize: bool = True,
) -> Iterator[MixedGraph]:
    """Stream every m-ADMG compatible with an abstract graph, within budget.

    Deterministic order: cluster sizes ascend lexicographically, then one
    nonempty realization subset per abstract edge in bitmask order. Acyclic
    at variable level. With ``canonicalize`` the stream keeps one labeled
    representative per within-cluster renaming orbit.

    Raises
    ------
    BudgetTooSmall
        If no compatible graph exists within the budget (checked eagerly).
    """
    it = _enumerate(abstract, clustering, budget, canonicalize)
    try:
        first = next(it)
    except StopIteration:
        raise BudgetTooSmall(
            "no compatible variable-level graph within the budget"
        ) from None
    return itertools.chain([first], it)


def _enumerate(abstract, clustering, budget, canonicalize):
    level = _level_of(abstract)
    if level is GraphClass.MCDMG:
        yield from _enumerate_fixed_members(abstract, budget, canonicalize)
        return
    clustering = clustering or abstract.clustering
    declared = clustering.as_dict
    cluster_ids = sorted(abstract.clusters)
    lo, hi = budget.min_vars_per_cluster, budget.max_vars_per_cluster
    for sizes in itertools.product(range(lo, hi + 1), repeat=len(cluster_ids)):
        members = {}
        for c, n in zip(cluster_ids, sizes):
            pool = list(declared.get(c, ()))
            while len(pool) < n:
                pool.append(f"{c}_{len(pool) + 1}")
            members[c] = tuple(pool[:n])
        yield from _enumerate_over_members(abstract, members, budget, canonicalize)


def _enumerate_fixed_members(abstract, budget, canonicalize):
    members = {c: tuple(vs) for c, vs in abstract.clustering.clusters}
    if any(len(vs) > budget.max_vars_per_cluster for vs in members.values()):
        return
    yield from _enumerate_over_members(abstract, members, budget, canonicalize)


def _realizations(abstract: MixedGraph, members: Dict[str, Tuple[str, ...]]):
    """Per abstract edge, the candidate variable-level edges, sorted.

    Indicator ids at variable level follow the ``R_<var>`` convention at cm
    level and keep their declared names at m level.
    """
    level = abstract.graph_class
    if level is GraphClass.CMCDMG:
        r_of = {c: tuple(f"R_{v}" for v in members[c]) for c in members}

        def indicator_pool(rid: str) -> Sequence[str]:
            return r_of[abstract.vertex(rid).owner]

    else:
        def indicator_pool(rid: str) -> Sequence[str]:
            return (rid,)

    groups = []
    for kind, a, b in sorted(_edge_set(abstract)):
        ka, kb = abstract.kind(a), abstract.kind(b)
        if kind == "->" and ka is Kind.CLUSTER and kb is Kind.CLUSTER:
            if a == b:
                pool = [
                    ("->", x, y)
                    for x in members[a]
                    for y in members[a]
                    if x != y
                ]
            else:
                pool = [("->", x, y) for x in members[a] for y in members[b]]
        elif kind == "->" and ka is Kind.CLUSTER and kb is Kind.INDICATOR:
            pool = [("->", x, r) for x in members[a] for r in indicator_pool(b)]
        elif kind == "<->" and ka is Kind.CLUSTER and kb is Kind.CLUSTER:
            pool = [("<->", *sorted((x, y))) for x in members[a] for y in members[b]]
        elif kind == "<->" and {ka, kb} == {Kind.CLUSTER, Kind.INDICATOR}:
            c, r = (a, b) if ka is Kind.CLUSTER else (b, a)
            pool = [("<->", *sorted((x, rr))) for x in members[c] for rr in indicator_pool(r)]
        elif kind == "<->" and ka is Kind.INDICATOR and kb is Kind.INDICATOR:
            pool = [
                ("<->", *sorted((ra, rb)))
                for ra in indicator_pool(a)
                for rb in indicator_pool(b)
            ]
        else:
            raise WrongGraphClass(
                f"abstract edge {a} {kind} {b} has no variable-level semantics"
            )
        groups.append(((kind, a, b), sorted(set(pool))))
    return groups


def _enumerate_over_members(abstract, members, budget, canonicalize):
    level = abstract.graph_class
    groups = _realizations(abstract, members)
    if any(not pool for _, pool in groups):
        return

    variables = [v for c in sorted(members) for v in members[c]]
    if level is GraphClass.CMCDMG:
        masked_clusters = {abstract.vertex(r).owner for r in abstract.indicators}
        rvars = [
            (f"R_{v}", v)
            for c in sorted(masked_clusters)
            for v in members[c]
        ]
    else:
        rvars = [(r, abstract.vertex(r).owner) for r in sorted(abstract.indicators)]

    clustering = Clustering(tuple((c, members[c]) for c in sorted(members)))
    # within-cluster renaming is a symmetry only once indicators are merged
    if level is GraphClass.CMCDMG:
        perms = _cluster_permutations(members, {o: r for r, o in rvars})
    else:
        perms = [{}]

    choice_iters = [
        [
            tuple(pool[i] for i in range(len(pool)) if mask >> i & 1)
            for mask in range(1, 1 << len(pool))
        ]
        for _, pool in groups
    ]
    counter = 0
    for picks in itertools.product(*choice_iters):
        edges = [e for pick in picks for e in pick]
        if len(set(edges)) > budget.max_edges:
            continue
        directed = sorted({(a, b) for k, a, b in edges if k == "->"})
        bidirected = sorted({(a, b) for k, a, b in edges if k == "<->"})
        if _has_cycle(variables, directed):
            continue
        if canonicalize and not _is_canonical(directed, bidirected, perms):
            continue
        counter += 1
        verts = [Vertex(v, Kind.VARIABLE) for v in variables]
        verts += [Vertex(r, Kind.INDICATOR, owner) for r, owner in rvars]
        yield require_valid(
            MixedGraph.build(
                f"{abstract.name}.compat{counter}",
                GraphClass.MADMG,
                verts,
                directed,
                bidirected,
                clustering=clustering,
            )
        )


def _has_cycle(variables, directed) -> bool:
    out: Dict[str, List[str]] = {v: [] for v in variables}
    indeg = {v: 0 for v in variables}
    for a, b in directed:
        if a in out and b in out:  # edges into indicators cannot cycle
            out[a].append(b)
            indeg[b] += 1
    queue = [v for v, d in indeg.items() if d == 0]
    seen = 0
    while queue:
        seen += 1
        for b in out[queue.pop()]:
            indeg[b] -= 1
            if indeg[b] == 0:
                queue.append(b)
    return seen != len(out)


def _cluster_permutations(members, owner_r):
    """All within-cluster renamings as vertex-name maps (indicators follow)."""
    per_cluster = []
    for c in sorted(members):
        vs = members[c]
        per_cluster.append([dict(zip(vs, p)) for p in itertools.permutations(vs)])
    maps = []
    for combo in itertools.product(*per_cluster):
        m: Dict[str, str] = {}
        for part in combo:
            m.update(part)
        full = dict(m)
        for v, w in m.items():
            if v in owner_r and w in owner_r:
                full[owner_r[v]] = owner_r[w]
        maps.append(full)
    return maps


def _is_canonical(directed, bidirected, perms) -> bool:
    def key(mapping):
        d = sorted((mapping.get(a, a), mapping.get(b, b)) for a, b in directed)
        bi = sorted(tuple(sorted((mapping.get(a, a), mapping.get(b, b)))) for a, b in bidirected)
        return (d, bi)

    mine = key({})
    return all(mine <= key(m) for m in perms)
