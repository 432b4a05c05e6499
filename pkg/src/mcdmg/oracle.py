"""Exact ground truth over small discrete structural causal models.

A DiscreteSCM realizes a variable-level missingness graph: every substantive
variable and indicator gets a CPT, bidirected edges become explicit latent
parents, proxies follow deterministically (value under R=0, NA under R=1).
Everything downstream is full enumeration, no sampling: joint, manifest and
interventional distributions come out as dense probability tables, and
symbolic expressions are evaluated against them exactly.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Dict, Iterable, Mapping, Optional, Tuple

import numpy as np

from .errors import (
    DomainTooLarge,
    EvaluationError,
    PartialClusterAssignment,
    PositivityError,
    UnknownVertex,
)
from .expressions import (
    PROXY,
    RZERO,
    VAL,
    Atom,
    Expr,
    One,
    Product,
    Quotient,
    Sum,
    Term,
)
from .graphs import Clustering, GraphClass, Kind, MixedGraph

MAX_STATES = 1 << 20
NA = -1  # rendered value for masked proxies; stored as the extra last level


@dataclass(frozen=True)
class DistTable:
    """Dense probability table over an ordered tuple of columns."""

    variables: Tuple[str, ...]
    cards: Tuple[int, ...]
    probs: np.ndarray
    _cache: dict = field(default_factory=dict, compare=False, repr=False)

    def __post_init__(self):
        assert self.probs.shape == tuple(self.cards)

    def axis(self, name: str) -> int:
        try:
            return self.variables.index(name)
        except ValueError:
            raise EvaluationError(f"no column {name!r} in the table") from None

    def prob(self, assignment: Mapping[str, int]) -> float:
        """Total mass of the cells matching a partial assignment."""
        if not assignment:
            return self.total()
        cols = tuple(sorted(assignment))
        marg = self.marginal(cols)
        return float(marg.probs[tuple(assignment[c] for c in cols)])

    def marginal(self, keep: Iterable[str]) -> "DistTable":
        keep = tuple(keep)
        if keep in self._cache:
            return self._cache[keep]
        drop = tuple(i for i, v in enumerate(self.variables) if v not in keep)
        probs = self.probs.sum(axis=drop) if drop else self.probs
        names = tuple(v for v in self.variables if v in keep)
        order = tuple(names.index(k) for k in keep)
        out = DistTable(keep, tuple(self.cards[self.variables.index(k)] for k in keep),
                        np.ascontiguousarray(np.transpose(probs, order)))
        self._cache[keep] = out
        return out

    def total(self) -> float:
        if "total" not in self._cache:
            self._cache["total"] = float(self.probs.sum())
        return self._cache["total"]


@dataclass(frozen=True)
class Node:
    """One mechanism: a CPT over the node's parents (sorted order)."""

    name: str
    card: int
    parents: Tuple[str, ...]
    cpt: np.ndarray  # shape (*parent cards, card); rows sum to one


@dataclass(frozen=True)
class DiscreteSCM:
    """Exact finite-domain model for a variable-level missingness graph."""

    madmg: MixedGraph
    nodes: Tuple[Node, ...]  # topological order
    latents: Tuple[str, ...]
    seed: int
    _cache: dict = field(default_factory=dict, compare=False, repr=False)

    @property
    def node_map(self) -> Dict[str, Node]:
        if "nodes" not in self._cache:
            self._cache["nodes"] = {n.name: n for n in self.nodes}
        return self._cache["nodes"]

    @property
    def variables(self) -> Tuple[str, ...]:
        return tuple(sorted(self.madmg.variables))

    @property
    def indicators(self) -> Tuple[str, ...]:
        return tuple(sorted(self.madmg.indicators))

    def card(self, name: str) -> int:
        return self.node_map[name].card

    def masked(self, var: str) -> bool:
        return var in self.madmg.indicator_by_owner

    def proxy_name(self, var: str) -> str:
        return self.madmg.proxy_by_owner[var]

    def indicator_name(self, var: str) -> str:
        return self.madmg.indicator_by_owner[var]


def _latent_name(a: str, b: str) -> str:
    x, y = sorted((a, b))
    return f"U_{x}_{y}"


def _topo_order(madmg: MixedGraph, latents, extra_parents) -> Tuple[str, ...]:
    names = sorted(set(madmg.variables) | set(madmg.indicators) | set(latents))
    indeg = {n: 0 for n in names}
    out = {n: [] for n in names}
    for b, ps in extra_parents.items():
        for a in ps:
            out[a].append(b)
            indeg[b] += 1
    order, queue = [], sorted([n for n in names if indeg[n] == 0], reverse=True)
    while queue:
        n = queue.pop()
        order.append(n)
        added = False
        for b in out[n]:
            indeg[b] -= 1
            if indeg[b] == 0:
                queue.append(b)
                added = True
        if added:
            queue.sort(reverse=True)
    if len(order) != len(names):
        raise UnknownVertex("variable-level graph has a directed cycle")
    return tuple(order)


def random_scm(
    madmg: MixedGraph,
    cardinalities: Optional[Mapping[str, int]] = None,
    seed: int = 0,
    *,
    latent_card: int = 4,
    floor: float = 1e-3,
) -> DiscreteSCM:
    """Seeded Dirichlet-style parameterization of a variable-level graph.

    Bidirected edges are materialized as fresh latent parents (default
    cardinality 4). Every CPT cell is floored at ``floor`` so that manifest
    distributions are strictly positive over complete cases.
    """
    cards = dict(cardinalities or {})
    latent_pairs = sorted(tuple(sorted(e)) for e in madmg.bidirected)
    latents = tuple(_latent_name(a, b) for a, b in latent_pairs)

    parents: Dict[str, list] = {n: [] for n in list(madmg.variables) + list(madmg.indicators)}
    for a, b in sorted(madmg.directed):
        if madmg.kind(b) is Kind.PROXY:
            continue
        parents[b].append(a)
    for lat in latents:
        parents[lat] = []
    for (a, b), lat in zip(latent_pairs, latents):
        parents[a].append(lat)
        parents[b].append(lat)

    def card_of(name: str) -> int:
        if name in latents:
            return latent_card
        if name in madmg.indicator_by_owner.values():
            return 2
        return int(cards.get(name, 2))

    total = 1
    for name in parents:
        total *= card_of(name)
        if total > MAX_STATES:
            raise DomainTooLarge(f"joint state space exceeds {MAX_STATES}")

    rng = np.random.default_rng(seed)
    nodes = []
    for name in _topo_order(madmg, latents, parents):
        ps = tuple(sorted(parents[name]))
        k = card_of(name)
        shape = tuple(card_of(p) for p in ps)
        rows = rng.dirichlet(np.ones(k), size=shape) if shape else rng.dirichlet(np.ones(k))
        cpt = np.asarray(rows, dtype=float).reshape(*shape, k)
        if floor:
            cpt = cpt * (1.0 - k * floor) + floor
        nodes.append(Node(name, k, ps, cpt))
    return DiscreteSCM(madmg, tuple(nodes), latents, seed)


def scm_from_cpts(
    madmg: MixedGraph, cpts: Mapping[str, Tuple[Tuple[str, ...], np.ndarray]], seed: int = 0
) -> DiscreteSCM:
    """Assemble an SCM from explicit (parents, cpt) pairs, topologically sorted."""
    parents = {name: list(ps) for name, (ps, _) in cpts.items()}
    latents = tuple(sorted(n for n in cpts if n not in madmg.ids))
    order = _topo_order(madmg, latents, parents)
    nodes = []
    for name in order:
        ps, cpt = cpts[name]
        cpt = np.asarray(cpt, dtype=float)
        nodes.append(Node(name, int(cpt.shape[-1]), tuple(ps), cpt))
    return DiscreteSCM(madmg, tuple(nodes), latents, seed)


# ---------------------------------------------------------------------------
# Exact tables
# ---------------------------------------------------------------------------


def _full_array(scm: DiscreteSCM, do: Mapping[str, int] = ()) -> Tuple[Tuple[str, ...], np.ndarray]:
    """Joint over every node (latents included), truncated-factorized under do."""
    do = dict(do)
    key = ("full", tuple(sorted(do.items())))
    if key in scm._cache:
        return scm._cache[key]
    names = tuple(n.name for n in scm.nodes)
    axis = {n: i for i, n in enumerate(names)}
    shape = tuple(n.card for n in scm.nodes)
    probs = np.ones(shape, dtype=float)
    for node in scm.nodes:
        if node.name in do:
            point = np.zeros(node.card)
            point[do[node.name]] = 1.0
            view = point.reshape([node.card if i == axis[node.name] else 1 for i in range(len(names))])
        else:
            # broadcast the CPT onto (parents..., self) axes of the big array
            src_axes = [axis[p] for p in node.parents] + [axis[node.name]]
            view_shape = [1] * len(names)
            for a, size in zip(src_axes, node.cpt.shape):
                view_shape[a] = size
            perm = np.argsort(src_axes)
            arranged = np.transpose(node.cpt, perm) if node.parents else node.cpt
            view = arranged.reshape(view_shape)
        probs = probs * view
    scm._cache[key] = (names, probs)
    return scm._cache[key]


def extended_table(scm: DiscreteSCM, do: Mapping[str, int] = ()) -> DistTable:
    """Distribution over true variables, proxies and indicators under do."""
    key = ("ext", tuple(sorted(dict(do).items())))
    if key in scm._cache:
        return scm._cache[key]
    names, probs = _full_array(scm, do)
    drop = tuple(i for i, n in enumerate(names) if n in scm.latents)
    base = probs.sum(axis=drop) if drop else probs
    base_names = [n for n in names if n not in scm.latents]

    masked = [v for v in scm.variables if scm.masked(v)]
    proxies = [scm.proxy_name(v) for v in masked]
    out_names = tuple(list(base_names) + proxies)
    out_cards = tuple(
        [scm.card(n) for n in base_names] + [scm.card(v) + 1 for v in masked]
    )

    flat = base.reshape(-1)
    idx = np.unravel_index(np.arange(flat.size), base.shape)
    cols = {n: idx[i] for i, n in enumerate(base_names)}
    proxy_cols = []
    for v in masked:
        r = cols[scm.indicator_name(v)]
        proxy_cols.append(np.where(r == 0, cols[v], scm.card(v)))
    target = np.ravel_multi_index(
        tuple(list(idx) + proxy_cols), out_cards
    )
    out = np.zeros(int(np.prod(out_cards)))
    np.add.at(out, target, flat)
    table = DistTable(out_names, out_cards, out.reshape(out_cards))
    scm._cache[key] = table
    return table


def exact_tables(scm: DiscreteSCM) -> Tuple[DistTable, DistTable]:
    """(joint over substantive variables, manifest over observables).

    The manifest covers fully observed variables, proxies (with an extra NA
    level) and indicators; the true values of masked variables are summed
    out.
    """
    ext = extended_table(scm)
    joint = ext.marginal(scm.variables)
    observed = [v for v in scm.variables if not scm.masked(v)]
    proxies = [scm.proxy_name(v) for v in scm.variables if scm.masked(v)]
    manifest = ext.marginal(tuple(observed + proxies + list(scm.indicators)))
    return joint, manifest


def interventional_table(
    scm: DiscreteSCM,
    do: Mapping[str, int],
    clustering: Optional[Clustering] = None,
) -> DistTable:
    """Truncated-factorization joint over substantive variables under do.

    Macro semantics: when a clustering is known, every treated cluster must
    be assigned in full.
    """
    clustering = clustering or scm.madmg.clustering
    if clustering is not None:
        touched = {}
        for v in do:
            c = clustering.cluster_of.get(v)
            if c is not None:
                touched.setdefault(c, set()).add(v)
        for c, vs in sorted(touched.items()):
            missing = set(clustering.members(c)) - vs
            if missing:
                raise PartialClusterAssignment(
                    f"cluster {c!r} is only partly assigned (missing {sorted(missing)})"
                )
    for v in do:
        if v not in scm.node_map:
            raise UnknownVertex(f"cannot intervene on unknown node {v!r}")
    return extended_table(scm, do).marginal(scm.variables)


# ---------------------------------------------------------------------------
# Grounding cluster symbols onto table columns
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class Grounding:
    """Maps cluster-level atoms to variable-level columns and domains."""

    clustering: Clustering
    cards: Mapping[str, int]
    indicator_of: Mapping[str, str]  # variable -> indicator id
    proxy_of: Mapping[str, str]  # variable -> proxy id
    indicator_groups: Mapping[str, Tuple[str, ...]] = field(default_factory=dict)

    @staticmethod
    def from_scm(
        scm: DiscreteSCM,
        clustering: Optional[Clustering] = None,
        abstract: Optional[MixedGraph] = None,
    ) -> "Grounding":
        """Ground against an SCM; pass the abstract graph so that its
        indicator names (whatever they are) expand to member indicators."""
        clustering = clustering or scm.madmg.clustering
        if clustering is None:
            raise EvaluationError("no clustering to ground cluster symbols against")
        cards = {v: scm.card(v) for v in scm.variables}
        groups = {}
        if abstract is not None:
            for rid in abstract.indicators:
                if abstract.graph_class is GraphClass.CMCDMG:
                    members = clustering.members(abstract.owner_cluster(rid))
                    group = tuple(
                        scm.madmg.indicator_by_owner[v]
                        for v in members
                        if v in scm.madmg.indicator_by_owner
                    )
                else:
                    owner = abstract.vertex(rid).owner
                    group = (scm.madmg.indicator_by_owner.get(owner, rid),)
                groups[rid] = group
        return Grounding(
            clustering,
            cards,
            dict(scm.madmg.indicator_by_owner),
            dict(scm.madmg.proxy_by_owner),
            groups,
        )

    def members(self, cluster: str) -> Tuple[str, ...]:
        return self.clustering.members(cluster)

    def domain(self, cluster: str):
        sizes = [self.cards[v] for v in self.members(cluster)]
        out = [()]
        for s in sizes:
            out = [t + (i,) for t in out for i in range(s)]
        return out

    def columns(self, atom: Atom, values: Tuple[int, ...], *, manifest: bool) -> Dict[str, int]:
        """Column assignment realizing one grounded atom."""
        if atom.kind == RZERO:
            # the abstract indicator covers all member indicators of its cluster
            rs = self._indicator_group(atom.ref)
            return {r: 0 for r in rs}
        vs = self.members(atom.ref)
        if len(values) != len(vs):
            raise EvaluationError(f"value arity mismatch for {atom.render()}")
        cols = {}
        for v, value in zip(vs, values):
            if atom.kind == PROXY and v in self.proxy_of:
                cols[self.proxy_of[v]] = value
            elif atom.kind == VAL and manifest and v in self.indicator_of:
                raise EvaluationError(
                    f"true value of partially observed {v!r} is not observable"
                )
            else:
                cols[v] = value
        return cols

    def _indicator_group(self, rid: str) -> Tuple[str, ...]:
        if rid in self.indicator_groups:
            return self.indicator_groups[rid]
        if rid in set(self.indicator_of.values()):
            return (rid,)
        # cluster-level literal R_<cluster>: expand to the members' indicators
        for c, vs in self.clustering.clusters:
            if rid == f"R_{c}":
                group = tuple(self.indicator_of[v] for v in vs if v in self.indicator_of)
                if group:
                    return group
        raise EvaluationError(f"indicator literal {rid!r} matches no indicator")


# ---------------------------------------------------------------------------
# Evaluation
# ---------------------------------------------------------------------------


def _term_on_table(
    t: Term, table: DistTable, grounding: Grounding, env: Mapping[Atom, Tuple[int, ...]],
    *, manifest: bool,
) -> float:
    cond: Dict[str, int] = {}
    for atom in sorted(t.cond):
        cond.update(grounding.columns(atom, env.get(atom, ()), manifest=manifest))
    both = dict(cond)
    for atom in sorted(t.outcomes):
        both.update(grounding.columns(atom, env.get(atom, ()), manifest=manifest))
    den = table.prob(cond) if cond else 1.0
    if den <= 0.0:
        raise PositivityError(f"zero-mass conditioning stratum {sorted(cond.items())}")
    return table.prob(both) / den


def _lookup(env: Mapping[Atom, Tuple[int, ...]], atom: Atom) -> Tuple[int, ...]:
    try:
        return env[atom]
    except KeyError:
        raise EvaluationError(f"unbound symbol {atom.render()}") from None


def _eval(expr: Expr, env, term_eval, grounding: Grounding) -> float:
    if isinstance(expr, One):
        return 1.0
    if isinstance(expr, Term):
        return term_eval(expr, env)
    if isinstance(expr, Product):
        out = 1.0
        for f in expr.factors:
            out *= _eval(f, env, term_eval, grounding)
        return out
    if isinstance(expr, Quotient):
        den = _eval(expr.den, env, term_eval, grounding)
        if den <= 0.0:
            raise PositivityError("zero denominator in quotient")
        return _eval(expr.num, env, term_eval, grounding) / den
    if isinstance(expr, Sum):
        total = 0.0
        for values in grounding.domain(expr.bound.ref):
            inner = dict(env)
            inner[expr.bound] = values
            # the proxy alias is captured by the same binder: under the R=0
            # literals both symbols denote the same bound value
            inner[Atom(PROXY, expr.bound.ref)] = values
            total += _eval(expr.body, inner, term_eval, grounding)
        return total
    raise TypeError(f"not an expression: {expr!r}")


def _check_env(expr: Expr, env, grounding: Grounding) -> dict:
    env = {k: tuple(v) for k, v in (env or {}).items()}
    for atom, values in env.items():
        if atom.kind != RZERO and len(values) != len(grounding.members(atom.ref)):
            raise EvaluationError(f"value arity mismatch for {atom.render()}")
    return env


def evaluate(
    expr: Expr,
    table: DistTable,
    grounding: Grounding,
    env: Optional[Mapping[Atom, Tuple[int, ...]]] = None,
) -> float:
    """Evaluate a do-free expression against a manifest (or any) table.

    Every symbol must resolve to columns of the table: proxies, indicators
    and fully observed variables. A residual true-value symbol of a partially
    observed variable raises EvaluationError; zero-mass conditioning strata
    raise PositivityError.
    """
    env = _check_env(expr, env, grounding)

    def term_eval(t: Term, e) -> float:
        if t.do:
            raise EvaluationError("do-terms cannot be evaluated on a plain table")
        full = {a: _lookup(e, a) for a in t.outcomes | t.cond if a.kind != RZERO}
        return _term_on_table(t, table, grounding, {**e, **full}, manifest=True)

    return _eval(expr, env, term_eval, grounding)


def evaluate_interventional(
    expr: Expr,
    scm: DiscreteSCM,
    grounding: Grounding,
    env: Optional[Mapping[Atom, Tuple[int, ...]]] = None,
) -> float:
    """Evaluate under interventional semantics: do-sets become truncated
    factorizations of the SCM, everything else reads the extended table."""
    env = _check_env(expr, env, grounding)

    def term_eval(t: Term, e) -> float:
        do_cols: Dict[str, int] = {}
        for atom in sorted(t.do):
            values = _lookup(e, atom)
            for v, value in zip(grounding.members(atom.ref), values):
                do_cols[v] = value
        for atom in t.outcomes | t.cond:
            if atom.kind != RZERO:
                _lookup(e, atom)
        table = extended_table(scm, do_cols)
        return _term_on_table(t, table, grounding, e, manifest=False)

    return _eval(expr, env, term_eval, grounding)


def free_atoms(expr: Expr) -> Tuple[Atom, ...]:
    from .expressions import bound_symbols, symbols_of

    bound = set(bound_symbols(expr))
    bound |= {Atom(PROXY, a.ref) for a in bound if a.kind == VAL}
    free = [a for a in sorted(symbols_of(expr) - bound) if a.kind != RZERO]
    return tuple(free)


def evaluate_all(expr: Expr, table_or_scm, grounding: Grounding, *, interventional=False):
    """Evaluate over the full domain of the free symbols.

    Returns (atoms, {value-tuple-assignment: float}).
    """
    atoms = free_atoms(expr)
    domains = [grounding.domain(a.ref) for a in atoms]
    out = {}

    def rec(i, env):
        if i == len(atoms):
            if interventional:
                out[tuple(env[a] for a in atoms)] = evaluate_interventional(
                    expr, table_or_scm, grounding, env
                )
            else:
                out[tuple(env[a] for a in atoms)] = evaluate(expr, table_or_scm, grounding, env)
            return
        for values in domains[i]:
            env[atoms[i]] = values
            rec(i + 1, env)

    rec(0, {})
    return atoms, out


# ---------------------------------------------------------------------------
# Counterexample pairs: equal manifests, different joints
# ---------------------------------------------------------------------------


def equal_manifest_pair(
    madmg: MixedGraph,
    seed: int = 0,
    *,
    min_gap: float = 1.2e-2,
    attempts: int = 300,
) -> Tuple[DiscreteSCM, DiscreteSCM]:
    """Two SCMs on a non-recoverable graph with identical manifests.

    Handles the two violating motifs the witness construction produces: a
    variable adjacent to its own indicator (self-masking, directly or through
    a latent), and the collider chain Y <-> Z <-> R_Y. The pair agrees on
    every manifest cell and differs in the true joint by at least ``min_gap``
    somewhere; found by a seeded randomized search over base
    parameterizations combined with an exact perturbation of the masked
    stratum.
    """
    motif = _find_violating_motif(madmg)
    for k in range(attempts):
        pair = _try_pair(madmg, motif, seed + k, min_gap)
        if pair is not None:
            return pair
    raise PositivityError("no counterexample pair found within the attempt budget")


def _find_violating_motif(madmg: MixedGraph):
    for r in sorted(madmg.indicators):
        owner = madmg.vertex(r).owner
        if (owner, r) in madmg.directed:
            return ("selfmask", owner, None, r)
        if owner in madmg.spouses(r):
            return ("selfmask-latent", owner, None, r)
    for r in sorted(madmg.indicators):
        owner = madmg.vertex(r).owner
        for z in sorted(madmg.spouses(r)):
            if madmg.kind(z) is not Kind.VARIABLE:
                continue
            if owner in madmg.spouses(z):
                return ("collider", owner, z, r)
    raise UnknownVertex(
        "graph has neither a self-masking adjacency nor a Y <-> Z <-> R_Y chain"
    )


def _near_identity(parent_card: int, card: int, weight: float = 0.85) -> np.ndarray:
    cpt = np.full((parent_card, card), (1.0 - weight) / max(card - 1, 1))
    for p in range(parent_card):
        cpt[p, p % card] = weight if card > 1 else 1.0
    return cpt


def _collider_cores(rng):
    """Two (y, z, r) joints equal on the observable cells, Y independent of R.

    The perturbation moves the masked stratum along a pattern with zero
    column sums (keeps P(z, R=1)) and zero row sum at y=1 (keeps the
    independence), shifting P(y, z) by exactly t.
    """
    p_y1 = rng.uniform(0.3, 0.7)
    p_r1 = rng.uniform(0.3, 0.5)
    z_given = rng.uniform(0.15, 0.85, size=(2, 2))  # P(Z=1 | y, r)
    p_y = np.array([1.0 - p_y1, p_y1])
    p_r = np.array([1.0 - p_r1, p_r1])
    core1 = np.zeros((2, 2, 2))  # (y, z, r)
    for yy in range(2):
        for rr in range(2):
            pz1 = z_given[yy, rr]
            core1[yy, 0, rr] = p_y[yy] * p_r[rr] * (1 - pz1)
            core1[yy, 1, rr] = p_y[yy] * p_r[rr] * pz1
    f = core1[:, :, 1]
    d = np.array([[-1.0, 1.0], [1.0, -1.0]])
    t = min(float(np.min(np.where(d < 0, f - 1e-3, np.inf))), 0.06)
    if t < 0.035:
        return None
    core2 = core1.copy()
    core2[:, :, 1] = f + t * d
    return (core1, core2), (p_y, p_r)


def _selfmask_cores(kind, rng):
    """Two (x, r) joints with equal P(x, R=0) cells and equal P(R=1).

    With a direct X -> R_X edge the pair trades the masking rates against
    the marginal; through a latent any perturbation of the masked stratum
    with zero total works.
    """
    p1 = rng.uniform(0.35, 0.65)
    r0, r1 = rng.uniform(0.25, 0.45, size=2)
    core1 = np.array(
        [
            [(1 - p1) * (1 - r0), (1 - p1) * r0],
            [p1 * (1 - r1), p1 * r1],
        ]
    )  # (x, r)
    if kind == "selfmask-latent":
        f = core1[:, 1]
        t = min(float(f.min() - 1e-3), 0.05)
        if t < 0.02:
            return None
        core2 = core1.copy()
        core2[:, 1] = f + t * np.array([-1.0, 1.0])
        return core1, core2
    # direct edge: R depends on X only, so model 2 must stay a product
    # P2(x) P2(R|x) with the same observable cells
    t = 0.12
    r1b = r1 + t
    p1b = p1 * (1 - r1) / (1 - r1b)
    p0b = 1 - p1b
    if not (0.05 < p1b < 0.95):
        return None
    r0b = 1 - ((1 - p1) * (1 - r0)) / p0b
    if not (0.02 < r0b < 0.98):
        return None
    core2 = np.array(
        [
            [p0b * (1 - r0b), p0b * r0b],
            [p1b * (1 - r1b), p1b * r1b],
        ]
    )
    if abs(p1b - p1) < 0.02:
        return None
    return core1, core2


def _try_pair(madmg, motif, seed, min_gap):
    kind, x_or_y, z, r = motif
    rng = np.random.default_rng(seed)
    all_latents = {_latent_name(a, b) for a, b in madmg.bidirected}

    special: Dict[str, object] = {}
    if kind == "collider":
        y = x_or_y
        got = _collider_cores(rng)
        if got is None:
            return None
        (core1, core2), (p_y, p_r) = got
        lat_yz, lat_zr = _latent_name(y, z), _latent_name(z, r)
        if (madmg.spouses(y) | madmg.spouses(r)) - {z}:
            return None  # Y and R must be confounded only through Z
        leak = y

        def build(core):
            def z_cpt(ps, shape):
                cpt = np.full(shape + (2,), 0.5)
                for idx in np.ndindex(*shape) if shape else iter([()]):
                    la = idx[ps.index(lat_yz)] if lat_yz in ps else 2
                    lb = idx[ps.index(lat_zr)] if lat_zr in ps else 2
                    if la < 2 and lb < 2:
                        mass = core[la, :, lb]
                        cpt[idx] = mass / mass.sum()
                return cpt

            return {
                lat_yz: lambda ps, shape: np.concatenate([p_y, [0.0, 0.0]]),
                lat_zr: lambda ps, shape: np.concatenate([p_r, [0.0, 0.0]]),
                y: _copy_of(lat_yz),
                r: _copy_of(lat_zr),
                z: z_cpt,
            }

    else:
        x = x_or_y
        cores = _selfmask_cores(kind, rng)
        if cores is None:
            return None
        core1, core2 = cores
        leak = x
        if kind == "selfmask-latent":
            lat = _latent_name(x, r)

            def build(core):
                prior = core.reshape(-1)  # latent state = (x, r) pair
                return {
                    lat: lambda ps, shape: prior,
                    x: _copy_of(lat, lambda s: s >> 1),
                    r: _copy_of(lat, lambda s: s & 1),
                }

        else:

            def build(core):
                marg = core.sum(axis=1)
                r_given = core[:, 1] / marg

                def x_cpt(ps, shape):
                    return np.broadcast_to(marg, shape + (2,)).copy()

                def r_cpt(ps, shape):
                    xi = ps.index(x)
                    cpt = np.zeros(shape + (2,))
                    for idx in np.ndindex(*shape) if shape else iter([()]):
                        rate = r_given[idx[xi]]
                        cpt[idx] = (1 - rate, rate)
                    return cpt

                return {x: x_cpt, r: r_cpt}

    scm1 = _embed(madmg, build(core1), all_latents, leak, seed)
    scm2 = _embed(madmg, build(core2), all_latents, leak, seed)
    joint1, manifest1 = exact_tables(scm1)
    joint2, manifest2 = exact_tables(scm2)
    if float(np.max(np.abs(manifest1.probs - manifest2.probs))) > 1e-9:
        return None
    gap = float(np.max(np.abs(joint1.probs - joint2.probs)))
    if gap < min_gap:
        return None
    return scm1, scm2


def _copy_of(source, transform=lambda s: min(s, 1)):
    """Deterministic CPT copying (a transform of) one parent's state."""

    def make(ps, shape):
        cpt = np.zeros(shape + (2,))
        si = ps.index(source)
        for idx in np.ndindex(*shape) if shape else iter([()]):
            cpt[idx + (transform(idx[si]),)] = 1.0
        return cpt

    return make


def _embed(madmg, special, all_latents, leak, seed) -> DiscreteSCM:
    """Fill the remaining mechanisms with shared structure.

    Children of the leaking variable ignore it entirely (its masked value
    must not surface anywhere else); everything else follows its first
    parent near-deterministically so joint differences survive aggregation.
    """
    cpts = {}
    parents: Dict[str, list] = {
        n: [] for n in list(madmg.variables) + list(madmg.indicators)
    }
    for a, b in sorted(madmg.directed):
        if madmg.kind(b) is not Kind.PROXY:
            parents[b].append(a)
    for a, b in sorted(madmg.bidirected):
        lat = _latent_name(a, b)
        parents[a].append(lat)
        parents[b].append(lat)
        parents.setdefault(lat, [])
    for lat in sorted(all_latents):
        parents.setdefault(lat, [])

    for name in sorted(parents):
        ps = tuple(sorted(parents[name]))
        shape = tuple(4 if p in all_latents else 2 for p in ps)
        if name in special:
            cpt = np.asarray(special[name](ps, shape), dtype=float)
            if cpt.shape != shape + (cpt.shape[-1],):
                cpt = np.broadcast_to(cpt, shape + (cpt.shape[-1],)).copy()
        elif name in all_latents:
            cpt = np.full(4, 0.25)
        elif madmg.kind(name) is Kind.INDICATOR:
            cpt = np.broadcast_to(np.array([0.8, 0.2]), shape + (2,)).copy()
        elif leak in ps:
            cpt = np.full(shape + (2,), 0.5)
        elif ps:
            base = _near_identity(4 if ps[0] in all_latents else 2, 2)
            view = base.reshape((base.shape[0],) + (1,) * (len(ps) - 1) + (2,))
            cpt = np.broadcast_to(view, shape + (2,)).copy()
        else:
            cpt = np.array([0.5, 0.5])
        cpts[name] = (ps, cpt)
    return scm_from_cpts(madmg, cpts, seed)
