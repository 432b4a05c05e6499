"""Paths, walks, mutilation and d-separation on possibly-cyclic mixed graphs.

Blocking follows the path definition: a path is blocked by Z when it has a
non-collider in Z, or a collider with no descendant in Z. The production
engine is a reachability automaton over (vertex, arrival-mark) states, which
also admits walks; an exhaustive path enumerator doubles as an independent
oracle and the two are held in agreement by the test suite.

Self-loop edges can be traversed in both orientations by walks (arrowhead end
first or tail end first) and never occur on simple paths.
"""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass
from typing import FrozenSet, Iterable, Optional, Set, Tuple

from .errors import EmptyWalk, OverlappingSets, UnknownVertex
from .graphs import Kind, MixedGraph

# Edge symbols are oriented along the traversal: "->" leaves via a tail and
# arrives via a head, "<-" the reverse, "<->" is a head at both ends.
FORWARD = "->"
BACKWARD = "<-"
BOTH = "<->"

HEAD = "head"
TAIL = "tail"


def _mark_at_prev(sym: str) -> str:
    return HEAD if sym in (BACKWARD, BOTH) else TAIL


def _mark_at_next(sym: str) -> str:
    return HEAD if sym in (FORWARD, BOTH) else TAIL


@dataclass(frozen=True)
class Walk:
    """A vertex sequence with one oriented edge symbol between neighbours."""

    vertices: Tuple[str, ...]
    edges: Tuple[str, ...]

    def __post_init__(self):
        if not self.vertices:
            raise EmptyWalk("walk has no vertices")
        if len(self.edges) != len(self.vertices) - 1:
            raise EmptyWalk("edge count must be vertex count minus one")

    def __len__(self) -> int:
        return len(self.edges)

    def is_path(self) -> bool:
        return len(set(self.vertices)) == len(self.vertices)

    def in_mark(self, i: int) -> str:
        """Arrival mark at position i (i >= 1)."""
        return _mark_at_next(self.edges[i - 1])

    def out_mark(self, i: int) -> str:
        """Departure mark at position i (i <= len-1)."""
        return _mark_at_prev(self.edges[i])

    def is_collider(self, i: int) -> bool:
        """Collider status of the interior occurrence at position i."""
        return self.in_mark(i) == HEAD and self.out_mark(i) == HEAD

    def interior(self) -> Tuple[int, ...]:
        return tuple(range(1, len(self.vertices) - 1))

    def tokens(self) -> list:
        """Alternating vertex and edge symbols, first to last."""
        parts = [self.vertices[0]]
        for sym, v in zip(self.edges, self.vertices[1:]):
            parts += [sym, v]
        return parts

    def text(self) -> str:
        return " ".join(self.tokens())

    def check_in(self, g: MixedGraph) -> None:
        for i, sym in enumerate(self.edges):
            a, b = self.vertices[i], self.vertices[i + 1]
            ok = (
                (sym == FORWARD and (a, b) in g.directed)
                or (sym == BACKWARD and (b, a) in g.directed)
                or (sym == BOTH and tuple(sorted((a, b))) in g.bidirected)
            )
            if not ok:
                raise UnknownVertex(f"walk step {a} {sym} {b} is not an edge of the graph")


@dataclass(frozen=True)
class MutilationSpec:
    """Overline (remove incoming) and underline (remove outgoing) sets."""

    remove_incoming: FrozenSet[str] = frozenset()
    remove_outgoing: FrozenSet[str] = frozenset()

    @staticmethod
    def of(overline: Iterable[str] = (), underline: Iterable[str] = ()) -> "MutilationSpec":
        return MutilationSpec(frozenset(overline), frozenset(underline))

    @property
    def empty(self) -> bool:
        return not self.remove_incoming and not self.remove_outgoing


def descendants(g: MixedGraph, sources: Iterable[str]) -> FrozenSet[str]:
    """All vertices reachable from ``sources`` along directed edges, inclusive.

    Well defined under cycles: this is the fixed point of one-step expansion.
    """
    todo = list(sources)
    for s in todo:
        g.vertex(s)
    seen: Set[str] = set(todo)
    while todo:
        for b in g._out[todo.pop()]:
            if b not in seen:
                seen.add(b)
                todo.append(b)
    return frozenset(seen)


def ancestors(g: MixedGraph, targets: Iterable[str]) -> FrozenSet[str]:
    """All vertices with a directed path into ``targets``, inclusive."""
    todo = list(targets)
    for t in todo:
        g.vertex(t)
    seen: Set[str] = set(todo)
    while todo:
        for a in g._in[todo.pop()]:
            if a not in seen:
                seen.add(a)
                todo.append(a)
    return frozenset(seen)


def mutilate(g: MixedGraph, spec: MutilationSpec) -> MixedGraph:
    """Remove incoming edges into overlined and outgoing from underlined vertices.

    Bidirected edges carry arrowheads, so those incident to an overlined
    vertex are removed too; underlining leaves them alone. Edges into proxies
    are definitional (the proxy mechanism is not manipulable) and survive any
    mutilation. Self-loops count as both incoming and outgoing.
    """
    for vid in sorted(spec.remove_incoming | spec.remove_outgoing):
        if g.kind(vid) is Kind.PROXY:
            raise UnknownVertex(f"proxy {vid!r} cannot be mutilated")
    if spec.empty:
        return g
    directed = []
    for a, b in g.directed:
        if g.kind(b) is Kind.PROXY:
            directed.append((a, b))
            continue
        if b in spec.remove_incoming or a in spec.remove_outgoing:
            continue
        directed.append((a, b))
    bidirected = [
        (a, b)
        for a, b in g.bidirected
        if a not in spec.remove_incoming and b not in spec.remove_incoming
    ]
    return g.with_edges(directed, bidirected)


# ---------------------------------------------------------------------------
# Primary paths
# ---------------------------------------------------------------------------


def primary_path(w: Walk) -> Walk:
    """Extract the path of a walk by the last-occurrence construction.

    Starting from the first vertex, repeatedly jump to the successor of the
    current vertex's last occurrence, inheriting that step's edge symbol.
    The result never repeats a vertex.
    """
    vs = w.vertices
    last = {}
    for i, v in enumerate(vs):
        last[v] = i
    out_vs = [vs[0]]
    out_es = []
    cur = vs[0]
    while last[cur] != len(vs) - 1:
        j = last[cur]
        out_es.append(w.edges[j])
        cur = vs[j + 1]
        out_vs.append(cur)
    return Walk(tuple(out_vs), tuple(out_es))


# ---------------------------------------------------------------------------
# Reachability engine
# ---------------------------------------------------------------------------


def _check_sets(g: MixedGraph, xs, ys, zs) -> Tuple[frozenset, frozenset, frozenset]:
    X, Y, Z = frozenset(xs), frozenset(ys), frozenset(zs)
    for vid in X | Y | Z:
        g.vertex(vid)
    if X & Y or X & Z or Y & Z:
        raise OverlappingSets("X, Y and Z must be pairwise disjoint")
    return X, Y, Z


def _moves(g: MixedGraph, v: str):
    """Oriented edge traversals leaving v: (symbol, mark@v, mark@target, target)."""
    for b in g._out[v]:
        yield FORWARD, TAIL, HEAD, b
        if b == v:
            yield BACKWARD, HEAD, TAIL, v
    for a in g._in[v]:
        if a != v:
            yield BACKWARD, HEAD, TAIL, a
    for u in g._bi[v]:
        yield BOTH, HEAD, HEAD, u


def d_separated(
    g: MixedGraph, X: Iterable[str], Y: Iterable[str], Z: Iterable[str]
) -> bool:
    """True iff every path between X and Y is blocked by Z."""
    return active_path(g, X, Y, Z) is None


def active_path(
    g: MixedGraph, X: Iterable[str], Y: Iterable[str], Z: Iterable[str]
) -> Optional[Walk]:
    """A shortest active path between X and Y given Z, or None if separated.

    Breadth-first search over (vertex, arrival-mark) states. A shortest
    active walk is necessarily simple, so the witness is a path.
    """
    Xs, Ys, Zs = _check_sets(g, X, Y, Z)
    open_collider = ancestors(g, Zs) if Zs else frozenset()

    prev = {}
    queue = deque()
    for x in sorted(Xs):
        for sym, _, mark_in, target in sorted(_moves(g, x)):
            state = (target, mark_in)
            if state not in prev:
                prev[state] = (None, x, sym)
                queue.append(state)

    while queue:
        state = queue.popleft()
        v, mark = state
        if v in Ys:
            return _reconstruct(prev, state)
        for sym, mark_out, mark_in, target in sorted(_moves(g, v)):
            if mark == HEAD and mark_out == HEAD:
                if v not in open_collider:
                    continue
            elif v in Zs:
                continue
            nxt = (target, mark_in)
            if nxt not in prev:
                prev[nxt] = (state, v, sym)
                queue.append(nxt)
    return None


def _reconstruct(prev, state) -> Walk:
    vs = [state[0]]
    es = []
    while True:
        parent, _, sym = prev[state]
        es.append(sym)
        if parent is None:
            vs.append(prev[state][1])
            break
        vs.append(parent[0])
        state = parent
    return Walk(tuple(reversed(vs)), tuple(reversed(es)))


# ---------------------------------------------------------------------------
# Exhaustive path oracle
# ---------------------------------------------------------------------------


def enumerate_paths(
    g: MixedGraph,
    a: str,
    b: str,
    max_len: int,
    *,
    allow_proxy_interior: bool = False,
) -> list:
    """All simple paths between two vertices, up to ``max_len`` edges.

    Deterministic lexicographic order over (vertex, symbol) sequences. Proxy
    vertices are kept off path interiors unless asked for; self-loops never
    occur on simple paths.
    """
    g.require(a, b)
    if a == b:
        raise OverlappingSets("endpoints must differ")
    out: list = []

    def extend(walk_vs, walk_es):
        v = walk_vs[-1]
        if v == b:
            out.append(Walk(tuple(walk_vs), tuple(walk_es)))
            return
        if len(walk_es) == max_len:
            return
        if v != a and g.kind(v) is Kind.PROXY and not allow_proxy_interior:
            return
        for sym, _, _, target in sorted(_moves(g, v), key=lambda m: (m[3], m[0])):
            if target in walk_vs:
                continue
            extend(walk_vs + [target], walk_es + [sym])

    extend([a], [])
    out.sort(key=lambda w: (len(w), w.vertices, w.edges))
    return out


def path_blocked(g: MixedGraph, path: Walk, Z: Iterable[str]) -> bool:
    """Blocking per the path definition; used as the cross-check oracle."""
    Zs = frozenset(Z)
    open_collider = ancestors(g, Zs) if Zs else frozenset()
    for i in path.interior():
        v = path.vertices[i]
        if path.is_collider(i):
            if v not in open_collider:
                return True
        elif v in Zs:
            return True
    return False


def d_separated_by_paths(
    g: MixedGraph, X: Iterable[str], Y: Iterable[str], Z: Iterable[str]
) -> bool:
    """Brute-force d-separation by enumerating every simple path."""
    Xs, Ys, Zs = _check_sets(g, X, Y, Z)
    limit = len(g.vertices)
    for x in sorted(Xs):
        for y in sorted(Ys):
            for p in enumerate_paths(g, x, y, limit, allow_proxy_interior=True):
                if not path_blocked(g, p, Zs):
                    return False
    return True
