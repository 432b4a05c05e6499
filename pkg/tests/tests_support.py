"""Shared random-graph and random-walk generators for the property sweeps."""

from mcdmg import GraphClass, Kind, MixedGraph, Vertex, Walk


def make_graph(n, directed, bidirected):
    names = [f"V{i}" for i in range(n)]
    return MixedGraph.build(
        "rnd",
        GraphClass.CDMG,
        [Vertex(v, Kind.CLUSTER) for v in names],
        directed=directed,
        bidirected=bidirected,
        clustering=None,
        auto_proxies=False,
    )


def random_graph(rng, n):
    names = [f"V{i}" for i in range(n)]
    directed = [(a, b) for a in names for b in names if rng.random() < (2.2 / n)]
    bidirected = [
        (a, b)
        for i, a in enumerate(names)
        for b in names[i + 1 :]
        if rng.random() < (1.2 / n)
    ]
    return make_graph(n, directed, bidirected)


def random_query(rng, g):
    vs = sorted(v.id for v in g.vertices)
    rng.shuffle(vs)
    x, y = vs[0], vs[1]
    z = {v for v in vs[2:] if rng.random() < 0.4}
    return {x}, {y}, z


def all_small_graphs(n):
    """Every mixed graph on n cluster vertices: all directed-edge subsets
    (self-loops included) crossed with all bidirected-edge subsets."""
    names = [f"V{i}" for i in range(n)]
    dir_pairs = [(a, b) for a in names for b in names]
    bi_pairs = [(a, b) for i, a in enumerate(names) for b in names[i + 1 :]]
    for dmask in range(1 << len(dir_pairs)):
        directed = [e for i, e in enumerate(dir_pairs) if dmask >> i & 1]
        for bmask in range(1 << len(bi_pairs)):
            bidirected = [e for i, e in enumerate(bi_pairs) if bmask >> i & 1]
            yield make_graph(n, directed, bidirected)


def random_walk(rng, g, max_len=8):
    moves = {}
    for v in (x.id for x in g.vertices):
        opts = []
        for b in g.children(v):
            opts.append(("->", b))
            if b == v:
                opts.append(("<-", v))
        for a in g.parents(v):
            if a != v:
                opts.append(("<-", a))
        for u in g.spouses(v):
            opts.append(("<->", u))
        moves[v] = sorted(opts)
    start = rng.choice(sorted(x.id for x in g.vertices))
    vs, es = [start], []
    for _ in range(rng.randint(1, max_len)):
        opts = moves[vs[-1]]
        if not opts:
            break
        sym, nxt = rng.choice(opts)
        es.append(sym)
        vs.append(nxt)
    if len(vs) == 1:
        return None
    return Walk(tuple(vs), tuple(es))
