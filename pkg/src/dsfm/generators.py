"""Benchmark instances: the chain lower-bound example, karate club, BA graphs, grids,
hypergraphs and small random mixed decompositions."""

from importlib import resources

import numpy as np

from .core import BlockVector, Decomposition
from .oracles import (ConcaveCardinality, DisjointEdges, EdgeCut, HyperedgeCut,
                      SubmodularError, TableFunction)

KARATE_N = 34
KARATE_R = 78


def gen_example31(n):
    """Chain of 2n unit edges on N = 2n+1 elements and the slow start y0.

    Block r (1-based) holds y_{r,r} = -y_{r,r+1} = r/n for r <= n and
    (2n+1-r)/n for r > n.  The optimum is y* = 0.
    """
    if n < 1:
        raise ValueError("n must be at least 1")
    comps = [EdgeCut(r, r + 1) for r in range(2 * n)]
    d = Decomposition(2 * n + 1, comps)
    r = np.arange(1, 2 * n + 1)
    a = np.where(r <= n, r, 2 * n + 1 - r) / n
    y0 = BlockVector(d.layout, np.column_stack([a, -a]).ravel())
    return d, y0


def read_edge_list(path=None):
    """0-based (u, v) pairs from a whitespace edge list with 1-based ids."""
    if path is None:
        text = resources.files("dsfm.data").joinpath("karate.txt").read_text()
    else:
        with open(path) as fh:
            text = fh.read()
    edges = []
    for line in text.splitlines():
        line = line.split("#", 1)[0].strip()
        if line:
            u, v = line.split()[:2]
            edges.append((int(u) - 1, int(v) - 1))
    return edges


def gen_karate(edge_list=None, tau=0.1):
    """Karate club cut problem: x0 = +1 on member 1, -1 on member 34."""
    edges = read_edge_list(edge_list) if edge_list is None or isinstance(edge_list, str) \
        else list(edge_list)
    nodes = {v for e in edges for v in e}
    if len(edges) != KARATE_R or len(nodes) != KARATE_N:
        raise SubmodularError(
            f"karate graph needs {KARATE_N} vertices and {KARATE_R} edges, "
            f"got {len(nodes)} and {len(edges)}")
    x0 = np.zeros(KARATE_N)
    x0[0], x0[KARATE_N - 1] = 1.0, -1.0
    return Decomposition(KARATE_N, [EdgeCut(u, v) for u, v in edges], x0, tau)


def ba_edges(N, rng):
    """Preferential attachment from the seed edge (0, 1), one edge per new vertex."""
    if N < 2:
        raise ValueError("BA graph needs N >= 2")
    edges = [(0, 1)]
    ends = [0, 1]
    for v in range(2, N):
        target = ends[int(rng.integers(len(ends)))]
        edges.append((target, v))
        ends.extend((target, v))
    return edges


def gen_ba(N, seed, tau=1.0):
    """BA graph of unit edge cuts with iid standard Gaussian x0."""
    rng = np.random.default_rng(seed)
    edges = ba_edges(N, rng)
    x0 = rng.standard_normal(N)
    return Decomposition(N, [EdgeCut(u, v) for u, v in edges], x0, tau)


def min_cut_value(d):
    """Exact min of tau*cut(S) - x0(S) for edge-cut decompositions (s-t max flow)."""
    import networkx as nx

    g = nx.DiGraph()
    s, t = "s", "t"
    g.add_nodes_from([s, t, *range(d.n)])
    for f in d.components:
        if not isinstance(f, EdgeCut):
            raise SubmodularError("min_cut_value handles edge cuts only")
        u, v = (int(e) for e in f.support)
        for a, b in ((u, v), (v, u)):
            cap = g.edges[a, b]["capacity"] if g.has_edge(a, b) else 0.0
            g.add_edge(a, b, capacity=cap + d.tau * f.weight)
    for v, x in enumerate(d.x0):
        if x > 0:
            g.add_edge(s, v, capacity=float(x))
        elif x < 0:
            g.add_edge(v, t, capacity=float(-x))
    cut, (side, _) = nx.minimum_cut(g, s, t)
    positive = float(d.x0[d.x0 > 0].sum())
    members = sorted(v for v in side if v != s)
    return cut - positive, members


def grid_index(i, j, width):
    return i * width + j


def gen_grid(pixels, regions=(), x0=None, tau=1.0):
    """4-neighbour grid over an (H, W) or (H, W, C) image scaled to [0, 1].

    Horizontal edges between columns j and j+1 form one component, as do
    vertical edges between rows i and i+1; each is a vertex-disjoint union
    of edges, giving (W-1) + (H-1) pairwise components.  Edge weights are
    exp(-||v_i - v_j||^2).  Every region (list of 0-based pixel ids) adds
    F(S) = |S|(|S_r| - |S|).
    """
    img = np.asarray(pixels, dtype=float)
    if img.ndim == 2:
        img = img[:, :, None]
    H, W = img.shape[:2]
    if H < 2 or W < 2:
        raise ValueError("grid needs at least 2 x 2 pixels")
    flat = img.reshape(H * W, -1)

    def weight(a, b):
        diff = flat[a] - flat[b]
        return float(np.exp(-diff @ diff))

    comps = []
    for j in range(W - 1):
        pairs = [(grid_index(i, j, W), grid_index(i, j + 1, W)) for i in range(H)]
        comps.append(DisjointEdges(pairs, [weight(a, b) for a, b in pairs]))
    for i in range(H - 1):
        pairs = [(grid_index(i, j, W), grid_index(i + 1, j, W)) for j in range(W)]
        comps.append(DisjointEdges(pairs, [weight(a, b) for a, b in pairs]))
    for reg in regions:
        comps.append(ConcaveCardinality(reg))
    return Decomposition(H * W, comps, x0, tau)


def gen_hypergraph(n, hyperedges, weights=None, x0=None, tau=1.0):
    """All-or-nothing hyperedge cuts, w * [0 < |S & e| < |e|]."""
    weights = np.ones(len(hyperedges)) if weights is None else weights
    comps = [HyperedgeCut(e, w) for e, w in zip(hyperedges, weights)]
    return Decomposition(n, comps, x0, tau)


def random_table(size, rng, scale=4):
    """Integer-valued submodular table on ``size`` elements.

    Nonnegative combination of concave functions of |S & T| for random
    subsets T, normalized to F(empty) = 0.
    """
    masks = np.arange(1 << size)
    bits = (masks[:, None] >> np.arange(size)) & 1
    values = np.zeros(1 << size)
    for _ in range(rng.integers(1, 4)):
        t = rng.random(size) < 0.7
        if not t.any():
            t[rng.integers(size)] = True
        k = bits[:, t].sum(axis=1)
        m = int(t.sum())
        kind = rng.integers(3)
        if kind == 0:
            h = k * (m - k)
        elif kind == 1:
            h = np.minimum(k, rng.integers(1, m + 1))
        else:
            h = ((k > 0) & (k < m)).astype(float)
        values += rng.integers(1, scale + 1) * h
    return values - values[0]


def random_mixed(N, rng, R=None, max_support=5):
    """Small mixed decomposition with integer data (exact discrete optima).

    Every element gets at least one component; x0 is integer-valued.
    """
    R = int(rng.integers(3, 2 * N + 1)) if R is None else R
    comps = []
    for r in range(R):
        kind = rng.integers(4)
        size = 2 if kind == 0 else int(rng.integers(2, min(max_support, N) + 1))
        sup = np.sort(rng.choice(N, size=size, replace=False))
        w = float(rng.integers(1, 4))
        if kind == 0:
            comps.append(EdgeCut(int(sup[0]), int(sup[1]), w))
        elif kind == 1:
            comps.append(HyperedgeCut(sup, w))
        elif kind == 2:
            comps.append(ConcaveCardinality(sup, w))
        else:
            comps.append(TableFunction(sup, random_table(size, rng)))
    covered = set(int(e) for f in comps for e in f.support)
    for e in range(N):
        if e not in covered:
            other = int((e + 1 + rng.integers(N - 1)) % N)
            comps.append(EdgeCut(min(e, other), max(e, other), float(rng.integers(1, 3))))
    x0 = rng.integers(-6, 7, size=N).astype(float)
    return Decomposition(N, comps, x0, 1.0)
