"""Submodular component families and their exact oracles.

Every component lives on a sorted support ``S_r`` (0-based element ids).
Local vectors are indexed by position inside the support, so coordinate
``j`` of a local vector refers to element ``support[j]``.
"""

from itertools import combinations

import numpy as np

TABLE_MAX_SUPPORT = 12
EXHAUSTIVE_MAX_N = 20
TABULATE_MAX_SUPPORT = 20


class SubmodularError(ValueError):
    pass


def greedy_order(x):
    """Indices sorting ``x`` descending, equal values by ascending position."""
    return np.argsort(-np.asarray(x, dtype=float), kind="stable")


class SubmodularComponent:
    """Base class for a normalized submodular function F_r on its support."""

    family = "abstract"

    def __init__(self, support):
        support = np.unique(np.asarray(support, dtype=np.int64))
        if support.size == 0:
            raise SubmodularError("component support must be nonempty")
        if support[0] < 0:
            raise SubmodularError("element ids must be nonnegative")
        self.support = support
        self.support.setflags(write=False)

    @property
    def size(self):
        return int(self.support.size)

    def local_mask(self, elements):
        """Boolean membership vector over the support for an element set."""
        elements = np.fromiter((int(e) for e in elements), dtype=np.int64)
        return np.isin(self.support, elements)

    def evaluate(self, elements):
        """F_r(s ∩ S_r) for an arbitrary set of (0-based) elements."""
        return self.evaluate_local(self.local_mask(elements))

    def evaluate_local(self, member):
        raise NotImplementedError

    def greedy(self, x):
        """Edmonds greedy vertex maximizing <y, x> over the base polytope."""
        raise NotImplementedError

    def lovasz(self, x):
        x = np.asarray(x, dtype=float)
        return float(self.greedy(x) @ x)

    def scaled(self, factor):
        raise NotImplementedError

    def cardinality_values(self):
        """h(0..n) if F(S) = h(|S|), otherwise None."""
        return None

    def table(self):
        """All 2^n values indexed by local bitmask (bit j <-> support[j])."""
        n = self.size
        if n > TABULATE_MAX_SUPPORT:
            raise SubmodularError(f"support of size {n} too large to tabulate")
        h = self.cardinality_values()
        masks = np.arange(1 << n, dtype=np.int64)
        if h is not None:
            return np.asarray(h, dtype=float)[_popcount(masks, n)]
        bits = ((masks[:, None] >> np.arange(n)) & 1).astype(bool)
        return np.array([self.evaluate_local(b) for b in bits])

    def full_value(self):
        return self.evaluate_local(np.ones(self.size, dtype=bool))

    def __repr__(self):
        return f"{type(self).__name__}(support={self.support.tolist()})"



def _popcount(masks, nbits):
    counts = np.zeros(masks.shape, dtype=np.int64)
    for j in range(nbits):
        counts += (masks >> j) & 1
    return counts


class CardinalityComponent(SubmodularComponent):
    """F(S) = h(|S ∩ S_r|) with h concave and h(0) = 0."""

    def cardinality_values(self):
        raise NotImplementedError

    def evaluate_local(self, member):
        return float(self._h[int(np.count_nonzero(member))])

    def greedy(self, x):
        x = np.asarray(x, dtype=float)
        y = np.empty(self.size)
        y[greedy_order(x)] = np.diff(self._h)
        return y


class EdgeCut(CardinalityComponent):
    """weight * [exactly one endpoint in S]."""

    family = "edge_cut"

    def __init__(self, u, v, weight=1.0):
        if u == v:
            raise SubmodularError("edge endpoints must differ")
        super().__init__([u, v])
        if not weight > 0:
            raise SubmodularError("edge weight must be positive")
        self.weight = float(weight)
        self._h = np.array([0.0, self.weight, 0.0])

    def cardinality_values(self):
        return self._h.copy()

    def evaluate_local(self, member):
        return self.weight if bool(member[0]) != bool(member[1]) else 0.0

    def greedy(self, x):
        c = self.weight
        return np.array([c, -c]) if x[0] >= x[1] else np.array([-c, c])

    def scaled(self, factor):
        return EdgeCut(*self.support, weight=self.weight * factor)


class HyperedgeCut(CardinalityComponent):
    """weight * [S splits S_r] (all-or-nothing hyperedge cut)."""

    family = "hyperedge_cut"

    def __init__(self, support, weight=1.0):
        super().__init__(support)
        if self.size < 2:
            raise SubmodularError("hyperedge needs at least two vertices")
        if not weight > 0:
            raise SubmodularError("hyperedge weight must be positive")
        self.weight = float(weight)
        h = np.full(self.size + 1, self.weight)
        h[0] = h[-1] = 0.0
        self._h = h

    def cardinality_values(self):
        return self._h.copy()

    def scaled(self, factor):
        return HyperedgeCut(self.support, weight=self.weight * factor)


class ConcaveCardinality(CardinalityComponent):
    """weight * |S ∩ S_r| * (|S_r| - |S ∩ S_r|), the region clique potential."""

    family = "concave_cardinality"

    def __init__(self, support, weight=1.0):
        super().__init__(support)
        if not weight > 0:
            raise SubmodularError("region weight must be positive")
        self.weight = float(weight)
        k = np.arange(self.size + 1, dtype=float)
        self._h = self.weight * k * (self.size - k)

    def cardinality_values(self):
        return self._h.copy()

    def scaled(self, factor):
        return ConcaveCardinality(self.support, weight=self.weight * factor)


class TableFunction(SubmodularComponent):
    """Explicit value table over all subsets of a small support.

    ``values[m]`` is F of the subset whose local bitmask is ``m``.
    Submodularity is verified exhaustively at construction.
    """

    family = "table"

    def __init__(self, support, values, weight=1.0, check=True):
        super().__init__(support)
        if self.size != len(support):
            raise SubmodularError("table support has duplicate elements")
        if self.size > TABLE_MAX_SUPPORT:
            raise SubmodularError(
                f"table support limited to {TABLE_MAX_SUPPORT} elements")
        # keep caller's element order for the table bits, then reorder to sorted
        order = np.argsort(np.asarray(support, dtype=np.int64), kind="stable")
        values = np.asarray(values, dtype=float)
        if values.shape != (1 << self.size,):
            raise SubmodularError(
                f"table needs {1 << self.size} values, got {values.size}")
        if not weight > 0:
            raise SubmodularError("table weight must be positive")
        if np.any(order != np.arange(self.size)):
            values = _permute_table(values, order)
        self.weight = float(weight)
        self.values = weight * values
        self.values.setflags(write=False)
        if abs(self.values[0]) > 1e-12:
            raise SubmodularError("table function must satisfy F(empty) = 0")
        if check and not check_submodular(self):
            raise SubmodularError("table function is not submodular")

    def evaluate_local(self, member):
        mask = int(np.dot(np.asarray(member, dtype=np.int64),
                          1 << np.arange(self.size)))
        return float(self.values[mask])

    def greedy(self, x):
        order = greedy_order(x)
        masks = np.cumsum(1 << order)
        vals = self.values[masks]
        y = np.empty(self.size)
        y[order] = np.diff(vals, prepend=0.0)
        return y

    def table(self):
        return np.array(self.values)

    def scaled(self, factor):
        return TableFunction(self.support, self.values * factor, check=False)


def _permute_table(values, order):
    """Re-index a table whose bit j referred to ``support_in[j]``.

    ``order`` lists, for each sorted position p, the original bit it came from.
    """
    n = order.size
    masks = np.arange(1 << n, dtype=np.int64)
    src = np.zeros_like(masks)
    for p, j in enumerate(order):
        src |= ((masks >> p) & 1) << j
    return values[src]


class DisjointEdges(SubmodularComponent):
    """Sum of edge cuts over vertex-disjoint pairs (a grid row or column).

    The base polytope is the product of the per-edge segments, so every
    oracle factorizes over the pairs.
    """

    family = "disjoint_edges"

    def __init__(self, pairs, weights):
        pairs = np.asarray(pairs, dtype=np.int64).reshape(-1, 2)
        weights = np.asarray(weights, dtype=float).reshape(-1)
        if pairs.shape[0] != weights.size or pairs.shape[0] == 0:
            raise SubmodularError("need one positive weight per pair")
        if np.any(weights <= 0):
            raise SubmodularError("edge weights must be positive")
        flat = pairs.reshape(-1)
        if np.unique(flat).size != flat.size:
            raise SubmodularError("pairs must be vertex-disjoint")
        super().__init__(flat)
        self.pairs = np.sort(pairs, axis=1)
        self.weights = weights
        self.local_pairs = np.searchsorted(self.support, self.pairs)

    def edges(self):
        return [EdgeCut(u, v, c) for (u, v), c in zip(self.pairs, self.weights)]

    def evaluate_local(self, member):
        member = np.asarray(member, dtype=bool)
        a, b = self.local_pairs[:, 0], self.local_pairs[:, 1]
        return float(self.weights[member[a] != member[b]].sum())

    def greedy(self, x):
        x = np.asarray(x, dtype=float)
        a, b = self.local_pairs[:, 0], self.local_pairs[:, 1]
        sign = np.where(x[a] >= x[b], 1.0, -1.0)
        y = np.empty(self.size)
        y[a] = sign * self.weights
        y[b] = -sign * self.weights
        return y

    def scaled(self, factor):
        return DisjointEdges(self.pairs, self.weights * factor)


def evaluate(f, elements):
    return f.evaluate(elements)


def greedy_base_vertex(f, x):
    return f.greedy(np.asarray(x, dtype=float))


def lovasz_value(f, x):
    return f.lovasz(x)


def check_submodular(f, tol=1e-12):
    """Exhaustive submodularity check for a support of at most 12 elements.

    Uses the pairwise diminishing-returns form
    F(S+i) + F(S+j) >= F(S+i+j) + F(S) for all S and i, j not in S, which is
    equivalent to the inequality over all pairs of subsets.
    """
    n = f.size
    if n > TABLE_MAX_SUPPORT:
        raise SubmodularError(f"support of size {n} exceeds {TABLE_MAX_SUPPORT}")
    values = f.values if isinstance(f, TableFunction) else f.table()
    masks = np.arange(1 << n, dtype=np.int64)
    scale = max(1.0, float(np.max(np.abs(values))))
    for i, j in combinations(range(n), 2):
        bi, bj = 1 << i, 1 << j
        s = masks[(masks & (bi | bj)) == 0]
        lhs = values[s | bi] + values[s | bj]
        rhs = values[s | bi | bj] + values[s]
        if np.any(lhs < rhs - tol * scale):
            return False
    return True


def exhaustive_dsfm(d):
    """Exact minimum of tau * sum_r F_r(S) - x0(S) over all subsets.

    Returns ``(value, minimizer)`` where the minimizer is a sorted tuple of
    0-based elements; ties go to the lexicographically smallest tuple.
    """
    n = d.n
    if n > EXHAUSTIVE_MAX_N:
        raise SubmodularError(f"exhaustive search limited to N <= {EXHAUSTIVE_MAX_N}")
    masks = np.arange(1 << n, dtype=np.int64)
    total = np.zeros(masks.size)
    for f in d.components:
        local = np.zeros_like(masks)
        for j, e in enumerate(f.support):
            local |= ((masks >> int(e)) & 1) << j
        total += d.tau * f.table()[local]
    x0 = np.asarray(d.x0, dtype=float)
    for e in range(n):
        if x0[e] != 0.0:
            total -= x0[e] * ((masks >> e) & 1)
    best = total.min()
    tol = 1e-9 * max(1.0, abs(best))
    candidates = masks[total <= best + tol]
    sets = [tuple(e for e in range(n) if (m >> e) & 1) for m in candidates]
    winner = min(sets)
    winner_mask = sum(1 << e for e in winner)
    return float(total[winner_mask]), winner
