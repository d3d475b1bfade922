from itertools import combinations, permutations

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from dsfm.core import Decomposition
from dsfm.generators import gen_example31, random_table
from dsfm.oracles import (ConcaveCardinality, DisjointEdges, EdgeCut, HyperedgeCut,
                          SubmodularError, TableFunction, check_submodular, evaluate,
                          exhaustive_dsfm, greedy_base_vertex, lovasz_value)


def all_subsets(elems):
    for k in range(len(elems) + 1):
        yield from combinations(elems, k)


def brute_vertices(f):
    """Greedy vertices for every ordering, computed from evaluate alone."""
    sup = list(f.support)
    out = []
    for perm in permutations(range(len(sup))):
        y = np.zeros(len(sup))
        prev = 0.0
        for j in range(len(perm)):
            cur = f.evaluate([sup[p] for p in perm[:j + 1]])
            y[perm[j]] = cur - prev
            prev = cur
        out.append(y)
    return np.array(out)


def families(rng):
    yield EdgeCut(2, 5, 1.5)
    yield HyperedgeCut([0, 3, 4, 7], 2.0)
    yield ConcaveCardinality([1, 2, 4, 6, 9])
    yield TableFunction([0, 2, 5, 6], random_table(4, rng))
    yield DisjointEdges([(0, 1), (4, 3)], [1.0, 2.5])


def test_evaluate_edge_values():
    e = EdgeCut(3, 4)
    assert evaluate(e, [3]) == 1.0
    assert evaluate(e, [4]) == 1.0
    assert evaluate(e, [3, 4]) == 0.0
    assert evaluate(e, []) == 0.0


def test_concave_cardinality_value():
    f = ConcaveCardinality([0, 1, 2, 3])
    assert evaluate(f, [1, 3]) == 4.0
    assert evaluate(f, [0, 1, 2, 3]) == 0.0


def test_hyperedge_all_or_nothing():
    f = HyperedgeCut([1, 2, 3], 2.0)
    assert evaluate(f, [1]) == 2.0
    assert evaluate(f, [1, 2, 3]) == 0.0
    assert evaluate(f, [0, 4]) == 0.0


def test_evaluate_ignores_outside_support(rng):
    for f in families(rng):
        sup = set(f.support.tolist())
        for _ in range(50):
            s = np.flatnonzero(rng.random(10) < 0.5)
            assert f.evaluate(s) == f.evaluate([e for e in s if e in sup])


def test_greedy_edge_example():
    y = greedy_base_vertex(EdgeCut(0, 1), np.array([0.5, 0.2]))
    np.testing.assert_array_equal(y, [1.0, -1.0])
    assert lovasz_value(EdgeCut(0, 1), np.array([0.5, 0.2])) == pytest.approx(0.3)


def test_greedy_concave_example():
    y = greedy_base_vertex(ConcaveCardinality([0, 1, 2]), np.array([3.0, 2.0, 1.0]))
    np.testing.assert_array_equal(y, [2.0, 0.0, -2.0])


def test_greedy_tie_break_by_index():
    np.testing.assert_array_equal(EdgeCut(0, 1).greedy(np.zeros(2)), [1.0, -1.0])
    y = ConcaveCardinality([0, 1, 2]).greedy(np.zeros(3))
    np.testing.assert_array_equal(y, [2.0, 0.0, -2.0])


def test_greedy_vertex_is_feasible_and_optimal(rng):
    for f in families(rng):
        verts = brute_vertices(f)
        sup = list(f.support)
        for _ in range(20):
            x = rng.normal(size=f.size)
            y = f.greedy(x)
            for s in all_subsets(range(f.size)):
                assert y[list(s)].sum() <= f.evaluate([sup[i] for i in s]) + 1e-12
            assert y.sum() == pytest.approx(f.full_value())
            assert y @ x == pytest.approx((verts @ x).max())


def test_lovasz_extends_set_function(rng):
    for f in families(rng):
        sup = list(f.support)
        for s in all_subsets(range(f.size)):
            ind = np.zeros(f.size)
            ind[list(s)] = 1.0
            assert f.lovasz(ind) == f.evaluate([sup[i] for i in s])


@settings(max_examples=50, deadline=None)
@given(st.lists(st.floats(-5, 5), min_size=5, max_size=5), st.floats(0, 10))
def test_lovasz_positive_homogeneous(x, lam):
    f = ConcaveCardinality([0, 1, 2, 3, 4], 1.5)
    x = np.array(x)
    assert f.lovasz(lam * x) == pytest.approx(lam * f.lovasz(x), abs=1e-9)


def test_check_submodular():
    assert check_submodular(EdgeCut(0, 1))
    for n in range(2, 13):
        assert check_submodular(ConcaveCardinality(range(n)))
    k = np.array([bin(m).count("1") for m in range(8)], dtype=float)
    # -|S|^2 is concave in |S|, hence submodular; +|S|^2 is the violating case
    assert check_submodular(TableFunction([0, 1, 2], -k * k))
    bad = TableFunction([0, 1, 2], k * k, check=False)
    assert not check_submodular(bad)
    with pytest.raises(SubmodularError):
        TableFunction([0, 1, 2], k * k)


def test_check_submodular_matches_pair_definition(rng):
    """Pairwise diminishing returns against the full F(A)+F(B) >= ... test."""
    for trial in range(30):
        vals = rng.integers(-3, 4, size=16).astype(float)
        vals[0] = 0.0
        f = TableFunction([0, 1, 2, 3], vals, check=False)
        full = all(vals[a] + vals[b] >= vals[a & b] + vals[a | b] - 1e-12
                   for a in range(16) for b in range(16))
        assert check_submodular(f) == full


def test_table_requires_normalized():
    with pytest.raises(SubmodularError):
        TableFunction([0, 1], [1.0, 2.0, 2.0, 1.0])


def test_table_bit_order_follows_listed_ids():
    # bit 0 <-> element 5, bit 1 <-> element 2
    f = TableFunction([5, 2], [0.0, 1.0, 3.0, 2.0])
    assert f.evaluate([5]) == 1.0
    assert f.evaluate([2]) == 3.0
    assert f.evaluate([2, 5]) == 2.0


def test_disjoint_edges_rejects_shared_vertex():
    with pytest.raises(SubmodularError):
        DisjointEdges([(0, 1), (1, 2)], [1.0, 1.0])


def test_exhaustive_small_cases():
    d = Decomposition(2, [EdgeCut(0, 1)])
    assert exhaustive_dsfm(d) == (0.0, ())
    d31, _ = gen_example31(3)
    assert exhaustive_dsfm(d31) == (0.0, ())


def test_exhaustive_with_offset_and_tau():
    d = Decomposition(3, [EdgeCut(0, 1), EdgeCut(1, 2)], [3.0, 0.0, -1.0], tau=0.5)
    best = min((d.objective(s), s) for s in all_subsets(range(3)))
    value, s = exhaustive_dsfm(d)
    assert value == best[0]
    assert d.objective(s) == value


def test_exhaustive_rejects_large():
    d = Decomposition(21, [EdgeCut(i, i + 1) for i in range(20)])
    with pytest.raises(SubmodularError):
        exhaustive_dsfm(d)
