import numpy as np
import pytest

from dsfm.core import (BlockVector, Decomposition, DimensionError, apply_A,
                       block_skewed_norm, compute_incidence, detect_incidence, induced,
                       skewed_norm, theta_one_inf)
from dsfm.generators import gen_example31, random_mixed, random_table
from dsfm.oracles import (ConcaveCardinality, EdgeCut, HyperedgeCut, SubmodularError,
                          TableFunction)


def test_incidence_path():
    d = Decomposition(3, [EdgeCut(0, 1), EdgeCut(1, 2)])
    p = compute_incidence(d)
    np.testing.assert_array_equal(p.mu, [1, 2, 1])
    assert p.mu_l1 == 4
    assert p.element_to_components == ((0,), (0, 1), (1,))


def test_incidence_full_support():
    d = Decomposition(5, [ConcaveCardinality(range(5))])
    np.testing.assert_array_equal(d.profile.mu, np.ones(5))
    assert d.profile.mu_l1 == 5


def test_incidence_example31():
    d, _ = gen_example31(3)
    assert (d.n, d.R) == (7, 6)
    np.testing.assert_array_equal(d.profile.mu, [1, 2, 2, 2, 2, 2, 1])
    assert d.profile.mu_l1 == 12


def test_isolated_elements_reported():
    d = Decomposition(4, [EdgeCut(0, 1)])
    np.testing.assert_array_equal(d.profile.isolated, [2, 3])


def test_detect_incidence_examples():
    e = EdgeCut(1, 2)
    assert detect_incidence(e, 1, n=4)
    assert not detect_incidence(e, 3, n=4)
    r = ConcaveCardinality([0, 1, 2])
    assert detect_incidence(r, 1, n=3)
    assert r.evaluate([1]) == 2.0


def test_detect_agrees_with_declared_supports(rng):
    """Random tables on their exact supports: every element matters."""
    for _ in range(20):
        size = int(rng.integers(2, 6))
        sup = np.sort(rng.choice(8, size, replace=False))
        vals = random_table(size, rng)
        f = TableFunction(sup, vals)
        true_support = [int(sup[j]) for j in range(size)
                        if any(vals[m | (1 << j)] != vals[m] for m in range(1 << size))]
        for i in range(8):
            assert detect_incidence(f, i, n=8) == (i in true_support)


def test_apply_A_examples():
    d, y0 = gen_example31(3)
    np.testing.assert_allclose(apply_A(y0), [1 / 3, 1 / 3, 1 / 3, 0, -1 / 3, -1 / 3, -1 / 3])
    assert np.all(apply_A(BlockVector(d.layout)) == 0)
    y = BlockVector(d.layout)
    y.set_block(2, [0.5, -0.5])
    np.testing.assert_array_equal(apply_A(y), [0, 0, 0.5, -0.5, 0, 0, 0])


def test_apply_A_linear(rng):
    d = random_mixed(9, rng)
    a = BlockVector(d.layout, rng.normal(size=d.layout.total))
    b = BlockVector(d.layout, rng.normal(size=d.layout.total))
    s, t = 1.7, -0.3
    lhs = apply_A(BlockVector(d.layout, s * a.data + t * b.data))
    rhs = s * apply_A(a) + t * apply_A(b)
    np.testing.assert_allclose(lhs, rhs, rtol=1e-12, atol=1e-12)


def test_block_vector_shape_checks():
    d, _ = gen_example31(2)
    with pytest.raises(DimensionError):
        BlockVector(d.layout, np.zeros(3))
    with pytest.raises(DimensionError):
        BlockVector.from_blocks(d.layout, [np.zeros(2)] * 3)


def test_skewed_norm():
    assert skewed_norm([1, 1], [1, 1]) == pytest.approx(np.sqrt(2))
    assert skewed_norm([1, 2], [4, 1]) == pytest.approx(2 * np.sqrt(2))
    assert skewed_norm([0, 0], [3, 5]) == 0.0
    z = np.array([0.3, -1.2, 4.0])
    assert skewed_norm(z, np.ones(3)) == np.sqrt(np.sum(z * z))
    with pytest.raises(DimensionError):
        skewed_norm([1, 2], [1, 2, 3])


def test_block_skewed_norm():
    d = Decomposition(3, [EdgeCut(0, 1), EdgeCut(1, 2)])
    y = BlockVector(d.layout, [1.0, -1.0, 2.0, -2.0])
    th = BlockVector(d.layout, [1.0, 2.0, 1.0, 1.0])
    assert block_skewed_norm(y, th) == pytest.approx(np.sqrt(1 + 2 + 4 + 4))


def test_theta_one_inf_examples():
    d = Decomposition(3, [EdgeCut(0, 1), EdgeCut(1, 2)])
    theta = BlockVector(d.layout, [1.0, 5.0, 2.0, 1.0])
    assert theta_one_inf(theta) == 7.0
    assert theta_one_inf(induced(d.profile.mu, d.layout)) == d.profile.mu_l1
    d2 = Decomposition(5, [EdgeCut(0, 1), EdgeCut(1, 2)])
    assert theta_one_inf(BlockVector(d2.layout, np.ones(4))) == 3.0


def test_induced_norm_identity(rng):
    for _ in range(10):
        d = random_mixed(int(rng.integers(4, 12)), rng)
        w = rng.uniform(0.1, 5.0, d.n)
        assert theta_one_inf(induced(w, d.layout)) == pytest.approx(w.sum())


def test_decomposition_validation():
    with pytest.raises(SubmodularError):
        Decomposition(2, [EdgeCut(0, 2)])
    with pytest.raises(SubmodularError):
        Decomposition(2, [EdgeCut(0, 1)], tau=0.0)
    with pytest.raises(DimensionError):
        Decomposition(2, [EdgeCut(0, 1)], x0=[1.0])


def test_normalized_scales_oracles():
    d = Decomposition(3, [HyperedgeCut([0, 1, 2], 2.0)], [1.0, 0, 0], tau=0.25)
    dn = d.normalized()
    assert dn.tau == 1.0
    assert dn.components[0].evaluate([0]) == 0.5
    assert d.objective([0]) == dn.objective([0]) == -0.5
