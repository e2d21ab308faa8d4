import math

import numpy as np
import pytest

from oracles import brute_force_leja, monomial_moment
from sgcolloc.distributions import BoundedDistribution
from sgcolloc.rules import (UnivariateRule, cc_nodes, cc_weights, cc_weights_from_moments, chebyshev_moments,
                            gauss_rule, leja_extend, leja_weights, scale_nodes)

U = BoundedDistribution.uniform
B = BoundedDistribution.beta_dist


@pytest.mark.parametrize("level, expected", [
    (0, [0.0]),
    (1, [-1.0, 0.0, 1.0]),
    (2, [-1.0, -math.sqrt(2) / 2, 0.0, math.sqrt(2) / 2, 1.0]),
])
def test_cc_nodes(level, expected):
    np.testing.assert_allclose(cc_nodes(level), expected, atol=1e-15)


def test_cc_nodes_sorted_symmetric_nested():
    for lev in range(1, 8):
        x = cc_nodes(lev)
        assert np.all(np.diff(x) > 0)
        np.testing.assert_array_equal(x, -x[::-1])
        assert x[0] == -1.0 and x[-1] == 1.0
        assert set(cc_nodes(lev - 1).tolist()) <= set(x.tolist())


@pytest.mark.parametrize("nodes, a, b, expected", [
    ([-1, 0, 1], 27, 33, [27, 30, 33]),
    ([0], 2.16, 2.64, [2.4]),
    ([-1, 1], -1, 1, [-1, 1]),
])
def test_scale_nodes(nodes, a, b, expected):
    np.testing.assert_allclose(scale_nodes(nodes, a, b), expected, rtol=1e-15)


def test_chebyshev_moments_uniform():
    g = chebyshev_moments(U(-1, 1), 6)
    np.testing.assert_allclose(g, [1, 0, -1 / 3, 0, -1 / 15, 0], atol=1e-15)


def test_chebyshev_moments_beta_against_oracle():
    d = B(3, 6, -1, 1)
    g = chebyshev_moments(d, 9)
    x, w = np.polynomial.legendre.leggauss(200)
    dens = d.pdf(x)
    for k in range(9):
        ref = np.sum(w * dens * np.cos(k * np.arccos(x)))
        assert g[k] == pytest.approx(ref, abs=1e-14)


def test_cc_level1_uniform_weights():
    np.testing.assert_allclose(cc_weights(1, U(-1, 1)).weights, [1 / 6, 2 / 3, 1 / 6], atol=1e-15)


@pytest.mark.parametrize("dist", [U(-1, 1), B(3, 6, 0, 1), B(2, 5, 27, 33)])
def test_cc_level0_weight_is_one(dist):
    q = cc_weights(0, dist)
    np.testing.assert_array_equal(q.weights, [1.0])
    assert q.nodes[0] == pytest.approx(0.5 * (dist.a + dist.b))


def test_cc_level2_beta_moments():
    d = B(3, 6, -1, 1)
    q = cc_weights(2, d)
    assert q.weights.sum() == pytest.approx(1.0, abs=1e-14)
    assert q.weights @ q.nodes == pytest.approx(d.mean(), abs=1e-14)
    assert q.weights @ q.nodes**2 == pytest.approx(d.raw_moment(2), abs=1e-14)


@pytest.mark.parametrize("dist", [U(-1, 1), U(27, 33), B(3, 6, -1, 1), B(3, 6, 27, 33), B(0.5, 0.7, 0, 1)])
def test_cc_two_weight_paths_agree(dist):
    for lev in range(7):
        np.testing.assert_allclose(cc_weights(lev, dist).weights, cc_weights_from_moments(lev, dist), atol=1e-10)


def test_leja_uniform_start():
    seq = leja_extend((), U(-1, 1), 4)
    assert seq[:3] == (1.0, -1.0, 0.0)
    assert seq[3] == pytest.approx(-1 / math.sqrt(3), abs=1e-15)


def test_leja_matches_brute_force_oracle():
    ours = leja_extend((), U(-1, 1), 8)
    np.testing.assert_allclose(ours, brute_force_leja(8), atol=1e-10)


def test_leja_beta_first_node_at_mode():
    assert leja_extend((), B(2, 2, -1, 1), 1)[0] == pytest.approx(0.0, abs=1e-15)
    # Beta(3, 6) on [-1, 1]: mode of the density at (alpha-1)/(alpha+beta-2) mapped
    assert leja_extend((), B(3, 6, -1, 1), 1)[0] == pytest.approx(2 * 2 / 7 - 1, abs=1e-12)


def test_leja_extension_never_changes_prefix():
    d = B(3, 6, 0, 1)
    short = leja_extend((), d, 6)
    long = leja_extend(short, d, 12)
    assert long[:6] == short
    assert leja_extend((), d, 12) == long


def test_leja_independent_of_interval():
    r1 = UnivariateRule("leja", B(3, 6, 0, 1))
    r2 = UnivariateRule("leja", B(3, 6, 27, 33))
    np.testing.assert_array_equal(r1.canonical_nodes(10), r2.canonical_nodes(10))
    np.testing.assert_allclose(r2.nodes(10), 27 + 6 * (r1.nodes(10) - 0) / 1, rtol=1e-15)


def test_leja_weights_small_counts():
    d = U(-1, 1)
    np.testing.assert_array_equal(leja_weights(leja_extend((), d, 1), d).weights, [1.0])
    np.testing.assert_allclose(leja_weights(leja_extend((), d, 3), d).weights, [1 / 6, 1 / 6, 2 / 3], atol=1e-15)


@pytest.mark.parametrize("family", ["cc", "leja"])
@pytest.mark.parametrize("dist", [U(0.5, 3.0), B(3, 6, 27, 33)])
def test_rule_exactness(family, dist):
    rule = UnivariateRule(family, dist)
    shape = None if dist.is_uniform else (dist.alpha, dist.beta)
    for lev in range(4 if family == "cc" else 12):
        x, w = rule.nodes(lev), rule.weights(lev)
        assert w.sum() == pytest.approx(1.0, abs=1e-12)
        for k in range(x.size):
            ref = monomial_moment(k, dist.a, dist.b, shape)
            assert w @ x**k == pytest.approx(ref, rel=1e-11)


@pytest.mark.parametrize("family", ["cc", "leja"])
def test_rule_nodes_inside_distinct_nested(family):
    d = B(3, 6, 2.16, 2.64)
    rule = UnivariateRule(family, d)
    prev = set()
    for lev in range(5 if family == "cc" else 17):
        x = rule.nodes(lev)
        assert x.size == rule.count(lev)
        assert np.all((x >= d.a) & (x <= d.b))
        gaps = np.diff(np.sort(x))
        assert gaps.size == 0 or gaps.min() > 1e-14 * d.width
        assert prev <= set(x.tolist())
        prev = set(x.tolist())


def test_level_to_nodes():
    cc = UnivariateRule("cc", U(0, 1))
    lj = UnivariateRule("leja", U(0, 1))
    assert [cc.count(l) for l in range(5)] == [1, 3, 5, 9, 17]
    assert [lj.count(l) for l in range(5)] == [1, 2, 3, 4, 5]
    with pytest.raises(ValueError):
        cc.count(-1)


def test_unknown_family_rejected():
    with pytest.raises(ValueError):
        UnivariateRule("gauss", U(0, 1))


def test_gauss_rule_exact_degree():
    d = B(3, 6, 0, 1)
    x, w = gauss_rule(d, 5)
    for k in range(10):
        assert w @ x**k == pytest.approx(monomial_moment(k, 0, 1, (3, 6)), rel=1e-13)


def test_rule_serialization():
    r = UnivariateRule("leja", B(3, 6, 27, 33))
    r2 = UnivariateRule.from_dict(r.to_dict())
    np.testing.assert_array_equal(r.nodes(5), r2.nodes(5))
