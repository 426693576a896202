import json

import numpy as np
import pytest
from scipy import optimize, stats
from scipy.special import ndtr

from bingames.errors import DomainError
from bingames.game_core import GridDesign
from bingames.reference import case2_asymmetric_equation, example_case2, linear_index_game
from bingames.simulate import (BLOCK_SIZE, Dataset, FirstListed, IndexByX, LowestThreshold, NearestAlpha,
                               alternating_rule, get_rule, heterogeneity_fixture, population_ccp,
                               population_table, sample_dataset, switching_fixture)


@pytest.fixture(scope="module")
def small_game():
    axis = np.array([-0.5, 0.0, 0.5])
    return linear_index_game([0.3, 0.1], [1.0, 1.0], [[0.0, -0.6], [0.0, -0.4]], 0.4,
                             design=GridDesign.product(axis, axis))


# ---------------------------------------------------------------------------
# population choice probabilities

def test_case2_independent_types():
    g, x = example_case2(0.0)
    p = population_ccp(g, x)
    np.testing.assert_allclose(p.alpha, [0.5, 0.5], atol=1e-10)
    assert p.prob((1, 1)) == pytest.approx(0.25, abs=1e-10)
    assert p.joint.sum() == pytest.approx(1.0, abs=1e-12)


def test_case2_correlated_orthant():
    g, x = example_case2(0.5)
    p = population_ccp(g, x)
    u = optimize.brentq(lambda t: case2_asymmetric_equation(t, 0.5), 1e-6, 5.0, xtol=1e-14)
    # three equilibria with equal total mass; the tie-break keeps the smallest alpha_1
    assert p.n_equilibria == 3
    np.testing.assert_allclose(p.alpha, [ndtr(-u), ndtr(u)], atol=1e-9)
    mvn = stats.multivariate_normal([0, 0], [[1, 0.5], [0.5, 1]])
    p11 = mvn.cdf([-u, u])
    assert p.prob((1, 1)) == pytest.approx(p11, abs=1e-7)
    assert p.prob((1, 0)) == pytest.approx(ndtr(-u) - p11, abs=1e-7)
    assert p.prob((0, 0)) == pytest.approx(1 - ndtr(-u) - ndtr(u) + p11, abs=1e-7)


def test_first_listed_differs_from_lowest():
    g, x = example_case2(0.5)
    lo = population_ccp(g, x, LowestThreshold())
    fi = population_ccp(g, x, FirstListed())
    assert fi.selected == 0 and lo.n_equilibria == fi.n_equilibria == 3


def test_population_table_shapes(small_game):
    t = population_table(small_game)
    assert len(t) == 9 and t.joint.shape == (9, 4) and t.alpha.shape == (9, 2)
    np.testing.assert_allclose(t.joint.sum(axis=1), 1.0, atol=1e-12)
    np.testing.assert_allclose(t.weights, 1 / 9)
    assert np.all(t.n_equilibria == 1)


def test_population_needs_grid(small_game):
    with pytest.raises(DomainError):
        population_table(small_game.replace(design=None))


# ---------------------------------------------------------------------------
# selection rules

def test_get_rule():
    assert isinstance(get_rule("lowest"), LowestThreshold)
    assert isinstance(get_rule("first"), FirstListed)
    with pytest.raises(DomainError):
        get_rule("median")


def test_index_and_nearest_rules():
    g, x = example_case2(0.5)
    top = population_ccp(g, x, IndexByX(lambda x: -1))
    mid = population_ccp(g, x, IndexByX(lambda x: 1))
    np.testing.assert_allclose(mid.alpha, [0.5, 0.5], atol=1e-9)
    assert top.alpha[0] > 0.5 > top.alpha[1]
    near = population_ccp(g, x, NearestAlpha(lambda x: [0.9, 0.1]))
    np.testing.assert_allclose(near.alpha, top.alpha, atol=1e-12)
    with pytest.raises(DomainError):
        population_ccp(g, x, IndexByX(lambda x: 5, wrap=False))


def test_alternating_rule():
    g, _ = example_case2(0.5)
    x2 = [0.9, 1.0, 1.1]
    t = population_table(g, alternating_rule(x2, axis=1), GridDesign.product([1.0], x2))
    assert t.alpha[0, 0] < 0.5 < t.alpha[1, 0] and t.alpha[2, 0] < 0.5


# ---------------------------------------------------------------------------
# datasets

def test_sample_lln_bands(small_game):
    n = 30000
    d = sample_dataset(small_game, n, seed=3)
    t = population_table(small_game)
    ux, inv, cnt = d.cells()
    np.testing.assert_allclose(ux, t.x)
    for k in range(len(ux)):
        ybar = d.y[inv == k].mean(axis=0)
        se = np.sqrt(t.alpha[k] * (1 - t.alpha[k]) / cnt[k])
        assert np.all(np.abs(ybar - t.alpha[k]) <= 4.5 * se)


def test_sample_joint_chi_square(small_game):
    d = sample_dataset(small_game, 20000, seed=11)
    t = population_table(small_game)
    _, inv, cnt = d.cells()
    idx = d.y @ np.array([2, 1])
    pvals = []
    for k in range(len(cnt)):
        obs = np.bincount(idx[inv == k], minlength=4)
        pvals.append(stats.chisquare(obs, cnt[k] * t.joint[k]).pvalue)
    # Bonferroni over the cells
    assert min(pvals) > 0.001 / len(pvals)


def test_sample_determinism_and_threads(small_game):
    a = sample_dataset(small_game, 9000, seed=7, threads=1)
    b = sample_dataset(small_game, 9000, seed=7, threads=3)
    c = sample_dataset(small_game, 9000, seed=8)
    np.testing.assert_array_equal(a.x, b.x)
    np.testing.assert_array_equal(a.y, b.y)
    assert not np.array_equal(a.y, c.y)
    # whole blocks are shared between sample sizes
    big = sample_dataset(small_game, 12000, seed=7)
    np.testing.assert_array_equal(big.y[:2 * BLOCK_SIZE], a.y[:2 * BLOCK_SIZE])


def test_sample_empty_and_negative(small_game):
    d = sample_dataset(small_game, 0)
    assert d.n == 0 and d.x.shape == (0, 2) and d.y.shape == (0, 2)
    with pytest.raises(DomainError):
        sample_dataset(small_game, -1)


def test_return_types_consistent(small_game):
    d = sample_dataset(small_game, 500, seed=1, return_types=True)
    t = population_table(small_game)
    ux, inv, _ = d.cells()
    np.testing.assert_array_equal(d.y, (d.meta["v"] <= t.alpha[inv]).astype(np.int8))


def test_csv_roundtrip(tmp_path, small_game):
    d = sample_dataset(small_game, 300, seed=2)
    path = tmp_path / "d.csv"
    d.to_csv(path)
    assert path.read_text().splitlines()[0] == "x_1,x_2,y_1,y_2"
    back = Dataset.read_csv(path)
    np.testing.assert_array_equal(back.x, d.x)
    np.testing.assert_array_equal(back.y, d.y)
    meta = json.loads((tmp_path / "d.csv.meta.json").read_text())
    assert meta["seed"] == 2 and meta["game_hash"] == small_game.game_hash()
    assert back.meta["rule"] == "lowest"


def test_csv_errors(tmp_path):
    bad = tmp_path / "bad.csv"
    bad.write_text("a,b\n1,2\n")
    with pytest.raises(DomainError):
        Dataset.read_csv(bad)
    with pytest.raises(DomainError):
        Dataset(np.zeros((2, 1)), np.array([[0], [2]]))


def test_profile_counts():
    d = Dataset(np.zeros((4, 1)), np.array([[0, 0], [0, 1], [1, 1], [1, 1]]))
    assert d.profile_counts().tolist() == [1, 1, 0, 2]


# ---------------------------------------------------------------------------
# fixtures

def test_heterogeneity_fixture():
    a, b = heterogeneity_fixture()
    np.testing.assert_allclose(a.alpha, [0.5, 0.5], atol=1e-15)
    np.testing.assert_allclose(b.alpha, [0.5, 0.5], atol=1e-15)
    assert a.prob((1, 1)) == pytest.approx(0.26, abs=1e-12)
    assert b.prob((1, 1)) == pytest.approx(0.21, abs=1e-12)


def test_switching_fixture_mixes():
    observed, full = switching_fixture(x2=[0.9, 1.0, 1.1])
    assert len(observed) == 3 and len(full) == 6
    np.testing.assert_allclose(observed.joint, full.joint.reshape(3, 2, 4).mean(axis=1))
    np.testing.assert_allclose(observed.joint.sum(axis=1), 1.0, atol=1e-12)
    # each half plays a different equilibrium
    assert not np.allclose(full.alpha[0], full.alpha[1])
