import numpy as np
import pytest

from bingames.errors import DomainError
from bingames.game_core import GridDesign
from bingames.rationalize import (CHECKS, FAIL, INCONCLUSIVE, PASS, SKIPPED, ChoiceData,
                                  RationalizeConfig, check_structural_zeros, run_checks,
                                  test_conditional_independence, test_multiplicity, test_r1,
                                  test_r2, test_r3)
from bingames.reference import linear_index_game
from bingames.simulate import heterogeneity_fixture, population_table, sample_dataset, switching_fixture


def table_of(alpha, joint, x=None):
    alpha = np.atleast_2d(alpha)
    x = np.arange(len(alpha), dtype=float)[:, None] if x is None else x
    return ChoiceData(x, alpha, np.atleast_2d(joint))


def random_game(rng, rho, axes=(3, 3, 2), continuous=False):
    """Random two-player game on a grid; the last axis is an irrelevant covariate."""
    grid = [np.linspace(-1, 1, n) for n in axes[:2]] + [np.arange(axes[2], dtype=float)]
    design = GridDesign.product(*grid, continuous=continuous)
    b = rng.uniform(0.1, 0.9, 2)
    return linear_index_game(rng.uniform(-0.3, 0.3, 2), rng.uniform(0.5, 1.5, 2),
                             [[0, -b[0]], [0, -b[1]]], rho, design=design)


# ---------------------------------------------------------------------------
# structural zeros

def test_zeros_examples():
    assert check_structural_zeros(table_of([0.5, 0.5], [0.25] * 4)).verdict == PASS
    bad = check_structural_zeros(table_of([0.5, 0.5], [0.0, 0.5, 0.5, 0.0]))
    assert bad.verdict == FAIL and {w["profile"] for w in bad.witnesses} == {"00", "11"}
    # alpha_1 = 0 explains the zeros at a_1 = 1
    assert check_structural_zeros(table_of([0.0, 0.4], [0.6, 0.4, 0.0, 0.0])).verdict == PASS


def test_malformed_tables():
    with pytest.raises(DomainError):
        table_of([0.5, 0.5], [0.3, 0.3, 0.3, 0.3])
    with pytest.raises(DomainError):
        table_of([0.5, 0.5], [0.5, 0.5, 0.5])


# ---------------------------------------------------------------------------
# R1 and R2

def test_r1_heterogeneity_fixture():
    r = test_r1(ChoiceData.from_population(heterogeneity_fixture()))
    assert r.verdict == FAIL
    w = r.witnesses[0]
    assert w["alpha"][0] == w["alpha"][1] == [0.5, 0.5]
    assert sorted(w["joint"]) == pytest.approx([0.21, 0.26], abs=1e-12)
    assert r.statistic == pytest.approx(0.05, abs=1e-12)


@pytest.mark.parametrize("seed", range(4))
def test_m2_single_equilibrium_passes(seed):
    rng = np.random.default_rng(seed)
    g = random_game(rng, rng.uniform(-0.7, 0.7))
    t = population_table(g)
    assert np.all(t.n_equilibria == 1)
    d = ChoiceData.from_population(t)
    r1, r2 = test_r1(d), test_r2(d)
    assert r1.verdict == PASS and r1.statistic <= 1e-8 and r1.extra["n_pairs"] > 0
    assert r2.verdict == PASS and r2.statistic <= 1e-8


def test_r2_decreasing_table():
    alpha = [[0.4, 0.4], [0.6, 0.6]]
    up = [[0.5, 0.1, 0.1, 0.3], [0.2, 0.2, 0.2, 0.4]]
    assert test_r2(table_of(alpha, up)).verdict == PASS
    # P(Y = (1,1)) falls from 0.3 to 0.2 while both choice probabilities rise
    down = [[0.5, 0.1, 0.1, 0.3], [0.0, 0.4, 0.4, 0.2]]
    r = test_r2(table_of(alpha, down))
    assert r.verdict == FAIL and r.statistic == pytest.approx(0.1, abs=1e-12)
    assert r.witnesses[0]["joint"] == pytest.approx([0.3, 0.2])


def test_r2_thin_support():
    assert test_r2(table_of([0.5, 0.5], [0.25] * 4)).verdict == INCONCLUSIVE


# ---------------------------------------------------------------------------
# conditional independence

def test_ci_gaussian_symmetric_point():
    g = linear_index_game([0, 0], [1, 1], [[0, -1], [0, -1]], 0.5, design=GridDesign([[0.5, 0.5]]))
    d = ChoiceData.from_population(population_table(g))
    np.testing.assert_allclose(d.alpha, [[0.5, 0.5]], atol=1e-9)
    r = test_conditional_independence(d)
    # C(1/2, 1/2) = 1/4 + arcsin(rho) / (2 pi) under a Gaussian copula
    assert r.verdict == FAIL
    assert r.statistic == pytest.approx(np.arcsin(0.5) / (2 * np.pi), abs=1e-9)


def test_ci_independent_types():
    g = linear_index_game([0, 0], [1, 1], [[0, -1], [0, -1]], 0.0, design=GridDesign([[0.5, 0.5]]))
    r = test_conditional_independence(ChoiceData.from_population(population_table(g)))
    assert r.verdict == PASS and r.statistic <= 1e-10


@pytest.mark.parametrize("seed", range(20))
def test_m3_implication_chain(seed):
    # independence implies R1, R2, R3 and the zero restriction
    rng = np.random.default_rng(100 + seed)
    g = random_game(rng, None, axes=(4, 4, 1), continuous=True)
    d = ChoiceData.from_population(population_table(g))
    rep = run_checks(d, ("ci", "zeros", "r1", "r2", "r3"))
    assert rep["ci"].statistic <= 1e-10
    for name in ("ci", "zeros", "r1", "r2"):
        assert rep[name].verdict == PASS, name
    assert rep["r3"].verdict in (PASS, INCONCLUSIVE)
    assert rep["r3"].verdict != FAIL


# ---------------------------------------------------------------------------
# R3

def test_r3_skipped_for_discrete():
    assert test_r3(table_of([0.5, 0.5], [0.25] * 4)).verdict == SKIPPED


def test_r3_smooth_population():
    rng = np.random.default_rng(7)
    g = random_game(rng, 0.3, axes=(6, 6, 1), continuous=True)
    r = test_r3(ChoiceData.from_population(population_table(g)))
    assert r.verdict == PASS


# ---------------------------------------------------------------------------
# multiplicity

def test_switching_fixture_trips_multiplicity():
    observed, _ = switching_fixture()
    r = test_multiplicity(ChoiceData.from_population(observed))
    assert r.verdict == FAIL and r.statistic > 1e-6
    assert r.witnesses[0]["player"] in (1, 2)


def test_single_equilibrium_is_monotone():
    rng = np.random.default_rng(3)
    g = random_game(rng, 0.4, axes=(4, 4, 1))
    r = test_multiplicity(ChoiceData.from_population(population_table(g)))
    assert r.verdict == PASS and r.statistic <= 1e-8


def test_multiplicity_skips_three_players():
    d = ChoiceData(np.zeros((1, 3)), [[0.5] * 3], [[0.125] * 8])
    assert test_multiplicity(d).verdict == SKIPPED


# ---------------------------------------------------------------------------
# sample mode and reports

@pytest.fixture(scope="module")
def sample_data():
    rng = np.random.default_rng(0)
    g = random_game(rng, 0.0, axes=(5, 5, 1))
    return ChoiceData.from_dataset(sample_dataset(g, 20000, seed=4))


def test_sample_independent_passes(sample_data):
    assert sample_data.mode == "sample"
    rep = run_checks(sample_data, ("zeros", "ci", "r1"))
    assert rep["zeros"].verdict == PASS
    assert rep["ci"].verdict == PASS and rep["ci"].threshold == 0.02
    assert rep["r1"].verdict == PASS


def test_report_deterministic(sample_data):
    a = run_checks(sample_data).to_json()
    b = run_checks(sample_data).to_json()
    assert a == b
    assert set(run_checks(sample_data).checks) == set(CHECKS)


def test_unknown_check(sample_data):
    with pytest.raises(DomainError):
        run_checks(sample_data, ("r9",))


def test_sample_zero_needs_evidence():
    # no (1,1) among 5000 draws with both players at one half
    n = 5000
    d = ChoiceData([[0.0]], [[0.5, 0.5]], [[0.0, 0.5, 0.5, 0.0]], counts=[n], marginal_freq=[[0.5, 0.5]])
    assert check_structural_zeros(d).verdict == FAIL
    # the same zero in a cell of 500 draws is not conclusive
    d = ChoiceData([[0.0]], [[0.5, 0.5]], [[0.0, 0.5, 0.5, 0.0]], counts=[500], marginal_freq=[[0.5, 0.5]])
    assert check_structural_zeros(d).verdict == PASS


def test_config_threshold_used(sample_data):
    strict = RationalizeConfig(sample_tol=-1.0)
    assert test_conditional_independence(sample_data, strict).verdict == FAIL
