import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy import stats
from scipy.special import ndtr, ndtri

from bingames.errors import BoundaryError, DomainError
from bingames.game_core import (
    GameStructure,
    GaussianCopula,
    GridDesign,
    IndependenceCopula,
    LinearIndexPayoff,
    LogisticMarginal,
    NormalMarginal,
    TabularPayoff,
    TabulatedCopula,
    TabulatedMarginal,
    TransformedMarginal,
    UniformMarginal,
    belief_sigma,
    check_prd,
    check_scp,
    conditional_copula,
    copula_cdf,
    expected_payoff_gap,
    profile_probabilities,
    rectangle_probability,
    standard_normal,
)
from bingames.game_core.profiles import all_profiles
from bingames.reference import case1_gap, example_case1, substitutes_game

N2 = [standard_normal(), standard_normal()]


# ---------------------------------------------------------------------------
# copula_cdf

def test_independence_cdf():
    assert copula_cdf(IndependenceCopula(2), [0.4, 0.6]) == pytest.approx(0.24, abs=1e-15)


def test_gaussian_rho0_is_independence():
    assert copula_cdf(GaussianCopula.bivariate(0.0), [0.4, 0.6]) == pytest.approx(0.24, abs=1e-12)


def test_gaussian_orthant_monte_carlo():
    # 10^7 draws: 3 * SE is about 4.5e-4
    rng = np.random.default_rng(20240501)
    hits = 0
    for _ in range(10):
        z = rng.standard_normal((10**6, 2))
        z2 = 0.5 * z[:, 0] + np.sqrt(0.75) * z[:, 1]
        hits += np.count_nonzero((z[:, 0] <= 0) & (z2 <= 0))
    mc = hits / 10**7
    got = copula_cdf(GaussianCopula.bivariate(0.5), [0.5, 0.5])
    assert abs(got - mc) <= 1e-3
    # and the orthant identity 1/4 + arcsin(rho) / (2 pi)
    assert got == pytest.approx(0.25 + np.arcsin(0.5) / (2 * np.pi), abs=1e-12)


@pytest.mark.parametrize("rho", [-0.8, -0.3, 0.2, 0.6, 0.95])
def test_gaussian_cdf_matches_scipy(rho):
    rng = np.random.default_rng(3)
    a = rng.uniform(0.02, 0.98, size=(20, 2))
    mvn = stats.multivariate_normal(mean=[0, 0], cov=[[1, rho], [rho, 1]])
    want = mvn.cdf(ndtri(a))
    got = copula_cdf(GaussianCopula.bivariate(rho), a)
    np.testing.assert_allclose(got, want, atol=1e-6)


def test_trivariate_gaussian_matches_scipy():
    R = np.array([[1, 0.3, 0.5], [0.3, 1, 0.2], [0.5, 0.2, 1]])
    c = GaussianCopula(R)
    a = np.array([[0.3, 0.6, 0.7], [0.5, 0.5, 0.5], [0.9, 0.2, 0.4]])
    want = stats.multivariate_normal(mean=np.zeros(3), cov=R).cdf(ndtri(a))
    np.testing.assert_allclose(c.cdf(a), want, atol=1e-4)


def test_cdf_domain_error():
    with pytest.raises(DomainError):
        copula_cdf(GaussianCopula.bivariate(0.2), [1.2, 0.5])
    with pytest.raises(DomainError):
        copula_cdf(IndependenceCopula(2), [0.5])


def test_gaussian_rejects_bad_corr():
    with pytest.raises(DomainError):
        GaussianCopula([[1, 0.5], [0.4, 1]])
    with pytest.raises(DomainError):
        GaussianCopula.bivariate(1.0)


# ---------------------------------------------------------------------------
# conditional_copula

def test_conditional_independence_is_marginal():
    assert conditional_copula(IndependenceCopula(2), 0, 0.3, [0.7]) == pytest.approx(0.7)


def test_conditional_gaussian_symmetric_point():
    assert conditional_copula(GaussianCopula.bivariate(0.5), 0, 0.5, [0.5]) == pytest.approx(0.5, abs=1e-14)


def test_conditional_gaussian_closed_form_and_fd():
    c = GaussianCopula.bivariate(0.5)
    want = ndtr(ndtri(0.8) / np.sqrt(0.75))
    got = conditional_copula(c, 0, 0.5, [0.8])
    assert got == pytest.approx(want, abs=1e-14)
    h = 1e-5
    fd = (copula_cdf(c, [0.5 + h, 0.8]) - copula_cdf(c, [0.5 - h, 0.8])) / (2 * h)
    assert abs(fd - want) <= 1e-6


def test_conditional_boundary_error():
    with pytest.raises(BoundaryError):
        conditional_copula(GaussianCopula.bivariate(0.5), 0, 0.0, [0.5])
    with pytest.raises(BoundaryError):
        conditional_copula(IndependenceCopula(2), 1, 1.0, [0.5])


# ---------------------------------------------------------------------------
# rectangle probabilities

def test_rectangle_independence():
    u = ndtri([0.4, 0.6])
    assert rectangle_probability(IndependenceCopula(2), N2, u, (1, 0)) == pytest.approx(0.16)


@pytest.mark.parametrize("rho", [0.0, 0.5, -0.4])
def test_rectangle_11_is_copula(rho):
    c = GaussianCopula.bivariate(rho)
    a = np.array([0.35, 0.7])
    assert rectangle_probability(c, N2, ndtri(a), (1, 1)) == pytest.approx(copula_cdf(c, a), abs=1e-14)


def test_rectangle_sums_to_one():
    c = GaussianCopula.bivariate(0.5)
    u = np.zeros(2)
    tot = sum(rectangle_probability(c, N2, u, a) for a in all_profiles(2))
    assert abs(tot - 1) <= 1e-12


def test_rectangle_infinite_thresholds():
    c = GaussianCopula.bivariate(0.5)
    p = profile_probabilities(c, [1.0, 0.3])
    np.testing.assert_allclose(p, [0.0, 0.0, 0.7, 0.3], atol=1e-15)  # (0,0),(0,1),(1,0),(1,1)
    assert rectangle_probability(c, N2, [np.inf, -np.inf], (1, 0)) == pytest.approx(1.0)


# ---------------------------------------------------------------------------
# beliefs and payoff gaps

def test_belief_independence():
    s = belief_sigma(IndependenceCopula(2), N2, [0.3, ndtri(0.7)], 0, 1.7)
    np.testing.assert_allclose(s, [0.3, 0.7], atol=1e-14)


def test_belief_gaussian_symmetry():
    s = belief_sigma(GaussianCopula.bivariate(0.5), N2, [0.0, 0.0], 0, 0.0)
    assert s[1] == pytest.approx(0.5, abs=1e-14)


def test_belief_gaussian_closed_form_and_mc():
    s = belief_sigma(GaussianCopula.bivariate(0.3), N2, [0.0, 0.0], 0, 1.0)
    want = ndtr(-0.3 / np.sqrt(0.91))
    assert s[1] == pytest.approx(want, abs=1e-14)
    rng = np.random.default_rng(11)
    u2 = 0.3 * 1.0 + np.sqrt(0.91) * rng.standard_normal(10**6)
    assert abs(np.mean(u2 <= 0) - want) <= 2e-3


def test_belief_boundary():
    with pytest.raises(BoundaryError):
        belief_sigma(GaussianCopula.bivariate(0.3), N2, [0.0, 0.0], 0, np.inf)


def test_gap_no_interaction():
    x = np.array([0.7, 0.0])
    g = substitutes_game(x, (0.0, 0.0), 0.4)
    for u in (-1.0, 0.0, 2.5):
        assert expected_payoff_gap(g, x, [0.1, -0.3], 0, u) == pytest.approx(0.7 - u, abs=1e-14)


@pytest.mark.parametrize("rho", [0.0, 0.3, 0.7, 0.9])
def test_gap_case1_formula(rho):
    g, x = example_case1(rho)
    u1 = np.linspace(-2, 2, 9)
    got = expected_payoff_gap(g, x, [0.0, 0.0], 0, u1)
    np.testing.assert_allclose(got, case1_gap(u1, rho), atol=1e-12)
    s = np.sqrt(1 - rho**2)
    np.testing.assert_allclose(got, 1 - 2 * ndtr(-rho * u1 / s) - u1, atol=1e-12)


def test_gap_case1_zero():
    g, x = example_case1(0.0)
    assert expected_payoff_gap(g, x, [0.0, 0.0], 0, 0.0) == pytest.approx(0.0, abs=1e-15)


# ---------------------------------------------------------------------------
# PRD / SCP

def test_prd():
    assert check_prd(GaussianCopula.bivariate(0.5))
    ok, wit = check_prd(GaussianCopula.bivariate(-0.5), return_witness=True)
    assert not ok and wit is not None and wit["drop"] > 0
    assert check_prd(IndependenceCopula(3))


def test_scp_substitutes_false():
    g = substitutes_game(np.array([1.0, 1.0]), (2.0, 2.0), 0.5)
    assert not check_scp(g.payoffs, [[1.0, 1.0]])
    comp = [LinearIndexPayoff(i, 2, 0.0, 1.0, [0.0, 1.0]) for i in range(2)]
    assert check_scp(comp, [[0.0, 0.0], [1.0, -1.0]])


def test_prd_scp_imply_monotone_gap():
    # complements plus positive dependence: the gap decreases in own type
    payoffs = [LinearIndexPayoff(i, 2, 0.2, 1.0, [0.0, 0.8]) for i in range(2)]
    g = GameStructure(payoffs, N2, GaussianCopula.bivariate(0.6))
    x = np.array([0.3, -0.2])
    assert check_prd(g.copula) and check_scp(g.payoffs, [x])
    u = np.linspace(-3, 3, 100)
    for ustar in ([0.0, 0.0], [-1.0, 0.5], [1.2, 1.2]):
        for i in range(2):
            assert np.all(np.diff(expected_payoff_gap(g, x, ustar, i, u)) <= 1e-12)


# ---------------------------------------------------------------------------
# marginals, payoffs, structures

@pytest.mark.parametrize("m", [NormalMarginal(0.3, 2.0), LogisticMarginal(-1, 0.5), UniformMarginal(-1, 2),
                               TabulatedMarginal([0.01, 0.3, 0.5, 0.9, 0.99], [-3, -1, 0, 2, 4])])
def test_marginal_inverse(m):
    p = np.linspace(0.02, 0.98, 25)
    q = m.ppf(p)
    assert np.all(np.diff(q) > 0)
    np.testing.assert_allclose(m.cdf(q), p, atol=1e-8)


def test_tabulated_marginal_clamps():
    m = TabulatedMarginal([0.1, 0.5, 0.9], [-1.0, 0.0, 2.0])
    assert m.cdf(-5.0) == 0.0 and m.cdf(3.0) == 1.0
    assert m.ppf(0.0) == pytest.approx(-1.0)
    with pytest.raises(DomainError):
        TabulatedMarginal([0.1, 0.5, 0.4], [0, 1, 2])


def test_transformed_marginal():
    base = standard_normal()
    m = TransformedMarginal(base, lambda u: 2 * u + 0.3 * np.tanh(u))
    p = np.array([0.1, 0.5, 0.93])
    np.testing.assert_allclose(m.cdf(m.ppf(p)), p, atol=1e-10)


def test_tabular_payoff():
    p = TabularPayoff(0, 2, [0.0, 1.0], [[0.0, -2.0], [1.0, -1.0]])
    np.testing.assert_allclose(p.values(np.array([1.0, 7.0])), [1.0, -1.0])
    with pytest.raises(DomainError):
        p.values(np.array([0.5, 0.0]))


def test_structure_hash_and_exclusion():
    g1 = substitutes_game(np.array([1.0, 1.0]), (2.0, 2.0), 0.5)
    g2 = substitutes_game(np.array([1.0, 1.0]), (2.0, 2.0), 0.5)
    g3 = substitutes_game(np.array([1.0, 1.0]), (2.0, 2.0), 0.4)
    assert g1.game_hash() == g2.game_hash() != g3.game_hash()
    assert g1.exclusion
    d = GridDesign.product([0, 1], [2, 3, 4])
    assert d.points.shape == (6, 2) and np.allclose(d.weights, 1 / 6)


def test_independent_types_require_independence_copula():
    payoffs = [LinearIndexPayoff(i, 2) for i in range(2)]
    g = GameStructure(payoffs, N2, IndependenceCopula(2))
    assert g.copula.family == "independence"
    with pytest.raises(DomainError):
        GameStructure(payoffs, N2[:1], IndependenceCopula(2))


# ---------------------------------------------------------------------------
# properties

unit = st.floats(0.0, 1.0)
inner = st.floats(1e-3, 1 - 1e-3)
rhos = st.floats(-0.9, 0.9)


@settings(max_examples=200, deadline=None)
@given(rho=rhos, a=unit, b=unit)
def test_copula_axioms_gaussian(rho, a, b):
    c = GaussianCopula.bivariate(rho)
    assert copula_cdf(c, [0.0, b]) == pytest.approx(0.0, abs=1e-12)
    assert copula_cdf(c, [a, 1.0]) == pytest.approx(a, abs=1e-9)
    assert copula_cdf(c, [1.0, b]) == pytest.approx(b, abs=1e-9)
    lo, hi = sorted([a, b])
    assert copula_cdf(c, [lo, 0.5]) <= copula_cdf(c, [hi, 0.5]) + 1e-12


@settings(max_examples=100, deadline=None)
@given(rho=rhos, a=inner, b=inner)
def test_tabulated_copula_axioms(rho, a, b):
    c = TabulatedCopula.from_copula(GaussianCopula.bivariate(rho), np.linspace(0, 1, 21))
    assert copula_cdf(c, [0.0, b]) == pytest.approx(0, abs=1e-6)
    assert copula_cdf(c, [a, 1.0]) == pytest.approx(a, abs=1e-6)
    assert copula_cdf(c, [min(a, b), b]) <= copula_cdf(c, [max(a, b), b]) + 1e-6


@settings(max_examples=150, deadline=None)
@given(rho=rhos, a=st.floats(0.01, 0.99), b=inner, i=st.integers(0, 1))
def test_conditional_is_derivative(rho, a, b, i):
    c = GaussianCopula.bivariate(rho)
    h = 1e-5
    lo, hi = np.array([b, b]), np.array([b, b])
    lo[i], hi[i] = a - h, a + h
    fd = (copula_cdf(c, hi) - copula_cdf(c, lo)) / (2 * h)
    assert abs(conditional_copula(c, i, a, [b]) - fd) <= 1e-5


@settings(max_examples=100, deadline=None)
@given(rho=st.floats(0, 0.8), a=st.lists(inner, min_size=3, max_size=3))
def test_rectangles_sum_to_one_trivariate(rho, a):
    c = GaussianCopula.equicorrelated(3, rho)
    p = profile_probabilities(c, np.array(a))
    assert abs(p.sum() - 1) <= 1e-10
    assert np.all(p >= 0)


@settings(max_examples=100, deadline=None)
@given(u=st.floats(-3, 3), a=inner)
def test_belief_independence_any_type(u, a):
    s = belief_sigma(IndependenceCopula(2), N2, [0.0, ndtri(a)], 0, u)
    np.testing.assert_allclose(s, [1 - a, a], atol=1e-12)
