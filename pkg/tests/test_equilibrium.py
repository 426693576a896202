import numpy as np
import pytest
from scipy import optimize
from scipy.special import ndtr

from bingames.equilibrium import best_response_threshold, region_scan, solve_mpse
from bingames.errors import NonMonotoneBestResponse
from bingames.game_core import (GameStructure, GaussianCopula, LinearIndexPayoff, belief_sigma,
                                standard_normal)
from bingames.reference import (RHO_MONOTONE, RHO_MULTIPLE, case1_gap, case2_asymmetric_equation,
                                example_case1, example_case2, substitutes_game)


def case2_root(rho):
    # independent oracle: bisection on the displayed equation
    return optimize.bisect(lambda u: case2_asymmetric_equation(u, rho), 1e-6, 5.0, xtol=1e-14)


def test_boundaries_formulae():
    assert RHO_MONOTONE == pytest.approx(np.sqrt(np.pi / (2 + np.pi)), abs=1e-15)
    assert RHO_MULTIPLE == pytest.approx((np.pi - 2) / (2 + np.pi), abs=1e-15)
    assert round(RHO_MONOTONE, 4) == 0.7817 and round(RHO_MULTIPLE, 4) == 0.2220


# ---------------------------------------------------------------------------
# best responses

def test_case1_dominant_player():
    g, x = example_case1(0.4)
    for ua in (-1.0, 0.0, 2.0):
        assert best_response_threshold(g, x, [ua, 0.0], 1) == pytest.approx(0.0, abs=1e-10)


def test_case1_rho0_best_response():
    g, x = example_case1(0.0)
    assert best_response_threshold(g, x, [0.0, 0.0], 0) == pytest.approx(0.0, abs=1e-10)


def test_case1_nonmonotone_raises():
    g, x = example_case1(0.9)
    with pytest.raises(NonMonotoneBestResponse) as exc:
        best_response_threshold(g, x, [0.0, 0.0], 0)
    lo, hi = exc.value.interval
    assert exc.value.player == 0 and lo < hi
    # the gap does increase on the reported interval
    assert case1_gap(hi, 0.9) > case1_gap(lo, 0.9)


def test_infinite_best_responses():
    x = np.array([0.0, 0.0])
    big = [LinearIndexPayoff(0, 2, 100.0, 0.0, [0.0, 0.0]), LinearIndexPayoff(1, 2, -100.0, 0.0, [0.0, 0.0])]
    # with normal types the gap is positive on the whole effective support
    g = GameStructure(big, [standard_normal()] * 2, GaussianCopula.bivariate(0.2))
    assert best_response_threshold(g, x, [0.0, 0.0], 0) == np.inf
    assert best_response_threshold(g, x, [0.0, 0.0], 1) == -np.inf
    eq = solve_mpse(g, x)
    assert len(eq) == 1
    assert eq.equilibria[0].u_star == (np.inf, -np.inf)
    np.testing.assert_allclose(eq.alphas(g.marginals), [[1.0, 0.0]])


# ---------------------------------------------------------------------------
# solve_mpse

def test_case2_rho0_unique():
    g, x = example_case2(0.0)
    eq = solve_mpse(g, x)
    assert len(eq) == 1
    np.testing.assert_allclose(eq.thresholds, [[0.0, 0.0]], atol=1e-10)
    assert eq.monotone_br == (True, True)


def test_case2_rho05_three():
    g, x = example_case2(0.5)
    eq = solve_mpse(g, x)
    assert len(eq) == 3
    u = case2_root(0.5)
    assert u == pytest.approx(0.866678, abs=1e-6)
    th = eq.thresholds[np.lexsort(eq.thresholds.T[::-1])]
    np.testing.assert_allclose(th, [[-u, u], [0, 0], [u, -u]], atol=1e-10)
    assert max(eq.residuals) <= 1e-8
    assert not any(eq.tangent)


def test_case1_rho03_unique():
    g, x = example_case1(0.3)
    eq = solve_mpse(g, x)
    assert len(eq) == 1
    want = optimize.brentq(lambda u: case1_gap(u, 0.3), -3, 3, xtol=1e-14)
    np.testing.assert_allclose(eq.thresholds[0], [want, 0.0], atol=1e-9)


@pytest.mark.parametrize("rho", [0.0, 0.3, 0.5, 0.7])
def test_grid_doubling_invariance(rho):
    for make in (example_case1, example_case2):
        g, x = make(rho)
        a, b = solve_mpse(g, x), solve_mpse(g, x, n_grid=4001)
        assert len(a) == len(b)
        np.testing.assert_allclose(np.sort(a.thresholds, axis=0), np.sort(b.thresholds, axis=0), atol=1e-6)


def test_representation_on_draws():
    # Y_i = 1[U_i <= u*_i] and the belief-weighted payoff at the cutoff equals u*_i
    g, x = example_case2(0.5)
    eq = solve_mpse(g, x)
    rng = np.random.default_rng(5)
    u = g.copula.sample(10**4, rng)
    u = np.column_stack([m.ppf(u[:, j]) for j, m in enumerate(g.marginals)])
    for prof in eq.equilibria:
        ustar = prof.array
        y = u <= ustar
        for i in range(2):
            sigma = belief_sigma(g.copula, g.marginals, ustar, i, ustar[i])
            index = sigma @ g.payoffs[i].values(x)
            assert abs(index - ustar[i]) <= 1e-8
            differ = y[:, i] != (u[:, i] <= index)
            assert np.all(np.abs(u[differ, i] - ustar[i]) <= 1e-8)


def test_three_player_extremal_complements():
    pay = [LinearIndexPayoff.additive(i, 3, -0.2, 1.0, [0.4, 0.4]) for i in range(3)]
    g = GameStructure(pay, [standard_normal()] * 3, GaussianCopula.equicorrelated(3, 0.3))
    x = np.array([0.1, 0.0, -0.1])
    eq = solve_mpse(g, x)
    assert eq.extremal_only and 1 <= len(eq) <= 2
    assert max(eq.residuals) <= 1e-8
    # best-response iteration from the lowest profile rises monotonically
    u = np.full(3, -8.0)
    path = [u]
    for _ in range(60):
        u = np.array([best_response_threshold(g, x, u, i) for i in range(3)])
        path.append(u)
    steps = np.diff(np.array(path), axis=0)
    assert np.all(steps >= -1e-10)
    np.testing.assert_allclose(path[-1], eq.thresholds.min(axis=0), atol=1e-7)


def test_nonmonotone_flag_without_abort():
    g, x = example_case1(0.9)
    eq = solve_mpse(g, x)
    assert eq.monotone_br == (False, True)
    assert 0 in eq.nonmonotone


# ---------------------------------------------------------------------------
# region_scan

def test_scan_case2_boundary():
    rhos = np.round(np.arange(0.0, 0.5 + 1e-9, 0.01), 10)
    scan = region_scan(lambda rho: example_case2(rho), {"rho": rhos})
    b = scan.boundaries("count")
    assert len(b) == 1
    lo, hi, before, after = b[0]
    assert (before, after) == (1, 3) and lo <= RHO_MULTIPLE <= hi


def test_scan_case1_monotone_flip():
    scan = region_scan(lambda rho: example_case1(rho), {"rho": np.linspace(0.7, 0.9, 21)})
    b = scan.boundaries("monotone")
    assert len(b) == 1 and b[0][0] <= RHO_MONOTONE <= b[0][1]


def test_scan_dominant_strategies():
    scan = region_scan(lambda rho: (substitutes_game(np.array([0.5, -0.5]), (0.0, 0.0), rho),
                                    np.array([0.5, -0.5])), {"rho": np.linspace(-0.8, 0.8, 9)})
    assert np.all(scan.counts == 1)


def test_scan_csv_and_threads(tmp_path):
    tmpl = lambda rho: example_case2(rho)
    a = region_scan(tmpl, {"rho": [0.1, 0.5]}, threads=1)
    b = region_scan(tmpl, {"rho": [0.1, 0.5]}, threads=2)
    assert a.to_csv() == b.to_csv()
    text = a.to_csv(tmp_path / "s.csv")
    lines = text.strip().splitlines()
    assert lines[0].startswith("rho,n_equilibria,equilibrium,u_star_1,u_star_2")
    assert len(lines) == 1 + 1 + 3
    assert (tmp_path / "s.csv").read_text() == text


def test_default_threads_env(monkeypatch):
    from bingames.equilibrium import default_threads
    monkeypatch.setenv("BINGAMES_THREADS", "3")
    assert default_threads() == 3
    monkeypatch.setenv("BINGAMES_THREADS", "zero")
    assert default_threads() == 1


def test_case2_asymmetric_residual_vs_oracle():
    u = case2_root(0.5)
    assert abs(1 - 2 * ndtr(np.sqrt(3) * u) + u) <= 1e-12
