"""End-to-end identification: population (exact) and sample modes."""

from dataclasses import dataclass, field

import numpy as np

from ..errors import CellEmpty, DomainError, NormalizationInfeasible, UnderIdentifiedCell
from ..game_core.profiles import all_profiles, profile_label
from ..simulate import population_table
from .beliefs import belief_table
from .ccp import PopulationCCPEstimate, estimate_ccp
from .joint import LocalLinearJoint, PopulationJoint, estimate_copula
from .payoffs import iterate_collection
from .rank import POPULATION_TOL, SAMPLE_TOL, CellData, build_rank_system

CELL_DECIMALS = 9
A0_ANCHOR = 0  # in sample mode the all-inactive belief is one minus the others


@dataclass
class IdentificationResult:
    """Recovered primitives for every player.

    Attributes
    ----------
    players : dict
        Player -> :class:`~bingames.identify.payoffs.PlayerIdentification`
        (population mode) or :class:`~bingames.identify.sieve.SieveStep2` (sample mode).
    copula : CopulaEstimate
    points : ndarray (m, d)
        Covariate profiles used.
    alpha : ndarray (m, I)
    beliefs : ndarray (m, I, 2**(I-1))
    mode : str
    failures : dict
        Player -> reason, for players that could not be identified.
    """

    players: dict
    copula: object
    points: np.ndarray
    alpha: np.ndarray
    beliefs: np.ndarray
    mode: str
    failures: dict = field(default_factory=dict)
    belief_notes: list = field(default_factory=list)
    meta: dict = field(default_factory=dict)

    @property
    def n_players(self):
        return self.alpha.shape[1]

    def payoff_rows(self):
        """Rows ``(player, rival pattern, x_i cell, value, rank class, sign)``."""
        rows = []
        for i, res in sorted(self.players.items()):
            P = all_profiles(self.n_players - 1)
            signs = res.signs()
            for k in res.cells:
                cp = res.payoffs[k]
                for r, a in enumerate(P):
                    rows.append({"player": i + 1, "rivals": profile_label(a), "x_i": k,
                                 "value": float(cp.values[r]), "rank_class": cp.rank_class,
                                 "sign": int(signs[k][r])})
        return rows

    def quantile_rows(self):
        rows = []
        for i, res in sorted(self.players.items()):
            for a, q in zip(res.quantiles.alpha, res.quantiles.q):
                rows.append({"player": i + 1, "alpha": float(a), "Q": float(q)})
        return rows

    def belief_rows(self):
        P = all_profiles(self.n_players - 1)
        rows = []
        for k, x in enumerate(self.points):
            for i in range(self.n_players):
                for r, a in enumerate(P):
                    v = self.beliefs[k, i, r]
                    rows.append({**{f"x_{j + 1}": float(x[j]) for j in range(len(x))},
                                 "player": i + 1, "rivals": profile_label(a),
                                 "alpha_i": float(self.alpha[k, i]),
                                 "sigma": "" if np.isnan(v) else float(v)})
        return rows

    def report(self):
        out = {"mode": self.mode, "players": {}, "failures": {str(i + 1): v for i, v in self.failures.items()},
               "copula_monotone": bool(self.copula.monotone) if self.copula is not None else None,
               "belief_failures": sum(n is not None for n in self.belief_notes)}
        for i, res in sorted(self.players.items()):
            out["players"][str(i + 1)] = res.report()
        out.update(self.meta)
        return out


def _cells_for_player(i, points, alpha, beliefs, weights=None, decimals=CELL_DECIMALS, width=None,
                      trim=0.0):
    """Group covariate profiles by own covariate (rounded, or binned by ``width``).

    Points whose own choice probability is within ``trim`` of 0 or 1 are dropped.
    """
    xi = points[:, i]
    keys = np.round(xi if width is None else np.floor(xi / width + 0.5) * width, decimals)
    ok = (np.all(np.isfinite(beliefs[:, i]), axis=1) & (alpha[:, i] > trim)
          & (alpha[:, i] < 1 - trim))
    cells = {}
    for k in np.unique(keys):
        sel = ok & (keys == k)
        if not np.any(sel):
            continue
        w = None if weights is None else weights[sel]
        cells[float(k)] = CellData(i, float(k), points[sel], alpha[sel], beliefs[sel, i], w)
    return cells


def _rank_systems(cells, tol):
    systems, notes = {}, {}
    for k, cell in cells.items():
        try:
            systems[k] = build_rank_system(cell, tol=tol)
        except CellEmpty as exc:
            notes[k] = str(exc)
    return systems, notes


def identify_population(game, rule=None, design=None, players=None, x_star=None, table=None,
                        copula_nodes=None, **solve_kw):
    """Run the identification argument on exact population choice probabilities.

    Parameters
    ----------
    game : GameStructure
        Must satisfy the exclusion restriction with one covariate per player.
    x_star : dict, optional
        Player -> normalization cell. Chosen automatically when missing.
    table : PopulationTable, optional
        Reuse precomputed choice probabilities.
    """
    if not game.exclusion:
        raise DomainError("point identification needs payoffs satisfying the exclusion restriction")
    table = population_table(game, rule, design, **solve_kw) if table is None else table
    interior = np.all((table.alpha > 0) & (table.alpha < 1), axis=1)
    joint = PopulationJoint(game.copula, table.alpha[interior])
    beliefs, notes = belief_table(joint, table.alpha)
    ccp = PopulationCCPEstimate(table)
    cop = estimate_copula(joint, copula_nodes)
    res = IdentificationResult({}, cop, table.x, ccp.alpha(table.x), beliefs, "population",
                               belief_notes=notes)
    x_star = x_star or {}
    for i in (range(game.n_players) if players is None else players):
        cells = _cells_for_player(i, table.x, table.alpha, beliefs, table.weights)
        systems, _ = _rank_systems(cells, POPULATION_TOL)
        try:
            res.players[i] = iterate_collection(cells, systems, x_star.get(i), joint)
        except (NormalizationInfeasible, UnderIdentifiedCell) as exc:
            res.failures[i] = f"{type(exc).__name__}: {exc}"
    return res


def normalized_truth(game, player, x_star, a0=0):
    """True payoffs and quantiles under the normalization ``pi(a0, x*) = 0``, ``||pi(., x*)|| = 1``.

    Returns ``(payoff_fn, quantile_fn)`` mapping own covariate values and
    choice probabilities to normalized truth.
    """
    p = game.payoffs[player]
    base = p.own_values(np.array([x_star]))[0]
    loc = base[a0]
    scale = np.linalg.norm(base - loc)

    def payoff_fn(xi):
        return (p.own_values(np.atleast_1d(np.asarray(xi, dtype=float))) - loc) / scale

    def quantile_fn(a):
        return (game.marginals[player].ppf(np.asarray(a, dtype=float)) - loc) / scale

    return payoff_fn, quantile_fn


def identify_sample(data, degree=3, link="probit", bandwidth_constant=1.0, K=6, cell_width=None,
                    x_star=None, players=None, min_n=50, copula_nodes=None, rank_tol=SAMPLE_TOL,
                    alpha_trim=0.0, basis="legendre", cell_bandwidth=None):
    """Two-step estimator on a dataset.

    Step 1 fits sieve choice probabilities and a local-linear joint choice
    regression on them; beliefs are its slopes. Step 2 runs
    :func:`~bingames.identify.sieve.sieve_step2` per player over own-covariate
    cells (distinct values, or bins of ``cell_width``).

    Parameters
    ----------
    alpha_trim : float
        Drop observations whose own estimated choice probability is within
        ``alpha_trim`` of 0 or 1 before step 2.
    basis : {"legendre", "hermite"}
        Quantile sieve basis.
    cell_bandwidth : float, optional
        Half-width of the kernel pooling neighbouring own-covariate cells in
        step 2.
    """
    from .sieve import sieve_step2

    if data.n < min_n:
        raise CellEmpty(f"dataset has {data.n} rows, fewer than {min_n}")
    ccp = estimate_ccp(data, degree=degree, link=link, min_n=min_n)
    ux, inv, cnt = np.unique(data.x, axis=0, return_inverse=True, return_counts=True)
    inv = inv.ravel()
    alpha = ccp.alpha(ux)
    I = data.n_players
    idx = data.y.astype(int) @ (2 ** np.arange(I - 1, -1, -1))
    freq = np.zeros((len(ux), 2 ** I))
    np.add.at(freq, (inv, idx), 1.0)
    freq /= cnt[:, None]
    h = bandwidth_constant * data.n ** (-1.0 / 6.0)
    joint = LocalLinearJoint(alpha, cnt, freq, h)
    beliefs, notes = belief_table(joint, alpha, anchor=A0_ANCHOR)
    cop = estimate_copula(joint, np.linspace(0, 1, 11) if copula_nodes is None else copula_nodes)
    res = IdentificationResult({}, cop, ux, alpha, beliefs, "sample", belief_notes=notes,
                               meta={"ccp": ccp.describe(), "bandwidth": float(h), "K": int(K),
                                     "basis": basis, "alpha_trim": float(alpha_trim)})
    x_star = x_star or {}
    for i in (range(I) if players is None else players):
        cells = _cells_for_player(i, ux, alpha, beliefs, cnt.astype(float), width=cell_width,
                                  trim=alpha_trim)
        systems, _ = _rank_systems(cells, rank_tol)
        try:
            res.players[i] = sieve_step2(cells, systems, x_star.get(i), K=K, basis=basis,
                                         cell_bandwidth=cell_bandwidth)
        except NormalizationInfeasible as exc:
            res.failures[i] = f"{type(exc).__name__}: {exc}"
    return res
