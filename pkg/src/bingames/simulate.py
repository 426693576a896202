"""Population choice probabilities and simulated choice data.

The data-generating process picks one equilibrium per covariate profile by a
deterministic selection rule and plays it for every draw at that profile. With
``alpha_j = F_j(u*_j(x))`` a player acts iff ``V_j <= alpha_j``, where ``V`` is
the copula draw, which is the same event as ``U_j <= u*_j``.
"""

import csv
import json
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .equilibrium import default_threads, solve_mpse
from .errors import DomainError, NoEquilibrium
from .game_core.kernels import profile_probabilities
from .game_core.profiles import all_profiles, profile_index
from .game_core.structure import GridDesign

BLOCK_SIZE = 4096


# ---------------------------------------------------------------------------
# selection rules

class SelectionRule:
    name = "abstract"

    def select(self, eqset, alphas):
        """Index into ``eqset.equilibria``; ``alphas`` holds their choice probabilities."""
        raise NotImplementedError

    def describe(self):
        return self.name


class FirstListed(SelectionRule):
    """The first equilibrium in solver order."""

    name = "first"

    def select(self, eqset, alphas):
        return 0


class LowestThreshold(SelectionRule):
    """The componentwise-lowest equilibrium.

    When no equilibrium is below all others componentwise, the one with the
    smallest total choice probability is used, ties broken lexicographically.
    """

    name = "lowest"

    def select(self, eqset, alphas):
        A = np.asarray(alphas)
        below = np.all(A[:, None, :] <= A[None, :, :] + 1e-12, axis=2).all(axis=1)
        if np.any(below):
            return int(np.flatnonzero(below)[0])
        keys = [(round(float(a.sum()), 12),) + tuple(np.round(a, 12)) for a in A]
        return int(min(range(len(A)), key=keys.__getitem__))


class IndexByX(SelectionRule):
    """Equilibrium chosen by a deterministic map ``x -> index``.

    Equilibria are first sorted by player 1's threshold so the index does not
    depend on solver order. With ``wrap`` the index is taken modulo the number
    of equilibria; otherwise an out-of-range index is an error.
    """

    name = "index_by_x"

    def __init__(self, fn, wrap=True, label="index_by_x"):
        self.fn = fn
        self.wrap = bool(wrap)
        self.label = label

    def select(self, eqset, alphas):
        order = np.lexsort(np.asarray(eqset.thresholds).T[::-1])
        k = int(self.fn(np.asarray(eqset.x)))
        if self.wrap:
            k %= len(order)
        elif not 0 <= k < len(order):
            raise DomainError(f"selection index {k} out of range at x = {eqset.x}")
        return int(order[k])

    def describe(self):
        return f"{self.name}:{self.label}"


class NearestAlpha(SelectionRule):
    """The equilibrium whose choice probabilities are closest to ``target(x)``."""

    name = "nearest_alpha"

    def __init__(self, target, label="target"):
        self.target = target
        self.label = label

    def select(self, eqset, alphas):
        t = np.asarray(self.target(np.asarray(eqset.x)), dtype=float)
        return int(np.argmin(np.abs(np.asarray(alphas) - t).max(axis=1)))

    def describe(self):
        return f"{self.name}:{self.label}"


def alternating_rule(values, axis=-1):
    """IndexByX rule alternating between the two extreme equilibria along ``x[axis]``.

    ``values`` lists the grid values taken by ``x[axis]``; even-ranked values
    select the equilibrium with the lowest player-1 threshold, odd-ranked ones
    the highest.
    """
    values = np.unique(np.asarray(values, dtype=float))

    def fn(x):
        rank = int(np.argmin(np.abs(values - x[axis])))
        return 0 if rank % 2 == 0 else -1

    return IndexByX(fn, wrap=True, label=f"alternate[{axis}]")


DEFAULT_RULE = LowestThreshold()


def get_rule(name):
    rules = {"first": FirstListed, "lowest": LowestThreshold}
    try:
        return rules[name]()
    except KeyError:
        raise DomainError(f"unknown selection rule {name!r}; expected one of {sorted(rules)}") from None


# ---------------------------------------------------------------------------
# population choice probabilities

@dataclass
class PopulationCCP:
    """Exact choice probabilities at one covariate profile.

    ``joint`` is indexed by action profile in product order (index 0 is all zeros).
    """

    x: tuple
    alpha: np.ndarray
    joint: np.ndarray
    u_star: tuple = ()
    n_equilibria: int = 1
    selected: int = 0

    def __iter__(self):
        return iter((self.alpha, self.joint))

    def prob(self, a):
        return float(self.joint[profile_index(a)])


def _select(g, x, rule, solve_kw):
    es = solve_mpse(g, x, **solve_kw)
    if not es.equilibria:
        raise NoEquilibrium(x)
    alphas = es.alphas(g.marginals)
    k = rule.select(es, alphas)
    return es, k, alphas[k]


def population_ccp(g, x, rule=None, **solve_kw):
    """Marginal and joint choice probabilities implied by the selected equilibrium at ``x``."""
    rule = DEFAULT_RULE if rule is None else rule
    x = np.asarray(x, dtype=float)
    es, k, alpha = _select(g, x, rule, solve_kw)
    joint = profile_probabilities(g.copula, alpha)
    return PopulationCCP(tuple(x.ravel()), alpha, joint, es.equilibria[k].u_star, len(es), k)


@dataclass
class PopulationTable:
    """Population choice probabilities over the points of a grid design."""

    x: np.ndarray
    alpha: np.ndarray
    joint: np.ndarray
    u_star: np.ndarray
    n_equilibria: np.ndarray
    weights: np.ndarray = None
    continuous: bool = False

    def __len__(self):
        return len(self.x)


def _solve_points(g, points, rule, threads, solve_kw):
    def work(x):
        return _select(g, x, rule, solve_kw)

    threads = default_threads() if threads is None else max(1, int(threads))
    if threads == 1:
        return [work(x) for x in points]
    with ThreadPoolExecutor(threads) as ex:
        return list(ex.map(work, points))


def population_table(g, rule=None, design=None, threads=None, **solve_kw):
    """Exact choice probabilities at every point of a grid design (default: the game's)."""
    rule = DEFAULT_RULE if rule is None else rule
    design = g.design if design is None else design
    if design is None:
        raise DomainError("population_table needs a covariate design")
    if not isinstance(design, GridDesign):
        raise DomainError("population mode needs a grid design; discretize continuous boxes first")
    out = _solve_points(g, design.points, rule, threads, solve_kw)
    alpha = np.array([a for _, _, a in out])
    joint = profile_probabilities(g.copula, alpha)
    u = np.array([es.equilibria[k].u_star for es, k, _ in out])
    n_eq = np.array([len(es) for es, _, _ in out])
    return PopulationTable(design.points.copy(), alpha, joint, u, n_eq, design.weights.copy(),
                           design.continuous)


# ---------------------------------------------------------------------------
# datasets

@dataclass
class Dataset:
    """Observed covariates ``x`` (n, d) and actions ``y`` (n, I)."""

    x: np.ndarray
    y: np.ndarray
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        x = np.asarray(self.x, dtype=float)
        y = np.asarray(self.y, dtype=np.int8)
        if x.ndim != 2:
            x = x.reshape(len(x), -1) if x.size else x.reshape(0, self.meta.get("d", 0))
        if y.ndim != 2:
            y = y.reshape(len(y), -1) if y.size else y.reshape(0, self.meta.get("I", 0))
        self.x, self.y = x, y
        if len(self.x) != len(self.y):
            raise DomainError("x and y must have the same number of rows")
        if self.y.size and not np.all((self.y == 0) | (self.y == 1)):
            raise DomainError("actions must be binary")

    @property
    def n(self):
        return len(self.y)

    @property
    def n_players(self):
        return self.y.shape[1]

    def profile_counts(self):
        """Counts of each action profile, in product order."""
        I = self.n_players
        idx = self.y @ (2 ** np.arange(I - 1, -1, -1))
        return np.bincount(idx, minlength=2 ** I)

    def cells(self, decimals=12):
        """Unique covariate rows, inverse index and counts."""
        xr = np.round(self.x, decimals)
        return np.unique(xr, axis=0, return_inverse=True, return_counts=True)

    def header(self):
        d, I = self.x.shape[1], self.y.shape[1]
        return [f"x_{k + 1}" for k in range(d)] + [f"y_{i + 1}" for i in range(I)]

    def to_csv(self, path, sidecar=True):
        """Write ``x_1..x_d,y_1..y_I`` rows and, optionally, ``<path>.meta.json``."""
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(self.header())
            for xr, yr in zip(self.x, self.y):
                w.writerow([repr(float(v)) for v in xr] + [int(v) for v in yr])
        if sidecar:
            with open(str(path) + ".meta.json", "w") as fh:
                json.dump(self.meta, fh, indent=2, sort_keys=True)
                fh.write("\n")

    @classmethod
    def read_csv(cls, path):
        with open(path, newline="") as fh:
            rows = list(csv.reader(fh))
        if not rows:
            raise DomainError(f"{path}: empty dataset file")
        head = rows[0]
        xcols = [k for k, h in enumerate(head) if h.startswith("x_")]
        ycols = [k for k, h in enumerate(head) if h.startswith("y_")]
        if not ycols or len(xcols) + len(ycols) != len(head):
            raise DomainError(f"{path}: header must be x_1..x_d,y_1..y_I")
        body = np.array(rows[1:], dtype=float).reshape(-1, len(head))
        meta = {}
        side = str(path) + ".meta.json"
        if os.path.exists(side):
            with open(side) as fh:
                meta = json.load(fh)
        meta.setdefault("d", len(xcols))
        meta.setdefault("I", len(ycols))
        return cls(body[:, xcols], body[:, ycols].astype(np.int8), meta)


def _block_draws(g, design, seed, block, size):
    rng = np.random.default_rng(np.random.SeedSequence([int(seed), int(block)]))
    x = design.sample(size, rng)
    v = g.copula.sample(size, rng)
    return x, v


def sample_dataset(g, n, rule=None, seed=0, design=None, threads=None, return_types=False,
                   **solve_kw):
    """Simulate ``n`` observations from ``g`` under a selection rule.

    Rows are generated in blocks of ``BLOCK_SIZE`` and block ``b`` draws from
    ``SeedSequence([seed, b])``, so the data do not depend on the thread count.
    Equilibria are solved once per distinct covariate profile.

    Returns
    -------
    Dataset
        With ``meta`` holding the seed, size, rule and game hash. When
        ``return_types`` is set, ``meta["v"]`` holds the copula draws.
    """
    rule = DEFAULT_RULE if rule is None else rule
    design = g.design if design is None else design
    if design is None:
        raise DomainError("sample_dataset needs a covariate design")
    n = int(n)
    if n < 0:
        raise DomainError("sample size must be nonnegative")
    I, d = g.n_players, design.dim
    meta = {"seed": int(seed), "n": n, "rule": rule.describe(), "game_hash": g.game_hash(),
            "block_size": BLOCK_SIZE, "d": d, "I": I}
    if n == 0:
        return Dataset(np.empty((0, d)), np.empty((0, I), dtype=np.int8), meta)
    sizes = [BLOCK_SIZE] * (n // BLOCK_SIZE) + ([n % BLOCK_SIZE] if n % BLOCK_SIZE else [])
    parts = [_block_draws(g, design, seed, b, s) for b, s in enumerate(sizes)]
    x = np.concatenate([p[0] for p in parts])
    v = np.concatenate([p[1] for p in parts])
    ux, inv = np.unique(x, axis=0, return_inverse=True)
    inv = inv.ravel()
    try:
        out = _solve_points(g, ux, rule, threads, solve_kw)
    except NoEquilibrium as exc:
        raise NoEquilibrium(exc.x, f"simulation aborted: {exc}") from exc
    alpha = np.array([a for _, _, a in out])[inv]
    y = (v <= alpha).astype(np.int8)
    if return_types:
        meta["v"] = v
    return Dataset(x, y, meta)


# ---------------------------------------------------------------------------
# the two-population mixture fixture

def heterogeneity_fixture():
    """Two covariate profiles with equal marginals but different joint choice rates.

    Each profile mixes two equally likely subpopulations in which choices are
    independent. At ``x`` the subpopulation choice probabilities are (0.4, 0.4)
    and (0.6, 0.6); at ``x'`` they are (0.3, 0.7) and (0.7, 0.3). Both profiles
    have marginals (0.5, 0.5), while ``E(Y1 Y2)`` is 0.26 at ``x`` and 0.21 at ``x'``.
    """
    P = all_profiles(2)

    def mix(components):
        joint = np.zeros(4)
        for a in components:
            a = np.asarray(a, dtype=float)
            joint += 0.5 * np.prod(np.where(P == 1, a, 1.0 - a), axis=1)
        alpha = np.array([joint[P[:, i] == 1].sum() for i in range(2)])
        return alpha, joint

    a0, j0 = mix([(0.4, 0.4), (0.6, 0.6)])
    a1, j1 = mix([(0.3, 0.7), (0.7, 0.3)])
    return (PopulationCCP((0.0,), a0, j0), PopulationCCP((1.0,), a1, j1))


# ---------------------------------------------------------------------------
# equilibrium switching driven by an unrecorded covariate

def switching_fixture(rho=0.5, x2=None, pair=(0, 1), rule_on_observed=False):
    """Case-2 substitutes population whose selected equilibrium follows a switch.

    The design is ``(1, x_2, z)`` with ``z`` in {0, 1} equally likely; payoffs
    ignore ``z`` and an :class:`IndexByX` rule plays equilibrium ``pair[z]``
    (in threshold order). ``z`` is not recorded, so the observed table at
    ``(1, x_2)`` mixes two equilibria.

    With ``rule_on_observed`` the switch is instead driven by ``x_2`` itself
    through :func:`alternating_rule` and the table is reported as is; every
    profile then plays a single equilibrium.

    Returns
    -------
    observed : PopulationTable
        Over ``(x_1, x_2)``.
    full : PopulationTable
        Over the design actually solved.
    """
    from .reference import example_case2

    g, _ = example_case2(rho)
    x2 = np.linspace(0.8, 1.2, 9) if x2 is None else np.asarray(x2, dtype=float)
    if rule_on_observed:
        design = GridDesign.product([1.0], x2)
        full = population_table(g, alternating_rule(x2, axis=1), design)
        return full, full
    design = GridDesign.product([1.0], x2, [0.0, 1.0])
    rule = IndexByX(lambda x: pair[int(round(x[2]))], wrap=True, label=f"switch{tuple(pair)}")
    full = population_table(g, rule, design)
    m = len(x2)
    joint = full.joint.reshape(m, 2, -1).mean(axis=1)
    alpha = joint @ all_profiles(2)
    observed = PopulationTable(full.x[::2, :2].copy(), alpha, joint, full.u_star[::2],
                               full.n_equilibria[::2], np.full(m, 1.0 / m))
    return observed, full
