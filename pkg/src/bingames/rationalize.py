"""Diagnostics for the restrictions that single-equilibrium monotone play puts on choice data.

Every check works on a :class:`ChoiceData` table: one row per distinct
covariate profile, with marginal choice probabilities ``alpha`` and the joint
profile distribution. Population tables are exact and use tight numerical
thresholds. Sample tables carry counts; their statistics subtract ``z``
binomial standard errors before the comparison with a sup-norm threshold.
These are fixed-threshold diagnostics, not formal tests.
"""

import hashlib
import itertools
import json
from dataclasses import asdict, dataclass, field

import numpy as np
from scipy import stats
from scipy.interpolate import CloughTocher2DInterpolator
from scipy.optimize import isotonic_regression

from .errors import CellEmpty, DomainError, NumericalDerivativeError, SingularDesign, SupportDeficient
from .game_core.profiles import all_profiles, profile_label

PASS, FAIL, INCONCLUSIVE, SKIPPED = "pass", "fail", "inconclusive", "skipped"
CHECKS = ("zeros", "r1", "r2", "r3", "ci", "multiplicity")


@dataclass
class RationalizeConfig:
    """Thresholds and smoothing knobs of the diagnostics.

    Attributes
    ----------
    population_tol : float
        Threshold for exact tables.
    sample_tol : float
        Sup-norm threshold for sample tables, applied after the ``z``-SE allowance.
    z : float
        Standard errors forgiven at each probe in sample mode.
    pair_tol : float
        Two population profiles share choice probabilities when these differ by at most this.
    confidence : float
        Level of the exact binomial intervals used for structural zeros.
    zero_level : float
        A sample probability counts as zero when its upper confidence bound is below this.
    r3_bound : float
        Bound on scaled second differences of the joint-choice regression.
    r3_step : float
        Grid step of the second-difference check.
    bandwidth_constant, degree, link :
        Smoothing of the sample-mode joint regression and choice probabilities.
    cell_width : float, optional
        Bin width of own-covariate cells for the multiplicity diagnostic.
    """

    population_tol: float = 1e-8
    sample_tol: float = 0.02
    z: float = 3.0
    pair_tol: float = 1e-9
    confidence: float = 0.95
    zero_level: float = 1e-3
    r3_bound: float = 50.0
    r3_step: float = 0.02
    bandwidth_constant: float = 1.0
    degree: int = 3
    link: str = "probit"
    cell_width: float = None


@dataclass
class CheckResult:
    name: str
    statistic: float
    threshold: float
    verdict: str
    witnesses: list = field(default_factory=list)
    notes: list = field(default_factory=list)
    extra: dict = field(default_factory=dict)

    @property
    def passed(self):
        return self.verdict == PASS


@dataclass
class RationalizationReport:
    """Verdicts of the requested checks, keyed by check name."""

    checks: dict
    mode: str
    data_hash: str
    config: dict

    @property
    def passed(self):
        return all(c.verdict in (PASS, SKIPPED) for c in self.checks.values())

    def __getitem__(self, name):
        return self.checks[name]

    def to_dict(self):
        return {"mode": self.mode, "data_hash": self.data_hash, "config": self.config,
                "checks": {k: asdict(v) for k, v in self.checks.items()}}

    def to_json(self):
        return json.dumps(_jsonable(self.to_dict()), indent=2, sort_keys=True)


def _jsonable(obj):
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return _jsonable(obj.tolist())
    if isinstance(obj, (np.floating, float)):
        v = float(obj)
        return v if np.isfinite(v) else str(v)
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, np.bool_):
        return bool(obj)
    return obj


# ---------------------------------------------------------------------------
# input tables

@dataclass
class ChoiceData:
    """Choice probabilities by distinct covariate profile.

    Attributes
    ----------
    x : ndarray (m, d)
    alpha : ndarray (m, I)
        Marginal choice probabilities (smoothed estimates in sample mode).
    joint : ndarray (m, 2**I)
        Profile probabilities in product order (empirical frequencies in sample mode).
    counts : ndarray (m,), optional
        Observations per profile; ``None`` marks an exact population table.
    marginal_freq : ndarray (m, I), optional
        Raw marginal frequencies (sample mode).
    continuous : bool
        Whether the covariates come from a discretized continuous design.
    """

    x: np.ndarray
    alpha: np.ndarray
    joint: np.ndarray
    counts: np.ndarray = None
    marginal_freq: np.ndarray = None
    continuous: bool = False

    def __post_init__(self):
        self.x = np.atleast_2d(np.asarray(self.x, dtype=float))
        self.alpha = np.atleast_2d(np.asarray(self.alpha, dtype=float))
        self.joint = np.atleast_2d(np.asarray(self.joint, dtype=float))
        if self.counts is not None:
            self.counts = np.asarray(self.counts, dtype=float).ravel()
        if self.marginal_freq is not None:
            self.marginal_freq = np.atleast_2d(np.asarray(self.marginal_freq, dtype=float))
        m, I = self.alpha.shape
        if self.joint.shape != (m, 2 ** I) or len(self.x) != m:
            raise DomainError(f"malformed choice table: alpha {self.alpha.shape}, joint "
                              f"{self.joint.shape}, x {self.x.shape}")
        if self.counts is None and not np.allclose(self.joint.sum(axis=1), 1.0, atol=1e-9):
            raise DomainError("joint rows must sum to one")
        if np.any(self.joint < -1e-12):
            raise DomainError("joint probabilities must be nonnegative")

    @property
    def n_players(self):
        return self.alpha.shape[1]

    @property
    def population(self):
        return self.counts is None

    @property
    def mode(self):
        return "population" if self.population else "sample"

    def subset_probability(self, T):
        """``P(Y_j = 1 for all j in T)`` per row, from the joint table."""
        P = all_profiles(self.n_players)
        return self.joint[:, np.all(P[:, list(T)] == 1, axis=1)].sum(axis=1)

    def implied_marginals(self):
        P = all_profiles(self.n_players)
        return self.joint @ P

    def digest(self):
        h = hashlib.sha256()
        for arr in (self.x, self.alpha, self.joint):
            h.update(np.ascontiguousarray(arr, dtype=float).tobytes())
        if self.counts is not None:
            h.update(np.ascontiguousarray(self.counts, dtype=float).tobytes())
        return h.hexdigest()[:16]

    @classmethod
    def from_population(cls, table):
        """From a :class:`~bingames.simulate.PopulationTable` (or an iterable of
        :class:`~bingames.simulate.PopulationCCP`)."""
        if hasattr(table, "joint") and hasattr(table, "alpha") and np.ndim(table.alpha) == 2:
            return cls(table.x, table.alpha, table.joint, continuous=bool(getattr(table, "continuous", False)))
        rows = list(table)
        x = [np.asarray(r.x, dtype=float) for r in rows]
        return cls(np.array(x), np.array([r.alpha for r in rows]), np.array([r.joint for r in rows]))

    @classmethod
    def from_dataset(cls, data, degree=3, link="probit", continuous=False):
        """Aggregate a :class:`~bingames.simulate.Dataset` by covariate profile.

        ``alpha`` holds the sieve choice-probability estimates; when the sieve
        cannot be fitted the raw frequencies are used instead.
        """
        from .identify.ccp import estimate_ccp

        ux, inv, cnt = np.unique(data.x, axis=0, return_inverse=True, return_counts=True)
        inv = inv.ravel()
        I = data.n_players
        idx = data.y.astype(int) @ (2 ** np.arange(I - 1, -1, -1))
        freq = np.zeros((len(ux), 2 ** I))
        np.add.at(freq, (inv, idx), 1.0)
        freq /= cnt[:, None]
        marg = freq @ all_profiles(I)
        try:
            alpha = estimate_ccp(data, degree=degree, link=link).alpha(ux)
        except (CellEmpty, SingularDesign):
            alpha = marg
        return cls(ux, alpha, freq, cnt.astype(float), marg, continuous)


def _result(name, stat, thr, witnesses=(), notes=(), **extra):
    verdict = PASS if stat <= thr else FAIL
    return CheckResult(name, float(stat), float(thr), verdict, list(witnesses), list(notes), extra)


def _threshold(data, cfg):
    return cfg.population_tol if data.population else cfg.sample_tol


def _subsets(I, min_size=2):
    return [T for p in range(min_size, I + 1) for T in itertools.combinations(range(I), p)]


def _row(data, k):
    return tuple(float(v) for v in data.x[k])


# ---------------------------------------------------------------------------
# structural zeros

def _cp_upper(k, n, conf):
    """Upper end of the two-sided Clopper-Pearson interval."""
    k, n = np.asarray(k, dtype=float), np.asarray(n, dtype=float)
    a = 1.0 - conf
    with np.errstate(invalid="ignore"):
        up = stats.beta.ppf(1 - a / 2, k + 1, np.maximum(n - k, 1e-300))
    return np.where(k >= n, 1.0, up)


def check_structural_zeros(data, cfg=None):
    """Every zero profile probability must come from a zero marginal.

    A profile ``a`` with ``P(Y = a | x) = 0`` is explained when some player has
    ``P(Y_i = a_i | x) = 0``. In sample mode a probability is zero when its
    count is zero and its upper Clopper-Pearson bound is below ``zero_level``;
    a marginal counts as zero when its count is zero.
    """
    cfg = cfg or RationalizeConfig()
    P = all_profiles(data.n_players)
    if data.population:
        tol = 1e-12
        zero = data.joint <= tol
        marg = data.implied_marginals()
        marg_zero = np.stack([np.where(P[None, :, i] == 1, marg[:, None, i] <= tol,
                                       1 - marg[:, None, i] <= tol) for i in range(data.n_players)], -1)
    else:
        n = data.counts[:, None]
        k = np.rint(data.joint * n)
        zero = (k == 0) & (_cp_upper(k, n, cfg.confidence) < cfg.zero_level)
        kc = np.rint(data.marginal_freq * n)
        marg_zero = np.stack([np.where(P[None, :, i] == 1, kc[:, None, i] == 0, kc[:, None, i] == n)
                              for i in range(data.n_players)], -1)
    bad = zero & ~np.any(marg_zero, axis=-1)
    wit = [{"x": _row(data, r), "profile": profile_label(P[c]), "alpha": data.alpha[r].tolist()}
           for r, c in zip(*np.nonzero(bad))]
    return _result("zeros", int(bad.sum()), 0, wit[:20], n_zero=int(zero.sum()))


# ---------------------------------------------------------------------------
# R1: joint choices depend on covariates only through the choice probabilities

def _population_r1(data, cfg):
    worst, wit, n_pairs = 0.0, [], 0
    for T in _subsets(data.n_players):
        a = data.alpha[:, list(T)]
        m = data.subset_probability(T)
        order = np.lexsort(a.T[::-1])
        a, m = a[order], m[order]
        for s in range(len(a)):
            # candidate partners sorted after s with first coordinate within tolerance
            t = s + 1
            while t < len(a) and a[t, 0] - a[s, 0] <= cfg.pair_tol:
                if np.all(np.abs(a[t] - a[s]) <= cfg.pair_tol):
                    n_pairs += 1
                    d = abs(m[t] - m[s])
                    if d > cfg.population_tol:
                        wit.append({"subset": [j + 1 for j in T],
                                    "x": [_row(data, order[s]), _row(data, order[t])],
                                    "alpha": [a[s].tolist(), a[t].tolist()],
                                    "joint": [float(m[s]), float(m[t])]})
                    worst = max(worst, d)
                t += 1
    notes = [] if n_pairs else ["no two profiles share choice probabilities; R1 holds vacuously"]
    wit.sort(key=lambda w: -abs(w["joint"][0] - w["joint"][1]))
    return _result("r1", worst, cfg.population_tol, wit[:20], notes, n_pairs=n_pairs)


def _smoother(data, cfg):
    from .identify.joint import LocalLinearJoint

    h = cfg.bandwidth_constant * data.counts.sum() ** (-1.0 / 6.0)
    return LocalLinearJoint(data.alpha, data.counts, data.joint, h)


def _sample_fit(data, cfg, T):
    """Smoothed ``E(prod_T Y | alpha_T)`` at every row; NaN where the fit fails."""
    sm = _smoother(data, cfg)
    out = np.full(len(data.alpha), np.nan)
    for k, a in enumerate(data.alpha[:, list(T)]):
        try:
            out[k] = sm.subset_mean(T, a)[0]
        except (SupportDeficient, NumericalDerivativeError):
            pass
    return out


def _sample_r1(data, cfg):
    worst, wit, evaluated = 0.0, [], 0
    for T in _subsets(data.n_players):
        fit = _sample_fit(data, cfg, T)
        emp = data.subset_probability(T)
        ok = np.isfinite(fit)
        evaluated += int(ok.sum())
        p = np.clip(fit, 1e-6, 1 - 1e-6)
        se = np.sqrt(p * (1 - p) / data.counts)
        excess = np.where(ok, np.abs(emp - fit) - cfg.z * se, -np.inf)
        k = int(np.argmax(excess))
        if excess[k] > worst:
            worst = float(excess[k])
            wit = [{"subset": [j + 1 for j in T], "x": _row(data, k), "empirical": float(emp[k]),
                    "fitted": float(fit[k]), "se": float(se[k])}]
    if evaluated == 0:
        return CheckResult("r1", float("nan"), cfg.sample_tol, INCONCLUSIVE,
                           notes=["support too thin for the joint-choice regression"])
    return _result("r1", max(worst, 0.0), cfg.sample_tol, wit, evaluated=evaluated)


def test_r1(data, cfg=None):
    """Joint choices must depend on ``x`` only through ``alpha(x)``.

    Population tables compare profiles with identical choice probabilities;
    the statistic is the largest gap in ``P(all of T act)``. Sample tables
    compare empirical joint frequencies with a local-linear regression on the
    estimated choice probabilities.
    """
    cfg = cfg or RationalizeConfig()
    return _population_r1(data, cfg) if data.population else _sample_r1(data, cfg)


# ---------------------------------------------------------------------------
# R2: monotonicity of the joint-choice regression

def _dominance_violations(a, m, sep, flat_tol):
    """Largest ``m(k) - m(l)`` over pairs with ``a(l) >= a(k)`` and ``a(l) != a(k)``."""
    worst, arg, n_pairs, n_flat = -np.inf, None, 0, 0
    for k in range(len(a)):
        diff = a - a[k]
        dom = np.all(diff >= -1e-15, axis=1) & np.any(diff > sep, axis=1)
        if not np.any(dom):
            continue
        gap = m[k] - m[dom]
        n_pairs += int(dom.sum())
        n_flat += int(np.sum(np.abs(gap) <= flat_tol))
        j = int(np.argmax(gap))
        if gap[j] > worst:
            worst, arg = float(gap[j]), (k, int(np.flatnonzero(dom)[j]))
    return worst, arg, n_pairs, n_flat


def test_r2(data, cfg=None):
    """The joint-choice regression must increase in each choice probability.

    Rows with a zero coordinate in the subset are left out. The result carries
    ``strict = False`` when some dominated pair shows no increase, which flags
    weak but not strict monotonicity without changing the verdict.
    """
    cfg = cfg or RationalizeConfig()
    thr = _threshold(data, cfg)
    worst, wit, pairs, flats = 0.0, [], 0, 0
    for T in _subsets(data.n_players):
        a = data.alpha[:, list(T)]
        m = data.subset_probability(T) if data.population else _sample_fit(data, cfg, T)
        keep = np.all(a > 0, axis=1) & np.isfinite(m)
        idx = np.flatnonzero(keep)
        if len(idx) < 2:
            continue
        sep = cfg.pair_tol if data.population else 1e-3
        w, arg, n_p, n_f = _dominance_violations(a[idx], m[idx], sep, thr)
        pairs += n_p
        flats += n_f
        if arg is not None and w > worst:
            worst = w
            k, l = idx[arg[0]], idx[arg[1]]
            wit = [{"subset": [j + 1 for j in T], "x": [_row(data, k), _row(data, l)],
                    "alpha": [a[k].tolist(), a[l].tolist()], "joint": [float(m[k]), float(m[l])]}]
    if pairs == 0:
        return CheckResult("r2", float("nan"), thr, INCONCLUSIVE,
                           notes=["no ordered pairs of choice-probability points"])
    res = _result("r2", worst, thr, wit, strict=flats == 0, ordered_pairs=pairs, flat_pairs=flats)
    if flats:
        res.notes.append("weakly monotone, not strictly: some ordered pairs show no increase")
    return res


# ---------------------------------------------------------------------------
# R3: smoothness

def test_r3(data, cfg=None):
    """Bounded second differences of ``P(Y = (1, ..., 1) | alpha)`` on an alpha grid.

    Smoothness has no content with discrete covariates, so the check is
    skipped unless the table comes from a continuous design. Only two players
    are supported; the regression is interpolated with a C1 scheme
    (population) or local-linear smoothing (sample).
    """
    cfg = cfg or RationalizeConfig()
    if not data.continuous:
        return CheckResult("r3", float("nan"), cfg.r3_bound, SKIPPED,
                           notes=["discrete covariates: smoothness is not testable"])
    if data.n_players != 2:
        return CheckResult("r3", float("nan"), cfg.r3_bound, SKIPPED,
                           notes=["second-difference check implemented for two players"])
    h = cfg.r3_step
    lo, hi = data.alpha.min(axis=0), data.alpha.max(axis=0)
    g = [np.arange(lo[j] + h, hi[j] - h + 1e-12, h) for j in range(2)]
    if min(len(v) for v in g) < 3:
        return CheckResult("r3", float("nan"), cfg.r3_bound, INCONCLUSIVE,
                           notes=["choice-probability support narrower than three grid steps"])
    A1, A2 = np.meshgrid(*g, indexing="ij")
    if data.population:
        f = CloughTocher2DInterpolator(data.alpha, data.subset_probability((0, 1)))
        vals = f(A1, A2)
    else:
        sm = _smoother(data, cfg)
        vals = np.full(A1.shape, np.nan)
        for idx in np.ndindex(A1.shape):
            try:
                vals[idx] = sm.subset_mean((0, 1), [A1[idx], A2[idx]])[0]
            except (SupportDeficient, NumericalDerivativeError):
                pass
    d2 = [np.abs(np.diff(vals, 2, axis=ax)) / h ** 2 for ax in (0, 1)]
    stat = max(np.nanmax(d) if np.any(np.isfinite(d)) else np.nan for d in d2)
    if not np.isfinite(stat):
        return CheckResult("r3", float("nan"), cfg.r3_bound, INCONCLUSIVE,
                           notes=["too few grid points inside the support"])
    return _result("r3", stat, cfg.r3_bound)


# ---------------------------------------------------------------------------
# conditional independence

def test_conditional_independence(data, cfg=None):
    """Sup over profiles of ``|P(Y = a | x) - prod_i P(Y_i = a_i | x)|``."""
    cfg = cfg or RationalizeConfig()
    P = all_profiles(data.n_players)
    marg = data.implied_marginals() if data.population else data.marginal_freq
    prod = np.prod(np.where(P[None] == 1, marg[:, None, :], 1 - marg[:, None, :]), axis=-1)
    gap = np.abs(data.joint - prod)
    if not data.population:
        p = np.clip(prod, 1e-6, 1 - 1e-6)
        gap = gap - cfg.z * np.sqrt(p * (1 - p) / data.counts[:, None])
    r, c = np.unravel_index(int(np.argmax(gap)), gap.shape)
    stat = max(float(gap[r, c]), 0.0)
    wit = [{"x": _row(data, r), "profile": profile_label(P[c]), "joint": float(data.joint[r, c]),
            "product": float(prod[r, c])}]
    return _result("ci", stat, _threshold(data, cfg), wit)


# ---------------------------------------------------------------------------
# two-player multiplicity signature

def _isotonic_residual(a, b, w, z=0.0):
    """Sup residual of the better monotone fit of ``b`` on ``a`` (ties pooled).

    With ``z > 0`` the weights are sample counts and each residual is reduced
    by ``z`` binomial standard errors of the fitted value.
    """
    keys, inv = np.unique(np.round(a, 12), return_inverse=True)
    inv = inv.ravel()
    ws = np.bincount(inv, weights=w)
    means = np.bincount(inv, weights=w * b) / ws
    best = None
    for inc in (True, False):
        fit = isotonic_regression(means, weights=ws, increasing=inc).x
        res = np.abs(b - fit[inv])
        sse = float(np.sum(w * res ** 2))
        if z > 0:
            f = np.clip(fit[inv], 0.0, 1.0)
            res = res - z * np.sqrt(np.maximum(f * (1 - f), 1.0 / w) / w)
        if best is None or sse < best[0]:
            best = (sse, float(res.max()), inc, int(np.argmax(res)))
    return best


def test_multiplicity(data, cfg=None):
    """Within an own-covariate cell, ``alpha_j`` must be a monotone function of ``alpha_i``.

    Two players only. Cells are the distinct values of ``x_i`` (or bins of
    ``cell_width``). The statistic is the largest residual of the better of the
    increasing and decreasing least-squares fits, over cells and players.
    In sample mode the observed frequencies of ``a_j`` are fitted against the
    smoothed ``alpha_i`` and residuals are reduced by ``z`` standard errors.
    """
    cfg = cfg or RationalizeConfig()
    thr = _threshold(data, cfg)
    if data.n_players != 2:
        return CheckResult("multiplicity", float("nan"), thr, SKIPPED,
                           notes=["the monotone-relation signature is specific to two players"])
    if data.x.shape[1] < 2:
        return CheckResult("multiplicity", float("nan"), thr, SKIPPED,
                           notes=["needs one own covariate per player"])
    if data.population:
        w_all, target, z = np.ones(len(data.alpha)), data.alpha, 0.0
    else:
        w_all, z = data.counts.astype(float), cfg.z
        target = data.marginal_freq if data.marginal_freq is not None else data.alpha
    worst, wit, n_cells = 0.0, [], 0
    for i in range(2):
        j = 1 - i
        xi = data.x[:, i]
        keys = np.round(xi if cfg.cell_width is None else np.floor(xi / cfg.cell_width + 0.5)
                        * cfg.cell_width, 9)
        for key in np.unique(keys):
            sel = np.flatnonzero(keys == key)
            if len(sel) < 3:
                continue
            n_cells += 1
            _, r, inc, arg = _isotonic_residual(data.alpha[sel, i], target[sel, j], w_all[sel], z)
            if r > worst:
                worst = r
                wit = [{"player": i + 1, "cell": float(key), "direction": "increasing" if inc else "decreasing",
                        "x": _row(data, sel[arg]), "alpha": data.alpha[sel[arg]].tolist()}]
    if n_cells == 0:
        return CheckResult("multiplicity", float("nan"), thr, INCONCLUSIVE,
                           notes=["no own-covariate cell with three or more profiles"])
    return _result("multiplicity", worst, thr, wit, cells=n_cells)


_RUNNERS = {"zeros": check_structural_zeros, "r1": test_r1, "r2": test_r2, "r3": test_r3,
            "ci": test_conditional_independence, "multiplicity": test_multiplicity}


def run_checks(data, checks=CHECKS, cfg=None):
    """Run the named diagnostics and collect them into a report."""
    cfg = cfg or RationalizeConfig()
    unknown = [c for c in checks if c not in _RUNNERS]
    if unknown:
        raise DomainError(f"unknown checks {unknown}; expected a subset of {list(CHECKS)}")
    out = {c: _RUNNERS[c](data, cfg) for c in checks}
    return RationalizationReport(out, data.mode, data.digest(), _jsonable(asdict(cfg)))

# keep pytest from collecting the diagnostics when they are imported by name
for _f in (test_r1, test_r2, test_r3, test_conditional_independence, test_multiplicity):
    _f.__test__ = False
