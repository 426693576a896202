"""Monotone pure-strategy equilibria: best responses, enumeration and parameter scans.

A monotone strategy for player ``i`` is ``1[u_i <= u*_i]``. Given rival
thresholds, the best response is the cutoff at which the expected payoff gap
``sum_a pi_i(a, x) sigma(a | u_i) - u_i`` changes sign from positive to negative.
It is ``+inf`` when the gap stays positive over the effective support and
``-inf`` when it stays negative.
"""

import csv
import io
import itertools
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np
from scipy import optimize

from .errors import NonMonotoneBestResponse
from .game_core.kernels import ThresholdProfile, belief_from_alpha, thresholds_to_alpha

N_GRID = 2001
N_PROBE = 401
INCREASE_TOL = 1e-12
RESIDUAL_TOL = 1e-8
MERGE_TOL = 1e-6


@dataclass
class EquilibriumSet:
    """All monotone equilibria found at one covariate profile.

    Attributes
    ----------
    equilibria : list of ThresholdProfile
    monotone_br : tuple of bool
        Per player, whether the expected payoff gap was weakly decreasing in own
        type for every rival profile probed.
    residuals : list of float
        Per equilibrium, the largest violation of the indifference condition
        (interior thresholds) or of the one-sided condition (infinite thresholds).
    tangent : list of bool
        Roots that merged with a neighbour closer than the merge tolerance.
    extremal_only : bool
        True when only the lowest and highest equilibria were searched for.
    nonmonotone : dict
        Player -> ``(u_lo, u_hi)`` hull of the type intervals where the gap increased.
    """

    x: tuple
    equilibria: list
    monotone_br: tuple
    residuals: list
    tangent: list = field(default_factory=list)
    extremal_only: bool = False
    nonmonotone: dict = field(default_factory=dict)

    def __len__(self):
        return len(self.equilibria)

    @property
    def thresholds(self):
        if not self.equilibria:
            return np.empty((0, len(self.monotone_br)))
        return np.array([e.u_star for e in self.equilibria])

    def alphas(self, marginals):
        return thresholds_to_alpha(marginals, self.thresholds)


# ---------------------------------------------------------------------------
# gaps and best responses

def _payoffs_at(g, x, i):
    return np.asarray(g.payoffs[i].values(np.asarray(x, dtype=float)), dtype=float)


def _full_alpha(n_players, i, own_alpha, rival_alpha):
    own_alpha = np.asarray(own_alpha, dtype=float)
    rival_alpha = np.asarray(rival_alpha, dtype=float)
    shape = np.broadcast_shapes(own_alpha.shape, rival_alpha.shape[:-1])
    full = np.empty(shape + (n_players,))
    rest = [j for j in range(n_players) if j != i]
    full[..., rest] = np.broadcast_to(rival_alpha, shape + (n_players - 1,))
    full[..., i] = np.broadcast_to(own_alpha, shape)
    return full


def _gap(g, x, i, u_own, rival_alpha, pi=None):
    """Gap at own types ``u_own`` against rivals acting with probabilities ``rival_alpha``."""
    pi = _payoffs_at(g, x, i) if pi is None else pi
    u_own = np.asarray(u_own, dtype=float)
    own_alpha = np.asarray(g.marginals[i].cdf(u_own), dtype=float)
    sigma = belief_from_alpha(g.copula, i, _full_alpha(g.n_players, i, own_alpha, rival_alpha))
    return sigma @ pi - u_own


def _probe_grid(g, i, n_probe):
    lo, hi = g.marginals[i].effective_support()
    return np.linspace(lo, hi, n_probe)


@lru_cache(maxsize=8)
def _cached_beliefs(copula, marginals, i, j, n_probe, n_rival):
    """Beliefs of ``i`` (I = 2) on own probe types x rival grid thresholds, plus +/-inf columns."""
    lo, hi = marginals[i].effective_support()
    probe = np.linspace(lo, hi, n_probe)
    rlo, rhi = marginals[j].effective_support()
    rival_u = np.concatenate([[-np.inf], np.linspace(rlo, rhi, n_rival), [np.inf]])
    rival_a = thresholds_to_alpha([marginals[j]], rival_u[:, None])
    own_a = marginals[i].cdf(probe)
    lower = np.clip(copula.conditional_grid(i, own_a, rival_a), 0.0, 1.0)
    sigma = np.stack([1.0 - lower, lower], axis=-1)
    sigma.setflags(write=False)
    return probe, rival_u, sigma


def _classify_columns(G, probe):
    """Turn a gap matrix ``(n_probe, N)`` into threshold brackets.

    Returns ``(kind, k, monotone, first_increase)`` where ``kind`` is +1 for
    ``+inf``, -1 for ``-inf``, 0 for an interior root bracketed by
    ``probe[k], probe[k + 1]`` and 2 when the set ``{gap >= 0}`` is not a lower
    interval (no threshold best response).
    """
    dG = np.diff(G, axis=0)
    inc = dG > INCREASE_TOL * np.maximum(1.0, np.abs(G[:-1]))
    monotone = ~inc.any(axis=0)
    first_inc = np.where(monotone, -1, np.argmax(inc, axis=0))
    pos = G >= 0
    up = (np.diff(pos.astype(np.int8), axis=0) > 0).any(axis=0)
    kind = np.full(G.shape[1], 2, dtype=int)
    single = ~up
    kind[single & pos[-1]] = 1
    kind[single & ~pos[0]] = -1
    interior = single & pos[0] & ~pos[-1]
    kind[interior] = 0
    k = np.where(interior, np.argmin(pos, axis=0) - 1, -1)
    return kind, k, monotone, first_inc


def _refine_roots(gap_fn, a, b, xtol=1e-13, max_iter=100):
    """Vectorized bisection for columns with ``gap(a) >= 0 > gap(b)``."""
    a = np.array(a, dtype=float)
    b = np.array(b, dtype=float)
    for _ in range(max_iter):
        if a.size == 0 or np.max(b - a) <= xtol:
            break
        m = 0.5 * (a + b)
        pos = gap_fn(m) >= 0
        a = np.where(pos, m, a)
        b = np.where(pos, b, m)
    return 0.5 * (a + b)


def _best_responses(g, x, i, rival_alpha, n_probe=N_PROBE, G=None, probe=None):
    """Best-response thresholds of ``i`` for each row of ``rival_alpha`` (shape ``(N, I-1)``).

    Returns ``(br, monotone, interval)``; ``br`` is NaN where the gap has no
    single downward crossing, ``interval`` the hull of increasing stretches.
    """
    pi = _payoffs_at(g, x, i)
    rival_alpha = np.atleast_2d(np.asarray(rival_alpha, dtype=float))
    if G is None:
        probe = _probe_grid(g, i, n_probe)
        G = _gap(g, x, i, probe[:, None], rival_alpha[None, :, :], pi)
    kind, k, monotone, first_inc = _classify_columns(G, probe)
    br = np.full(len(rival_alpha), np.nan)
    br[kind == 1] = np.inf
    br[kind == -1] = -np.inf
    cols = np.flatnonzero(kind == 0)
    if cols.size:
        ra = rival_alpha[cols]
        br[cols] = _refine_roots(lambda u: _gap(g, x, i, u, ra, pi), probe[k[cols]], probe[k[cols] + 1])
    interval = None
    if not monotone.all():
        # report the increasing stretch that sits closest to the middle of the support
        dG = np.diff(G, axis=0)
        bad = np.flatnonzero(~monotone)
        c = int(bad[np.argmin(np.abs(first_inc[bad] - len(probe) // 2))])
        ks = np.flatnonzero(dG[:, c] > INCREASE_TOL * np.maximum(1.0, np.abs(G[:-1, c])))
        interval = (float(probe[ks.min()]), float(probe[ks.max() + 1]))
    return br, monotone, interval


def best_response_threshold(g, x, rivals, i, n_probe=N_PROBE):
    """Best-response cutoff of player ``i`` against rival thresholds.

    Parameters
    ----------
    rivals : ThresholdProfile or array_like
        Length-``I`` thresholds; entry ``i`` is ignored.

    Raises
    ------
    NonMonotoneBestResponse
        If the expected payoff gap increases anywhere on the probe grid.
    """
    u = rivals.array if isinstance(rivals, ThresholdProfile) else np.asarray(rivals, dtype=float)
    alpha = thresholds_to_alpha(g.marginals, u)
    rival_alpha = np.delete(alpha, i)[None, :]
    br, monotone, interval = _best_responses(g, x, i, rival_alpha, n_probe)
    if not monotone[0]:
        raise NonMonotoneBestResponse(i, interval)
    return float(br[0])


# ---------------------------------------------------------------------------
# verification shared by both solvers

def _verify(g, x, u, n_probe=N_PROBE):
    """Residual of a candidate profile and whether every cutoff is a genuine best response."""
    I = g.n_players
    alpha = thresholds_to_alpha(g.marginals, u)
    worst = 0.0
    for i in range(I):
        ra = np.delete(alpha, i)
        lo, hi = g.marginals[i].effective_support()
        if np.isfinite(u[i]):
            r = abs(float(_gap(g, x, i, u[i], ra)))
        elif u[i] > 0:
            r = max(0.0, -float(_gap(g, x, i, hi, ra)))
        else:
            r = max(0.0, float(_gap(g, x, i, lo, ra)))
        worst = max(worst, r)
        probe = _probe_grid(g, i, n_probe)
        G = _gap(g, x, i, probe[:, None], ra[None, None, :])
        kind, _, _, _ = _classify_columns(G, probe)
        if kind[0] == 2:
            return worst, False
        if np.isfinite(u[i]) and kind[0] != 0:
            return worst, False
        if np.isinf(u[i]) and kind[0] != np.sign(u[i]):
            return worst, False
    return worst, True


def _same(u, v, tol=MERGE_TOL):
    for a, b in zip(u, v):
        if np.isinf(a) or np.isinf(b):
            if a != b:
                return False
        elif abs(a - b) > tol:
            return False
    return True


def _merge(cands):
    """Merge near-duplicate candidates ``(u, residual, touching, bracket)``.

    Two roots from brackets that are not neighbours but land within the merge
    tolerance are a numerically double root and are flagged as tangent, as are
    roots found only as touching minima of the scan.
    """
    out = []
    for u, r, touch, k in sorted(cands, key=lambda c: tuple(c[0])):
        for m, (v, rv, tv, kv) in enumerate(out):
            if _same(u, v):
                far = k is not None and kv is not None and abs(k - kv) > 1
                best = (u, r) if r < rv else (v, rv)
                out[m] = (best[0], best[1], tv or touch or far, kv)
                break
        else:
            out.append((u, r, touch, k))
    return [(u, r, t) for u, r, t, _ in out]


# ---------------------------------------------------------------------------
# two players: grid scan of the composed best response

def _polish_pair(g, x, u1, u2):
    """Solve both indifference conditions from a starting point; infinite cutoffs stay fixed."""
    m = g.marginals

    def one(i, ui, uj):
        aj = thresholds_to_alpha([m[1 - i]], np.array([[uj]]))[0]
        return float(_gap(g, x, i, ui, aj))

    if np.isfinite(u1) and np.isfinite(u2):
        sol, info, ier, _ = optimize.fsolve(
            lambda v: [one(0, v[0], v[1]), one(1, v[1], v[0])], [u1, u2],
            xtol=1e-14, full_output=True)
        return float(sol[0]), float(sol[1])
    if np.isfinite(u2):
        lo, hi = m[1].effective_support()
        f = lambda v: one(1, v, u1)
        try:
            return u1, float(optimize.brentq(f, lo, hi, xtol=1e-15))
        except ValueError:
            return u1, u2
    if np.isfinite(u1):
        lo, hi = m[0].effective_support()
        f = lambda v: one(0, v, u2)
        try:
            return float(optimize.brentq(f, lo, hi, xtol=1e-15)), u2
        except ValueError:
            return u1, u2
    return u1, u2


def _solve_two(g, x, n_grid, n_probe):
    m = g.marginals
    pi1 = _payoffs_at(g, x, 0)
    pi2 = _payoffs_at(g, x, 1)
    probe1, grid2, S1 = _cached_beliefs(g.copula, g.marginals, 0, 1, n_probe, n_grid)
    probe2, grid1, S2 = _cached_beliefs(g.copula, g.marginals, 1, 0, n_probe, n_grid)
    G1 = S1 @ pi1 - probe1[:, None]
    G2 = S2 @ pi2 - probe2[:, None]
    a2 = thresholds_to_alpha([m[1]], grid2[:, None])
    a1 = thresholds_to_alpha([m[0]], grid1[:, None])
    br1, mono1, int1 = _best_responses(g, x, 0, a2, G=G1, probe=probe1)
    br2, mono2, int2 = _best_responses(g, x, 1, a1, G=G2, probe=probe2)

    # BR2 at BR1(u2) by interpolation on the player-1 grid; exact where it is unclear
    inner = grid1[1:-1]
    comp = np.full_like(br1, np.nan)
    comp[np.isneginf(br1)] = br2[0]
    comp[np.isposinf(br1)] = br2[-1]
    fin = np.isfinite(br1)
    kk = np.clip(np.searchsorted(inner, br1[fin]) - 1, 0, len(inner) - 2) + 1
    lo_v, hi_v = br2[kk], br2[kk + 1]
    w = (br1[fin] - grid1[kk]) / (grid1[kk + 1] - grid1[kk])
    with np.errstate(invalid="ignore"):
        val = np.where(np.isfinite(lo_v) & np.isfinite(hi_v), lo_v + w * (hi_v - lo_v),
                       np.where(lo_v == hi_v, lo_v, np.nan))
    comp[fin] = val
    unclear = np.flatnonzero(fin)[np.isnan(val) & np.isfinite(br1[fin])]
    unclear = unclear[(br1[unclear] >= inner[0]) & (br1[unclear] <= inner[-1])]
    if unclear.size:
        ra = thresholds_to_alpha([m[0]], br1[unclear][:, None])
        comp[unclear] = _best_responses(g, x, 1, ra, n_probe)[0]
    with np.errstate(invalid="ignore"):
        h = grid2 - comp  # +/-inf columns give -/+inf or nan

    cands = []
    hi_ = h[1:-1]
    u2g = grid2[1:-1]
    valid = ~np.isnan(hi_)
    s = np.sign(hi_)
    idx = np.flatnonzero(valid[:-1] & valid[1:] & (s[:-1] * s[1:] < 0))
    zeros = np.flatnonzero(valid & (np.abs(np.nan_to_num(hi_, nan=1.0)) <= 1e-12))
    # near-touching local minima of |h| that do not change sign
    ah = np.abs(np.where(valid, hi_, np.inf))
    touch = np.flatnonzero((ah[1:-1] <= ah[:-2]) & (ah[1:-1] <= ah[2:]) & (ah[1:-1] < 1e-6)) + 1
    starts = []
    for k in idx:
        if np.isfinite(hi_[k]) and np.isfinite(hi_[k + 1]):
            t = hi_[k] / (hi_[k] - hi_[k + 1])
            starts.append((u2g[k] + t * (u2g[k + 1] - u2g[k]), False, k))
        else:
            starts.append((0.5 * (u2g[k] + u2g[k + 1]), False, k))
    covered = set(idx) | set(idx + 1)
    starts += [(u2g[k], False, k) for k in zeros if k not in covered]
    starts += [(u2g[k], True, k) for k in touch if k not in covered and k not in set(zeros)]
    step = u2g[1] - u2g[0]
    for u2_0, is_touch, k in starts:
        ra = thresholds_to_alpha([m[1]], np.array([[u2_0]]))
        u1_0 = _best_responses(g, x, 0, ra, n_probe)[0][0]
        if np.isnan(u1_0):
            continue
        u1, u2 = _polish_pair(g, x, u1_0, u2_0)
        if not (u2g[max(k - 1, 0)] - step <= u2 <= u2g[min(k + 2, len(u2g) - 1)] + step):
            continue
        u = np.array([u1, u2])
        r, ok = _verify(g, x, u, n_probe)
        if ok and r <= RESIDUAL_TOL:
            cands.append((u, r, is_touch, k))

    # never-act / always-act cutoffs for player 2
    for col, u2 in ((0, -np.inf), (-1, np.inf)):
        u1 = br1[col]
        if np.isnan(u1):
            continue
        u = np.array([u1, u2])
        r, ok = _verify(g, x, u, n_probe)
        if ok and r <= RESIDUAL_TOL:
            cands.append((u, r, False, None))

    merged = _merge(cands)
    nonmono = {}
    if int1 is not None:
        nonmono[0] = int1
    if int2 is not None:
        nonmono[1] = int2
    return merged, (bool(mono1.all()), bool(mono2.all())), nonmono


# ---------------------------------------------------------------------------
# three or more players: extremal best-response iteration

def _iterate_from(g, x, start, n_probe, max_iter, tol=1e-11):
    I = g.n_players
    u = np.array(start, dtype=float)
    mono = np.ones(I, dtype=bool)
    nonmono = {}
    for _ in range(max_iter):
        alpha = thresholds_to_alpha(g.marginals, u)
        new = np.empty(I)
        for i in range(I):
            br, mo, interval = _best_responses(g, x, i, np.delete(alpha, i)[None, :], n_probe)
            new[i] = br[0]
            if not mo[0]:
                mono[i] = False
                nonmono.setdefault(i, interval)
        if np.any(np.isnan(new)):
            return None, mono, nonmono
        if _same(new, u, tol):
            return new, mono, nonmono
        u = new
    return None, mono, nonmono


def _solve_many(g, x, n_probe, max_iter):
    I = g.n_players
    cands = []
    mono = np.ones(I, dtype=bool)
    nonmono = {}
    for start in (np.full(I, -np.inf), np.full(I, np.inf)):
        u, mo, nm = _iterate_from(g, x, start, n_probe, max_iter)
        mono &= mo
        for k, v in nm.items():
            nonmono.setdefault(k, v)
        if u is None:
            continue
        r, ok = _verify(g, x, u, n_probe)
        if ok and r <= RESIDUAL_TOL:
            cands.append((u, r, False, None))
    merged = [(u, r, False) for u, r, _ in _merge(cands)]
    return merged, tuple(bool(v) for v in mono), nonmono


def solve_mpse(g, x, n_grid=N_GRID, n_probe=N_PROBE, max_iter=500):
    """All monotone pure-strategy equilibria found at covariate profile ``x``.

    For two players the composed best response ``u2 -> BR2(BR1(u2))`` is scanned
    on ``n_grid`` points of player 2's effective support and every sign change
    of ``u2 - BR2(BR1(u2))`` is refined and verified; completeness holds up to the
    grid resolution. For three or more players best responses are iterated from
    the all-lowest and all-highest cutoffs and only those extremal equilibria
    are reported.
    """
    x = np.asarray(x, dtype=float)
    if g.n_players == 2:
        merged, mono, nonmono = _solve_two(g, x, n_grid, n_probe)
        extremal = False
    else:
        merged, mono, nonmono = _solve_many(g, x, n_probe, max_iter)
        extremal = True
    xt = tuple(x.ravel())
    return EquilibriumSet(
        x=xt,
        equilibria=[ThresholdProfile(u, xt) for u, _, _ in merged],
        monotone_br=mono,
        residuals=[float(r) for _, r, _ in merged],
        tangent=[bool(t) for _, _, t in merged],
        extremal_only=extremal,
        nonmonotone=nonmono,
    )


# ---------------------------------------------------------------------------
# parameter scans

def default_threads():
    env = os.environ.get("BINGAMES_THREADS")
    if env:
        try:
            return max(1, int(env))
        except ValueError:
            pass
    return 1


@dataclass
class ScanResult:
    names: list
    params: list
    results: list

    @property
    def counts(self):
        return np.array([len(r) for r in self.results])

    @property
    def monotone(self):
        return np.array([r.monotone_br for r in self.results])

    def to_rows(self):
        """Long format: one row per equilibrium, or a single empty row when there is none."""
        rows = []
        for p, r in zip(self.params, self.results):
            base = dict(zip(self.names, p))
            base["n_equilibria"] = len(r)
            base["monotone_flags"] = ";".join(str(int(f)) for f in r.monotone_br)
            base["extremal_only"] = int(r.extremal_only)
            I = len(r.monotone_br)
            if not r.equilibria:
                row = dict(base, equilibrium="", residual="", tangent="")
                row.update({f"u_star_{i + 1}": "" for i in range(I)})
                rows.append(row)
            for k, (e, res, tan) in enumerate(zip(r.equilibria, r.residuals, r.tangent)):
                row = dict(base, equilibrium=k, residual=f"{res:.3e}", tangent=int(tan))
                row.update({f"u_star_{i + 1}": repr(float(u)) for i, u in enumerate(e.u_star)})
                rows.append(row)
        return rows

    def to_csv(self, path=None):
        rows = self.to_rows()
        I = len(self.results[0].monotone_br) if self.results else 2
        fields = (list(self.names) + ["n_equilibria", "equilibrium"]
                  + [f"u_star_{i + 1}" for i in range(I)]
                  + ["monotone_flags", "residual", "tangent", "extremal_only"])
        buf = io.StringIO()
        w = csv.DictWriter(buf, fieldnames=fields, lineterminator="\n")
        w.writeheader()
        w.writerows(rows)
        text = buf.getvalue()
        if path is not None:
            with open(path, "w", newline="") as fh:
                fh.write(text)
        return text

    def boundaries(self, what="count"):
        """Consecutive grid points where a one-parameter scan changes.

        ``what`` is ``"count"`` (number of equilibria) or ``"monotone"`` (any
        player's monotonicity flag). Returns ``(p_lo, p_hi, before, after)`` tuples.
        """
        if len(self.names) != 1:
            raise ValueError("boundaries are defined for one-parameter scans")
        vals = self.counts if what == "count" else self.monotone.all(axis=1)
        ps = [p[0] for p in self.params]
        out = []
        for k in range(len(vals) - 1):
            if vals[k] != vals[k + 1]:
                out.append((ps[k], ps[k + 1], vals[k].item(), vals[k + 1].item()))
        return out


def region_scan(template, ranges, threads=None, **solve_kw):
    """Solve on the Cartesian grid of parameter values.

    Parameters
    ----------
    template : callable
        ``template(**params) -> (game, x)``.
    ranges : dict
        Parameter name -> sequence of values. The grid is visited in
        ``itertools.product`` order, which is also the output order.
    threads : int, optional
        Worker threads; defaults to ``BINGAMES_THREADS`` or 1.
    """
    names = list(ranges)
    grid = list(itertools.product(*[np.asarray(ranges[n], dtype=float).tolist() for n in names]))

    def work(p):
        game, x = template(**dict(zip(names, p)))
        return solve_mpse(game, x, **solve_kw)

    threads = default_threads() if threads is None else max(1, int(threads))
    if threads == 1:
        results = [work(p) for p in grid]
    else:
        with ThreadPoolExecutor(threads) as ex:
            results = list(ex.map(work, grid))
    return ScanResult(names, grid, results)
