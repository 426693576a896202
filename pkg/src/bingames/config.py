"""Strict TOML configuration for games and runs.

Game files have the sections ``players``, ``payoffs`` (one table per player),
``marginals`` (one per player), ``copula`` and ``design``::

    name = "case2"

    [players]
    count = 2

    [[payoffs]]
    kind = "linear"            # or "table"
    intercept = 0.0
    slope = 1.0
    interaction = [0.0, -2.0]  # rival profiles in product order

    [[payoffs]]
    kind = "table"
    grid = [0.0, 1.0]          # own-covariate values
    values = [[0.0, -2.0], [1.0, -1.0]]   # or path = "table.csv"

    [[marginals]]
    kind = "normal"            # normal | logistic | uniform | tabulated
    loc = 0.0
    scale = 1.0

    [copula]
    kind = "gaussian"          # gaussian (rho or corr) | independence | tabulated
    rho = 0.5

    [design]
    kind = "grid"              # grid (points, weights) | product (axes) | box
    points = [[1.0, 1.0]]

Run files hold estimator and diagnostic knobs in ``[estimate]``, ``[test]``
and ``[simulate]``. Unknown keys are errors; every error names its key.
"""

import csv
import hashlib
import os
import sys
from dataclasses import asdict, dataclass, field, fields

import numpy as np

if sys.version_info >= (3, 11):
    import tomllib
else:  # pragma: no cover
    import tomli as tomllib

from .errors import ConfigError, DomainError
from .game_core import (
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
    UniformMarginal,
)
from .game_core.structure import BoxDesign
from .rationalize import RationalizeConfig

_REQUIRED = object()


def _check_keys(tbl, allowed, path):
    if not isinstance(tbl, dict):
        raise ConfigError("expected a table", path)
    for k in tbl:
        if k not in allowed:
            raise ConfigError(f"unknown key (allowed: {', '.join(sorted(allowed))})",
                              f"{path}.{k}" if path else k)


def _get(tbl, key, path, kind=float, default=_REQUIRED):
    where = f"{path}.{key}" if path else key
    if key not in tbl:
        if default is _REQUIRED:
            raise ConfigError("missing required key", where)
        return default
    v = tbl[key]
    try:
        if kind is float:
            if isinstance(v, bool) or not isinstance(v, (int, float)):
                raise TypeError
            return float(v)
        if kind is int:
            if isinstance(v, bool) or not isinstance(v, int):
                raise TypeError
            return int(v)
        if kind is str:
            if not isinstance(v, str):
                raise TypeError
            return v
        if kind is bool:
            if not isinstance(v, bool):
                raise TypeError
            return v
        if kind == "array":
            arr = np.asarray(v, dtype=float)
            if not np.all(np.isfinite(arr)):
                raise TypeError
            return arr
    except (TypeError, ValueError):
        raise ConfigError(f"expected {getattr(kind, '__name__', kind)}, got {v!r}", where) from None
    raise AssertionError(kind)


def _read_toml(path):
    try:
        with open(path, "rb") as fh:
            raw = fh.read()
    except OSError as exc:
        raise ConfigError(f"cannot read {path}: {exc.strerror}") from None
    try:
        return tomllib.loads(raw.decode("utf-8")), hashlib.sha256(raw).hexdigest()
    except (tomllib.TOMLDecodeError, UnicodeDecodeError) as exc:
        raise ConfigError(f"invalid TOML in {path}: {exc}") from None


# ---------------------------------------------------------------------------
# games

def _payoff(tbl, i, I, path, base_dir):
    kind = _get(tbl, "kind", path, str, "linear")
    try:
        if kind == "linear":
            _check_keys(tbl, {"kind", "intercept", "slope", "interaction", "beta"}, path)
            if "interaction" in tbl and "beta" in tbl:
                raise ConfigError("give either interaction or beta, not both", f"{path}.beta")
            if "beta" in tbl:
                return LinearIndexPayoff.additive(i, I, _get(tbl, "intercept", path, float, 0.0),
                                                  _get(tbl, "slope", path, float, 1.0),
                                                  _get(tbl, "beta", path, "array"))
            return LinearIndexPayoff(i, I, _get(tbl, "intercept", path, float, 0.0),
                                     _get(tbl, "slope", path, float, 1.0),
                                     _get(tbl, "interaction", path, "array", None))
        if kind == "table":
            _check_keys(tbl, {"kind", "grid", "values", "path"}, path)
            if "path" in tbl:
                f = os.path.join(base_dir, _get(tbl, "path", path, str))
                grid, values = _read_payoff_csv(f, f"{path}.path")
            else:
                grid = _get(tbl, "grid", path, "array")
                values = _get(tbl, "values", path, "array")
            return TabularPayoff(i, I, grid, values)
    except DomainError as exc:
        raise ConfigError(str(exc), path) from None
    raise ConfigError(f"unknown payoff kind {kind!r} (linear, table)", f"{path}.kind")


def _read_payoff_csv(fname, key):
    """First column the own covariate, remaining columns the rival profiles."""
    try:
        with open(fname, newline="") as fh:
            rows = list(csv.reader(fh))
        body = np.array([[float(v) for v in r] for r in rows[1:] if r], dtype=float)
    except (OSError, ValueError) as exc:
        raise ConfigError(f"cannot read payoff table {fname}: {exc}", key) from None
    return body[:, 0], body[:, 1:]


def _marginal(tbl, path):
    kind = _get(tbl, "kind", path, str, "normal")
    classes = {"normal": NormalMarginal, "logistic": LogisticMarginal, "uniform": UniformMarginal}
    try:
        if kind in classes:
            _check_keys(tbl, {"kind", "loc", "scale"}, path)
            return classes[kind](_get(tbl, "loc", path, float, 0.0), _get(tbl, "scale", path, float, 1.0))
        if kind == "tabulated":
            _check_keys(tbl, {"kind", "probs", "values"}, path)
            return TabulatedMarginal(_get(tbl, "probs", path, "array"), _get(tbl, "values", path, "array"))
    except DomainError as exc:
        raise ConfigError(str(exc), path) from None
    raise ConfigError(f"unknown marginal kind {kind!r} (normal, logistic, uniform, tabulated)",
                      f"{path}.kind")


def _copula(tbl, I, path="copula"):
    kind = _get(tbl, "kind", path, str, "gaussian")
    try:
        if kind == "independence":
            _check_keys(tbl, {"kind"}, path)
            return IndependenceCopula(I)
        if kind == "gaussian":
            _check_keys(tbl, {"kind", "rho", "corr"}, path)
            if ("rho" in tbl) == ("corr" in tbl):
                raise ConfigError("give exactly one of rho (two players) and corr", f"{path}.rho")
            if "rho" in tbl:
                if I != 2:
                    raise ConfigError("rho is for two players; use corr", f"{path}.rho")
                return GaussianCopula.bivariate(_get(tbl, "rho", path))
            return GaussianCopula(_get(tbl, "corr", path, "array"))
        if kind == "tabulated":
            _check_keys(tbl, {"kind", "nodes", "values"}, path)
            return TabulatedCopula(_get(tbl, "nodes", path, "array"), _get(tbl, "values", path, "array"))
    except DomainError as exc:
        raise ConfigError(str(exc), path) from None
    raise ConfigError(f"unknown copula kind {kind!r} (gaussian, independence, tabulated)", f"{path}.kind")


def _design(tbl, path="design"):
    kind = _get(tbl, "kind", path, str, "grid")
    try:
        if kind == "grid":
            _check_keys(tbl, {"kind", "points", "weights", "continuous"}, path)
            pts = np.atleast_2d(_get(tbl, "points", path, "array"))
            return GridDesign(pts, _get(tbl, "weights", path, "array", None),
                              _get(tbl, "continuous", path, bool, False))
        if kind == "product":
            _check_keys(tbl, {"kind", "axes", "continuous"}, path)
            axes = tbl.get("axes")
            if not isinstance(axes, list) or not axes:
                raise ConfigError("expected a list of axes", f"{path}.axes")
            arrs = [_get({"a": a}, "a", f"{path}.axes[{k}]", "array") for k, a in enumerate(axes)]
            return GridDesign.product(*arrs, continuous=_get(tbl, "continuous", path, bool, False))
        if kind == "box":
            _check_keys(tbl, {"kind", "low", "high", "distribution", "n_per_axis"}, path)
            box = BoxDesign(_get(tbl, "low", path, "array"), _get(tbl, "high", path, "array"),
                            _get(tbl, "distribution", path, str, "uniform"))
            n = _get(tbl, "n_per_axis", path, int, 0)
            return box.discretize(n) if n else box
    except DomainError as exc:
        raise ConfigError(str(exc), path) from None
    raise ConfigError(f"unknown design kind {kind!r} (grid, product, box)", f"{path}.kind")


def game_from_dict(doc, base_dir=".", overrides=None):
    """Build a :class:`GameStructure` from a parsed game document.

    ``overrides`` may set ``rho`` (two-player Gaussian copula correlation).
    """
    _check_keys(doc, {"name", "players", "payoffs", "marginals", "copula", "design"}, "")
    name = _get(doc, "name", "", str, "")
    players = doc.get("players", {})
    _check_keys(players, {"count"}, "players")
    pay = doc.get("payoffs")
    if not isinstance(pay, list) or not pay:
        raise ConfigError("expected one [[payoffs]] table per player", "payoffs")
    I = _get(players, "count", "players", int, len(pay))
    if I < 2:
        raise ConfigError("a game needs at least two players", "players.count")
    if len(pay) != I:
        raise ConfigError(f"{len(pay)} payoff tables for {I} players", "payoffs")
    marg = doc.get("marginals", [{"kind": "normal"}] * I)
    if not isinstance(marg, list) or len(marg) != I:
        raise ConfigError(f"expected {I} [[marginals]] tables", "marginals")
    copula = dict(doc.get("copula", {"kind": "independence"}))
    for k, v in (overrides or {}).items():
        if k == "rho" and v is not None:
            copula = {"kind": "gaussian", "rho": float(v)}
        elif v is not None:
            raise ConfigError("unsupported override", k)
    design = _design(doc["design"]) if "design" in doc else None
    try:
        return GameStructure([_payoff(p, i, I, f"payoffs[{i}]", base_dir) for i, p in enumerate(pay)],
                             [_marginal(m, f"marginals[{i}]") for i, m in enumerate(marg)],
                             _copula(copula, I), design=design, name=name)
    except DomainError as exc:
        raise ConfigError(str(exc)) from None


def load_game(path, **overrides):
    """Parse a game file. Returns ``(game, sha256 of the file)``."""
    doc, digest = _read_toml(path)
    return game_from_dict(doc, os.path.dirname(os.path.abspath(path)), overrides), digest


# ---------------------------------------------------------------------------
# run settings

@dataclass
class EstimateSettings:
    degree: int = 5
    link: str = "probit"
    bandwidth_constant: float = 1.5
    K: int = 4
    basis: str = "hermite"
    cell_width: float = None
    cell_bandwidth: float = None
    alpha_trim: float = 0.05
    x_star: list = None
    rank_tol: float = 0.05
    min_n: int = 50

    def kwargs(self):
        """Keyword arguments for :func:`~bingames.identify.identify_sample`."""
        out = {f.name: getattr(self, f.name) for f in fields(self)}
        xs = out.pop("x_star")
        out["x_star"] = None if xs is None else dict(enumerate(xs))
        return out


@dataclass
class SimulateSettings:
    rule: str = "lowest"
    seed: int = 0


@dataclass
class RunSettings:
    estimate: EstimateSettings = field(default_factory=EstimateSettings)
    test: RationalizeConfig = field(default_factory=RationalizeConfig)
    simulate: SimulateSettings = field(default_factory=SimulateSettings)
    digest: str = ""


def _fill(cls, tbl, path):
    proto = cls()
    names = {f.name for f in fields(cls)}
    _check_keys(tbl, names, path)
    out = {}
    for f in fields(cls):
        if f.name not in tbl:
            continue
        default = getattr(proto, f.name)
        if f.name == "x_star":
            out[f.name] = [float(v) for v in _get(tbl, f.name, path, "array").ravel()]
        elif isinstance(default, bool):
            out[f.name] = _get(tbl, f.name, path, bool)
        elif isinstance(default, int):
            out[f.name] = _get(tbl, f.name, path, int)
        elif isinstance(default, str):
            out[f.name] = _get(tbl, f.name, path, str)
        else:
            out[f.name] = _get(tbl, f.name, path, float)
    return cls(**out)


def settings_from_dict(doc, digest=""):
    _check_keys(doc, {"estimate", "test", "simulate"}, "")
    return RunSettings(_fill(EstimateSettings, doc.get("estimate", {}), "estimate"),
                       _fill(RationalizeConfig, doc.get("test", {}), "test"),
                       _fill(SimulateSettings, doc.get("simulate", {}), "simulate"), digest)


def load_settings(path=None):
    """Parse a run file; defaults when ``path`` is None."""
    if path is None:
        return RunSettings()
    doc, digest = _read_toml(path)
    return settings_from_dict(doc, digest)


def asdict_settings(settings):
    """Plain-dict view of :class:`RunSettings` for hashing and manifests."""
    return {"estimate": asdict(settings.estimate), "test": asdict(settings.test),
            "simulate": asdict(settings.simulate)}
