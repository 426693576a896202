"""Command-line front end: ``bingames {solve,scan,simulate,estimate,test}``.

Every run writes ``manifest.json`` next to its outputs. Exit status is 0 on
success, 2 when the command line or a configuration file is invalid (the
message names the offending key) and 1 on any other failure.
"""

import argparse
import os
import sys

import numpy as np

from . import config as cfgmod
from .equilibrium import ScanResult, region_scan, solve_mpse
from .errors import ConfigError
from .game_core import GaussianCopula
from .io import digest, write_json, write_manifest, write_rows

EXIT_OK, EXIT_RUNTIME, EXIT_CONFIG = 0, 1, 2


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise ConfigError(message, "argv")


def _floats(text, key):
    try:
        return [float(v) for v in text.split(",") if v.strip()]
    except ValueError:
        raise ConfigError(f"expected comma-separated numbers, got {text!r}", key) from None


def _param_values(spec, key):
    """``lo:hi:num`` (inclusive linspace) or a comma list."""
    if ":" in spec:
        parts = spec.split(":")
        if len(parts) != 3:
            raise ConfigError(f"expected lo:hi:num, got {spec!r}", key)
        try:
            lo, hi, num = float(parts[0]), float(parts[1]), int(parts[2])
        except ValueError:
            raise ConfigError(f"expected lo:hi:num, got {spec!r}", key) from None
        if num < 1:
            raise ConfigError("num must be positive", key)
        return np.linspace(lo, hi, num).tolist()
    return _floats(spec, key)


def _load_game(args, required=True):
    if not getattr(args, "game", None):
        if required:
            raise ConfigError("this command needs a game file", "--game")
        return None, None
    game, file_hash = cfgmod.load_game(args.game, rho=getattr(args, "rho", None))
    return game, file_hash


def _out_dir(path, is_dir):
    d = path if is_dir else os.path.dirname(os.path.abspath(path))
    os.makedirs(d, exist_ok=True)
    return d


def _config_hash(args, settings):
    keep = {k: v for k, v in vars(args).items() if k not in ("out", "func", "threads")}
    return digest({"args": keep, "settings": cfgmod.asdict_settings(settings)})


def _profiles(args, game):
    if args.x:
        x = np.atleast_2d(_floats(args.x, "--x"))
        if x.shape[1] != game.n_players:
            raise ConfigError(f"expected {game.n_players} coordinates", "--x")
        return x
    if game.design is None or not hasattr(game.design, "points"):
        raise ConfigError("no --x given and the game has no grid design", "design")
    return game.design.points


# ---------------------------------------------------------------------------
# subcommands

def cmd_solve(args, settings):
    game, _ = _load_game(args)
    pts = _profiles(args, game)
    res = [solve_mpse(game, x) for x in pts]
    names = [f"x_{k + 1}" for k in range(pts.shape[1])]
    scan = ScanResult(names, [tuple(map(float, x)) for x in pts], res)
    text = scan.to_csv(args.out)
    if args.out is None:
        sys.stdout.write(text)
    return game, [args.out] if args.out else [], {"n_equilibria": scan.counts.tolist()}


def cmd_scan(args, settings):
    game, _ = _load_game(args)
    if not args.param:
        raise ConfigError("give at least one --param NAME=lo:hi:num", "--param")
    x0 = _profiles(args, game)[0]
    ranges = {}
    for spec in args.param:
        name, _, values = spec.partition("=")
        name = name.strip()
        if name != "rho" and not (name.startswith("x_") and name[2:].isdigit()
                                  and 1 <= int(name[2:]) <= len(x0)):
            raise ConfigError(f"unknown scan parameter {name!r} (rho, x_1..x_{len(x0)})", "--param")
        ranges[name] = _param_values(values, f"--param {name}")

    def template(**p):
        g = game
        if "rho" in p:
            g = g.replace(copula=GaussianCopula.bivariate(p["rho"]))
        x = x0.copy()
        for k, v in p.items():
            if k.startswith("x_"):
                x[int(k[2:]) - 1] = v
        return g, x

    scan = region_scan(template, ranges, threads=args.threads)
    text = scan.to_csv(args.out)
    if args.out is None:
        sys.stdout.write(text)
    extra = {}
    if len(ranges) == 1:
        extra["boundaries"] = {w: scan.boundaries(w) for w in ("count", "monotone")}
    return game, [args.out] if args.out else [], extra


def cmd_simulate(args, settings):
    from .simulate import get_rule, sample_dataset

    game, _ = _load_game(args)
    if args.n is None:
        raise ConfigError("missing sample size", "--n")
    seed = settings.simulate.seed if args.seed is None else args.seed
    rule = get_rule(args.rule or settings.simulate.rule)
    data = sample_dataset(game, args.n, rule=rule, seed=seed, threads=args.threads)
    data.to_csv(args.out)
    return game, [args.out, args.out + ".meta.json"], {"seed": seed}


def _population(args, settings):
    from .simulate import get_rule, population_table

    game, _ = _load_game(args)
    rule = get_rule(args.rule or settings.simulate.rule)
    return game, population_table(game, rule, threads=args.threads)


def cmd_estimate(args, settings):
    from .identify import identify_population, identify_sample
    from .simulate import Dataset

    os.makedirs(args.out, exist_ok=True)
    if args.population:
        game, table = _population(args, settings)
        xs = settings.estimate.x_star
        res = identify_population(game, table=table,
                                  x_star=None if xs is None else dict(enumerate(xs)))
    else:
        if not args.data:
            raise ConfigError("sample mode needs a dataset", "--data")
        game, _ = _load_game(args, required=False)
        res = identify_sample(Dataset.read_csv(args.data), **settings.estimate.kwargs())
    out = {
        "payoffs.csv": (res.payoff_rows(), ["player", "rivals", "x_i", "value", "rank_class", "sign"]),
        "quantiles.csv": (res.quantile_rows(), ["player", "alpha", "Q"]),
        "beliefs.csv": (res.belief_rows(), None),
    }
    for name, (rows, fields) in out.items():
        write_rows(os.path.join(args.out, name), rows, fields)
    write_rows(os.path.join(args.out, "copula_grid.csv"), res.copula.to_rows())
    write_json(os.path.join(args.out, "report.json"), res.report())
    files = list(out) + ["copula_grid.csv", "report.json"]
    return game, [os.path.join(args.out, f) for f in files], {"failures": res.failures}


def cmd_test(args, settings):
    from .rationalize import CHECKS, ChoiceData, run_checks
    from .simulate import Dataset

    checks = CHECKS if not args.checks else tuple(c.strip() for c in args.checks.split(",") if c.strip())
    bad = [c for c in checks if c not in CHECKS]
    if bad:
        raise ConfigError(f"unknown checks {bad} (allowed: {', '.join(CHECKS)})", "--checks")
    cfg = settings.test
    game = None
    if args.population:
        game, table = _population(args, settings)
        data = ChoiceData.from_population(table)
    else:
        if not args.data:
            raise ConfigError("sample mode needs a dataset", "--data")
        game, _ = _load_game(args, required=False)
        data = ChoiceData.from_dataset(Dataset.read_csv(args.data), cfg.degree, cfg.link)
    report = run_checks(data, checks, cfg)
    text = report.to_json()
    if args.out:
        with open(args.out, "w") as fh:
            fh.write(text if text.endswith("\n") else text + "\n")
    else:
        sys.stdout.write(text + "\n")
    return game, [args.out] if args.out else [], {"passed": report.passed}


COMMANDS = {"solve": cmd_solve, "scan": cmd_scan, "simulate": cmd_simulate,
            "estimate": cmd_estimate, "test": cmd_test}


def build_parser():
    p = _Parser(prog="bingames", description=__doc__.splitlines()[0])
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    def common(sp, game=True):
        if game:
            sp.add_argument("--game", help="game file (TOML)")
            sp.add_argument("--rho", type=float, help="override the two-player Gaussian copula correlation")
        sp.add_argument("--config", help="run file (TOML) with [estimate], [test], [simulate]")
        sp.add_argument("--threads", type=int, help="worker threads (default: $BINGAMES_THREADS or 1)")

    sp = sub.add_parser("solve", help="monotone equilibria at given covariate profiles")
    common(sp)
    sp.add_argument("--x", help="comma-separated covariate profile (default: every design point)")
    sp.add_argument("--out", help="CSV path (stdout when omitted)")

    sp = sub.add_parser("scan", help="equilibrium counts over a parameter grid")
    common(sp)
    sp.add_argument("--x", help="base covariate profile (default: first design point)")
    sp.add_argument("--param", action="append", help="NAME=lo:hi:num or NAME=v1,v2,...; NAME is rho or x_k")
    sp.add_argument("--out", help="CSV path (stdout when omitted)")

    sp = sub.add_parser("simulate", help="draw a dataset from a game")
    common(sp)
    sp.add_argument("--n", type=int)
    sp.add_argument("--seed", type=int)
    sp.add_argument("--rule", choices=["lowest", "first"])
    sp.add_argument("--out", required=True, help="dataset CSV path")

    sp = sub.add_parser("estimate", help="recover payoffs, quantiles and the copula")
    common(sp)
    sp.add_argument("--data", help="dataset CSV")
    sp.add_argument("--population", action="store_true", help="use exact choice probabilities of --game")
    sp.add_argument("--rule", choices=["lowest", "first"])
    sp.add_argument("--out", required=True, help="output directory")

    sp = sub.add_parser("test", help="testable implications of the model")
    common(sp)
    sp.add_argument("--data", help="dataset CSV")
    sp.add_argument("--population", action="store_true", help="use exact choice probabilities of --game")
    sp.add_argument("--rule", choices=["lowest", "first"])
    sp.add_argument("--checks", help="comma-separated subset of zeros,r1,r2,r3,ci,multiplicity")
    sp.add_argument("--out", help="report path (stdout when omitted)")
    return p


def run(argv=None):
    """Run one command; returns the exit status."""
    try:
        args = build_parser().parse_args(argv)
        if args.threads is not None and args.threads < 1:
            raise ConfigError("must be a positive integer", "--threads")
        settings = cfgmod.load_settings(args.config)
        directory = _out_dir(args.out, args.command == "estimate") if args.out else os.getcwd()
        game, outputs, extra = COMMANDS[args.command](args, settings)
        seed = extra.pop("seed", None)
        write_manifest(directory, args.command, _config_hash(args, settings),
                       game.game_hash() if game is not None else None, seed,
                       [os.path.relpath(f, directory) for f in outputs if f],
                       {"result": extra} if extra else None)
        return EXIT_OK
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (RuntimeError, ValueError, OSError, ArithmeticError) as exc:
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_RUNTIME


def main():  # pragma: no cover
    sys.exit(run())


if __name__ == "__main__":  # pragma: no cover
    main()
