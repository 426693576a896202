from pathlib import Path

import numpy as np
import pytest

from bingames.config import (EstimateSettings, asdict_settings, game_from_dict, load_game,
                             load_settings, settings_from_dict)
from bingames.errors import ConfigError
from bingames.game_core import GridDesign, IndependenceCopula
from bingames.reference import example_case2

CONFIGS = Path(__file__).resolve().parents[1] / "configs"


def base_doc():
    return {
        "name": "t",
        "players": {"count": 2},
        "payoffs": [{"kind": "linear", "slope": 1.0, "interaction": [0.0, -2.0]}] * 2,
        "marginals": [{"kind": "normal"}] * 2,
        "copula": {"kind": "gaussian", "rho": 0.5},
        "design": {"kind": "grid", "points": [[1.0, 1.0]]},
    }


def key_of(doc, **kw):
    with pytest.raises(ConfigError) as exc:
        game_from_dict(doc, **kw)
    return exc.value.key


def test_shipped_game_matches_reference():
    g, digest = load_game(CONFIGS / "example1_case2.toml")
    ref, x = example_case2(0.5)
    assert len(digest) == 64
    np.testing.assert_allclose(g.payoff_table(x), ref.payoff_table(x))
    assert g.copula.describe() == ref.copula.describe()


@pytest.mark.parametrize("name", ["example1_case1", "example1_case2", "reference_sample", "small_linear"])
def test_shipped_games_load(name):
    g, _ = load_game(CONFIGS / f"{name}.toml")
    assert g.n_players == 2 and g.exclusion and isinstance(g.design, GridDesign)


def test_rho_override():
    g, _ = load_game(CONFIGS / "example1_case2.toml", rho=0.1)
    assert g.copula.describe() == example_case2(0.1)[0].copula.describe()


def test_payoff_table_csv(tmp_path):
    (tmp_path / "p.csv").write_text("x,a0,a1\n0.0,0.0,-1.0\n1.0,1.0,0.0\n")
    doc = base_doc()
    doc["payoffs"] = [{"kind": "table", "path": "p.csv"}] * 2
    g = game_from_dict(doc, base_dir=str(tmp_path))
    np.testing.assert_allclose(g.payoffs[0].values(np.array([1.0, 0.0])), [1.0, 0.0])


def test_defaults_fill_in():
    doc = base_doc()
    del doc["marginals"], doc["copula"]
    g = game_from_dict(doc)
    assert isinstance(g.copula, IndependenceCopula)


@pytest.mark.parametrize("mutate, key", [
    (lambda d: d.update(turbo=True), "turbo"),
    (lambda d: d["copula"].update(rho="high"), "copula.rho"),
    (lambda d: d["copula"].update(corr=[[1, 0], [0, 1]]), "copula.rho"),
    (lambda d: d["copula"].update(kind="clayton"), "copula.kind"),
    (lambda d: d["design"].update(kind="sobol"), "design.kind"),
    (lambda d: d.__setitem__("payoffs", [{"kind": "linear", "slop": 1.0}] * 2), "payoffs[0].slop"),
    (lambda d: d.__setitem__("marginals", [{"kind": "normal", "scale": -1.0}] * 2), "marginals[0]"),
    (lambda d: d["players"].update(count=3), "payoffs"),
    (lambda d: d["design"].pop("points"), "design.points"),
])
def test_errors_name_the_key(mutate, key):
    doc = base_doc()
    doc = {k: (dict(v) if isinstance(v, dict) else v) for k, v in doc.items()}
    mutate(doc)
    assert key_of(doc) == key


def test_bad_toml(tmp_path):
    p = tmp_path / "g.toml"
    p.write_text("name = \n")
    with pytest.raises(ConfigError, match="invalid TOML"):
        load_game(p)
    with pytest.raises(ConfigError, match="cannot read"):
        load_game(tmp_path / "missing.toml")


def test_run_settings():
    s = load_settings(CONFIGS / "run.toml")
    assert s.estimate.degree == 5 and s.estimate.basis == "hermite"
    assert s.estimate.kwargs()["x_star"] == {0: 0.0, 1: 0.0}
    assert s.test.sample_tol == 0.02 and s.simulate.rule == "lowest"
    assert len(s.digest) == 64
    assert set(asdict_settings(s)) == {"estimate", "test", "simulate"}


def test_run_settings_defaults_and_errors():
    s = load_settings(None)
    assert s.estimate == EstimateSettings()
    with pytest.raises(ConfigError) as exc:
        settings_from_dict({"estimate": {"degre": 3}})
    assert exc.value.key == "estimate.degre"
    with pytest.raises(ConfigError) as exc:
        settings_from_dict({"test": {"z": "three"}})
    assert exc.value.key == "test.z"
    with pytest.raises(ConfigError) as exc:
        settings_from_dict({"estimate": {"K": 4.5}})
    assert exc.value.key == "estimate.K"
