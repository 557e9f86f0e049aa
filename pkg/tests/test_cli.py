import csv
import json

import pytest

from taucalc.cli import main


def run(*argv):
    return main(list(argv))


def write_config(tmp_path, data, name="cfg.json"):
    path = tmp_path / name
    path.write_text(json.dumps(data))
    return str(path)


def test_grid_linear_preset(tmp_path, capsys):
    assert run("grid", "--preset", "linear", "--depth", "12",
               "--out", str(tmp_path)) == 0
    rows = list(csv.DictReader(open(tmp_path / "grid.csv")))
    assert len(rows) == 13  # base plus depth iterates
    diag = json.loads((tmp_path / "grid.json").read_text())
    assert diag["branches"][0]["limit"] == pytest.approx(0.0, abs=1e-12)


def test_grid_fractional_preset_reports_limit(tmp_path):
    assert run("grid", "--preset", "fractional", "--out", str(tmp_path)) == 0
    diag = json.loads((tmp_path / "grid.json").read_text())
    assert diag["branches"][0]["limit"] == pytest.approx(1.0, abs=1e-10)


def test_grid_coincident_orbits_exit_3(tmp_path, capsys):
    cfg = write_config(tmp_path, {
        "map": {"kind": "linear", "q": 0.5},
        "grid": {"mode": "interval", "bases": [1.0, 0.125], "depth": 20},
    })
    assert run("grid", "--config", cfg, "--out", str(tmp_path / "o")) == 3
    assert "CoincidentOrbits" in capsys.readouterr().err


def test_unknown_config_key_exit_2(tmp_path, capsys):
    cfg = write_config(tmp_path, {
        "map": {"kind": "linear", "q": 0.5, "bogus": 1},
        "grid": {"mode": "semigroup", "bases": 1.0},
    })
    assert run("grid", "--config", cfg, "--out", str(tmp_path / "o")) == 2
    assert "bogus" in capsys.readouterr().err


def test_invalid_json_exit_2(tmp_path):
    bad = tmp_path / "bad.json"
    bad.write_text("{not json")
    assert run("grid", "--config", str(bad), "--out", str(tmp_path)) == 2


def test_chain_preset_emits_levels(tmp_path):
    assert run("chain", "--preset", "constant-gauge",
               "--out", str(tmp_path)) == 0
    manifest = json.loads((tmp_path / "manifest.json").read_text())
    assert len(manifest["levels"]) == 6
    assert all((tmp_path / f"level_{k}.csv").exists() for k in range(6))
    assert all(v < 1e-9 for v in manifest["residuals"].values())


def test_chain_explicit_config(tmp_path):
    cfg = write_config(tmp_path, {
        "map": {"kind": "linear", "q": 0.7},
        "grid": {"mode": "semigroup", "bases": 1.0, "depth": 20},
        "level0": {
            "B0": "0.09",
            "eta0": "1/(5.444444444444445 - 5.337690631808282*x^2)",
            "h0": "1",
            "f0": "-1/x - 2.2875816993464053*x",
        },
        "chain": {"levels": 2, "step": {"source": "explicit",
                                        "g": "2.0408163265306123",
                                        "d": 1.0}},
    })
    out = tmp_path / "chain"
    assert run("chain", "--config", cfg, "--out", str(out)) == 0
    manifest = json.loads((out / "manifest.json").read_text())
    assert manifest["levels"][0]["c"] == pytest.approx(-0.5, abs=1e-9)
    assert manifest["levels"][1]["c"] == pytest.approx(-0.245, abs=1e-9)


def test_chain_xi_route_emits_gauges(tmp_path):
    cfg = write_config(tmp_path, {
        "map": {"kind": "linear", "q": 0.5},
        "grid": {"mode": "semigroup", "bases": 1.0, "depth": 25},
        "level0": {"B0": "x^2", "eta0": "4*x^2", "h0": "1", "f0": "0"},
        "chain": {"levels": 2, "step": {"source": "xi", "d": 1.0,
                                        "xi0": 14.0}},
    })
    out = tmp_path / "xi"
    assert run("chain", "--config", cfg, "--out", str(out)) == 0
    assert (out / "gauge_0.csv").exists()
    assert (out / "gauge_1.csv").exists()


def test_chain_missing_seed_exit_2(tmp_path, capsys):
    cfg = write_config(tmp_path, {
        "map": {"kind": "linear", "q": 0.5},
        "grid": {"mode": "semigroup", "bases": 1.0, "depth": 20},
        "level0": {"alpha": "1", "beta": "-2", "gamma": "1"},
        "chain": {"levels": 1, "step": {"source": "explicit", "g": "1"}},
    })
    assert run("chain", "--config", cfg, "--out", str(tmp_path / "o")) == 2
    assert "seed" in capsys.readouterr().err


def test_chain_determinism(tmp_path):
    for sub in ("r1", "r2"):
        assert run("chain", "--preset", "constant-gauge",
                   "--out", str(tmp_path / sub)) == 0
    for name in ("manifest.json", "level_0.csv", "level_5.csv"):
        assert ((tmp_path / "r1" / name).read_bytes()
                == (tmp_path / "r2" / name).read_bytes())


def test_validate_single_criterion(tmp_path, capsys):
    assert run("validate", "--criterion", "pearson",
               "--out", str(tmp_path)) == 0
    out = capsys.readouterr().out
    assert "PASS pearson" in out
    report = json.loads((tmp_path / "validation.json").read_text())
    assert report["passed"] is True
    assert [c["name"] for c in report["criteria"]] == ["pearson"]


def test_validate_unknown_criterion_exit_2(tmp_path, capsys):
    assert run("validate", "--criterion", "bogus",
               "--out", str(tmp_path)) == 2
    assert "bogus" in capsys.readouterr().err


def test_validate_unattainable_tolerance_exit_1(tmp_path, capsys):
    assert run("validate", "--criterion", "pearson", "--tol", "1e-18",
               "--out", str(tmp_path)) == 1
    assert "FAIL pearson" in capsys.readouterr().out
