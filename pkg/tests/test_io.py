import csv
import json

import numpy as np
import pytest

from taucalc import GridFunction
from taucalc.io import (grid_diagnostics, read_function_csv, write_chain,
                        write_function_csv, write_grid_csv, write_json,
                        write_level_csv)
from taucalc.scenarios import constant_gauge_chain


def test_grid_csv_rows(qgrid, tmp_path):
    path = write_grid_csv(qgrid, tmp_path / "grid.csv")
    rows = list(csv.DictReader(open(path)))
    assert len(rows) == len(qgrid.branches[0])
    assert float(rows[0]["point"]) == 1.0
    assert rows[-1]["delta"] == ""  # no step after the deepest point


def test_function_roundtrip(qgrid, tmp_path):
    f = GridFunction.from_callable(qgrid, lambda x: x ** 2 + 1j * x)
    path = write_function_csv(f, tmp_path / "f.csv")
    back = read_function_csv(qgrid, path)
    for va, vb, ma, mb in zip(f.values, back.values, f.valid, back.valid):
        assert np.array_equal(ma, mb)
        assert np.array_equal(va[ma], vb[mb])  # 17g is repr-faithful


def test_output_is_deterministic(qgrid, tmp_path):
    f = GridFunction.from_callable(qgrid, lambda x: np.exp(x) / 3.0)
    p1 = write_function_csv(f, tmp_path / "a.csv")
    p2 = write_function_csv(f, tmp_path / "b.csv")
    assert p1.read_bytes() == p2.read_bytes()


def test_seventeen_significant_digits(qgrid, tmp_path):
    f = GridFunction.constant(qgrid, 1.0 / 3.0)
    path = write_function_csv(f, tmp_path / "third.csv")
    row = next(csv.DictReader(open(path)))
    assert float(row["re"]) == 1.0 / 3.0


def test_grid_diagnostics_json(qgrid):
    diag = grid_diagnostics(qgrid)
    json.dumps(diag)  # must be JSON-serializable
    assert diag["branches"][0]["limit"] == pytest.approx(0.0, abs=1e-12)


def test_write_chain_manifest(tmp_path):
    sc = constant_gauge_chain(n_levels=3)
    manifest = write_chain(sc.levels, tmp_path, residuals={"demo": 1e-16})
    data = json.loads(manifest.read_text())
    assert len(data["levels"]) == 3
    assert (tmp_path / "level_2.csv").exists()
    # lambda history accumulates -c
    assert data["levels"][0]["lambda_after_lift"] == pytest.approx(0.5,
                                                                   rel=1e-9)
    assert data["residuals"]["demo"] == 1e-16


def test_write_json_sorted(tmp_path):
    path = write_json({"b": 1, "a": 2}, tmp_path / "x.json")
    text = path.read_text()
    assert text.index('"a"') < text.index('"b"')


def test_level_csv_columns(tmp_path):
    sc = constant_gauge_chain(n_levels=1)
    path = write_level_csv(sc.levels[0], tmp_path / "lvl.csv")
    header = open(path).readline().strip().split(",")
    assert header == ["branch", "n", "x", "rho", "B", "eta", "h", "f", "phi"]
