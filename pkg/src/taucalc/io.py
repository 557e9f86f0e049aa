"""Deterministic CSV/JSON export of grids, functions, chains and solver runs.

All numeric output uses 17 significant digits (repr-faithful for binary64)
and '.' as the decimal separator regardless of locale, so identical inputs
produce byte-identical files.
"""

from __future__ import annotations

import csv
import json
from pathlib import Path

import numpy as np

from .chain import ChainLevel
from .grid import OrbitGrid
from .gridfn import GridFunction
from .hilbert import WeightedGrid
from .riccati import ResolventResult, TwoByTwoSystem


def _fmt(v: float) -> str:
    return format(float(v), ".17g")


def _writer(path: Path):
    return open(path, "w", newline="", encoding="utf-8")


def write_grid_csv(grid: OrbitGrid, path: str | Path) -> Path:
    """Columns: branch, n, point, delta (delta empty on the last row)."""
    path = Path(path)
    with _writer(path) as fh:
        out = csv.writer(fh)
        out.writerow(["branch", "n", "point", "delta"])
        for bi, br in enumerate(grid.branches):
            deltas = br.deltas
            for n, p in enumerate(br.points):
                d = _fmt(deltas[n]) if n < len(deltas) else ""
                out.writerow([bi, n, _fmt(p), d])
    return path


def grid_diagnostics(grid: OrbitGrid) -> dict:
    """Limit and size diagnostics of an orbit grid, JSON-ready."""
    return {
        "mode": grid.mode,
        "map": grid.tau.name,
        "branches": [
            {"role": br.role, "points": len(br), "base": float(br.points[br.base_index]),
             "limit": float(br.limit), "min_delta": float(np.min(np.abs(br.deltas)))}
            for br in grid.branches
        ],
    }


def write_function_csv(f: GridFunction, path: str | Path) -> Path:
    """Columns: branch, n, x, re, im, valid."""
    path = Path(path)
    with _writer(path) as fh:
        out = csv.writer(fh)
        out.writerow(["branch", "n", "x", "re", "im", "valid"])
        for bi, (br, v, m) in enumerate(zip(f.grid.branches, f.values, f.valid)):
            for n, p in enumerate(br.points):
                out.writerow([bi, n, _fmt(p), _fmt(v[n].real), _fmt(v[n].imag),
                              int(m[n])])
    return path


def read_function_csv(grid: OrbitGrid, path: str | Path) -> GridFunction:
    """Inverse of :func:`write_function_csv` onto an existing grid object."""
    vals = [np.zeros(len(br), dtype=complex) for br in grid.branches]
    valid = [np.zeros(len(br), dtype=bool) for br in grid.branches]
    with open(path, newline="", encoding="utf-8") as fh:
        for row in csv.DictReader(fh):
            bi, n = int(row["branch"]), int(row["n"])
            vals[bi][n] = float(row["re"]) + 1j * float(row["im"])
            valid[bi][n] = bool(int(row["valid"]))
    return GridFunction(grid, tuple(vals), tuple(valid))


def write_weight_csv(w: WeightedGrid, path: str | Path) -> Path:
    """Columns: branch, n, x, rho, delta, positive."""
    path = Path(path)
    with _writer(path) as fh:
        out = csv.writer(fh)
        out.writerow(["branch", "n", "x", "rho", "delta", "positive"])
        for bi, (br, v, m) in enumerate(zip(w.grid.branches, w.rho.values,
                                            w.rho.valid)):
            deltas = br.deltas
            for n, p in enumerate(br.points):
                d = _fmt(deltas[n]) if n < len(deltas) else ""
                out.writerow([bi, n, _fmt(p), _fmt(v[n].real), d,
                              int(bool(m[n]) and v[n].real > 0)])
    return path


def write_level_csv(level: ChainLevel, path: str | Path) -> Path:
    """Columns: branch, n, x, rho, B, eta, h, f, phi (real parts)."""
    path = Path(path)
    fields = {"rho": level.w.rho, "B": level.B, "eta": level.eta,
              "h": level.h, "f": level.f, "phi": level.phi}
    with _writer(path) as fh:
        out = csv.writer(fh)
        out.writerow(["branch", "n", "x"] + list(fields))
        for bi, br in enumerate(level.grid.branches):
            for n, p in enumerate(br.points):
                row = [bi, n, _fmt(p)]
                for fn in fields.values():
                    row.append(_fmt(fn.values[bi][n].real)
                               if fn.valid[bi][n] else "")
                out.writerow(row)
    return path


def write_chain(levels, out_dir: str | Path, manifest_extra: dict | None = None,
                residuals: dict | None = None) -> Path:
    """Per-level CSVs plus a JSON manifest (step data, eigenvalue history).

    Returns the manifest path; level k goes to ``level_{k}.csv``.
    """
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    entries = []
    lam = 0.0
    for level in levels:
        write_level_csv(level, out_dir / f"level_{level.k}.csv")
        lam -= float(np.real(level.c))
        entries.append({
            "k": level.k,
            "c": float(np.real(level.c)),
            "d": float(np.real(level.d)),
            "lambda_after_lift": lam,
            "file": f"level_{level.k}.csv",
        })
    manifest = {"levels": entries}
    if residuals:
        manifest["residuals"] = residuals
    if manifest_extra:
        manifest.update(manifest_extra)
    path = out_dir / "manifest.json"
    path.write_text(json.dumps(manifest, indent=2, sort_keys=True) + "\n",
                    encoding="utf-8")
    return path


def write_system_csv(sys: TwoByTwoSystem, path: str | Path) -> Path:
    """Columns: branch, n, x, a, b, c, d (real parts)."""
    path = Path(path)
    grid = sys.a.grid
    with _writer(path) as fh:
        out = csv.writer(fh)
        out.writerow(["branch", "n", "x", "a", "b", "c", "d"])
        for bi, br in enumerate(grid.branches):
            for n, p in enumerate(br.points):
                row = [bi, n, _fmt(p)]
                for fn in (sys.a, sys.b, sys.c, sys.d):
                    row.append(_fmt(fn.values[bi][n].real)
                               if fn.valid[bi][n] else "")
                out.writerow(row)
    return path


def resolvent_diagnostics(res: ResolventResult) -> dict:
    """JSON-ready convergence report of a resolvent computation."""
    return {
        "converged": bool(res.converged),
        "criterion_sum": float(res.criterion_sum),
        "steps": int(res.steps),
        "cauchy_gap": float(res.cauchy_gap),
    }


def write_json(data: dict, path: str | Path) -> Path:
    path = Path(path)
    path.write_text(json.dumps(data, indent=2, sort_keys=True) + "\n",
                    encoding="utf-8")
    return path


__all__ = [
    "write_grid_csv", "grid_diagnostics", "write_function_csv",
    "read_function_csv", "write_weight_csv", "write_level_csv",
    "write_chain", "write_system_csv", "resolvent_diagnostics", "write_json",
]
