"""Change of variables: conjugating the generating map by a homeomorphism.

A strictly monotone invertible change kappa: X -> Y turns the dynamics
tau on X into tau~ = kappa o tau o kappa^{-1} on Y.  Sampled on the
image grid (y_n = kappa(x_n)), transported functions keep their values
while the weight and the coefficient pair pick up ratios of the orbit
increments of the two grids, so that inner products — and hence the
whole eigenproblem — are preserved.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass
from typing import Callable

import numpy as np

from .chain import ChainLevel, make_level, with_step
from .errors import DomainEscape, GridMismatch
from .grid import OrbitBranch, OrbitGrid
from .gridfn import GridFunction
from .maps import TauMap

_MONOTONE_SAMPLES = 1000


@dataclass(frozen=True)
class VariableChange:
    """A homeomorphism kappa with explicit inverse between two intervals."""

    kappa: Callable[[float], float]
    kappa_inv: Callable[[float], float]
    source: tuple[float, float]
    target: tuple[float, float]
    name: str = ""

    def __post_init__(self) -> None:
        lo, hi = self.source
        xs = np.linspace(lo, hi, _MONOTONE_SAMPLES)
        ys = np.array([self.kappa(x) for x in xs])
        back = np.array([self.kappa_inv(y) for y in ys])
        if np.max(np.abs(back - xs) / (1.0 + np.abs(xs))) > 1e-11:
            raise DomainEscape("kappa_inv is not the inverse of kappa")
        diffs = np.diff(ys)
        if not (np.all(diffs > 0) or np.all(diffs < 0)):
            warnings.warn("kappa is not monotone on the sampled domain",
                          UserWarning, stacklevel=2)

    def __call__(self, x):
        return self.kappa(x)


def ln_change(source: tuple[float, float]) -> VariableChange:
    """kappa = ln on a positive interval."""
    if source[0] <= 0:
        raise DomainEscape("ln change needs a positive source interval")
    return VariableChange(np.log, np.exp, source,
                          (float(np.log(source[0])), float(np.log(source[1]))),
                          name="ln")


def exp_change(source: tuple[float, float]) -> VariableChange:
    """kappa = exp."""
    return VariableChange(np.exp, np.log, source,
                          (float(np.exp(source[0])), float(np.exp(source[1]))),
                          name="exp")


def affine_change(p: float, q: float,
                  source: tuple[float, float]) -> VariableChange:
    """kappa(x) = p*x + q."""
    if p == 0.0:
        raise DomainEscape("affine change needs p != 0")
    lo, hi = sorted((p * source[0] + q, p * source[1] + q))
    return VariableChange(lambda x: p * x + q, lambda y: (y - q) / p,
                          source, (lo, hi), name=f"affine({p},{q})")


def powerlaw_change(p: float, source: tuple[float, float]) -> VariableChange:
    """kappa(x) = x**p on a positive interval."""
    if source[0] <= 0 or p == 0.0:
        raise DomainEscape("power change needs a positive interval and p != 0")
    lo, hi = sorted((source[0] ** p, source[1] ** p))
    return VariableChange(lambda x: x ** p, lambda y: y ** (1.0 / p),
                          source, (lo, hi), name=f"powerlaw({p})")


def conjugate_map(tau: TauMap, ch: VariableChange) -> TauMap:
    """The conjugated dynamics tau~ = kappa o tau o kappa^{-1} on the image."""
    k, ki = ch.kappa, ch.kappa_inv
    return TauMap(lambda y: k(tau.forward(ki(y))),
                  lambda y: k(tau.inverse(ki(y))),
                  ch.target, name=f"{ch.name or 'kappa'}~{tau.name}")


def transport_grid(grid: OrbitGrid, ch: VariableChange,
                   tau_new: TauMap | None = None) -> OrbitGrid:
    """The pointwise kappa-image of an orbit grid.

    Branch points map through kappa one by one (not re-iterated from the
    base), so the index correspondence with the source grid is exact.
    """
    if tau_new is None:
        tau_new = conjugate_map(grid.tau, ch)
    branches = []
    for br in grid.branches:
        pts = np.array([ch.kappa(x) for x in br.points])
        branches.append(OrbitBranch(points=pts, limit=float(ch.kappa(br.limit)),
                                    role=br.role, base_index=br.base_index))
    return OrbitGrid(tau_new, grid.mode, tuple(branches), grid.tol)


def _check_correspondence(source: OrbitGrid, ch: VariableChange,
                          target: OrbitGrid) -> None:
    if len(source.branches) != len(target.branches):
        raise GridMismatch("branch counts differ")
    for sb, tb in zip(source.branches, target.branches):
        if len(sb) != len(tb):
            raise GridMismatch("branch lengths differ")
        img = np.array([ch.kappa(x) for x in sb.points])
        if np.max(np.abs(img - tb.points) / (1.0 + np.abs(img))) > 1e-12:
            raise GridMismatch("target grid is not the kappa-image of the source")


def transport_function(f: GridFunction, ch: VariableChange,
                       target_grid: OrbitGrid) -> GridFunction:
    """Carry values across: (K f)(y) = f(kappa^{-1} y), index-aligned."""
    _check_correspondence(f.grid, ch, target_grid)
    return GridFunction(target_grid, f.values, f.valid, f.label)


transport_solution = transport_function


def _delta_ratio(source: OrbitGrid, target: OrbitGrid) -> GridFunction:
    """The ratio of orbit increments delta^x_n / delta^y_n on the target grid.

    This is the grid sampling of the derivative of kappa^{-1} along the
    image orbit, d_tau~ kappa^{-1}(y_n).
    """
    vals, valid = [], []
    for sb, tb in zip(source.branches, target.branches):
        n = len(sb)
        out = np.ones(n, dtype=complex)
        out[:-1] = sb.deltas / tb.deltas
        m = np.ones(n, dtype=bool)
        m[-1] = False
        vals.append(out)
        valid.append(m)
    return GridFunction(target, tuple(vals), tuple(valid), label="dx/dy")


def transport_level(level: ChainLevel, ch: VariableChange,
                    target_grid: OrbitGrid) -> ChainLevel:
    """Transport a factorization level across the change of variables.

    The values of eta, f (and g) carry over unchanged; h picks up the
    increment ratio so that h * d_tau is preserved; B picks up the ratio
    of consecutive increment ratios so that the Pearson pair stays
    consistent; the weight rho transports with the increment ratio,
    making the transport a unitary map of the weighted spaces.
    """
    _check_correspondence(level.grid, ch, target_grid)
    r = _delta_ratio(level.grid, target_grid)

    def carry(f: GridFunction) -> GridFunction:
        return GridFunction(target_grid, f.values, f.valid, f.label)

    eta_t = carry(level.eta)
    f_t = carry(level.f)
    h_t = carry(level.h) / r
    # B~[n] = B[n] * (dx_{n-1}/dy_{n-1}) / (dx_n/dy_n)
    B_vals, B_valid = [], []
    for i, (sb, tb) in enumerate(zip(level.grid.branches, target_grid.branches)):
        n = len(sb)
        Bv = level.B.values[i]
        Bm = level.B.valid[i]
        rv = r.values[i]
        out = np.zeros(n, dtype=complex)
        out[1:] = Bv[1:] * rv[:-1] / rv[1:]
        m = np.zeros(n, dtype=bool)
        m[1:] = Bm[1:] & r.valid[i][:-1] & r.valid[i][1:]
        B_vals.append(out)
        B_valid.append(m)
    B_t = GridFunction(target_grid, tuple(B_vals), tuple(B_valid), label="B")
    out = make_level(target_grid, B_t, eta_t, h_t, f_t, k=level.k)
    if level.g is not None:
        out = with_step(out, g=carry(level.g), c=level.c, d=level.d)
    return out


def transport_weight(rho: GridFunction, ch: VariableChange,
                     target_grid: OrbitGrid) -> GridFunction:
    """rho~ = (dx/dy) * (rho o kappa^{-1}) on the image grid."""
    _check_correspondence(rho.grid, ch, target_grid)
    r = _delta_ratio(rho.grid, target_grid)
    return GridFunction(target_grid, rho.values, rho.valid, rho.label) * r


def equivalence_obstruction(map_a: TauMap, map_b: TauMap,
                            resolution: int = 2000) -> dict:
    """Fixed-point counting obstruction to topological conjugacy.

    Conjugation carries fixed points to fixed points, so unequal counts
    prove the two maps are not equivalent; equal counts prove nothing.
    Counts are estimated from sign changes of tau(x) - x on a uniform
    scan (endpoints checked separately for boundary fixed points).
    """
    counts = []
    for m in (map_a, map_b):
        lo, hi = m.domain
        xs = np.linspace(lo, hi, resolution)
        gap = np.array([m.forward(x) - x for x in xs])
        tol = 1e-12 * (1.0 + np.abs(xs))
        signs = np.sign(np.where(np.abs(gap) < tol, 0.0, gap)).astype(int)
        count = 0
        prev = 0          # last nonzero sign seen
        in_zero_run = False
        for s in signs:
            if s == 0:
                if not in_zero_run:
                    count += 1          # a touch/crossing through zero
                    in_zero_run = True
                continue
            if in_zero_run:
                in_zero_run = False     # crossing already counted
            elif prev != 0 and s != prev:
                count += 1              # sign change between scan points
            prev = s
        counts.append(count)
    verdict = "not_equivalent" if counts[0] != counts[1] else "inconclusive"
    return {"fixed_points": tuple(counts), "verdict": verdict}


__all__ = [
    "VariableChange", "ln_change", "exp_change", "affine_change",
    "powerlaw_change", "conjugate_map", "transport_grid",
    "transport_function", "transport_solution", "transport_weight",
    "transport_level", "equivalence_obstruction",
]
