"""Truncated numerical orbits of a bijection.

An :class:`OrbitGrid` holds one or two truncated orbits of a
:class:`~taucalc.maps.TauMap` together with the detected limit point.
Three modes are supported:

* ``semigroup`` -- forward orbit of a single base,
* ``interval``  -- the union of the forward orbits of two bases sharing
  a limit (the numerical stand-in for an interval of integration),
* ``group``     -- a two-sided orbit of a single base.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np

from .errors import CoincidentOrbits, LimitMismatch, ZeroDivisor
from .maps import LimitResult, TauMap, limit_point

DEFAULT_MAX_DEPTH = 512
DEFAULT_DELTA_TOL = 1e-15
DEFAULT_FIXED_POINT_TOL = 1e-13

SEMIGROUP = "semigroup"
INTERVAL = "interval"
GROUP = "group"


@dataclass(frozen=True, eq=False)
class OrbitBranch:
    """A single truncated orbit, ordered base-first along forward iteration.

    ``role`` is "b" for a branch whose measure enters positively, "a" for
    the subtracted branch of an interval grid, and "group" for a two-sided
    orbit.  For a group branch ``base_index`` locates the base point.
    """

    points: np.ndarray
    limit: float
    role: str
    base_index: int = 0

    def __post_init__(self) -> None:
        object.__setattr__(self, "points", np.asarray(self.points, dtype=float))
        self.points.setflags(write=False)

    @property
    def deltas(self) -> np.ndarray:
        """Successive differences tau^n - tau^(n+1); length len(points)-1."""
        return self.points[:-1] - self.points[1:]

    def __len__(self) -> int:
        return len(self.points)


@dataclass(frozen=True, eq=False)
class OrbitGrid:
    """One or two truncated orbits of a bijection, plus the shared limit."""

    tau: TauMap
    mode: str
    branches: tuple[OrbitBranch, ...]
    tol: float

    @property
    def limit(self) -> float:
        return self.branches[-1].limit

    @property
    def depth(self) -> int:
        return max(len(b) for b in self.branches)

    def branch(self, role: str) -> OrbitBranch:
        for b in self.branches:
            if b.role == role:
                return b
        raise KeyError(role)


def _forward_orbit(tau: TauMap, base: float, limit: float, delta_tol: float,
                   max_depth: int) -> np.ndarray:
    pts = [float(base)]
    scale = 1.0 + abs(limit)
    quiet = 0
    x = float(base)
    for _ in range(max_depth):
        x_next = tau.forward(x)
        delta = x - x_next
        if delta == 0.0:
            if abs(x - limit) <= 1e3 * delta_tol * scale:
                break  # converged so fast the step underflowed
            raise ZeroDivisor(f"fixed point hit on the orbit at x={x}")
        pts.append(x_next)
        quiet = quiet + 1 if abs(delta) < delta_tol * scale else 0
        if quiet >= 3:
            break
        x = x_next
    return np.asarray(pts)


def _backward_orbit(tau: TauMap, base: float, delta_tol: float, max_depth: int,
                    weight: Callable[[float], float] | None) -> np.ndarray:
    """Backward iterates of the base (excluded), nearest first."""
    w = weight if weight is not None else (lambda _x: 1.0)
    pts = []
    x = float(base)
    quiet = 0
    for _ in range(max_depth):
        x_prev = tau.inverse(x)
        delta = x_prev - x
        if delta == 0.0:
            raise ZeroDivisor(f"fixed point hit on the orbit at x={x}")
        pts.append(x_prev)
        quiet = quiet + 1 if abs(delta * w(x_prev)) < delta_tol * (1.0 + abs(x_prev)) else 0
        if quiet >= 3:
            break
        x = x_prev
    return np.asarray(pts[::-1])


def build_grid(tau: TauMap, mode: str = SEMIGROUP,
               bases: float | tuple[float, float] = 1.0,
               tol: float = DEFAULT_FIXED_POINT_TOL,
               delta_tol: float = DEFAULT_DELTA_TOL,
               max_depth: int = DEFAULT_MAX_DEPTH,
               backward_weight: Callable[[float], float] | None = None) -> OrbitGrid:
    """Construct a truncated orbit grid.

    ``bases`` is a single base for semigroup/group mode and a pair
    ``(a, b)`` for interval mode.  Orbit generation stops once three
    consecutive steps fall below ``delta_tol`` relative to the limit, or
    at ``max_depth``.  Group orbits truncate the backward direction with
    the caller-supplied ``backward_weight`` decay (weight 1 if omitted).
    """
    if mode == SEMIGROUP:
        base = float(bases) if np.isscalar(bases) else float(bases[0])
        lim = limit_point(tau, base, tol=tol)
        pts = _forward_orbit(tau, base, lim.value, delta_tol, max_depth)
        branch = OrbitBranch(pts, lim.value, role="b")
        return OrbitGrid(tau, SEMIGROUP, (branch,), tol)

    if mode == INTERVAL:
        a, b = float(bases[0]), float(bases[1])
        lim_a = limit_point(tau, a, tol=tol)
        lim_b = limit_point(tau, b, tol=tol)
        scale = 1.0 + abs(lim_b.value)
        if abs(lim_a.value - lim_b.value) > 1e-10 * scale:
            raise LimitMismatch(
                f"orbit limits differ: {lim_a.value} vs {lim_b.value}")
        pts_a = _forward_orbit(tau, a, lim_a.value, delta_tol, max_depth)
        pts_b = _forward_orbit(tau, b, lim_b.value, delta_tol, max_depth)
        _check_disjoint(pts_a, pts_b, lim_b.value, delta_tol)
        return OrbitGrid(tau, INTERVAL,
                         (OrbitBranch(pts_a, lim_a.value, role="a"),
                          OrbitBranch(pts_b, lim_b.value, role="b")), tol)

    if mode == GROUP:
        base = float(bases) if np.isscalar(bases) else float(bases[0])
        lim = limit_point(tau, base, tol=tol)
        fwd = _forward_orbit(tau, base, lim.value, delta_tol, max_depth)
        back = _backward_orbit(tau, base, delta_tol, max_depth, backward_weight)
        pts = np.concatenate([back, fwd])
        branch = OrbitBranch(pts, lim.value, role="group", base_index=len(back))
        return OrbitGrid(tau, GROUP, (branch,), tol)

    raise ValueError(f"unknown grid mode {mode!r}")


def _check_disjoint(pts_a: np.ndarray, pts_b: np.ndarray, limit: float,
                    delta_tol: float) -> None:
    # Both tails crowd the shared limit, so coincidence is judged relative
    # to the distance from the limit, and unresolvable tail pairs are skipped.
    da = np.abs(pts_a - limit)
    db = np.abs(pts_b - limit)
    gap = np.abs(np.subtract.outer(pts_a, pts_b))
    sep = np.add.outer(da, db)
    floor = 1e3 * delta_tol * (1.0 + abs(limit))
    resolvable = np.maximum.outer(da, db) > floor
    hits = (gap < 1e-8 * sep) & resolvable
    if hits.any():
        i, j = np.argwhere(hits)[0]
        raise CoincidentOrbits(
            f"orbit point {pts_a[i]} of base a coincides with {pts_b[j]} of base b")


def contraction_estimate(tau: TauMap, grid: OrbitGrid) -> float:
    """Largest sampled slope |tau(x)-tau(y)| / |x-y| over adjacent grid points."""
    worst = 0.0
    for branch in grid.branches:
        pts = branch.points
        if len(pts) < 3:
            continue
        num = np.abs(np.diff(pts[1:]))   # |tau(x_i) - tau(x_{i+1})|
        den = np.abs(np.diff(pts[:-1]))
        # Pairs whose spacing is at rounding level carry no slope signal.
        usable = den > 1e-12 * (1.0 + np.abs(pts[:-2]))
        with np.errstate(divide="ignore", invalid="ignore"):
            ratios = np.where(den > 0.0, num / den, np.inf)
        if usable.any():
            ratios = ratios[usable]
        worst = max(worst, float(np.max(ratios)))
    return worst


__all__ = [
    "OrbitBranch", "OrbitGrid", "build_grid", "contraction_estimate",
    "LimitResult", "SEMIGROUP", "INTERVAL", "GROUP",
    "DEFAULT_MAX_DEPTH", "DEFAULT_DELTA_TOL",
]
