"""Functions sampled on orbit grids, with validity windows.

Shifting and differencing consume indices at the truncated end of an
orbit; instead of padding with zeros, every operation carries a boolean
validity mask per branch and shrinks it.  Arithmetic is pointwise and
only allowed between functions living on the same grid object.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from numbers import Number
from typing import Callable

import numpy as np

from .errors import GridMismatch
from .grid import OrbitGrid


def _as_value_arrays(grid: OrbitGrid, values) -> tuple[np.ndarray, ...]:
    if isinstance(values, (list, tuple)) and len(values) == len(grid.branches):
        out = tuple(np.asarray(v, dtype=complex) for v in values)
    else:
        if len(grid.branches) != 1:
            raise GridMismatch("need one value array per grid branch")
        out = (np.asarray(values, dtype=complex),)
    for arr, br in zip(out, grid.branches):
        if arr.shape != br.points.shape:
            raise GridMismatch(
                f"value array length {arr.shape} != branch length {br.points.shape}")
    return out


@dataclass(frozen=True, eq=False)
class GridFunction:
    """Complex values sampled on every point of an :class:`OrbitGrid`."""

    grid: OrbitGrid
    values: tuple[np.ndarray, ...]
    valid: tuple[np.ndarray, ...] = field(default=())
    label: str = ""

    def __post_init__(self) -> None:
        object.__setattr__(self, "values", _as_value_arrays(self.grid, self.values))
        if not self.valid:
            object.__setattr__(
                self, "valid",
                tuple(np.ones(len(b), dtype=bool) for b in self.grid.branches))
        else:
            object.__setattr__(
                self, "valid",
                tuple(np.asarray(m, dtype=bool) for m in self.valid))
        for arr in (*self.values, *self.valid):
            arr.setflags(write=False)

    # -- constructors ---------------------------------------------------
    @classmethod
    def from_callable(cls, grid: OrbitGrid, fn: Callable[[np.ndarray], np.ndarray],
                      label: str = "") -> "GridFunction":
        vals = tuple(np.asarray(fn(b.points), dtype=complex) + np.zeros(len(b))
                     for b in grid.branches)
        return cls(grid, vals, label=label)

    @classmethod
    def constant(cls, grid: OrbitGrid, c: complex, label: str = "") -> "GridFunction":
        return cls(grid, tuple(np.full(len(b), c, dtype=complex)
                               for b in grid.branches), label=label)

    @classmethod
    def identity(cls, grid: OrbitGrid, label: str = "x") -> "GridFunction":
        return cls(grid, tuple(b.points.astype(complex) for b in grid.branches),
                   label=label)

    # -- structure ------------------------------------------------------
    def check_same_grid(self, other: "GridFunction") -> None:
        if self.grid is not other.grid:
            raise GridMismatch("operands live on different grids")

    def with_values(self, values, valid=None, label: str = "") -> "GridFunction":
        return GridFunction(self.grid, values, valid if valid is not None else self.valid,
                            label or self.label)

    @property
    def is_real(self) -> bool:
        return all(np.allclose(v.imag, 0.0, atol=0.0) for v in self.values)

    def real_values(self) -> tuple[np.ndarray, ...]:
        return tuple(v.real for v in self.values)

    def max_abs(self, valid_only: bool = True) -> float:
        worst = 0.0
        for v, m in zip(self.values, self.valid):
            sel = np.abs(v[m]) if valid_only else np.abs(v)
            if sel.size:
                worst = max(worst, float(np.max(sel)))
        return worst

    def scale(self) -> float:
        """max(1, sup|values|) over the valid window."""
        return max(1.0, self.max_abs())

    # -- pointwise arithmetic -------------------------------------------
    def _binary(self, other, op) -> "GridFunction":
        # masked-out entries may hold inf/nan; their arithmetic is discarded
        with np.errstate(invalid="ignore", divide="ignore", over="ignore"):
            if isinstance(other, GridFunction):
                self.check_same_grid(other)
                vals = tuple(op(a, b) for a, b in zip(self.values, other.values))
                valid = tuple(m & n for m, n in zip(self.valid, other.valid))
            elif isinstance(other, Number):
                vals = tuple(op(a, other) for a in self.values)
                valid = self.valid
            else:
                return NotImplemented
        return GridFunction(self.grid, vals, valid)

    def __add__(self, other):
        return self._binary(other, lambda a, b: a + b)

    __radd__ = __add__

    def __sub__(self, other):
        return self._binary(other, lambda a, b: a - b)

    def __rsub__(self, other):
        return self._binary(other, lambda a, b: b - a)

    def __mul__(self, other):
        return self._binary(other, lambda a, b: a * b)

    __rmul__ = __mul__

    def __truediv__(self, other):
        with np.errstate(divide="ignore", invalid="ignore"):
            out = self._binary(other, lambda a, b: a / b)
        return out

    def __rtruediv__(self, other):
        with np.errstate(divide="ignore", invalid="ignore"):
            return self._binary(other, lambda a, b: b / a)

    def __abs__(self):
        return GridFunction(self.grid,
                            tuple(np.abs(a).astype(complex) for a in self.values),
                            self.valid)

    def __pow__(self, other):
        if not isinstance(other, Number):
            return NotImplemented
        return self._binary(other, lambda a, b: a ** b)

    def __neg__(self):
        return GridFunction(self.grid, tuple(-a for a in self.values), self.valid)

    def conj(self) -> "GridFunction":
        return GridFunction(self.grid, tuple(np.conj(a) for a in self.values),
                            self.valid)

    def window(self, margin: int) -> "GridFunction":
        """Zero the values on ``margin`` indices at each end of every branch.

        Unlike :meth:`restrict` this keeps the validity mask, producing a
        genuinely interior-supported function (summation-by-parts tests
        need actual zeros, not masked-out entries).
        """
        vals = []
        for v in self.values:
            vv = v.copy()
            if margin > 0:
                vv[:margin] = 0.0
                vv[len(vv) - margin:] = 0.0
            vals.append(vv)
        return GridFunction(self.grid, tuple(vals), self.valid, self.label)

    def restrict(self, margin: int) -> "GridFunction":
        """Invalidate ``margin`` indices at each end of every branch."""
        masks = []
        for m in self.valid:
            mm = m.copy()
            if margin > 0:
                mm[:margin] = False
                mm[len(mm) - margin:] = False
            masks.append(mm)
        return GridFunction(self.grid, self.values, tuple(masks), self.label)


def max_abs_diff(f: GridFunction, g: GridFunction) -> float:
    """Largest pointwise |f - g| on the common valid window."""
    f.check_same_grid(g)
    worst = 0.0
    for a, b, m, n in zip(f.values, g.values, f.valid, g.valid):
        sel = m & n
        if sel.any():
            worst = max(worst, float(np.max(np.abs(a[sel] - b[sel]))))
    return worst


def joint_scale(*fns: GridFunction) -> float:
    """max(1, sup|values|) across several functions (residual denominator)."""
    return max(1.0, *(f.max_abs() for f in fns))


__all__ = ["GridFunction", "max_abs_diff", "joint_scale"]
