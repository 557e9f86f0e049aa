"""Shift, difference and integral operators on orbit grids.

All operators act pointwise along each orbit branch.  With points
``x_n = tau^n(base)`` and steps ``delta_n = x_n - x_{n+1}``:

* shift by 1 evaluates the composition with tau, ``(Tf)[n] = f[n+1]``,
* the tau-derivative is the divided difference ``(f[n]-f[n+1])/delta_n``,
* the tau-integral is the telescoping sum ``sum delta_n f[n]``.

Products over the orbit (the tau-exponential, first-order solves) are
suffix products anchored at the orbit limit.
"""

from __future__ import annotations

import warnings

import numpy as np

from .errors import (FactorZero, GridMismatch, NonPositiveFactor,
                     NotContractingWarning, TailNotConverged)
from .grid import GROUP, INTERVAL, SEMIGROUP, OrbitGrid, contraction_estimate
from .gridfn import GridFunction

_TAIL_TOL = 1e-10


def deltas_fn(grid: OrbitGrid) -> GridFunction:
    """The step function x - tau(x) sampled on the grid (last index invalid)."""
    vals, valid = [], []
    for b in grid.branches:
        v = np.zeros(len(b), dtype=complex)
        v[:-1] = b.deltas
        m = np.ones(len(b), dtype=bool)
        m[-1] = False
        vals.append(v)
        valid.append(m)
    return GridFunction(grid, tuple(vals), tuple(valid), label="x-tau(x)")


def dtau_inverse_fn(grid: OrbitGrid) -> GridFunction:
    """The tau-derivative of the inverse map: delta_{n-1}/delta_n on the grid."""
    vals, valid = [], []
    for b in grid.branches:
        v = np.zeros(len(b), dtype=complex)
        d = b.deltas
        v[1:-1] = d[:-1] / d[1:]
        m = np.zeros(len(b), dtype=bool)
        m[1:-1] = True
        vals.append(v)
        valid.append(m)
    return GridFunction(grid, tuple(vals), tuple(valid), label="dtau(tau^-1)")


def shift(f: GridFunction, steps: int = 1) -> GridFunction:
    """Composition with tau^steps: out[n] = f[n+steps], mask shrinking."""
    vals, valid = [], []
    for v, m in zip(f.values, f.valid):
        n = len(v)
        if abs(steps) >= n:
            raise GridMismatch(f"|steps|={abs(steps)} exceeds branch depth {n}")
        out = np.zeros(n, dtype=complex)
        mask = np.zeros(n, dtype=bool)
        if steps >= 0:
            out[: n - steps] = v[steps:]
            mask[: n - steps] = m[steps:]
        else:
            out[-steps:] = v[:steps]
            mask[-steps:] = m[:steps]
        vals.append(out)
        valid.append(mask)
    return GridFunction(f.grid, tuple(vals), tuple(valid), label=f.label)


def tau_derivative(f: GridFunction) -> GridFunction:
    """Divided difference (f - Tf)/(x - tau(x)); the last index turns invalid."""
    vals, valid = [], []
    for b, v, m in zip(f.grid.branches, f.values, f.valid):
        out = np.zeros(len(v), dtype=complex)
        out[:-1] = (v[:-1] - v[1:]) / b.deltas
        mask = np.zeros(len(v), dtype=bool)
        mask[:-1] = m[:-1] & m[1:]
        vals.append(out)
        valid.append(mask)
    return GridFunction(f.grid, tuple(vals), tuple(valid),
                        label=f"d({f.label})" if f.label else "")


def _branch_integral(branch, v, m, tol, check_tail):
    d = branch.deltas
    terms = d * v[:-1]
    terms = np.where(m[:-1], terms, 0.0)
    total = complex(np.sum(terms))
    if check_tail:
        scale = max(1.0, float(np.max(np.abs(v[m]))) if m.any() else 1.0)
        tail = np.abs(terms[-3:])
        if tail.size and np.any(tail > tol * scale):
            raise TailNotConverged(
                f"last tail terms {tail} exceed {tol}*scale={tol * scale}")
    return total


def tau_integral(f: GridFunction, tol: float = _TAIL_TOL,
                 check_tail: bool = True) -> complex:
    """Orbit-weighted sum; interval grids subtract the a-branch integral.

    Semigroup: integral from the limit to the base.  Interval: integral
    over [a, b] as orbit(b) minus orbit(a).  Group: two-sided sum.
    """
    grid = f.grid
    if grid.mode in (SEMIGROUP, GROUP):
        (b,), (v,), (m,) = grid.branches, f.values, f.valid
        total = _branch_integral(b, v, m, tol, check_tail)
        if grid.mode == GROUP and check_tail:
            # Backward tail sits at the start of the branch.
            terms = np.abs(b.deltas[:3] * v[:3])
            scale = max(1.0, f.max_abs())
            if np.any(terms > tol * scale):
                raise TailNotConverged(f"backward tail terms {terms} too large")
        return total
    if grid.mode == INTERVAL:
        br_a, br_b = grid.branch("a"), grid.branch("b")
        ia = grid.branches.index(br_a)
        ib = grid.branches.index(br_b)
        int_b = _branch_integral(br_b, f.values[ib], f.valid[ib], tol, check_tail)
        int_a = _branch_integral(br_a, f.values[ia], f.valid[ia], tol, check_tail)
        return int_b - int_a
    raise GridMismatch(f"unsupported grid mode {grid.mode}")


def tau_antiderivative(f: GridFunction, tol: float = _TAIL_TOL,
                       check_tail: bool = True) -> GridFunction:
    """Per-branch suffix sums: out[n] = integral of f from the limit to x_n."""
    vals, valid = [], []
    for b, v, m in zip(f.grid.branches, f.values, f.valid):
        terms = np.zeros(len(v), dtype=complex)
        terms[:-1] = b.deltas * v[:-1]
        # out[n] = sum_{m>=n} terms[m], summed tail-first for accuracy.
        out = np.cumsum(terms[::-1])[::-1]
        mask = np.zeros(len(v), dtype=bool)
        ok = True
        for i in range(len(v) - 1, -1, -1):
            ok = ok and (m[i] or i == len(v) - 1)
            mask[i] = ok
        mask[-1] = True
        if check_tail and len(v) >= 4:
            scale = max(1.0, f.max_abs())
            tail = np.abs(terms[-4:-1])
            if np.any(tail > tol * scale):
                raise TailNotConverged(f"antiderivative tail terms {tail} too large")
        vals.append(out)
        valid.append(mask)
    return GridFunction(f.grid, tuple(vals), tuple(valid),
                        label=f"int({f.label})" if f.label else "")


def _positive_real(arr: np.ndarray, what: str) -> np.ndarray:
    if np.any(np.abs(arr.imag) > 1e-13 * (1.0 + np.abs(arr.real))):
        raise NonPositiveFactor(f"{what}: complex value, real log branch required")
    re = arr.real
    if np.any(np.abs(re) < 1e-300):
        raise FactorZero(f"{what}: vanishing factor")
    if np.any(re <= 0.0):
        raise NonPositiveFactor(f"{what}: non-positive factor")
    return re


def _suffix_product(factors: np.ndarray) -> np.ndarray:
    """out[n] = prod_{m >= n} factors[m], out[len] dropped (empty product = 1)."""
    rev = np.cumprod(factors[::-1])[::-1]
    return rev


def tau_exponential(grid: OrbitGrid, warn_contraction: bool = True) -> GridFunction:
    """Product solution of d_tau(e) = e with e = 1 at the orbit limit."""
    if warn_contraction:
        est = contraction_estimate(grid.tau, grid)
        if est >= 1.0:
            warnings.warn(f"contraction estimate {est} >= 1; product may diverge",
                          NotContractingWarning, stacklevel=2)
    vals, valid = [], []
    for b in grid.branches:
        fac = 1.0 - b.deltas
        if np.any(np.abs(fac) < 1e-14):
            raise FactorZero("factor 1 - (x - tau(x)) vanishes on the orbit")
        out = np.ones(len(b), dtype=complex)
        out[:-1] = _suffix_product(1.0 / fac)
        vals.append(out)
        valid.append(np.ones(len(b), dtype=bool))
    return GridFunction(grid, tuple(vals), tuple(valid), label="exp_tau")


def product_integral(F: GridFunction, rel_tol: float = 1e-10) -> complex:
    """Product of F over the forward orbit, cross-checked via exp/log.

    The product prod_n F(tau^n(x)) equals exp of the tau-integral of
    ln(F)/(x - tau(x)); both evaluations are performed and must agree to
    ``rel_tol`` relative.
    """
    if len(F.grid.branches) != 1:
        raise GridMismatch("product integral needs a single-orbit grid")
    v, m = F.values[0], F.valid[0]
    use = m.copy()
    use[-1] = False  # pair each factor with an orbit step
    fac = _positive_real(v[use], "product factor")
    direct = float(np.prod(fac))
    via_log = float(np.exp(np.sum(np.log(fac))))
    agreement = abs(direct - via_log) / max(1.0, abs(direct))
    if agreement > rel_tol:
        raise TailNotConverged(
            f"product/log evaluations disagree by {agreement}")
    return complex(direct)


def solve_linear_first_order(f: GridFunction, init: complex = 1.0) -> GridFunction:
    """Solve d_tau(psi) = f * psi with psi = init at the orbit limit.

    The suffix product psi[n] = init * prod_{m>=n} 1/(1 - delta_m f[m])
    satisfies the divided-difference equation exactly.
    """
    vals, valid = [], []
    for b, v, m in zip(f.grid.branches, f.values, f.valid):
        fac = 1.0 - b.deltas * v[:-1]
        fac = _positive_real(np.where(m[:-1], fac, 1.0), "first-order factor")
        out = np.full(len(v), complex(init))
        out[:-1] = init * _suffix_product(1.0 / fac.astype(complex))
        mask = np.zeros(len(v), dtype=bool)
        ok = True
        for i in range(len(v) - 1, -1, -1):
            ok = ok and (m[i] or i == len(v) - 1)
            mask[i] = ok
        mask[-1] = True
        vals.append(out)
        valid.append(mask)
    psi = GridFunction(f.grid, tuple(vals), tuple(valid), label="psi")
    _verify_first_order(psi, f)
    return psi


def _verify_first_order(psi: GridFunction, f: GridFunction) -> None:
    # step form psi[n] (1 - delta f[n]) = psi[n+1]: unlike the divided
    # difference it does not amplify rounding by 1/delta at the tail
    for b, pv, fv, pm, fm in zip(psi.grid.branches, psi.values, f.values,
                                 psi.valid, f.valid):
        sel = pm[:-1] & pm[1:] & fm[:-1]
        if not sel.any():
            continue
        lhs = (pv[:-1] * (1.0 - b.deltas * fv[:-1]))[sel]
        rhs = pv[1:][sel]
        scale = max(1.0, float(np.max(np.abs(rhs))))
        res = float(np.max(np.abs(lhs - rhs))) / scale
        if res > 1e-10:
            raise TailNotConverged(f"first-order solve residual {res} > 1e-10")


__all__ = [
    "deltas_fn", "dtau_inverse_fn", "shift", "tau_derivative", "tau_integral",
    "tau_antiderivative", "tau_exponential", "product_integral",
    "solve_linear_first_order",
]
