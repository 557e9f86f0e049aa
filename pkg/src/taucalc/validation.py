"""The acceptance validation suite: twelve numbered numerical criteria.

Each criterion exercises one slice of the library against independent
evidence (hand-coded oracles, closed forms, exact identities, or a
second evaluation path) and reports measured worst-case values together
with the tolerance they must meet.  The suite is shared between the
test suite and the command line front end; it is deterministic (fixed
seeds, fixed presets) so repeated runs produce identical reports.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass
from functools import cached_property

import numpy as np

from .calculus import (deltas_fn, dtau_inverse_fn, shift, tau_antiderivative,
                       tau_derivative, tau_integral)
from .chain import (EigenPair, _bands_AAstar, _bands_AstarA, _tridiag_apply,
                    apply_A, apply_Astar, chain_eigenvalues, eigen_residual,
                    eigen_residual_norm, factorization_residual, lift)
from .covariance import (equivalence_obstruction, ln_change, transport_function,
                         transport_grid, transport_level, transport_weight)
from .errors import PositivityWarning
from .grid import INTERVAL, SEMIGROUP, build_grid
from .gridfn import GridFunction, joint_scale, max_abs_diff
from .hilbert import (PearsonTriple, adjoint_tau_derivative, inner_product,
                      mu_from_rho, norm, adjoint_shift, pearson_residual,
                      weighted_grid)
from .maps import fractional_map, iterate, linear_map
from .riccati import (TwoByTwoSystem, darboux, darboux_solution,
                      general_solution, cross_ratio, resolvent,
                      singular_darboux, solve_system, step_residual,
                      triangular_resolvent)
from .scenarios import (FractionalScenario, constant_gauge_chain,
                        fractional_chain, gauge_riccati_system,
                        qderivative_poly, qhahn_chain)

_poly = np.polynomial.polynomial


# ---------------------------------------------------------------------------
# result containers
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class Check:
    """One measured quantity with the bound it must satisfy.

    ``at_least`` flips the comparison for detector-style checks that
    must exceed a floor instead of staying under a ceiling.
    """

    name: str
    value: float
    threshold: float
    at_least: bool = False

    @property
    def passed(self) -> bool:
        if not np.isfinite(self.value):
            return False
        return self.value >= self.threshold if self.at_least \
            else self.value < self.threshold

    def to_dict(self) -> dict:
        return {"name": self.name, "value": float(self.value),
                "threshold": float(self.threshold),
                "comparison": ">=" if self.at_least else "<",
                "passed": self.passed}


@dataclass(frozen=True)
class CriterionResult:
    """Outcome of one validation criterion (a bundle of checks)."""

    name: str
    checks: tuple[Check, ...]

    @property
    def passed(self) -> bool:
        return all(c.passed for c in self.checks)

    def to_dict(self) -> dict:
        return {"name": self.name, "passed": self.passed,
                "checks": [c.to_dict() for c in self.checks]}


def _result(name: str, checks) -> CriterionResult:
    return CriterionResult(name=name, checks=tuple(checks))


# ---------------------------------------------------------------------------
# shared fixtures
# ---------------------------------------------------------------------------

class SuiteData:
    """Lazily built presets shared across criteria (built at most once)."""

    @cached_property
    def qhahn(self):
        return qhahn_chain()

    @cached_property
    def qhahn_cross(self):
        # Shallower contraction keeps the truncated spectrum's top
        # eigenvalue small enough for 1e-6-relative bottom eigenvalues.
        return qhahn_chain(q=0.93, depth=200, n_levels=4)

    @cached_property
    def constant_gauge(self):
        return constant_gauge_chain()

    @cached_property
    def constant_gauge_deep(self):
        # Deep orbit (truncates at the step tolerance) so resolvent
        # partial products are Cauchy below 1e-12.
        return constant_gauge_chain(q=0.5, depth=120, n_levels=1)

    @cached_property
    def fractional_half(self):
        return fractional_chain()

    @cached_property
    def fractional_two(self):
        # Orbit toward the attracting fixed point at 1: the measure
        # orientation flips (flagged by the weight checker) and points
        # near 1 resolve x - 1 only to absolute rounding, so the orbit
        # is kept shallow enough for the step-constant read-off.
        with warnings.catch_warnings():
            warnings.simplefilter("ignore", PositivityWarning)
            return fractional_chain(a=2.0, depth=25, n_levels=2)

    @cached_property
    def fractional_grid_deep(self):
        return build_grid(fractional_map(0.5), SEMIGROUP, 0.5, max_depth=120)

    @cached_property
    def fractional_grid_shallow(self):
        return build_grid(fractional_map(0.5), SEMIGROUP, 0.5, max_depth=18)


def _poly_fn(grid, coeffs) -> GridFunction:
    return GridFunction.from_callable(grid, lambda t: _poly.polyval(t, coeffs))


# ---------------------------------------------------------------------------
# 1. calculus identities
# ---------------------------------------------------------------------------

def criterion_calculus(data: SuiteData) -> CriterionResult:
    """Leibniz rule, both fundamental-theorem forms, and the change of
    orbit variable, on random polynomials over four generating maps."""
    rng = np.random.default_rng(101)
    tol = 1e-10
    worst = {"leibniz": 0.0, "fundamental": 0.0,
             "antiderivative-inverse": 0.0, "orbit-substitution": 0.0}
    grids = [build_grid(linear_map(q), INTERVAL, (0.5, 1.0), max_depth=80)
             for q in (0.3, 0.7)]
    grids.append(build_grid(fractional_map(0.5), INTERVAL, (0.25, 0.75),
                            max_depth=80))
    grids.append(build_grid(fractional_map(2.0), INTERVAL, (0.25, 0.75),
                            max_depth=80))
    for grid in grids:
        ia = grid.branches.index(grid.branch("a"))
        ib = grid.branches.index(grid.branch("b"))
        dinv = dtau_inverse_fn(grid)
        for _ in range(50):
            f = _poly_fn(grid, rng.uniform(-1, 1, 6))
            g = _poly_fn(grid, rng.uniform(-1, 1, 6))
            psi = _poly_fn(grid, rng.uniform(-1, 1, 6))
            rho = _poly_fn(grid, rng.uniform(-1, 1, 6))
            # product rule; judged where the orbit step is resolvable
            # (deep-tail divided differences are pure rounding noise)
            lhs = tau_derivative(f * g)
            rhs = shift(f) * tau_derivative(g) + g * tau_derivative(f)
            scale_l = joint_scale(lhs, rhs)
            for br, lv, lm, rv, rm in zip(grid.branches, lhs.values, lhs.valid,
                                          rhs.values, rhs.valid):
                ok = lm & rm
                ok[:-1] &= np.abs(br.deltas) >= 1e-4 * (1.0 + np.abs(br.points[:-1]))
                ok[-1] = False
                if ok.any():
                    worst["leibniz"] = max(worst["leibniz"], float(
                        np.max(np.abs(lv[ok] - rv[ok]))) / scale_l)
            # integral of the derivative = boundary difference
            total = tau_integral(tau_derivative(psi))
            ends = psi.values[ib][0] - psi.values[ia][0]
            worst["fundamental"] = max(worst["fundamental"],
                                       abs(total - ends) / psi.scale())
            # derivative of the antiderivative = identity; judged where
            # the orbit step is resolvable against summation rounding
            F = tau_antiderivative(f)
            dF = tau_derivative(F)
            scale = joint_scale(f, F)
            for br, dv, dm, fv, fm in zip(grid.branches, dF.values, dF.valid,
                                          f.values, f.valid):
                ok = dm & fm
                ok[:-1] &= np.abs(br.deltas) >= 1e-4 * (1.0 + np.abs(br.points[:-1]))
                ok[-1] = False
                if ok.any():
                    worst["antiderivative-inverse"] = max(
                        worst["antiderivative-inverse"],
                        float(np.max(np.abs(dv[ok] - fv[ok]))) / scale)
            # integral of (T psi) rho = integral of psi d(tau^-1) (T^-1 rho)
            # over the image interval; on one grid the image starts one
            # orbit index in
            lhs2 = tau_integral(shift(psi) * rho, check_tail=False)
            rhs2 = tau_integral(psi * dinv * shift(rho, -1), check_tail=False)
            scale2 = max(1.0, abs(lhs2), psi.max_abs() * rho.max_abs())
            worst["orbit-substitution"] = max(worst["orbit-substitution"],
                                              abs(lhs2 - rhs2) / scale2)
    return _result("calculus", [Check(k, v, tol) for k, v in worst.items()])


# ---------------------------------------------------------------------------
# 2. hand-coded q-calculus oracle
# ---------------------------------------------------------------------------

def _jackson_integral(coeffs, q: float, upper: float, n_terms: int = 2000) -> float:
    """Hand-coded Jackson integral of a polynomial from 0 to ``upper``."""
    n = np.arange(n_terms)
    pts = upper * q ** n
    return float((1.0 - q) * upper * np.sum(q ** n * _poly.polyval(pts, coeffs)))


def criterion_q_oracle(data: SuiteData) -> CriterionResult:
    """Composition, derivative, integral and antiderivative against a
    from-scratch q-calculus implementation on the orbit of x -> qx."""
    rng = np.random.default_rng(202)
    tol = 1e-12
    worst = {"composition": 0.0, "derivative": 0.0, "integral": 0.0,
             "antiderivative": 0.0}
    for q in (0.3, 0.7):
        grid = build_grid(linear_map(q), SEMIGROUP, 1.0, max_depth=400)
        pts = grid.branches[0].points
        for _ in range(10):
            c = rng.uniform(-1, 1, 6)
            F = _poly_fn(grid, c)
            scale = max(1.0, float(np.max(np.abs(_poly.polyval(pts, c)))))
            # composition with tau: f(qx)
            s_lib = shift(F)
            s_orc = _poly.polyval(q * pts, c)
            m = s_lib.valid[0]
            worst["composition"] = max(worst["composition"], float(
                np.max(np.abs(s_lib.values[0][m] - s_orc[m]))) / scale)
            # q-derivative: (f(x) - f(qx)) / ((1-q)x)
            d_lib = tau_derivative(F)
            d_orc = (_poly.polyval(pts, c) - s_orc) / ((1.0 - q) * pts)
            m = d_lib.valid[0]
            worst["derivative"] = max(worst["derivative"], float(
                np.max(np.abs(d_lib.values[0][m] - d_orc[m]))) / scale)
            # q-integral from the limit 0 to the base 1
            i_lib = tau_integral(F)
            i_orc = _jackson_integral(c, q, 1.0)
            worst["integral"] = max(worst["integral"],
                                    abs(i_lib - i_orc) / scale)
            # antiderivative sampled at a few orbit points
            a_lib = tau_antiderivative(F)
            for n in (0, 3, 12):
                a_orc = _jackson_integral(c, q, float(pts[n]))
                worst["antiderivative"] = max(
                    worst["antiderivative"],
                    abs(a_lib.values[0][n] - a_orc) / scale)
    return _result("q-oracle", [Check(k, v, tol) for k, v in worst.items()])


# ---------------------------------------------------------------------------
# 3. adjoint pairings
# ---------------------------------------------------------------------------

def criterion_adjoints(data: SuiteData) -> CriterionResult:
    """Adjoint identities of the composition operator, multiplication
    operators and the orbit derivative on interior-supported probes."""
    rng = np.random.default_rng(303)
    tol = 1e-9
    margin = 5
    lvl = data.qhahn.levels[0]
    grid, w = lvl.grid, lvl.w
    mu = mu_from_rho(w)
    mu_tau = shift(mu)
    w1 = weighted_grid(grid, lvl.eta * w.rho, warn=False)
    worst = {"shift-pairing": 0.0, "TstarT": 0.0, "TTstar": 0.0,
             "multiplication-pairing": 0.0, "derivative-pairing": 0.0}
    for _ in range(30):
        phi = GridFunction(grid, tuple(rng.standard_normal(len(b)) + 0j
                                       for b in grid.branches)).window(margin)
        psi = GridFunction(grid, tuple(rng.standard_normal(len(b)) + 0j
                                       for b in grid.branches)).window(margin)
        scale = max(1.0, norm(phi, w) * norm(psi, w))
        # <T phi, psi> = <phi, T* psi>
        lhs = inner_product(shift(phi), psi, w, check_tail=False)
        rhs = inner_product(phi, adjoint_shift(psi, w), w, check_tail=False)
        worst["shift-pairing"] = max(worst["shift-pairing"],
                                     abs(lhs - rhs) / scale)
        # T*T = mu (1 - base indicator)
        ts = adjoint_shift(shift(phi), w)
        pt_scale = max(1.0, mu.max_abs() * phi.max_abs())
        for i in range(len(grid.branches)):
            exp = mu.values[i] * phi.values[i]
            exp[0] = 0.0
            sel = ts.valid[i] & mu.valid[i]
            sel[0] = ts.valid[i][0]
            if sel.any():
                worst["TstarT"] = max(worst["TstarT"], float(np.max(
                    np.abs(ts.values[i][sel] - exp[sel]))) / pt_scale)
        # T T* = mu o tau (as a multiplication operator)
        tts = shift(adjoint_shift(phi, w))
        worst["TTstar"] = max(worst["TTstar"],
                              max_abs_diff(tts, mu_tau * phi) / pt_scale)
        # multiplication: <f phi, psi>_{k+1} = <phi, conj(f) eta psi>_k
        f = _poly_fn(grid, rng.uniform(-1, 1, 4))
        lhs = inner_product(f * phi, psi, w1, check_tail=False)
        rhs = inner_product(phi, f.conj() * lvl.eta * psi, w, check_tail=False)
        worst["multiplication-pairing"] = max(
            worst["multiplication-pairing"], abs(lhs - rhs) / scale)
        # orbit derivative: <d phi, psi>_{k+1} = <phi, d* psi>_k
        lhs = inner_product(tau_derivative(phi), psi, w1, check_tail=False)
        rhs = inner_product(phi, adjoint_tau_derivative(psi, w, lvl.eta), w,
                            check_tail=False)
        worst["derivative-pairing"] = max(worst["derivative-pairing"],
                                          abs(lhs - rhs) / scale)
    return _result("adjoints", [Check(k, v, tol) for k, v in worst.items()])


# ---------------------------------------------------------------------------
# 4. Pearson weight construction and its residual detector
# ---------------------------------------------------------------------------

def criterion_pearson(data: SuiteData) -> CriterionResult:
    lvl = data.qhahn.levels[0]
    p = PearsonTriple.from_B_eta(lvl.B, lvl.eta)
    res = pearson_residual(p, lvl.w)
    # the shift form is the defining recursion; the differential form is
    # equivalent only in exact arithmetic and degrades near the orbit
    # limit where the divided difference loses all significant digits
    checks = [
        Check("residual", res.shift, 1e-11),
        Check("positivity", 1.0 if lvl.w.positivity_ok() else 0.0, 0.5,
              at_least=True),
    ]
    # a 1e-3 spot perturbation must move the residual above 1e-4
    vals = [v.copy() for v in lvl.w.rho.values]
    vals[1][10] *= 1.0 + 1e-3
    rho2 = GridFunction(lvl.grid, tuple(vals), lvl.w.rho.valid)
    w2 = weighted_grid(lvl.grid, rho2, warn=False)
    det = pearson_residual(p, w2)
    checks.append(Check("perturbation-detector",
                        max(det.differential, det.shift), 1e-4, at_least=True))
    return _result("pearson", checks)


# ---------------------------------------------------------------------------
# 5. factorization postulate, two evaluation paths
# ---------------------------------------------------------------------------

def criterion_factorization(data: SuiteData) -> CriterionResult:
    rng = np.random.default_rng(404)
    worst_post = 0.0
    worst_paths = 0.0
    for sc in (data.qhahn, data.constant_gauge):
        for k in range(5):
            lvl, nxt = sc.levels[k], sc.levels[k + 1]
            worst_post = max(worst_post,
                             factorization_residual(lvl, nxt, probes=6,
                                                    rng=1000 + k))
            bands_lhs = _bands_AAstar(lvl)
            bands_rhs = _bands_AstarA(nxt)
            for _ in range(3):
                psi = GridFunction(lvl.grid, tuple(
                    rng.standard_normal(len(b)) + 0j
                    for b in lvl.grid.branches)).window(5)
                lhs_op = apply_A(lvl, apply_Astar(lvl, psi))
                lhs_bd = _tridiag_apply(bands_lhs, psi)
                rhs_op = apply_Astar(nxt, apply_A(nxt, psi))
                rhs_bd = _tridiag_apply(bands_rhs, psi)
                scale = joint_scale(lhs_op, rhs_op)
                worst_paths = max(worst_paths,
                                  max_abs_diff(lhs_op, lhs_bd) / scale,
                                  max_abs_diff(rhs_op, rhs_bd) / scale)
    return _result("factorization", [
        Check("postulate-residual", worst_post, 1e-9),
        Check("two-path-agreement", worst_paths, 1e-11),
    ])


# ---------------------------------------------------------------------------
# 6. eigenpair propagation up the chain
# ---------------------------------------------------------------------------

def criterion_eigen_chain(data: SuiteData) -> CriterionResult:
    sc = data.constant_gauge
    pair = sc.kernel_pair()
    worst_res = eigen_residual_norm(sc.levels[1], pair, margin=1)
    worst_track = 0.0
    for k in range(1, 6):
        pair = lift(pair, sc.levels[k])
        worst_res = max(worst_res,
                        eigen_residual_norm(sc.levels[pair.level], pair,
                                            margin=1))
        pred = sc.eigenvalue_after_lifts(k)
        worst_track = max(worst_track,
                          abs(pair.value.real - pred) / abs(pred))
    return _result("eigen-chain", [
        Check("lifted-residual", worst_res, 1e-7),
        Check("eigenvalue-tracking", worst_track, 1e-6),
    ])


# ---------------------------------------------------------------------------
# 7. chain-predicted eigenvalues vs the truncated matrix spectrum
# ---------------------------------------------------------------------------

def criterion_cross_method(data: SuiteData) -> CriterionResult:
    sc = data.qhahn_cross
    numeric = chain_eigenvalues(sc.levels[0], count=4)
    worst = 0.0
    for n in range(4):
        pred = sc.eigenvalue(n)
        denom = abs(pred) if pred != 0.0 else abs(sc.eigenvalue(1))
        worst = max(worst, abs(float(numeric[n]) - pred) / denom)
    return _result("cross-method", [Check("spectrum-agreement", worst, 1e-6)])


# ---------------------------------------------------------------------------
# 8. orthogonality of the polynomial systems
# ---------------------------------------------------------------------------

def _gram_offdiag_ratio(fns, w) -> float:
    n = len(fns)
    G = np.empty((n, n))
    for i in range(n):
        for j in range(i, n):
            G[i, j] = G[j, i] = inner_product(fns[i], fns[j], w,
                                              check_tail=False).real
    d = np.sqrt(np.abs(np.diag(G)))
    R = np.abs(G) / np.outer(d, d)
    np.fill_diagonal(R, 0.0)
    return float(np.max(R))


def criterion_orthogonality(data: SuiteData) -> CriterionResult:
    sc = data.qhahn
    polys = [sc.polynomial(n) for n in range(9)]
    fns = [sc.sample(c) for c in polys]
    ratio0 = _gram_offdiag_ratio(fns, sc.levels[0].w)
    dfns = [sc.sample(qderivative_poly(sc.polynomial(n), sc.q))
            for n in range(1, 10)]
    ratio1 = _gram_offdiag_ratio(dfns, sc.levels[1].w)
    return _result("orthogonality", [
        Check("gram-level0", ratio0, 1e-8),
        Check("gram-derivative-level1", ratio1, 1e-8),
    ])


# ---------------------------------------------------------------------------
# 9. Riccati resolvent, closed form, solution family
# ---------------------------------------------------------------------------

def _regularized_gauge_system(level) -> TwoByTwoSystem:
    """The gauge-route system with its orbit-limit singularity removed."""
    return singular_darboux(gauge_riccati_system(level), 0.0, -1.0)


def _matrix_gap(res_a, res_b) -> float:
    worst = 0.0
    for ma, mb in zip(res_a.matrices, res_b.matrices):
        scale = max(1.0, float(np.max(np.abs(ma))))
        g = float(np.max(np.abs(ma - mb))) / scale
        if not np.isfinite(g):
            return float("inf")
        worst = max(worst, g)
    return worst


def criterion_riccati(data: SuiteData) -> CriterionResult:
    checks = []
    # preset A: the regularized gauge-route system on a deep q-orbit
    sys_a = _regularized_gauge_system(data.constant_gauge_deep.levels[0])
    res_a = resolvent(sys_a)
    checks.append(Check("gauge-converged", 1.0 if res_a.converged else 0.0,
                        0.5, at_least=True))
    checks.append(Check("gauge-criterion-sum",
                        res_a.criterion_sum, float("inf")))
    checks.append(Check("gauge-cauchy-gap", res_a.cauchy_gap, 1e-12))
    # preset B: a synthetic contracting system on the fractional orbit
    grid = data.fractional_grid_deep
    x = GridFunction.identity(grid)
    sys_b = TwoByTwoSystem(a=1.0 + 0.5 * x, b=x * (1.0 / 3.0),
                           c=GridFunction.constant(grid, 0.0),
                           d=1.0 + 0.25 * x * x)
    res_b = resolvent(sys_b)
    checks.append(Check("fractional-converged",
                        1.0 if res_b.converged else 0.0, 0.5, at_least=True))
    checks.append(Check("fractional-cauchy-gap", res_b.cauchy_gap, 1e-12))
    # closed-form triangular resolvent vs the brute-force product
    gap = max(_matrix_gap(res_a, triangular_resolvent(sys_a)),
              _matrix_gap(res_b, triangular_resolvent(sys_b)))
    checks.append(Check("triangular-closed-form", gap, 1e-9))
    # solution family: additive group law and the cross-ratio value
    u0 = GridFunction.constant(sys_a.grid, 0.0)
    fam = {t: general_solution(sys_a, u0, t) for t in (0.5, 0.75, 1.0, 2.0, 3.0)}
    both = general_solution(sys_a, fam[0.5].u, 0.25)
    direct = general_solution(sys_a, u0, 0.75)
    worst_group = 0.0
    for v1, v2, m1, m2 in zip(both.u.values, direct.u.values,
                              both.u.valid, direct.u.valid):
        sel = m1 & m2
        if sel.any():
            scale = max(1.0, float(np.max(np.abs(v2[sel]))))
            worst_group = max(worst_group, float(
                np.max(np.abs(v1[sel] - v2[sel]))) / scale)
    checks.append(Check("group-law", worst_group, 1e-10))
    sel = np.ones(len(sys_a.grid.branches[0]), dtype=bool)
    for t in (1.0, 2.0, 3.0):
        sel &= fam[t].u.valid[0]
    cr = cross_ratio(u0.values[0][sel], fam[1.0].u.values[0][sel],
                     fam[2.0].u.values[0][sel], fam[3.0].u.values[0][sel])
    checks.append(Check("cross-ratio", float(np.max(np.abs(cr - 0.25))), 1e-10))
    return _result("riccati", checks)


# ---------------------------------------------------------------------------
# 10. Darboux transforms preserve solvability; singular regularization
# ---------------------------------------------------------------------------

def criterion_darboux(data: SuiteData) -> CriterionResult:
    checks = []
    grid = data.fractional_grid_shallow
    x = GridFunction.identity(grid)
    sys = TwoByTwoSystem(a=1.0 + 0.5 * x, b=x * (1.0 / 3.0),
                         c=GridFunction.constant(grid, 0.0),
                         d=1.0 + 0.25 * x * x)
    psi, phi = solve_system(sys, (1.0, 0.5), resolvent(sys))
    # regular gauge
    D = ((2.0 + x, x), (0.5 * x, 1.0 + x))
    sys_reg = darboux(sys, D)
    psi_r, phi_r = darboux_solution(D, psi, phi)
    checks.append(Check("regular-transform",
                        step_residual(sys_reg, psi_r, phi_r), 1e-9))
    # singular gauge diag((x - limit)^1, (x - limit)^0)
    s = x - grid.limit
    sys_sing = singular_darboux(sys, 1.0, 0.0)
    checks.append(Check("singular-transform",
                        step_residual(sys_sing, psi / s, phi), 1e-9))
    # the gauge-route system's derivative form is singular at the orbit
    # limit; the (0, -1) power gauge must leave finite limits
    lvl = data.constant_gauge_deep.levels[0]
    raw = gauge_riccati_system(lvl)
    raw_blowup = 0.0
    for entry in raw.tilde():
        v, m = entry.values[0], entry.valid[0]
        idx = np.nonzero(m)[0]
        raw_blowup = max(raw_blowup, abs(v[idx[-1]]))
    checks.append(Check("unregularized-blowup", raw_blowup, 1e6,
                        at_least=True))
    reg = singular_darboux(raw, 0.0, -1.0)
    worst_tail = 0.0
    finite = True
    for entry in reg.tilde():
        v, m = entry.values[0], entry.valid[0]
        idx = np.nonzero(m)[0]
        last, prev = v[idx[-1]], v[idx[-2]]
        finite = finite and bool(np.isfinite(last)) and bool(np.isfinite(prev))
        worst_tail = max(worst_tail, abs(last - prev) / (1.0 + abs(last)))
    checks.append(Check("regularized-finite", 1.0 if finite else 0.0, 0.5,
                        at_least=True))
    checks.append(Check("regularized-limit-gap", worst_tail, 1e-6))
    return _result("darboux", checks)


# ---------------------------------------------------------------------------
# 11. change of variables
# ---------------------------------------------------------------------------

def criterion_covariance(data: SuiteData) -> CriterionResult:
    rng = np.random.default_rng(505)
    sc = data.constant_gauge
    grid = sc.grid
    pts = grid.branches[0].points
    ch = ln_change((float(np.min(pts)) * 0.9, float(np.max(pts)) * 1.1))
    with np.errstate(divide="ignore"):
        target = transport_grid(grid, ch)
    w_x = sc.levels[0].w
    rho_y = transport_weight(w_x.rho, ch, target)
    w_y = weighted_grid(target, rho_y, warn=False)
    xs = GridFunction.from_callable(grid, lambda t: t ** sc.s)
    worst_unitary = 0.0
    for _ in range(10):
        phi = xs * _poly_fn(grid, rng.uniform(-1, 1, 4))
        psi = xs * _poly_fn(grid, rng.uniform(-1, 1, 4))
        ip_x = inner_product(phi, psi, w_x, check_tail=False)
        ip_y = inner_product(transport_function(phi, ch, target),
                             transport_function(psi, ch, target),
                             w_y, check_tail=False)
        worst_unitary = max(worst_unitary,
                            abs(ip_x - ip_y) / max(1e-300, abs(ip_x)))
    lvl0_y = transport_level(sc.levels[0], ch, target)
    p_y = PearsonTriple.from_B_eta(lvl0_y.B, lvl0_y.eta)
    res_y = pearson_residual(p_y, lvl0_y.w)
    # eigen residual comparison on a deliberately imperfect eigenpair,
    # so both residuals sit well above rounding noise
    noise = _poly_fn(grid, (1.0, -0.7, 0.3))
    psi_pert = xs * (1.0 + 1e-6 * noise)
    pair_x = EigenPair(psi=psi_pert, value=-sc.constants[0], level=1)
    r_x = eigen_residual(sc.levels[1], pair_x)
    lvl1_y = transport_level(sc.levels[1], ch, target)
    pair_y = EigenPair(psi=transport_function(psi_pert, ch, target),
                       value=-sc.constants[0], level=1)
    r_y = eigen_residual(lvl1_y, pair_y)
    ratio = max(r_x / r_y, r_y / r_x)
    verdict = equivalence_obstruction(linear_map(0.7, domain=(-1.0, 1.0)),
                                      fractional_map(2.0))
    return _result("covariance", [
        Check("unitary-transport", worst_unitary, 1e-10),
        Check("transported-pearson", max(res_y.differential, res_y.shift),
              1e-9),
        Check("eigen-residual-ratio", ratio, 2.0),
        Check("fixed-point-obstruction",
              1.0 if verdict["verdict"] == "not_equivalent" else 0.0, 0.5,
              at_least=True),
    ])


# ---------------------------------------------------------------------------
# 12. closed-form oracles
# ---------------------------------------------------------------------------

def criterion_closed_forms(data: SuiteData) -> CriterionResult:
    worst_iter = 0.0
    worst_deriv = 0.0
    for sc in (data.fractional_half, data.fractional_two):
        tau = sc.grid.tau
        for x0 in np.linspace(0.05, 0.95, 7):
            for k in (0, 1, 2, 3, 5, 8):
                worst_iter = max(worst_iter, abs(
                    iterate(tau, float(x0), k) - float(sc.iterate_closed(x0, k))))
            direct = ((tau(x0) - tau(tau(x0))) / (x0 - tau(x0)))
            worst_deriv = max(worst_deriv,
                              abs(direct - float(sc.orbit_derivative_closed(x0))))
            for k in (1, 2, 4):
                y = iterate(tau, float(x0), k)
                direct = (tau(y) - tau(tau(y))) / (y - tau(y))
                worst_deriv = max(worst_deriv, abs(
                    direct - float(sc.orbit_derivative_at_iterate(x0, k))))
    # squared kernel state times weight vs the double infinite product
    sc = data.constant_gauge
    pts = sc.grid.branches[0].points
    rho = sc.levels[0].w.rho
    m = rho.valid[0]
    measured = (pts ** (2 * sc.s)) * rho.values[0].real
    closed = np.asarray(sc.squared_weight_product(pts), dtype=float)
    ratio = (measured[m] / measured[0]) / (closed[m] / closed[0])
    worst_weight = float(np.max(np.abs(ratio - 1.0)))
    return _result("closed-forms", [
        Check("iterate-formula", worst_iter, 1e-12),
        Check("orbit-derivative-formula", worst_deriv, 1e-12),
        Check("squared-weight-product", worst_weight, 1e-8),
    ])


# ---------------------------------------------------------------------------
# runner
# ---------------------------------------------------------------------------

CRITERIA: dict = {
    "calculus": criterion_calculus,
    "q-oracle": criterion_q_oracle,
    "adjoints": criterion_adjoints,
    "pearson": criterion_pearson,
    "factorization": criterion_factorization,
    "eigen-chain": criterion_eigen_chain,
    "cross-method": criterion_cross_method,
    "orthogonality": criterion_orthogonality,
    "riccati": criterion_riccati,
    "darboux": criterion_darboux,
    "covariance": criterion_covariance,
    "closed-forms": criterion_closed_forms,
}


def run_criteria(names=None, tol_override: float | None = None,
                 data: SuiteData | None = None) -> list[CriterionResult]:
    """Run the selected criteria (all by default), in declaration order.

    ``tol_override`` replaces the ceiling of every upper-bound check;
    detector-style lower bounds keep their calibrated floors.
    """
    if names is None:
        names = list(CRITERIA)
    unknown = [n for n in names if n not in CRITERIA]
    if unknown:
        raise KeyError(f"unknown criteria: {', '.join(unknown)}")
    data = data if data is not None else SuiteData()
    results = []
    for name in names:
        result = CRITERIA[name](data)
        if tol_override is not None:
            result = _result(result.name, [
                c if c.at_least else Check(c.name, c.value, tol_override)
                for c in result.checks])
        results.append(result)
    return results


def format_report(results) -> str:
    """One line per criterion, plus the failing checks, if any."""
    lines = []
    for r in results:
        worst = max((c.value / c.threshold for c in r.checks
                     if not c.at_least and c.threshold > 0
                     and np.isfinite(c.threshold)), default=0.0)
        status = "PASS" if r.passed else "FAIL"
        lines.append(f"{status} {r.name} (worst margin {worst:.3e} of tolerance)")
        for c in r.checks:
            if not c.passed:
                cmp = ">=" if c.at_least else "<"
                lines.append(f"     failed: {c.name} = {c.value:.6e} "
                             f"(needs {cmp} {c.threshold:.1e})")
    return "\n".join(lines)


def results_to_dict(results) -> dict:
    return {"criteria": [r.to_dict() for r in results],
            "passed": all(r.passed for r in results)}


__all__ = [
    "Check", "CriterionResult", "SuiteData", "CRITERIA", "run_criteria",
    "format_report", "results_to_dict",
]
