import numpy as np
import pytest

from taucalc import (GridFunction, apply_A, apply_Astar, chain_eigenvalues,
                     descend, eigen_residual_norm, factorization_residual,
                     from_coefficients, lift, particular_gauge_xi,
                     solve_step_constant, to_coefficients)
from taucalc.chain import apply_coefficients, chain_equation_residual, make_level
from taucalc.errors import InconsistentWeights
from taucalc.scenarios import constant_gauge_chain, qhahn_chain


@pytest.fixture(scope="module")
def cg():
    return constant_gauge_chain()


@pytest.fixture(scope="module")
def qh():
    return qhahn_chain(depth=60, n_levels=4)


def test_qhahn_step_constants(qh):
    # c_1 = (q^2 + q + 1)/q at q = 0.8, then the same recursion twice more
    assert qh.constants[0] == pytest.approx(1.0, rel=1e-12)
    assert qh.constants[1] == pytest.approx(3.05, rel=1e-12)
    assert qh.constants[2] == pytest.approx(5.2525, rel=1e-12)
    assert qh.constants[3] == pytest.approx(7.717625, rel=1e-12)


def test_constant_gauge_step_constants(cg):
    expected = [-0.5 * 0.7 ** (2 * k) for k in range(4)]
    assert np.allclose(cg.constants[:4], expected, rtol=1e-10)


def test_factorization_postulate(qh, cg):
    for scenario in (qh, cg):
        for lo, hi in zip(scenario.levels[:3], scenario.levels[1:4]):
            assert factorization_residual(lo, hi, probes=6, rng=1) < 1e-9


def test_chain_equation_residual(cg):
    lvl = cg.levels[0]
    assert chain_equation_residual(lvl, cg.levels[1].h, lvl.g, lvl.c,
                                   lvl.d) < 1e-9


def test_solve_step_constant_rejects_wrong_gauge(cg):
    lvl = cg.levels[0]
    bad_g = GridFunction.constant(lvl.grid, 1.0)  # true gauge is q^-2
    with pytest.raises(InconsistentWeights):
        solve_step_constant(lvl, cg.levels[1].h, bad_g, 1.0)


def test_kernel_pair_and_lift(cg):
    # margin 1: the base row of the truncated orbit is a boundary row
    pair = cg.kernel_pair()
    lvl = cg.levels[pair.level]
    assert eigen_residual_norm(lvl, pair, margin=1) < 1e-10
    lifted = lift(pair, lvl)
    assert lifted.level == pair.level + 1
    assert eigen_residual_norm(cg.levels[lifted.level], lifted,
                               margin=1) < 1e-8


def test_descend_inverts_lift(cg):
    pair = cg.kernel_pair()
    lvl = cg.levels[pair.level]
    back = descend(lift(pair, lvl), lvl)
    # A* A psi = lambda psi, so descending returns psi itself away from
    # the boundary row at the orbit base
    sel = back.psi.valid[0] & pair.psi.valid[0]
    sel[0] = False
    ratio = back.psi.values[0][sel] / pair.psi.values[0][sel]
    assert np.max(np.abs(ratio - ratio[0])) < 1e-8 * abs(ratio[0])


def test_chain_eigenvalues_match_lift_totals(qh):
    lams = chain_eigenvalues(qh.levels[0], count=3)
    assert lams[0] == pytest.approx(0.0, abs=1e-6)
    assert lams[1] == pytest.approx(qh.eigenvalue(1), rel=1e-5)
    assert lams[2] == pytest.approx(qh.eigenvalue(2), rel=1e-5)


def test_coefficient_roundtrip(qh):
    lvl = qh.levels[0]
    coef = to_coefficients(lvl)
    seeds = [lvl.phi.values[i][0] / lvl.h.values[i][0]
             for i in range(len(lvl.grid.branches))]
    rebuilt = from_coefficients(coef, lvl.h, seeds)
    for fn_a, fn_b in ((lvl.B, rebuilt.B), (lvl.eta, rebuilt.eta)):
        for va, vb, ma, mb in zip(fn_a.values, fn_b.values,
                                  fn_a.valid, fn_b.valid):
            sel = ma & mb
            scale = max(1.0, np.max(np.abs(va[sel])))
            assert np.max(np.abs(va[sel] - vb[sel])) / scale < 1e-9


def test_operator_vs_coefficients(qh):
    lvl = qh.levels[0]
    coef = to_coefficients(lvl, value=0.0)
    psi = GridFunction.from_callable(lvl.grid,
                                     lambda x: 1.0 + x - 0.5 * x ** 2).window(3)
    direct = apply_Astar(lvl, apply_A(lvl, psi))
    banded = apply_coefficients(coef, psi)
    for va, vb, ma, mb in zip(direct.values, banded.values,
                              direct.valid, banded.valid):
        sel = ma & mb
        scale = max(1.0, np.max(np.abs(va[sel])))
        assert np.max(np.abs(va[sel] - vb[sel])) / scale < 1e-11


def test_particular_gauge_xi_known_value():
    # B = x^2, eta = 4 x^2, f = 0 on tau(x) = x/2: phi^2 eta = 16 and
    # B[n+1]/(delta_n delta_n+1) = 2, so xi has fixed point 14 and g = 1
    from taucalc import SEMIGROUP, build_grid, linear_map
    grid = build_grid(linear_map(0.5), mode=SEMIGROUP, bases=1.0, max_depth=25)
    B = GridFunction.from_callable(grid, lambda x: x ** 2)
    eta = GridFunction.from_callable(grid, lambda x: 4.0 * x ** 2)
    lvl = make_level(grid, B, eta, GridFunction.constant(grid, 1.0),
                     GridFunction.constant(grid, 0.0))
    xi, g = particular_gauge_xi(lvl, 1.0, xi0=14.0)
    sel = g.valid[0]
    assert np.max(np.abs(g.values[0][sel] - 1.0)) < 1e-12
