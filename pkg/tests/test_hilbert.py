import numpy as np
import pytest

from taucalc import (GridFunction, INTERVAL, PearsonTriple, build_grid,
                     inner_product, linear_map, norm, pearson_residual,
                     shift, weight_from_pearson, weighted_grid)
from taucalc.calculus import deltas_fn
from taucalc.errors import GridMismatch
from taucalc.hilbert import adjoint_shift, mu_from_rho, shift_norm


@pytest.fixture(scope="module")
def level_data():
    """Pearson pair B = 1 - x^2, A = -x on a two-branch interval orbit."""
    grid = build_grid(linear_map(0.8), mode=INTERVAL, bases=(-1.0, 1.0),
                      max_depth=60)
    B = GridFunction.from_callable(grid, lambda x: 1.0 - x ** 2, label="B")
    A = GridFunction.from_callable(grid, lambda x: -x, label="A")
    eta = B - deltas_fn(grid) * A
    w = weight_from_pearson(PearsonTriple.from_B_eta(B, eta), grid)
    return grid, B, eta, w


def test_weight_positive_and_consistent(level_data):
    grid, B, eta, w = level_data
    assert w.positivity_ok()
    res = pearson_residual(PearsonTriple.from_B_eta(B, eta), w)
    assert res.shift < 1e-11


def test_perturbation_detected(level_data):
    grid, B, eta, w = level_data
    vals = [v.copy() for v in w.rho.values]
    vals[1][10] *= 1.001  # one-point spot perturbation
    rho_bad = GridFunction(grid, tuple(vals), w.rho.valid)
    w_bad = weighted_grid(grid, rho_bad, warn=False)
    res = pearson_residual(PearsonTriple.from_B_eta(B, eta), w_bad)
    assert res.shift >= 1e-4


def test_inner_product_conjugate_symmetry(level_data):
    grid, _, _, w = level_data
    phi = GridFunction.from_callable(grid, lambda x: x + 1j * x ** 2)
    psi = GridFunction.from_callable(grid, lambda x: 1.0 - x)
    a = inner_product(phi, psi, w, check_tail=False)
    b = inner_product(psi, phi, w, check_tail=False)
    assert a == pytest.approx(np.conj(b), abs=1e-12 * (1 + abs(a)))


def test_norm_nonnegative(level_data):
    grid, _, _, w = level_data
    psi = GridFunction.from_callable(grid, lambda x: x ** 3 - 0.2)
    assert norm(psi, w) > 0.0


def test_shift_adjoint_pairing(level_data):
    grid, _, _, w = level_data
    rng = np.random.default_rng(7)
    for _ in range(10):
        c1 = rng.standard_normal(4)
        c2 = rng.standard_normal(4)
        phi = GridFunction.from_callable(
            grid, lambda x: sum(c * x ** k for k, c in enumerate(c1))).window(5)
        psi = GridFunction.from_callable(
            grid, lambda x: sum(c * x ** k for k, c in enumerate(c2))).window(5)
        lhs = inner_product(shift(phi), psi, w, check_tail=False)
        rhs = inner_product(phi, adjoint_shift(psi, w), w, check_tail=False)
        assert lhs == pytest.approx(rhs, abs=1e-10 * (1 + abs(lhs)))


def test_adjoint_shift_base_value_zero(level_data):
    grid, _, _, w = level_data
    psi = GridFunction.constant(grid, 1.0)
    out = adjoint_shift(psi, w)
    for v, m in zip(out.values, out.valid):
        if m[0]:
            assert v[0] == 0.0


def test_mu_and_shift_norm(level_data):
    grid, _, _, w = level_data
    mu = mu_from_rho(w)
    assert all(np.all(np.isfinite(v[m])) for v, m in zip(mu.values, mu.valid))
    assert shift_norm(w, warn=False) > 0.0


def test_grid_mismatch_rejected(level_data, qgrid):
    grid, _, _, w = level_data
    psi = GridFunction.constant(qgrid, 1.0)
    with pytest.raises(GridMismatch):
        adjoint_shift(psi, w)
