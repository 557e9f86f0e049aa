import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from taucalc import (GridFunction, SEMIGROUP, build_grid, linear_map, shift,
                     solve_linear_first_order, tau_antiderivative,
                     tau_derivative, tau_exponential, tau_integral)
from taucalc.calculus import product_integral
from taucalc.gridfn import max_abs_diff

from qcalc_oracle import horner, jackson_integral_exact, q_derivative

coeff_lists = st.lists(
    st.floats(min_value=-3, max_value=3, allow_nan=False), min_size=1,
    max_size=6)


def poly_fn(grid, coeffs):
    return GridFunction.from_callable(
        grid, lambda x: sum(c * x ** k for k, c in enumerate(coeffs)))


def test_shift_is_composition(qgrid):
    f = GridFunction.from_callable(qgrid, lambda x: x ** 2)
    g = shift(f)
    # (T f)(x) = f(tau x) = (0.5 x)^2
    sel = g.valid[0]
    assert np.allclose(g.values[0][sel],
                       (0.5 * qgrid.branches[0].points[sel]) ** 2)


def test_derivative_matches_q_oracle(qgrid):
    coeffs = [1.0, -2.0, 0.5, 3.0]
    f = poly_fn(qgrid, coeffs)
    df = tau_derivative(f)
    pts = qgrid.branches[0].points
    sel = df.valid[0]
    expected = np.array([q_derivative(coeffs, x, 0.5) for x in pts])
    assert np.max(np.abs(df.values[0][sel] - expected[sel])) < 1e-12


def test_integral_matches_jackson(qgrid):
    coeffs = [0.5, 1.0, -0.25]
    f = poly_fn(qgrid, coeffs)
    val = tau_integral(f, check_tail=False)
    assert val.real == pytest.approx(
        jackson_integral_exact(coeffs, 0.5, 1.0), abs=1e-9)


def test_fundamental_identity(qgrid):
    # integral of the derivative telescopes between the orbit endpoints
    f = poly_fn(qgrid, [0.0, 2.0, -1.0, 0.5])
    val = tau_integral(tau_derivative(f), check_tail=False)
    expected = f.values[0][0].real - f.values[0][-1].real
    assert val.real == pytest.approx(expected, abs=1e-12)


def test_antiderivative_inverts_derivative(qgrid):
    f = poly_fn(qgrid, [0.0, 1.0, 1.0])
    F = tau_antiderivative(f, check_tail=False)
    back = tau_derivative(F)
    sel = back.valid[0] & f.valid[0]
    assert np.max(np.abs(back.values[0][sel] - f.values[0][sel])) < 1e-10


@settings(max_examples=25, deadline=None)
@given(coeff_lists)
def test_leibniz_property(coeffs):
    # shallow orbit: every step stays resolvable, no divided-difference noise
    grid = build_grid(linear_map(0.5), mode=SEMIGROUP, bases=1.0, max_depth=12)
    f = poly_fn(grid, coeffs)
    g = poly_fn(grid, [1.0, -0.5, 0.25])
    lhs = tau_derivative(f * g)
    rhs = tau_derivative(f) * g + shift(f) * tau_derivative(g)
    scale = max(1.0, lhs.max_abs(), rhs.max_abs())
    assert max_abs_diff(lhs, rhs) / scale < 1e-11


@settings(max_examples=25, deadline=None)
@given(coeff_lists)
def test_integral_linearity_property(coeffs):
    grid = build_grid(linear_map(0.5), mode=SEMIGROUP, bases=1.0, max_depth=40)
    f = poly_fn(grid, coeffs)
    direct = tau_integral(f, check_tail=False)
    exact = jackson_integral_exact(coeffs, 0.5, 1.0)
    assert direct.real == pytest.approx(exact, abs=1e-9 * (1 + abs(exact)))


def test_tau_exponential_solves_its_equation(qgrid):
    e = tau_exponential(qgrid)
    lhs = tau_derivative(e)
    # compare on resolvable steps only; deeper divided differences are
    # rounding noise amplified by 1/delta
    sel = lhs.valid[0].copy()
    sel[:-1] &= qgrid.branches[0].deltas >= 1e-4
    sel[-1] = False
    assert np.max(np.abs(lhs.values[0][sel] - e.values[0][sel])) < 1e-10
    assert e.values[0][-1] == pytest.approx(1.0)  # value at the orbit limit


def test_solve_linear_first_order(qgrid):
    f = GridFunction.constant(qgrid, 0.5)
    psi = solve_linear_first_order(f, init=2.0)
    lhs = tau_derivative(psi)
    rhs = f * psi
    sel = lhs.valid[0].copy()
    sel[:-1] &= qgrid.branches[0].deltas >= 1e-4  # resolvable steps only
    sel[-1] = False
    assert np.max(np.abs(lhs.values[0][sel] - rhs.values[0][sel])) < 1e-10
    assert psi.values[0][-1] == pytest.approx(2.0)  # init at the orbit limit


def test_product_integral_agreement(qgrid):
    F = GridFunction.from_callable(qgrid, lambda x: 1.0 + 0.5 * x)
    val = product_integral(F)
    direct = np.prod(1.0 + 0.5 * qgrid.branches[0].points[:-1])
    assert abs(val) == pytest.approx(direct, rel=1e-10)
