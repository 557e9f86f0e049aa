import numpy as np
import pytest

from taucalc import (GridFunction, SEMIGROUP, TwoByTwoSystem, build_grid,
                     cross_ratio, darboux, darboux_solution, fractional_map,
                     general_solution, linear_map, resolvent, singular_darboux,
                     solve_system, triangular_resolvent)
from taucalc.errors import (DegenerateQuadruple, DegenerateSystem,
                            NotTriangular, ParticularNotSolution)
from taucalc.riccati import rhom_residual, step_residual
from taucalc.scenarios import constant_gauge_chain, gauge_riccati_system


@pytest.fixture(scope="module")
def contracting_system():
    """A triangular contracting system on a fractional-map orbit."""
    grid = build_grid(fractional_map(0.5), mode=SEMIGROUP, bases=0.5,
                      max_depth=60)
    one = GridFunction.constant(grid, 1.0)
    a = GridFunction.from_callable(grid, lambda x: 1.0 + 0.5 * x)
    b = GridFunction.from_callable(grid, lambda x: x / 3.0)
    c = GridFunction.constant(grid, 0.0)
    d = GridFunction.from_callable(grid, lambda x: 1.0 + 0.25 * x ** 2)
    return TwoByTwoSystem(a=a, b=b, c=c, d=d)


def test_resolvent_converges(contracting_system):
    res = resolvent(contracting_system)
    assert res.converged
    assert np.isfinite(res.criterion_sum)
    assert res.cauchy_gap < 1e-12


def test_triangular_matches_brute_force(contracting_system):
    res = resolvent(contracting_system)
    tri = triangular_resolvent(contracting_system)
    for ma, mb in zip(res.matrices, tri.matrices):
        scale = max(1.0, float(np.max(np.abs(ma))))
        assert np.max(np.abs(ma - mb)) / scale < 1e-9


def test_solve_system_step_residual(contracting_system):
    psi, phi = solve_system(contracting_system, (1.0, 0.5))
    assert step_residual(contracting_system, psi, phi) < 1e-10


def test_regular_darboux_preserves_solvability(contracting_system):
    grid = contracting_system.grid
    D = ((GridFunction.from_callable(grid, lambda x: 2.0 + x),
          GridFunction.from_callable(grid, lambda x: x)),
         (GridFunction.from_callable(grid, lambda x: 0.5 * x),
          GridFunction.from_callable(grid, lambda x: 1.0 + x)))
    psi, phi = solve_system(contracting_system, (1.0, 0.5))
    sys2 = darboux(contracting_system, D)
    psi2, phi2 = darboux_solution(D, psi, phi)
    assert step_residual(sys2, psi2, phi2) < 1e-9


def test_singular_darboux_preserves_solvability(contracting_system):
    psi, phi = solve_system(contracting_system, (1.0, 0.5))
    sys2 = singular_darboux(contracting_system, 1.0, 0.0)
    s = GridFunction.from_callable(
        contracting_system.grid,
        lambda x: x - contracting_system.grid.limit)
    psi2, phi2 = psi / s, phi
    assert step_residual(sys2, psi2, phi2) < 1e-9


def test_gauge_system_resolvent_is_finite():
    # double-shifted entries leave the deepest two indices invalid; the
    # product must truncate at the deepest valid index, not before/after
    scenario = constant_gauge_chain(q=0.5, depth=120, n_levels=1)
    sys = singular_darboux(gauge_riccati_system(scenario.levels[0]), 0.0, -1.0)
    res = resolvent(sys)
    tri = triangular_resolvent(sys)
    for r in (res, tri):
        assert all(np.all(np.isfinite(m)) for m in r.matrices)
    assert res.cauchy_gap < 1e-12


def test_group_law(contracting_system):
    u0 = GridFunction.constant(contracting_system.grid, 0.0)
    one_step = general_solution(contracting_system, u0, 0.75)
    two_step = general_solution(
        contracting_system, general_solution(contracting_system, u0, 0.5).u,
        0.25)
    sel = one_step.u.valid[0] & two_step.u.valid[0]
    diff = np.abs(one_step.u.values[0][sel] - two_step.u.values[0][sel])
    assert np.max(diff) < 1e-10
    assert one_step.residual < 1e-10


def test_general_solution_checks_particular(contracting_system):
    bad = GridFunction.constant(contracting_system.grid, 5.0)
    with pytest.raises(ParticularNotSolution):
        general_solution(contracting_system, bad, 0.5)


def test_solutions_satisfy_homographic_recursion(contracting_system):
    u0 = GridFunction.constant(contracting_system.grid, 0.0)
    for t in (0.5, 1.0, 2.0):
        sol = general_solution(contracting_system, u0, t)
        assert rhom_residual(contracting_system, sol.u) < 1e-10


def test_cross_ratio_equally_spaced(contracting_system):
    u0 = GridFunction.constant(contracting_system.grid, 0.0)
    sols = [general_solution(contracting_system, u0, float(t)).u
            for t in (0.0, 1.0, 2.0, 3.0)]
    i = 5
    vals = [s.values[0][i] for s in sols]
    assert cross_ratio(*vals) == pytest.approx(0.25, abs=1e-10)


def test_cross_ratio_rejects_degenerate():
    with pytest.raises(DegenerateQuadruple):
        cross_ratio(1.0, 2.0, 1.0, 2.0)


def test_not_triangular_rejected(qgrid):
    one = GridFunction.constant(qgrid, 1.0)
    sys = TwoByTwoSystem(a=one, b=one * 0.5, c=one * 0.5, d=one)
    with pytest.raises(NotTriangular):
        triangular_resolvent(sys)


def test_singular_step_matrix_rejected(qgrid):
    one = GridFunction.constant(qgrid, 1.0)
    with pytest.raises(DegenerateSystem):
        TwoByTwoSystem(a=one, b=one, c=one, d=one)
