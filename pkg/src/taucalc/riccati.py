"""First-order 2x2 functional systems and the associated Riccati machinery.

The step form of the system is

    (T psi, T phi)^t = Lambda(x) (psi, phi)^t,

equivalently the derivative form d_tau (psi, phi)^t = LambdaTilde (psi,
phi)^t with Lambda = I - (id - tau) LambdaTilde.  The ratio u = phi/psi
satisfies the homographic recursion

    u(tau x) = (d u + c) / (b u + a),

whose solutions are generated from one particular solution by a
one-parameter group of transforms.  Orbit-infinite products of the step
matrices (resolvents) propagate boundary data at the orbit limit to any
grid point; gauge (Darboux) transforms move the system between
equivalent forms, e.g. to a triangular one with a closed-form resolvent.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .calculus import deltas_fn, shift
from .errors import (DegenerateQuadruple, DegenerateSystem, GridMismatch,
                     NegativeBaseRealExponent, NonPositiveFactor,
                     NotTriangular, ParticularNotSolution, SingularGauge,
                     SingularResolvent, ZeroAlpha, ZeroDivisor)
from .grid import OrbitGrid
from .gridfn import GridFunction, joint_scale, max_abs_diff

_ZERO_TOL = 1e-280


def _maxnorm(m: np.ndarray) -> float:
    return float(np.max(np.abs(m)))


def _deepest_valid(mask: np.ndarray) -> int:
    """Index of the deepest point where all system entries are valid."""
    idx = np.nonzero(mask)[0]
    if idx.size == 0:
        raise GridMismatch("system has no valid points on a branch")
    return int(idx[-1])


@dataclass(frozen=True, eq=False)
class TwoByTwoSystem:
    """The matrix Lambda(x) = [[a, b], [c, d]] of the step-form system."""

    a: GridFunction
    b: GridFunction
    c: GridFunction
    d: GridFunction

    def __post_init__(self) -> None:
        grid = self.a.grid
        for f in (self.b, self.c, self.d):
            if f.grid is not grid:
                raise GridMismatch("system entries live on different grids")
        det = self.a * self.d - self.b * self.c
        # pointwise scale: entries may span many orders along the orbit
        size = (abs(self.a) * abs(self.d) + abs(self.b) * abs(self.c) + 1e-300)
        rel = det / size
        if any(np.any(np.abs(v[m]) < 1e-14)
               for v, m in zip(rel.values, rel.valid)):
            raise DegenerateSystem("step matrix is singular at a grid point")

    @property
    def grid(self) -> OrbitGrid:
        return self.a.grid

    @classmethod
    def from_tilde(cls, at: GridFunction, bt: GridFunction, ct: GridFunction,
                   dt: GridFunction) -> "TwoByTwoSystem":
        """Build the step form from the derivative form, Lambda = I - delta*Tilde."""
        dlt = deltas_fn(at.grid)
        return cls(a=1.0 - dlt * at, b=-dlt * bt, c=-dlt * ct, d=1.0 - dlt * dt)

    def tilde(self) -> tuple[GridFunction, GridFunction, GridFunction, GridFunction]:
        """The derivative-form entries LambdaTilde = (I - Lambda)/(id - tau)."""
        dlt = deltas_fn(self.grid)
        return ((1.0 - self.a) / dlt, -self.b / dlt,
                -self.c / dlt, (1.0 - self.d) / dlt)

    def entry_arrays(self, i: int) -> np.ndarray:
        """The 2x2 matrices at every point of branch ``i``, shape (n, 2, 2)."""
        n = len(self.grid.branches[i])
        out = np.empty((n, 2, 2), dtype=complex)
        out[:, 0, 0] = self.a.values[i]
        out[:, 0, 1] = self.b.values[i]
        out[:, 1, 0] = self.c.values[i]
        out[:, 1, 1] = self.d.values[i]
        return out

    def valid_mask(self, i: int) -> np.ndarray:
        return (self.a.valid[i] & self.b.valid[i]
                & self.c.valid[i] & self.d.valid[i])


@dataclass(frozen=True, eq=False)
class ResolventResult:
    """The orbit-infinite left product of step matrices and its diagnostics.

    ``matrices[i][n]`` approximates the product Lambda(tau^N x) ...
    Lambda(x_n) on branch i, i.e. the resolvent evaluated at the n-th
    grid point; ``matrix`` is its value at the base of the first branch.
    ``criterion_sum`` is the scalar convergence functional
    sum |delta_n| * ||LambdaTilde(tau^n x)|| (max-norm).
    """

    matrices: tuple[np.ndarray, ...]
    converged: bool
    criterion_sum: float
    steps: int
    cauchy_gap: float

    @property
    def matrix(self) -> np.ndarray:
        return self.matrices[0][0]


def system_from_second_order(coef) -> TwoByTwoSystem:
    """The step system whose first component solves the three-point equation.

    Lambda = [[(lambda - beta)/alpha, -gamma/alpha], [1, 0]], so that
    T psi paired with psi reproduces alpha T psi + beta psi + gamma
    T^{-1} psi = lambda psi one orbit step at a time.
    """
    alpha, beta, gamma = coef.alpha, coef.beta, coef.gamma
    lam = coef.value
    scale = joint_scale(alpha)
    if any(np.any(np.abs(v[m]) < 1e-14 * scale)
           for v, m in zip(alpha.values, alpha.valid)):
        raise ZeroAlpha("forward coefficient vanishes at a grid point")
    grid = alpha.grid
    one = GridFunction.constant(grid, 1.0)
    zero = GridFunction.constant(grid, 0.0)
    return TwoByTwoSystem(a=(lam - beta) / alpha, b=-gamma / alpha,
                          c=one, d=zero)


def resolvent(sys: TwoByTwoSystem, cauchy_tol: float = 1e-12) -> ResolventResult:
    """Accumulate the infinite product of step matrices along each branch.

    Partial products at the branch base are monitored for a Cauchy gap
    (max-norm difference of the last three), and the scalar criterion
    sum |delta| * ||LambdaTilde|| is reported; both must be finite/small
    for ``converged``.  Nothing is raised on failure — callers decide.
    """
    at, bt, ct, dt = sys.tilde()
    criterion = 0.0
    matrices = []
    gap = 0.0
    steps = 0
    for i, br in enumerate(sys.grid.branches):
        n = len(br)
        lam = sys.entry_arrays(i)
        mask = sys.valid_mask(i)
        last = _deepest_valid(mask)
        # suffix products S[k] = Lambda(x_last) ... Lambda(x_k)
        S = np.empty((last + 1, 2, 2), dtype=complex)
        S[last] = lam[last]
        for k in range(last - 1, -1, -1):
            S[k] = S[k + 1] @ lam[k]
        full = np.empty((n, 2, 2), dtype=complex)
        full[:last + 1] = S
        full[last + 1:] = np.eye(2)
        matrices.append(full)
        # Cauchy gap of the base-point partial products: the last three
        # prefix products differ from the full one by tail factors.
        if last >= 2:
            # partial products at the base: P_k = Lambda(x_k)...Lambda(x_0);
            # peel the deepest left factors off P_last to recover P_{last-1,2}
            p_full = S[0]
            drop1 = np.linalg.solve(lam[last], p_full) \
                if abs(np.linalg.det(lam[last])) > _ZERO_TOL else p_full
            drop2 = np.linalg.solve(lam[last - 1], drop1) \
                if abs(np.linalg.det(lam[last - 1])) > _ZERO_TOL else drop1
            gap = max(gap, _maxnorm(p_full - drop1), _maxnorm(drop1 - drop2))
        steps += last + 1
        tn = np.zeros(n)
        for f in (at, bt, ct, dt):
            sel = f.valid[i]
            tn[sel] = np.maximum(tn[sel], np.abs(f.values[i][sel]))
        criterion += float(np.sum(np.abs(np.append(br.deltas, 0.0)) * tn))
    converged = bool(np.isfinite(criterion)) and gap < cauchy_tol
    return ResolventResult(matrices=tuple(matrices), converged=converged,
                           criterion_sum=criterion, steps=steps,
                           cauchy_gap=gap)


def solve_system(sys: TwoByTwoSystem, boundary,
                 res: ResolventResult | None = None,
                 check_tol: float = 1e-10) -> tuple[GridFunction, GridFunction]:
    """Propagate boundary data at the orbit limit back to every grid point.

    (psi, phi)(x) = Lambda_inf(x)^{-1} (psi, phi)(limit); the result is
    verified against the one-step recursion at every interior point.
    """
    if res is None:
        res = resolvent(sys)
    bvec = np.asarray(boundary, dtype=complex).reshape(2)
    psi_vals, phi_vals, valid = [], [], []
    for i, br in enumerate(sys.grid.branches):
        mats = res.matrices[i]
        mask = sys.valid_mask(i)
        dets = np.linalg.det(mats)
        scale = float(np.max(np.abs(mats))) or 1.0
        if np.any(np.abs(dets[mask]) < 1e-14 * scale ** 2):
            raise SingularResolvent("resolvent is singular at a grid point")
        rhs = np.broadcast_to(bvec[:, None], (len(br), 2, 1))
        sol = np.linalg.solve(mats, rhs)[:, :, 0]
        psi_vals.append(sol[:, 0])
        phi_vals.append(sol[:, 1])
        valid.append(mask)
    psi = GridFunction(sys.grid, tuple(psi_vals), tuple(valid), label="psi")
    phi = GridFunction(sys.grid, tuple(phi_vals), tuple(valid), label="phi")
    worst = step_residual(sys, psi, phi)
    if worst > check_tol:
        raise SingularResolvent(
            f"solution violates the one-step recursion: residual {worst}")
    return psi, phi


def step_residual(sys: TwoByTwoSystem, psi: GridFunction,
                  phi: GridFunction) -> float:
    """Max residual of (T psi, T phi) = Lambda (psi, phi), scale-relative."""
    lhs1, lhs2 = shift(psi), shift(phi)
    rhs1 = sys.a * psi + sys.b * phi
    rhs2 = sys.c * psi + sys.d * phi
    scale = joint_scale(psi, phi) * joint_scale(sys.a, sys.b, sys.c, sys.d)
    return max(max_abs_diff(lhs1, rhs1), max_abs_diff(lhs2, rhs2)) / scale


def _suffix_sums(arr: np.ndarray) -> np.ndarray:
    return np.cumsum(arr[::-1])[::-1]


def triangular_resolvent(sys: TwoByTwoSystem) -> ResolventResult:
    """Closed-form resolvent for an upper-triangular system (c = 0).

    The diagonal entries are the orbit products of a and d written as
    exponentials of orbit integrals of ln a and ln d; the corner F(x)
    solves F = d F(tau x) + b d_inf(tau x) and is evaluated by the
    exponential-sum closed form.  Requires positive a and d (real
    logarithm branch).
    """
    scale = joint_scale(sys.a, sys.b, sys.c, sys.d)
    if sys.c.max_abs() > 1e-14 * scale:
        raise NotTriangular("closed-form resolvent needs c = 0")
    matrices = []
    criterion = 0.0
    steps = 0
    at, bt, _, dt = sys.tilde()
    for i, br in enumerate(sys.grid.branches):
        n = len(br)
        mask = sys.valid_mask(i)
        last = _deepest_valid(mask)
        av = sys.a.values[i][:last + 1].real
        bv = sys.b.values[i][:last + 1]
        dv = sys.d.values[i][:last + 1].real
        if np.any(np.abs(av) < _ZERO_TOL) or np.any(np.abs(dv) < _ZERO_TOL):
            raise ZeroDivisor("diagonal entry vanishes on the orbit")
        if np.any(av <= 0) or np.any(dv <= 0):
            raise NonPositiveFactor(
                "closed-form resolvent needs positive diagonal entries")
        # ln prod_{m>=n} a[m] = integral of ln(a)/(t - tau t) from limit to x_n
        la = _suffix_sums(np.log(av))
        ld = _suffix_sums(np.log(dv))
        a_inf = np.exp(la)
        d_inf = np.exp(ld)
        ratio = _suffix_sums(np.log(av) - np.log(dv))
        F = d_inf * _suffix_sums(bv / av * np.exp(ratio))
        full = np.zeros((n, 2, 2), dtype=complex)
        full[:, 0, 0] = full[:, 1, 1] = 1.0
        full[:last + 1, 0, 0] = a_inf
        full[:last + 1, 0, 1] = F
        full[:last + 1, 1, 1] = d_inf
        matrices.append(full)
        steps += last + 1
        tn = np.zeros(n)
        for f in (at, bt, dt):
            sel = f.valid[i]
            tn[sel] = np.maximum(tn[sel], np.abs(f.values[i][sel]))
        criterion += float(np.sum(np.abs(np.append(br.deltas, 0.0)) * tn))
    return ResolventResult(matrices=tuple(matrices), converged=True,
                           criterion_sum=criterion, steps=steps,
                           cauchy_gap=0.0)


def _as_matrix_fn(D, grid: OrbitGrid):
    """Normalize a 2x2 matrix of GridFunctions from a nested pair."""
    try:
        (d11, d12), (d21, d22) = D
    except (TypeError, ValueError) as exc:
        raise GridMismatch("gauge must be a 2x2 nest of grid functions") from exc
    out = []
    for f in (d11, d12, d21, d22):
        if isinstance(f, GridFunction):
            if f.grid is not grid:
                raise GridMismatch("gauge entries live on a different grid")
            out.append(f)
        else:
            out.append(GridFunction.constant(grid, complex(f)))
    return out


def darboux(sys: TwoByTwoSystem, D) -> TwoByTwoSystem:
    """Gauge transform Lambda -> D(tau x)^{-1} Lambda(x) D(x).

    Solutions of the transformed system are D(x)^{-1} times solutions
    of the original one (see :func:`darboux_solution`), and the
    resolvent picks up D at the limit on the left and D(x) on the
    right.
    """
    d11, d12, d21, d22 = _as_matrix_fn(D, sys.grid)
    det = d11 * d22 - d12 * d21
    scale = joint_scale(d11, d12, d21, d22)
    if any(np.any(np.abs(v[m]) < 1e-14 * scale)
           for v, m in zip(det.values, det.valid)):
        raise SingularGauge("gauge matrix is singular at a grid point")
    # rows of D(tau x)^{-1}: adj(TD)/det(TD)
    t11, t12, t21, t22 = (shift(f) for f in (d11, d12, d21, d22))
    tdet = shift(det)
    # M = Lambda D
    m11 = sys.a * d11 + sys.b * d21
    m12 = sys.a * d12 + sys.b * d22
    m21 = sys.c * d11 + sys.d * d21
    m22 = sys.c * d12 + sys.d * d22
    return TwoByTwoSystem(
        a=(t22 * m11 - t12 * m21) / tdet,
        b=(t22 * m12 - t12 * m22) / tdet,
        c=(-t21 * m11 + t11 * m21) / tdet,
        d=(-t21 * m12 + t11 * m22) / tdet)


def darboux_solution(D, psi: GridFunction, phi: GridFunction
                     ) -> tuple[GridFunction, GridFunction]:
    """Transform a solution pair by D(x)^{-1}."""
    d11, d12, d21, d22 = _as_matrix_fn(D, psi.grid)
    det = d11 * d22 - d12 * d21
    return ((d22 * psi - d12 * phi) / det,
            (-d21 * psi + d11 * phi) / det)


def _limit_distance(grid: OrbitGrid) -> GridFunction:
    vals = tuple(br.points.astype(complex) - br.limit for br in grid.branches)
    return GridFunction(grid, vals, label="x - limit")


def singular_darboux(sys: TwoByTwoSystem, delta1: float,
                     delta2: float) -> TwoByTwoSystem:
    """Gauge by D = diag(s^d1, s^d2) with s(x) = x - limit.

    Introduces (or removes) a power singularity at the orbit limit;
    ratio solutions transform as u' = s^(d1 - d2) u.  Real exponents
    need s > 0 on the grid; integer exponents work for either sign.
    """
    s = _limit_distance(sys.grid)
    s_tau = shift(s)
    s1, s2 = _pow(s, delta1), _pow(s, delta2)
    t1, t2 = _pow(s_tau, delta1), _pow(s_tau, delta2)
    # entries per the explicit power-ratio form of D(tau x)^{-1} Lambda D(x)
    return TwoByTwoSystem(a=sys.a * s1 / t1, b=sys.b * s2 / t1,
                          c=sys.c * s1 / t2, d=sys.d * s2 / t2)


def singular_solution_factor(grid: OrbitGrid, delta1: float,
                             delta2: float) -> GridFunction:
    """The factor s^(d1-d2) carrying ratio solutions across the gauge."""
    return _pow(_limit_distance(grid), delta1 - delta2)


def _pow(f: GridFunction, e: float) -> GridFunction:
    """f^e; integer exponents work for any sign, real ones need f > 0."""
    if float(e).is_integer():
        return f ** int(e)
    vals = []
    for v, m in zip(f.values, f.valid):
        if np.any(v.real[m] <= 0):
            raise NegativeBaseRealExponent(
                "real-power gauge needs a positive base")
        base = np.where(m, v.real, 1.0)  # masked entries are never read
        vals.append(np.power(base, e).astype(complex))
    return GridFunction(f.grid, tuple(vals), f.valid)


def rhom_residual(sys: TwoByTwoSystem, u: GridFunction) -> float:
    """Residual of the step form u(tau x) (b u + a) = d u + c, scale-relative."""
    lhs = shift(u) * (sys.b * u + sys.a)
    rhs = sys.d * u + sys.c
    return max_abs_diff(lhs, rhs) / joint_scale(lhs, rhs)


def riccati_residual(sys: TwoByTwoSystem, u: GridFunction) -> float:
    """Residual of the derivative form of the homographic recursion.

    d_tau u = ct + dt*u - at*u(tau x) - bt*u*u(tau x), written with the
    derivative-form entries; algebraically equivalent to the step form
    and evaluated independently of it.
    """
    at, bt, ct, dt = sys.tilde()
    dlt = deltas_fn(sys.grid)
    ut = shift(u)
    lhs = (u - ut) / dlt
    rhs = ct + dt * u - at * ut - bt * u * ut
    return max_abs_diff(lhs, rhs) / joint_scale(lhs, rhs)


@dataclass(frozen=True, eq=False)
class RiccatiSolution:
    """One member of the t-family of ratio solutions built from u0."""

    u: GridFunction
    t: float
    u0: GridFunction
    residual: float


def general_solution(sys: TwoByTwoSystem, u0: GridFunction, t: float,
                     particular_tol: float = 1e-10) -> RiccatiSolution:
    """The one-parameter family of ratio solutions through u0.

    u^t = u0 + t E / (1 - t S) with E the orbit-product of the ratio
    (a + b u0) / (d - b u0(tau x)) and S its weighted orbit suffix sum;
    t = 0 returns u0 itself and the transforms compose additively in t.
    """
    res0 = rhom_residual(sys, u0)
    if res0 > particular_tol:
        raise ParticularNotSolution(
            f"u0 violates the homographic recursion: residual {res0}")
    u0_tau = shift(u0)
    den_a = sys.a + sys.b * u0          # a + b u0
    den_d = sys.d - sys.b * u0_tau      # -b u0(tau x) + d
    u_vals, u_valid = [], []
    for i, br in enumerate(sys.grid.branches):
        mask = den_a.valid[i] & den_d.valid[i] & u0.valid[i]
        last = int(np.max(np.nonzero(mask)[0])) if mask.any() else -1
        if last < 2:
            raise GridMismatch("orbit too short for the solution family")
        av = den_a.values[i][:last + 1]
        dv = den_d.values[i][:last + 1]
        bv = sys.b.values[i][:last + 1]
        scale = max(np.max(np.abs(av)), np.max(np.abs(dv)), 1.0)
        if np.any(np.abs(av) < 1e-14 * scale) or np.any(np.abs(dv) < 1e-14 * scale):
            raise NonPositiveFactor(
                "solution family needs nonvanishing denominators")
        E = np.cumprod((av / dv)[::-1])[::-1]
        S = _suffix_sums((bv / av) * E)
        den = 1.0 - t * S
        if np.any(np.abs(den) < 1e-13 * (1.0 + abs(t) * np.abs(S))):
            raise ZeroDivisor("parameter t hits a pole of the family")
        u = u0.values[i].copy()
        u[:last + 1] = u[:last + 1] + t * E / den
        u_vals.append(u)
        m = np.zeros(len(br), dtype=bool)
        m[:last + 1] = mask[:last + 1]
        u_valid.append(m)
    u_fn = GridFunction(sys.grid, tuple(u_vals), tuple(u_valid), label="u^t")
    return RiccatiSolution(u=u_fn, t=float(t), u0=u0,
                           residual=rhom_residual(sys, u_fn))


def cross_ratio(u1, u2, u3, u4):
    """The anharmonic ratio (u4-u3)(u1-u2) / ((u3-u1)(u2-u4))."""
    u1, u2, u3, u4 = (np.asarray(u, dtype=complex) for u in (u1, u2, u3, u4))
    num = (u4 - u3) * (u1 - u2)
    den = (u3 - u1) * (u2 - u4)
    scale = max(1e-300, float(np.max(np.abs([u1, u2, u3, u4]))) ** 2)
    if np.any(np.abs(den) < 1e-250 * scale):
        raise DegenerateQuadruple("cross-ratio denominator vanishes")
    out = num / den
    return complex(out) if out.ndim == 0 else out


__all__ = [
    "TwoByTwoSystem", "ResolventResult", "RiccatiSolution",
    "system_from_second_order", "resolvent", "solve_system", "step_residual",
    "triangular_resolvent", "darboux", "darboux_solution", "singular_darboux",
    "singular_solution_factor", "rhom_residual", "riccati_residual",
    "general_solution", "cross_ratio",
]
