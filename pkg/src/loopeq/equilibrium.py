"""One-cut equilibrium measure: endpoints, h, density, Lagrange constant, P_0."""
from __future__ import annotations

import logging
from dataclasses import dataclass, field as dc_field

import numpy as np

from .algebra import AlgebraicFn, BranchRoot, PolyZ, laurent_R, laurent_expand
from .jets import Jet
from .model import ExternalField, v_prime

log = logging.getLogger(__name__)


class EquilibriumError(RuntimeError):
    """Endpoint solve failed (outside the one-cut solvable region)."""


@dataclass
class EquilibriumMeasure:
    field: ExternalField
    branch: BranchRoot
    h: PolyZ
    lagrange_l: float = float("nan")
    residuals: dict = dc_field(default_factory=dict)

    @property
    def alpha(self) -> float:
        return self.branch.alpha0

    @property
    def beta(self) -> float:
        return self.branch.beta0

    @property
    def h0(self) -> np.ndarray:
        return np.real_if_close(np.trim_zeros(self.h.order0(), "b"))

    @property
    def h_roots(self) -> np.ndarray:
        c = np.trim_zeros(self.h.order0(), "b")
        return np.roots(c[::-1]) if len(c) > 1 else np.zeros(0, dtype=complex)

    def psi(self, lam):
        return density_psi(self, lam)

    def p0(self) -> AlgebraicFn:
        return resolvent_p0(self, self.field)

    def M(self) -> AlgebraicFn:
        """V' - 2 P_0 = R h."""
        return self.branch.sqrt_fn().mul_poly(self.h)


# ---------------------------------------------------------------------------
# endpoints


def _cheb_nodes(n: int) -> np.ndarray:
    return np.cos((2 * np.arange(1, n + 1) - 1) * np.pi / (2 * n))


def _endpoint_residual(vp: np.ndarray, c: float, r: float, x: np.ndarray) -> np.ndarray:
    s = c + r * x
    v = np.polynomial.polynomial.polyval(s, vp)
    return np.array([v.mean(), (s * v).mean() - 2.0])


def _endpoint_jacobian(vp: np.ndarray, c: float, r: float, x: np.ndarray) -> np.ndarray:
    s = c + r * x
    v = np.polynomial.polynomial.polyval(s, vp)
    dv = np.polynomial.polynomial.polyval(s, np.polynomial.polynomial.polyder(vp))
    g = v + s * dv
    return np.array([[dv.mean(), (dv * x).mean()], [g.mean(), (g * x).mean()]])


def _newton(vp, c, r, x, tol=1e-13, maxit=60):
    for _ in range(maxit):
        F = _endpoint_residual(vp, c, r, x)
        if np.max(np.abs(F)) < tol:
            return c, r, True
        J = _endpoint_jacobian(vp, c, r, x)
        try:
            step = np.linalg.solve(J, F)
        except np.linalg.LinAlgError:
            return c, r, False
        lam = 1.0
        while lam > 1e-4:
            cn, rn = c - lam * step[0], r - lam * step[1]
            if rn > 0 and np.max(np.abs(_endpoint_residual(vp, cn, rn, x))) < np.max(np.abs(F)):
                break
            lam /= 2
        c, r = cn, rn
        if r <= 0:
            return c, r, False
    F = _endpoint_residual(vp, c, r, x)
    return c, r, bool(np.max(np.abs(F)) < 1e-11)


def solve_endpoints(field: ExternalField, continuation_steps: int = 10) -> BranchRoot:
    """Endpoints from the two moment conditions, lifted to jets.

    With s = c + r cos(theta) both endpoint integrals are Chebyshev means of a
    polynomial, evaluated exactly by Gauss-Chebyshev with enough nodes.
    """
    vp = field.v_prime_coeffs()
    x = _cheb_nodes(len(vp) + 2)
    c, r, ok = _newton(vp, 0.0, 2.0, x)
    if not ok:
        log.info("direct endpoint solve stalled; continuing from the Gaussian point")
        c, r = 0.0, 2.0
        for s in np.linspace(0, 1, continuation_steps + 1)[1:]:
            c, r, ok = _newton(field.scaled(s).v_prime_coeffs(), c, r, x)
            if not ok:
                raise EquilibriumError("outside one-cut solvable region")
    if r <= 0:
        raise EquilibriumError("alpha >= beta")
    return _lift_endpoints(field, c, r)


def _lift_endpoints(field: ExternalField, c0: float, r0: float) -> BranchRoot:
    space = field.space
    vp_jets = v_prime(field)
    x = _cheb_nodes(vp_jets.degree + 2)
    J = _endpoint_jacobian(field.v_prime_coeffs(), c0, r0, _cheb_nodes(len(field.v_prime_coeffs()) + 2))
    Jinv = np.linalg.inv(J)
    c = Jet.constant(space, c0)
    r = Jet.constant(space, r0)
    for _ in range(space.max_grade + 1):
        e1 = np.zeros(space.size, dtype=complex)
        e2 = np.zeros(space.size, dtype=complex)
        for xk in x:
            s = c + r * xk
            v = vp_jets(s)
            e1 += v.coeffs
            e2 += (s * v).coeffs
        F1 = e1 / len(x)
        F2 = e2 / len(x)
        F2[0] -= 2.0
        F1[0] = F2[0] = 0.0  # order-0 already converged
        c = c - Jet(space, Jinv[0, 0] * F1 + Jinv[0, 1] * F2)
        r = r - Jet(space, Jinv[1, 0] * F1 + Jinv[1, 1] * F2)
    return BranchRoot(c - r, c + r)


# ---------------------------------------------------------------------------
# h, density, resolvent


def compute_h(field: ExternalField, branch: BranchRoot) -> PolyZ:
    """Polynomial part of V'(z)/R(z)."""
    vp = v_prime(field)
    d = vp.degree
    inv_r = laurent_R(branch, d + 1, power=-1)
    out = np.zeros((max(d, 1), field.space.size), dtype=complex)
    # coefficient of z^k in V' * R^{-1}: sum_j vp_j * inv_r[z^(k-j)]
    for k in range(d):
        acc = np.zeros(field.space.size, dtype=complex)
        for j in range(k + 1, d + 1):
            p = k - j
            if p < inv_r.low_power:
                continue
            acc = acc + field.space.mul_arrays(vp.coeffs[j], inv_r.coeffs[inv_r.top_power - p])
        out[k] = acc
    return PolyZ(field.space, out)


def density_psi(eq: EquilibriumMeasure, lam):
    """psi(x) = sqrt((x - alpha)(beta - x)) h(x) / (2 pi) on the support, 0 outside."""
    lam = np.asarray(lam, dtype=float)
    a, b = eq.alpha, eq.beta
    inside = (lam > a) & (lam < b)
    root = np.sqrt(np.clip((lam - a) * (b - lam), 0.0, None))
    h = np.real(np.polynomial.polynomial.polyval(lam, eq.h.order0()))
    return np.where(inside, root * h / (2 * np.pi), 0.0)


def resolvent_p0(eq: EquilibriumMeasure, field: ExternalField | None = None) -> AlgebraicFn:
    """F = (V' - R h) / 2 as a field element."""
    field = eq.field if field is None else field
    vp = AlgebraicFn.from_poly(v_prime(field), eq.branch)
    return (vp - eq.branch.sqrt_fn().mul_poly(eq.h)) * 0.5


def normalization_identity(eq: EquilibriumMeasure) -> tuple[float, float]:
    """(max |polynomial part of V' - R h|, |[z^-1](V' - R h) - 2|) at order 0."""
    f = AlgebraicFn.from_poly(v_prime(eq.field), eq.branch) - eq.M()
    s = laurent_expand(f, 2)
    plus = [abs(s.values(p)) for p in range(s.top_power, -1, -1)]
    return (max(plus) if plus else 0.0), abs(s.values(-1) - 2.0)


# ---------------------------------------------------------------------------
# variational conditions


def _chebyshev_moments(eq: EquilibriumMeasure, nmax: int) -> np.ndarray:
    c, r = 0.5 * (eq.alpha + eq.beta), 0.5 * (eq.beta - eq.alpha)
    n_theta = 4 * (nmax + len(eq.h0)) + 16
    theta = np.pi * (np.arange(n_theta) + 0.5) / n_theta
    h = np.real(np.polynomial.polynomial.polyval(c + r * np.cos(theta), eq.h.order0()))
    base = (r * r / (2 * np.pi)) * np.sin(theta) ** 2 * h * (np.pi / n_theta)
    return np.array([np.sum(np.cos(n * theta) * base) for n in range(nmax + 1)])


def log_potential(eq: EquilibriumMeasure, lam) -> np.ndarray:
    """U(x) = int log|x - eta| psi(eta) d eta, exact for polynomial h.

    Uses the Chebyshev expansion of log|x - y| on [-1, 1] against the
    Chebyshev moments of psi; the moments vanish beyond deg(h) + 2.
    """
    lam = np.atleast_1d(np.asarray(lam, dtype=float))
    c, r = 0.5 * (eq.alpha + eq.beta), 0.5 * (eq.beta - eq.alpha)
    nmax = len(eq.h0) + 2
    mu = _chebyshev_moments(eq, nmax)
    x = (lam - c) / r
    out = np.empty_like(x)
    n = np.arange(1, nmax + 1)
    for i, xi in enumerate(x):
        if abs(xi) <= 1:
            Tn = np.cos(n * np.arccos(xi))
            out[i] = mu[0] * (np.log(r) - np.log(2.0)) - np.sum(2.0 / n * Tn * mu[1:])
        else:
            w = abs(xi) + np.sqrt(xi * xi - 1)
            sgn = np.sign(xi) ** n
            out[i] = mu[0] * (np.log(r) + np.log(w / 2)) - np.sum(2.0 / n * sgn * w ** (-n) * mu[1:])
    return out


def effective_potential(eq: EquilibriumMeasure, lam) -> np.ndarray:
    return -2.0 * log_potential(eq, lam) + eq.field.potential(lam)


def default_grid(eq: EquilibriumMeasure, n_in: int = 64, n_out: int = 32) -> np.ndarray:
    a, b = eq.alpha, eq.beta
    k = np.arange(1, n_in + 1)
    inner = 0.5 * (a + b) + 0.5 * (b - a) * np.cos((2 * k - 1) * np.pi / (2 * n_in))
    half = n_out // 2
    left = a - np.linspace(0.05, 2.0, half)
    right = b + np.linspace(0.05, 2.0, n_out - half)
    return np.sort(np.concatenate([left, inner, right]))


def lagrange_and_variational_check(eq: EquilibriumMeasure, field: ExternalField | None = None, grid=None):
    """Returns (l, max equality deviation on the support, min margin outside)."""
    grid = default_grid(eq) if grid is None else np.asarray(grid, dtype=float)
    if grid.size == 0:
        raise ValueError("grid empty")
    phi = effective_potential(eq, grid)
    inside = (grid > eq.alpha) & (grid < eq.beta)
    if not inside.any():
        raise ValueError("grid has no interior points")
    l = float(np.mean(phi[inside]))
    max_dev = float(np.max(np.abs(phi[inside] - l)))
    outside = ~inside
    margin = float(np.min(phi[outside] - l)) if outside.any() else float("inf")
    return l, max_dev, margin


# ---------------------------------------------------------------------------


def solve_equilibrium(field: ExternalField, check: bool = True) -> EquilibriumMeasure:
    branch = solve_endpoints(field)
    h = compute_h(field, branch)
    eq = EquilibriumMeasure(field, branch, h)
    eq.branch = branch.with_roots(tuple(complex(r) for r in eq.h_roots))
    vp = field.v_prime_coeffs()
    x = _cheb_nodes(len(vp) + 2)
    c, r = 0.5 * (eq.alpha + eq.beta), 0.5 * (eq.beta - eq.alpha)
    res = np.abs(_endpoint_residual(vp, c, r, x))
    eq.residuals["endpoint_eq1"] = float(res[0])
    eq.residuals["endpoint_eq2"] = float(res[1])
    if check:
        grid = np.linspace(eq.alpha, eq.beta, 256)
        hv = np.real(np.polynomial.polynomial.polyval(grid, eq.h.order0()))
        eq.residuals["h_min_on_support"] = float(hv.min())
        if hv.min() <= 0:
            raise EquilibriumError("h is not positive on the support; not a one-cut field")
        k = np.arange(1, 65)
        th = k * np.pi / 65
        s = c + r * np.cos(th)
        mass = np.sum(np.sin(th) ** 2 * np.real(np.polynomial.polynomial.polyval(s, eq.h.order0())))
        mass *= (np.pi / 65) * r * r / (2 * np.pi)
        eq.residuals["mass"] = float(abs(mass - 1.0))
        l, dev, margin = lagrange_and_variational_check(eq)
        eq.lagrange_l = l
        eq.residuals["max_eq_dev"] = dev
        eq.residuals["min_ineq_margin"] = margin
    return eq
