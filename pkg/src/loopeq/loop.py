"""Loop-equation hierarchy: vertex operator, genus levels P_g, e_g derivative tables."""
from __future__ import annotations

import logging
from dataclasses import dataclass, field as dc_field

import numpy as np

from .algebra import AlgebraError, AlgebraicFn, PolyZ, laurent_expand, project_parts
from .equilibrium import EquilibriumMeasure, solve_equilibrium
from .jets import Jet, JetError, JetSpace
from .model import ExternalField, v_prime

log = logging.getLogger(__name__)

NEAR_CRITICAL = 0.1
REGULAR_NODES = 64
REGULAR_REL = 0.02


class LoopError(RuntimeError):
    pass


def vertex_derivative(f: AlgebraicFn, m: int | None = None) -> AlgebraicFn:
    """d/dV f = -sum_{j=1}^m z^(-j-1) df/dt_j over the first m jet variables."""
    space = f.space
    m = space.groups[0][0] if m is None else m
    if space.groups[0][1] < 1:
        raise JetError("insufficient jet order")
    parts = [f.partial(j - 1) for j in range(1, m + 1)]
    target = parts[0].space
    A = PolyZ.zero(target)
    B = PolyZ.zero(target)
    for j, p in enumerate(parts, start=1):
        A = A - p.a_part.shift(m - j)
        B = B - p.b_part.shift(m - j)
    denom = dict(f.denom)
    denom[0j] = denom.get(0j, 0) + m + 1
    return AlgebraicFn(A, B, denom, parts[0].branch)


def _level_space(space: JetSpace, g: int) -> JetSpace:
    """Probe group loses one order per genus level."""
    for _ in range(g):
        space = space.reduced(0, 1)
    return space


def _regular_radius(z0: complex, eq: EquilibriumMeasure, others) -> float:
    a, b = eq.alpha, eq.beta
    x = min(max(z0.real, a), b)
    d = [abs(z0 - x), abs(z0)]
    d += [abs(z0 - w) for w in others if w != z0]
    # keep |y| close to |z0|: pointwise jets lose about (|z0|/|y|)^m digits
    return min(0.3 * min(d), REGULAR_REL * abs(z0))


def _source_term(levels: list[AlgebraicFn], space: JetSpace) -> AlgebraicFn:
    g = len(levels)
    U = vertex_derivative(levels[g - 1]).truncate(space)
    for gp in range(1, g):
        U = U + levels[gp].truncate(space) * levels[g - gp].truncate(space)
    return U


# ---------------------------------------------------------------------------
# pointwise jet evaluation


def _arr_truncate(vals: np.ndarray, src: JetSpace, dst: JetSpace) -> np.ndarray:
    return vals if src is dst else vals[..., dst.projection_from(src)]


def _arr_partial(vals: np.ndarray, space: JetSpace, var: int) -> tuple[JetSpace, np.ndarray]:
    target, src, dst, fac = space.partial_map(var, 1)
    out = np.zeros(vals.shape[:-1] + (target.size,), dtype=complex)
    out[..., dst] = vals[..., src] * fac
    return target, out


def _pointwise_base(eq: EquilibriumMeasure, space: JetSpace, xs: np.ndarray):
    """Jet values of M = R h and P_0 at the points ``xs``."""
    br = eq.branch.truncate(space) if eq.branch.space is not space else eq.branch
    one = np.zeros(space.size, dtype=complex)
    one[0] = 1.0
    xa = xs[:, None] * one - br.alpha.coeffs[None, :]
    xb = xs[:, None] * one - br.beta.coeffs[None, :]
    S0 = (xs - br.alpha0) * (xs - br.beta0)
    eps = space.mul_arrays(xa, xb) / S0[:, None]
    eps[:, 0] = 0.0
    binom = [_binom_half(k) for k in range(space.max_grade + 1)]
    R = br.R0(xs)[:, None] * space.nilpotent_series(eps, binom)
    M = space.mul_arrays(R, eq.h.truncate(space).eval_many(xs))
    vp = v_prime(eq.field).truncate(space).eval_many(xs)
    return M, 0.5 * (vp - M)


def _binom_half(k: int) -> float:
    out = 1.0
    for i in range(k):
        out *= (0.5 - i) / (i + 1)
    return out


def _pointwise_source(P: list, spaces: list, xs: np.ndarray, g: int, space: JetSpace) -> np.ndarray:
    prev = spaces[g - 1]
    acc = 0.0
    tsp = None
    for j in range(1, prev.groups[0][0] + 1):
        tsp, d = _arr_partial(P[g - 1], prev, j - 1)
        acc = acc - d * (xs ** (-j - 1))[:, None]
    U = _arr_truncate(acc, tsp, space)
    for gp in range(1, g):
        a = _arr_truncate(P[gp], spaces[gp], space)
        b = _arr_truncate(P[g - gp], spaces[g - gp], space)
        U = U + space.mul_arrays(a, b)
    return U


def _pointwise(eq: EquilibriumMeasure, levels: list, polys: list, xs) -> dict:
    xs = np.atleast_1d(np.asarray(xs, dtype=complex))
    for x in xs:
        if eq.branch.near_cut(x):
            raise AlgebraError(f"evaluation point {x} lies on the cut")
    sp0 = levels[0].space
    M, P0 = _pointwise_base(eq, sp0, xs)
    P, U, spaces = [P0], [None], [sp0]
    for g in range(1, len(polys)):
        sp = levels[g].space
        Ug = _pointwise_source(P, spaces, xs, g, sp)
        num = polys[g].eval_many(xs) + Ug
        P.append(sp.mul_arrays(num, sp.reciprocal_arrays(_arr_truncate(M, sp0, sp))))
        U.append(Ug)
        spaces.append(sp)
    return {"P": P, "U": U, "M": M, "spaces": spaces}


# ---------------------------------------------------------------------------
# level solve


def solve_loop_level(levels: list[AlgebraicFn], eq: EquilibriumMeasure, polys: list | None = None, M=None):
    """Next level P_g from P_0..P_{g-1}; returns (P_g, Q_g).

    Solves [M P_g]_- = U_g with P_g = O(z^-2) and analytic off the cut, so
    M P_g = Q_g + U_g for a polynomial Q_g.  Writing M = M0 + M', with
    M0 = R0 h0 numeric, each jet grade k obeys M0 P_k = Q_k + W_k, where W_k
    is the grade-k part of U_g - M' P_{<k}.  The high coefficients of Q_k
    cancel the growth of W_k; the low ones make Q_k + W_k vanish at the roots
    of h0.  Those root values are circle means of pointwise jet evaluations,
    which avoids the ill-conditioned numerators of the field representation.
    """
    g = len(levels)
    if g < 1:
        raise LoopError("P_0 is required")
    polys = [None] * g if polys is None else polys
    if len(polys) != g:
        raise LoopError("one Q polynomial per solved level is required")
    space = _level_space(levels[0].space, g)
    M = (eq.M() if M is None else M).truncate(space)
    U = _source_term(levels, space)
    branch = M.branch

    h0 = np.trim_zeros(eq.h.order0(), "b")
    lead = complex(h0[-1])
    zr = [complex(r) for r in eq.h_roots]
    for r in zr:
        x = min(max(r.real, eq.alpha), eq.beta)
        if abs(r - x) < NEAR_CRITICAL:
            raise LoopError(f"root of h at {r:.6g} is within {NEAR_CRITICAL} of the cut (near-critical)")
    n_low = len(zr)
    if n_low:
        vander = np.array([[r**d for d in range(n_low)] for r in zr], dtype=complex)
        cond = np.linalg.cond(vander)
        if not np.isfinite(cond) or cond > 1e12:
            raise LoopError(f"singular regularity system (condition {cond:.3g})")
        nodes = REGULAR_NODES
        theta = 2 * np.pi * (np.arange(nodes) + 0.5) / nodes
        circ = np.concatenate([r + _regular_radius(r, eq, zr) * np.exp(1j * theta) for r in zr])
        pw = _pointwise(eq, levels, polys, circ)
        U_c = _pointwise_source(pw["P"], pw["spaces"], circ, g, space)
        M_c = _arr_truncate(pw["M"], levels[0].space, space)
        M0_c = M_c[:, 0].copy()
        Mp_c = M_c.copy()
        Mp_c[:, 0] = 0.0
        P_c = np.zeros_like(U_c)

    M0 = M.grade_part(0)
    Mp = M - M0
    den_roots = {complex(eq.alpha): 1, complex(eq.beta): 1}
    for r in zr:
        den_roots[r] = den_roots.get(r, 0) + 1
    r0 = AlgebraicFn.r0(space, branch)

    P = AlgebraicFn.constant(0.0, space, branch)
    Q_total = PolyZ.zero(space)
    for k in range(space.max_grade + 1):
        mask = space.grade_mask(k)
        W = (U - Mp * P).grade_part(k) if k else U.grade_part(0)
        s = laurent_expand(W, 1)
        q_hi = np.zeros((max(s.top_power + 1, n_low), space.size), dtype=complex)
        for d in range(n_low, s.top_power + 1):
            q_hi[d] = -s.coeffs[s.top_power - d] * mask
        Q = PolyZ(space, q_hi)
        if n_low:
            W_c = (U_c - space.mul_arrays(Mp_c, P_c)) * mask
            F_c = W_c + Q.eval_many(circ)
            rhs = -F_c.reshape(n_low, nodes, space.size).mean(axis=1)
            Q = Q + PolyZ(space, np.linalg.solve(vander, rhs) * mask)
            P_c = P_c + (Q.eval_many(circ) + W_c) / M0_c[:, None]
        Q_total = Q_total + Q
        if W.is_zero() and Q.is_zero():
            continue
        Pk = ((W + Q) * r0).div_roots(den_roots, lead)
        P = P + Pk.grade_part(k)
    return P, Q_total


@dataclass
class LoopHierarchy:
    levels: list
    g_max: int
    laurent_depth: int
    eq: EquilibriumMeasure
    polys: list = dc_field(default_factory=list)
    contour_residuals: dict = dc_field(default_factory=dict)

    def laurent(self, g: int, depth: int | None = None):
        return laurent_expand(self.levels[g], depth or self.laurent_depth)

    def laurent_table(self, g: int, depth: int | None = None) -> list[tuple[int, complex]]:
        """(power, coefficient) pairs from the leading order-0 term down to z^-depth."""
        s = self.laurent(g, depth)
        rows = [(int(p), complex(s.values(p))) for p in s.powers()]
        # the representation may carry numerically cancelled leading terms
        while rows and rows[0][0] >= 0 and abs(rows[0][1]) < 1e-9:
            rows.pop(0)
        return rows

    def source(self, g: int) -> AlgebraicFn:
        return _source_term(self.levels[:g], self.levels[g].space)

    def pointwise(self, xs) -> dict:
        """Jet values of M, P_g and U_g at points off the cut (stable near it)."""
        return _pointwise(self.eq, self.levels, self.polys, xs)

    def values(self, g: int, xs) -> np.ndarray:
        return self.pointwise(xs)["P"][g][:, 0]


def solve_hierarchy(field: ExternalField, g_max: int = 2, laurent_depth: int = 12, eq=None) -> LoopHierarchy:
    if field.jet_order < g_max:
        raise JetError("insufficient jet order: need jet_order >= g_max")
    eq = solve_equilibrium(field) if eq is None else eq
    levels = [eq.p0()]
    polys = [None]
    M = eq.M()
    for g in range(1, g_max + 1):
        P, Q = solve_loop_level(levels, eq, polys, M)
        levels.append(P)
        polys.append(Q)
        log.debug("solved level %d in space %s", g, P.space.groups)
    return LoopHierarchy(levels, g_max, laurent_depth, eq, polys)


def projection_residual(hier: LoopHierarchy, g: int, depth: int | None = None) -> float:
    """max |[M P_g]_- - U_g| over Laurent coefficients down to the given depth."""
    depth = depth or hier.laurent_depth
    P = hier.levels[g]
    M = hier.eq.M().truncate(P.space)
    _, minus = project_parts(laurent_expand(M * P, depth))
    U = laurent_expand(hier.source(g), depth)
    diff = minus - U
    return float(np.max(np.abs(diff.coeffs[:, 0]))) if len(diff.coeffs) else 0.0


def probe_stability(field: ExternalField, g_max: int, depth: int, extra: int = 2) -> float:
    """Max relative change of Laurent data of P_1..P_gmax when m grows by ``extra``."""
    a = solve_hierarchy(field, g_max, depth)
    b = solve_hierarchy(field.with_jets(probe_m=field.probe_m + extra), g_max, depth)
    worst = 0.0
    for g in range(1, g_max + 1):
        ca = a.laurent(g).coeffs[:, 0]
        cb = b.laurent(g).coeffs[:, 0]
        n = min(len(ca), len(cb))
        ca, cb = ca[-n:], cb[-n:]
        scale = max(np.max(np.abs(cb)), 1e-300)
        worst = max(worst, float(np.max(np.abs(ca - cb)) / scale))
    return worst


# ---------------------------------------------------------------------------
# e_g derivative tables


@dataclass
class EgDerivativeTable:
    """First derivatives, Hessians and Taylor polynomials of e_g at the base point."""

    upsilon: int
    entries: dict
    hessian: dict = dc_field(default_factory=dict)
    taylor: dict = dc_field(default_factory=dict)
    taylor_dirs: tuple = ()

    def derivative(self, g: int, j: int) -> float:
        return self.entries[g][j]

    def symmetry_defect(self, g: int) -> float:
        H = self.hessian.get(g)
        if H is None:
            return float("nan")
        return float(np.max(np.abs(H - H.T)))

    def evaluate(self, g: int, t) -> float:
        """Taylor polynomial of e_g in the Taylor directions at offsets ``t``."""
        t = np.atleast_1d(np.asarray(t, dtype=float))
        total = 0.0
        for mono, c in self.taylor[g].items():
            total += c * float(np.prod(t ** np.array(mono)))
        return total


def extract_eg_derivatives(hier: LoopHierarchy) -> EgDerivativeTable:
    field = hier.eq.field
    ups = field.upsilon
    if hier.laurent_depth < ups + 1:
        raise LoopError("Laurent depth too small: need depth >= upsilon + 1")
    entries, hessian, taylor = {}, {}, {}
    for g, P in enumerate(hier.levels):
        s = laurent_expand(P, ups + 1)
        space = P.space
        entries[g] = {j: float(np.real(-s.values(-j - 1))) for j in range(1, ups + 1)}
        m, order = space.groups[0]
        if order >= 1:
            H = np.zeros((ups, ups))
            for i in range(1, ups + 1):
                for j in range(1, ups + 1):
                    mono = [0] * space.nvars
                    mono[i - 1] = 1
                    H[i - 1, j - 1] = -np.real(s.coeff(-j - 1).coeff(tuple(mono)))
            hessian[g] = H
        if field.taylor_dirs:
            taylor[g] = _taylor_from_jets(s, space, field)
    return EgDerivativeTable(ups, entries, hessian, taylor, tuple(field.taylor_dirs))


def _taylor_from_jets(s, space: JetSpace, field: ExternalField) -> dict:
    """Integrate the Taylor-group jets of -[z^(-j-1)] P_g into e_g's Taylor polynomial.

    e_g vanishes at the base point (normalized to the Gaussian field), so the
    constant term is zero.
    """
    m = field.probe_m
    dirs = field.taylor_dirs
    nd = len(dirs)
    tsl = slice(m, m + nd)
    out: dict = {}
    for i, mono in enumerate(space.monomials):
        if mono[:m].any():
            continue
        y = tuple(int(e) for e in mono[tsl])
        for a, j in enumerate(dirs):
            nu = list(y)
            nu[a] += 1
            nu = tuple(nu)
            if nu in out:
                continue
            val = -np.real(s.coeffs[s.top_power + j + 1, i]) / nu[a]
            out[nu] = float(val)
    return out


def choose_probe_m(eq: EquilibriumMeasure, depth: int, tol: float = 1e-10, cap: int = 64, reach: float = 1.0) -> int:
    """Probe count for the truncated vertex operator.

    Dropping t_j for j > m costs about (edge / |z|)^m at a point z, where edge
    bounds the support, and also (edge / |z_i|)^m through the roots z_i of h.
    Points are assumed at distance at least ``reach`` beyond the edge.
    """
    edge = max(abs(eq.alpha), abs(eq.beta))
    near = edge + reach
    roots = eq.h_roots
    if len(roots):
        near = min(near, float(np.min(np.abs(roots))))
    rho = edge / near
    if rho >= 1.0:
        return cap
    return int(min(cap, max(depth + 2, np.ceil(np.log(tol) / np.log(rho)))))
