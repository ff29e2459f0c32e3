"""Independent ground truth: gluing counts, finite-N orthogonal polynomials,
Ward identities by direct quadrature, contour residuals of the loop equations.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field as dc_field
from functools import lru_cache

import numpy as np
from scipy import integrate
from scipy.special import roots_hermite, roots_legendre

from .equilibrium import EquilibriumMeasure, density_psi
from .model import ExternalField


class OracleError(RuntimeError):
    pass


# ---------------------------------------------------------------------------
# pairing enumeration


@dataclass
class GenusMomentTable:
    entries: dict  # (j, g) -> count

    def count(self, j: int, g: int) -> int:
        return self.entries.get((j, g), 0)

    def row(self, j: int) -> dict:
        return {g: c for (jj, g), c in sorted(self.entries.items()) if jj == j}

    def moment(self, j: int, N: float) -> float:
        """E((1/N) Tr M^(2j)) at t = 0 as sum_g eps_g(j) N^(-2g)."""
        return float(sum(c * N ** (-2 * g) for g, c in self.row(j).items()))


def _matchings(n: int) -> np.ndarray:
    """All perfect matchings of 0..n-1 as partner arrays, shape ((n-1)!!, n)."""
    rows = np.full((1, n), -1, dtype=np.int8)
    for _ in range(n // 2):
        first = np.argmax(rows < 0, axis=1)
        free = rows < 0
        free[np.arange(len(rows)), first] = False
        r_idx, partner = np.nonzero(free)
        out = rows[r_idx].copy()
        f = first[r_idx]
        k = np.arange(len(out))
        out[k, f] = partner
        out[k, partner] = f
        rows = out
    return rows


def _count_cycles(perm: np.ndarray) -> np.ndarray:
    """Number of cycles of each row permutation, by min-label pointer doubling."""
    n = perm.shape[1]
    label = np.broadcast_to(np.arange(n, dtype=perm.dtype), perm.shape).copy()
    p = perm.copy()
    for _ in range(max(1, math.ceil(math.log2(n))) + 1):
        label = np.minimum(label, np.take_along_axis(label, p, axis=1))
        p = np.take_along_axis(p, p, axis=1)
    return (label == np.arange(n)).sum(axis=1)


@lru_cache(maxsize=None)
def _genus_row(j: int) -> tuple:
    n = 2 * j
    sigma = _matchings(n).astype(np.int16)
    rot = (np.arange(n) + 1) % n
    faces = _count_cycles(np.take(rot, sigma))
    genus = (1 + j - faces) // 2  # 2 - 2g = V - E + F with V = 1, E = j
    counts = np.bincount(genus)
    return tuple(int(c) for c in counts)


def pairing_genus_counts(j_max: int) -> GenusMomentTable:
    if not 1 <= j_max <= 8:
        raise OracleError("j_max must be in 1..8 (double-factorial growth)")
    entries = {}
    for j in range(1, j_max + 1):
        for g, c in enumerate(_genus_row(j)):
            if c:
                entries[(j, g)] = c
    return GenusMomentTable(entries)


# ---------------------------------------------------------------------------
# finite N via orthogonal polynomials


@dataclass
class FiniteNDensity:
    N: int
    grid: np.ndarray
    values: np.ndarray
    recurrence: tuple  # (a_0..a_{N-1}, b_1..b_N) orthonormal three-term data
    log_norms: np.ndarray  # log of monic squared norms h_0..h_{N-1}
    mass: float = float("nan")


@lru_cache(maxsize=8)
def _legendre(n: int):
    return roots_legendre(n)


def _quad_grid(field: ExternalField, interval, nodes: int):
    a, b = interval
    x, w = _legendre(nodes)
    x = 0.5 * (b - a) * x + 0.5 * (a + b)
    w = 0.5 * (b - a) * w
    return x, w


def _support_guess(field: ExternalField) -> tuple[float, float]:
    from .equilibrium import solve_endpoints

    br = solve_endpoints(field.with_jets(probe_m=field.upsilon, jet_order=0))
    return br.alpha0, br.beta0


def _pad(field: ExternalField, N: int, alpha: float, beta: float, pad: float = 4.0) -> tuple[float, float]:
    """Widen the default padding until the weight has dropped below e^-50 at the ends."""
    vmin = min(field.potential(alpha), field.potential(beta))
    lo = hi = pad
    while N * (field.potential(alpha - lo) - vmin) < 50:
        lo += 1.0
    while N * (field.potential(beta + hi) - vmin) < 50:
        hi += 1.0
    return alpha - lo, beta + hi


def stieltjes(field: ExternalField, N: int, n_poly: int, nodes: int = 4000, pad: float = 4.0):
    """Discretized Stieltjes procedure for the weight exp(-N V) on a Gauss grid.

    Returns (a, b, log_h) with a_k, b_k the orthonormal recurrence data
    (x p_k = b_{k+1} p_{k+1} + a_k p_k + b_k p_{k-1}) and log_h the logs of
    the monic squared norms.
    """
    alpha, beta = _support_guess(field)
    x, w = _quad_grid(field, _pad(field, N, alpha, beta, pad), nodes)
    nv = N * field.potential(x)
    shift = nv.min()
    wt = w * np.exp(-(nv - shift))
    h0 = wt.sum()
    a = np.zeros(n_poly)
    b = np.zeros(n_poly + 1)
    log_h = np.zeros(n_poly)
    log_h[0] = math.log(h0) - shift
    p_prev = np.zeros_like(x)
    p = np.full_like(x, 1.0 / math.sqrt(h0))
    for k in range(n_poly):
        a[k] = np.sum(wt * x * p * p)
        q = (x - a[k]) * p - b[k] * p_prev
        nrm = np.sum(wt * q * q)
        if not nrm > 0 or not np.isfinite(nrm):
            raise OracleError(f"Stieltjes breakdown at degree {k + 1}: norm {nrm!r}")
        b[k + 1] = math.sqrt(nrm)
        if k + 1 < n_poly:
            log_h[k + 1] = log_h[k] + math.log(nrm)
        p_prev, p = p, q / b[k + 1]
    return a, b, log_h


def _kernel_diag(field: ExternalField, N: int, a, b, log_h0: float, x: np.ndarray) -> np.ndarray:
    """(1/N) sum_{l<N} p_l(x)^2 exp(-N V(x)) via phi_l = p_l exp(-N V / 2)."""
    phi_prev = np.zeros_like(x)
    phi = np.exp(-0.5 * N * field.potential(x) - 0.5 * log_h0)
    acc = phi * phi
    for k in range(N - 1):
        nxt = ((x - a[k]) * phi - b[k] * phi_prev) / b[k + 1]
        phi_prev, phi = phi, nxt
        acc += phi * phi
    return acc / N


def hermite_one_point(N: int, x) -> np.ndarray:
    """Closed-form Gaussian one-point function from Hermite functions."""
    x = np.asarray(x, dtype=float)
    y = x * math.sqrt(N / 2.0)
    psi_prev = np.zeros_like(y)
    psi = np.pi ** -0.25 * np.exp(-0.5 * y * y)
    acc = psi * psi
    for ell in range(N - 1):
        nxt = math.sqrt(2.0 / (ell + 1)) * y * psi - math.sqrt(ell / (ell + 1)) * psi_prev
        psi_prev, psi = psi, nxt
        acc += psi * psi
    return acc * math.sqrt(N / 2.0) / N


def finite_n_one_point(field: ExternalField, N: int, grid=None, fast_path: bool = True) -> FiniteNDensity:
    if not 1 <= N <= 200:
        raise OracleError("N must be in 1..200")
    alpha, beta = _support_guess(field)
    if grid is None:
        grid = np.linspace(alpha - 2, beta + 2, 801)
    grid = np.asarray(grid, dtype=float)
    a, b, log_h = stieltjes(field, N, N)
    if fast_path and field.is_gaussian:
        vals = hermite_one_point(N, grid)
    else:
        vals = _kernel_diag(field, N, a, b, log_h[0], grid)
    if np.any(vals < -1e-300):
        raise OracleError("negative density")
    xq, wq = _quad_grid(field, _pad(field, N, alpha, beta), 4000)
    dens_q = _kernel_diag(field, N, a, b, log_h[0], xq)
    return FiniteNDensity(N, grid, vals, (a, b[1 : N + 1]), log_h, float(np.sum(wq * dens_q)))


def finite_n_moment(field: ExternalField, N: int, j: int) -> float:
    """E((1/N) Tr M^j) = (1/N) sum_{l<N} (J^j)_{ll} from the Jacobi matrix."""
    n = N + j // 2 + 1
    a, b, _ = stieltjes(field, N, n)
    J = np.diag(a) + np.diag(b[1:n], 1) + np.diag(b[1:n], -1)
    Jj = np.linalg.matrix_power(J, j)
    return float(np.trace(Jj[:N, :N]) / N)


def finite_n_partition(field: ExternalField, N: int) -> float:
    """log(Z_N(t) / Z_N(0)); the N! and other constants cancel in the ratio."""
    if not 1 <= N <= 12:
        raise OracleError("N must be in 1..12")
    if field.is_gaussian:
        return 0.0
    gauss = field.scaled(0.0)
    _, _, lh = stieltjes(field, N, N)
    _, _, lh0 = stieltjes(gauss, N, N)
    return float(np.sum(lh) - np.sum(lh0))


def moment_extrapolation(field: ExternalField, j: int, N_list) -> np.ndarray:
    """Least-squares (a0, a1, a2, a3) in m_j(N) = a0 + a1/N + a2/N^2 + a3/N^3."""
    N_list = np.asarray(list(N_list), dtype=float)
    if len(N_list) < 4:
        raise OracleError("need at least 4 values of N")
    m = np.array([finite_n_moment(field, int(N), j) for N in N_list])
    A = np.vstack([N_list ** -k for k in range(4)]).T
    if np.linalg.cond(A) > 1e12:
        raise OracleError("ill-conditioned moment fit")
    coef, *_ = np.linalg.lstsq(A, m, rcond=None)
    return coef


def tail_mass(field: ExternalField, N: int, delta: float = 0.5, nodes: int = 400) -> float:
    """Mass of rho_N outside [alpha - delta, beta + delta]."""
    alpha, beta = _support_guess(field)
    total = 0.0
    for lo, hi in ((alpha - delta - 8, alpha - delta), (beta + delta, beta + delta + 8)):
        x, w = _legendre(nodes)
        x = 0.5 * (hi - lo) * x + 0.5 * (hi + lo)
        w = 0.5 * (hi - lo) * w
        if field.is_gaussian:
            rho = hermite_one_point(N, x)
        else:
            a, b, lh = stieltjes(field, N, N)
            rho = _kernel_diag(field, N, a, b, lh[0], x)
        total += float(np.sum(w * rho))
    return total


def bulk_remainder(eq: EquilibriumMeasure, N: int, x) -> np.ndarray:
    """rho_N - psi - (1/(4 pi N)) (1/(x-beta) - 1/(x-alpha)) cos(2 pi N int_x^beta psi)."""
    x = np.asarray(x, dtype=float)
    field = eq.field
    if field.is_gaussian:
        rho = hermite_one_point(N, x)
    else:
        a, b, lh = stieltjes(field, N, N)
        rho = _kernel_diag(field, N, a, b, lh[0], x)
    upper = np.array([integrate.quad(lambda s: float(density_psi(eq, s)), xi, eq.beta, epsabs=1e-13)[0] for xi in x])
    corr = (1.0 / (4 * np.pi * N)) * (1 / (x - eq.beta) - 1 / (x - eq.alpha)) * np.cos(2 * np.pi * N * upper)
    return rho - density_psi(eq, x) - corr


# ---------------------------------------------------------------------------
# Ward identity


@dataclass
class WardCheckReport:
    N: int
    z: np.ndarray
    lhs: np.ndarray
    rhs: np.ndarray
    residuals: np.ndarray = dc_field(default=None)

    def __post_init__(self):
        if self.residuals is None:
            self.residuals = np.abs(self.lhs - self.rhs) / np.abs(self.lhs)

    @property
    def max_residual(self) -> float:
        return float(np.max(self.residuals))


def _cquad(f, lo, hi):
    re = integrate.quad(lambda s: f(s).real, lo, hi, epsabs=0, epsrel=1e-13, limit=400)[0]
    im = integrate.quad(lambda s: f(s).imag, lo, hi, epsabs=0, epsrel=1e-13, limit=400)[0]
    return re + 1j * im


def _ward_n1(field: ExternalField, z: complex) -> tuple[complex, complex]:
    w = lambda s: np.exp(-field.potential(s))
    lo, hi = -np.inf, np.inf
    Z = integrate.quad(w, lo, hi, epsabs=0, epsrel=1e-13)[0]
    lhs = _cquad(lambda s: w(s) / (z - s) ** 2, lo, hi) / Z
    rhs = _cquad(lambda s: w(s) * field.v_prime_values(s) / (z - s), lo, hi) / Z
    return lhs, rhs


def _ward_n2(field: ExternalField, zs: np.ndarray, nodes: int = 48):
    """Expectations over 2x2 Hermitian M = [[a, b+ic], [b-ic, d]] by tensor Gauss-Hermite.

    The Gaussian part exp(-N Tr M^2 / 2) is absorbed into the Hermite weight;
    the remainder exp(-N Tr (V(M) - M^2/2)) is integrated as a function.
    """
    N = 2
    y, w = roots_hermite(nodes)
    # Tr M^2 = a^2 + d^2 + 2 b^2 + 2 c^2
    s_diag = math.sqrt(2.0 / N)
    s_off = math.sqrt(1.0 / N)
    A = np.meshgrid(y * s_diag, y * s_diag, y * s_off, y * s_off, indexing="ij")
    W = np.einsum("i,j,k,l->ijkl", w, w, w, w).ravel()
    a, d, b, c = (v.ravel() for v in A)
    mid = 0.5 * (a + d)
    rad = np.sqrt((0.5 * (a - d)) ** 2 + b * b + c * c)
    lam = np.stack([mid - rad, mid + rad])
    extra = field.potential(lam) - 0.5 * lam * lam
    weight = W * np.exp(-N * extra.sum(axis=0))
    Z = weight.sum()
    vp = field.v_prime_values(lam)
    lhs, rhs = [], []
    for z in zs:
        g = (1.0 / (z - lam)).sum(axis=0)
        tr = (vp / (z - lam)).sum(axis=0)
        lhs.append(np.sum(weight * g * g) / Z)
        rhs.append(N * np.sum(weight * tr) / Z)
    return np.array(lhs), np.array(rhs)


def ward_identity_check(field: ExternalField, N: int, z_samples, nodes: int = 48) -> WardCheckReport:
    """E(g(z)^2) = N E(Tr (z - M)^-1 V'(M)) for the weight exp(-N Tr V(M))."""
    zs = np.atleast_1d(np.asarray(z_samples, dtype=complex))
    if np.any(np.abs(zs.imag) < 1e-3):
        raise OracleError("z samples must be off the real axis (the integrand is singular there)")
    if N == 1:
        pairs = [_ward_n1(field, complex(z)) for z in zs]
        lhs = np.array([p[0] for p in pairs])
        rhs = np.array([p[1] for p in pairs])
    elif N == 2:
        lhs, rhs = _ward_n2(field, zs, nodes)
    else:
        raise OracleError("N must be 1 or 2")
    return WardCheckReport(N, zs, lhs, rhs)


# ---------------------------------------------------------------------------
# contour residual of the loop equations


@dataclass(frozen=True)
class ContourSpec:
    center: float
    semi_real: float
    semi_imag: float
    delta: float = 0.5
    nodes: int = 512

    def points(self) -> tuple[np.ndarray, np.ndarray]:
        th = 2 * np.pi * np.arange(self.nodes) / self.nodes
        x = self.center + self.semi_real * np.cos(th) + 1j * self.semi_imag * np.sin(th)
        dx = (-self.semi_real * np.sin(th) + 1j * self.semi_imag * np.cos(th)) * (2 * np.pi / self.nodes)
        return x, dx

    def encloses(self, z: complex) -> bool:
        u = (z.real - self.center) / self.semi_real
        v = z.imag / self.semi_imag
        return u * u + v * v <= 1.0

    def validate(self, eq: EquilibriumMeasure):
        hw = 0.5 * (eq.beta - eq.alpha)
        c = 0.5 * (eq.alpha + eq.beta)
        if self.semi_real < hw + self.delta - 1e-12 or abs(self.center - c) > self.semi_real - hw - self.delta + 1e-12:
            raise OracleError("contour does not enclose [alpha - delta, beta + delta]")
        if self.semi_imag <= 0:
            raise OracleError("contour intersects the cut")


def default_contour(eq: EquilibriumMeasure, delta: float = 0.5, nodes: int = 512) -> ContourSpec:
    """Circle around the cut; it also encloses the roots of h.

    Keeping the roots of h inside matters numerically: the truncated vertex
    operator makes jet components grow like |z_i / x|^m inside that radius.
    """
    c = 0.5 * (eq.alpha + eq.beta)
    r = 0.5 * (eq.beta - eq.alpha) + 1.2 * delta
    roots = eq.h_roots
    if len(roots):
        r = max(r, 1.1 * float(np.max(np.abs(roots - c))))
    return ContourSpec(c, r, r, delta, nodes)


def contour_residual(hier, g: int, contour: ContourSpec | None = None, z_samples=(3.0, 4j, -5.0)) -> float:
    """max_z |(1/2 pi i) oint M P_g / (z - x) dx - U_g(z)| / |U_g(z)|."""
    eq = hier.eq
    contour = default_contour(eq) if contour is None else contour
    contour.validate(eq)
    zs = np.atleast_1d(np.asarray(z_samples, dtype=complex))
    for z in zs:
        if contour.encloses(complex(z)):
            raise OracleError(f"z sample {z} lies inside the contour")
    if g == 0:
        raise OracleError("level 0 has no loop equation of this form")
    x, dx = contour.points()
    pw = hier.pointwise(x)
    integrand = pw["M"][:, 0] * pw["P"][g][:, 0]
    lhs = np.array([np.sum(integrand * dx / (z - x)) / (2j * np.pi) for z in zs])
    rhs = hier.pointwise(zs)["U"][g][:, 0]
    scale = np.abs(rhs)
    diff = np.abs(lhs - rhs)
    if np.all(scale == 0):
        return float(np.max(diff))
    return float(np.max(diff / np.where(scale > 0, scale, 1.0)))
