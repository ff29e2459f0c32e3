"""Rational functions of z adjoined with a two-branch-point square root.

Elements are ``(A + B*R0) / D`` where ``A`` and ``B`` are polynomials in ``z``
with jet coefficients, ``R0(z) = sqrt((z - a0)(z - b0))`` uses the order-0
branch points, and ``D`` is a plain complex polynomial kept in factored form
(root -> multiplicity).  The jet-valued root ``R`` with branch points
``alpha(t), beta(t)`` belongs to the field: ``R = R0 * sqrt(S / S0)`` and the
correction is a finite sum because ``S - S0`` is nilpotent.

Keeping denominators numeric means coupling derivatives act on numerators
only, and least common multiples of denominators are free.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .jets import SCALAR_SPACE, Jet, JetError, JetSpace

TRIM_TOL = 1e-13
NEAR_TOL = 1e-8
SNAP_TOL = 1e-7


class AlgebraError(ValueError):
    pass


# ---------------------------------------------------------------------------
# polynomials in z with jet coefficients


class PolyZ:
    """Polynomial in ``z``; ``coeffs[k]`` is the jet coefficient of ``z**k``."""

    __slots__ = ("space", "coeffs")

    def __init__(self, space: JetSpace, coeffs):
        c = np.array(coeffs, dtype=complex)
        if c.ndim == 1:
            c = c.reshape(-1, space.size)
        c = _trim(c)
        c.flags.writeable = False
        self.space = space
        self.coeffs = c

    @classmethod
    def numeric(cls, space: JetSpace, values) -> "PolyZ":
        values = np.atleast_1d(np.asarray(values, dtype=complex))
        c = np.zeros((len(values), space.size), dtype=complex)
        c[:, 0] = values
        return cls(space, c)

    @classmethod
    def from_jets(cls, jets: list[Jet]) -> "PolyZ":
        space = jets[0].space
        return cls(space, np.array([j.coeffs for j in jets]).reshape(len(jets), space.size))

    @classmethod
    def zero(cls, space: JetSpace) -> "PolyZ":
        return cls(space, np.zeros((0, space.size)))

    @property
    def degree(self) -> int:
        return len(self.coeffs) - 1

    def is_zero(self) -> bool:
        return len(self.coeffs) == 0

    def __getitem__(self, k: int) -> Jet:
        if 0 <= k < len(self.coeffs):
            return Jet(self.space, self.coeffs[k])
        return Jet.constant(self.space, 0.0)

    def order0(self) -> np.ndarray:
        return np.array(self.coeffs[:, 0]) if len(self.coeffs) else np.zeros(0, dtype=complex)

    def _other(self, other) -> np.ndarray:
        if isinstance(other, PolyZ):
            if other.space is not self.space:
                raise AlgebraError("polynomials live in different jet spaces")
            return other.coeffs
        if isinstance(other, Jet):
            return other.coeffs.reshape(1, -1)
        c = np.zeros((1, self.space.size), dtype=complex)
        c[0, 0] = other
        return c

    def __add__(self, other):
        return PolyZ(self.space, _padd(self.coeffs, self._other(other)))

    __radd__ = __add__

    def __sub__(self, other):
        return PolyZ(self.space, _padd(self.coeffs, -self._other(other)))

    def __rsub__(self, other):
        return PolyZ(self.space, _padd(-self.coeffs, self._other(other)))

    def __neg__(self):
        return PolyZ(self.space, -self.coeffs)

    def __mul__(self, other):
        if isinstance(other, (int, float, complex, np.number)):
            return PolyZ(self.space, self.coeffs * other)
        if isinstance(other, Jet):
            return PolyZ(self.space, self.space.mul_arrays(self.coeffs, other.coeffs[None, :]))
        return PolyZ(self.space, self.space.poly_mul(self.coeffs, self._other(other)))

    __rmul__ = __mul__

    def shift(self, k: int) -> "PolyZ":
        """Multiply by z**k (k >= 0)."""
        if self.is_zero():
            return self
        pad = np.zeros((k, self.space.size), dtype=complex)
        return PolyZ(self.space, np.vstack([pad, self.coeffs]))

    def derivative(self) -> "PolyZ":
        if len(self.coeffs) <= 1:
            return PolyZ.zero(self.space)
        k = np.arange(1, len(self.coeffs))[:, None]
        return PolyZ(self.space, self.coeffs[1:] * k)

    def __call__(self, z0) -> Jet:
        return Jet(self.space, self.eval_array(z0))

    def eval_array(self, z0) -> np.ndarray:
        """Evaluate at a complex number or Jet; returns the jet coefficient array."""
        out = np.zeros(self.space.size, dtype=complex)
        if isinstance(z0, Jet):
            for row in self.coeffs[::-1]:
                out = self.space.mul_arrays(out, z0.coeffs) + row
            return out
        for row in self.coeffs[::-1]:
            out = out * z0 + row
        return out

    def eval_many(self, zs: np.ndarray) -> np.ndarray:
        """Evaluate at an array of complex points; returns shape (len(zs), size)."""
        zs = np.asarray(zs, dtype=complex)
        out = np.zeros((len(zs), self.space.size), dtype=complex)
        for row in self.coeffs[::-1]:
            out = out * zs[:, None] + row[None, :]
        return out

    def map_jets(self, fn) -> "PolyZ":
        rows = [fn(Jet(self.space, r)) for r in self.coeffs]
        if not rows:
            return self
        return PolyZ(rows[0].space, np.array([r.coeffs for r in rows]))

    def partial(self, var: int, k: int = 1) -> "PolyZ":
        target, src, dst, fac = self.space.partial_map(var, k)
        c = np.zeros((len(self.coeffs), target.size), dtype=complex)
        c[:, dst] = self.coeffs[:, src] * fac
        return PolyZ(target, c)

    def truncate(self, space: JetSpace) -> "PolyZ":
        if space is self.space:
            return self
        return PolyZ(space, self.coeffs[:, space.projection_from(self.space)])

    def grade_part(self, k: int) -> "PolyZ":
        return PolyZ(self.space, self.coeffs * self.space.grade_mask(k)[None, :])

    def __repr__(self):
        return f"PolyZ(deg={self.degree}, order0={np.round(self.order0(), 6).tolist()})"


def _trim(c: np.ndarray) -> np.ndarray:
    if len(c) == 0:
        return c
    # Only exact zeros are dropped.  Coefficients of products such as
    # (z - 2)^30 span many decades, so any relative cut loses real terms.
    keep = len(c)
    while keep > 0 and not c[keep - 1].any():
        keep -= 1
    return c[:keep].copy()


def _padd(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    n = max(len(a), len(b))
    width = a.shape[1] if len(a) else b.shape[1]
    out = np.zeros((n, width), dtype=complex)
    out[: len(a)] += a
    out[: len(b)] += b
    return out


def _numeric_from_roots(roots: dict) -> np.ndarray:
    """Monic product prod (z - r)^e as low-to-high coefficients."""
    p = np.array([1.0 + 0j])
    for r, e in roots.items():
        for _ in range(e):
            p = np.convolve(p, np.array([-r, 1.0]))
    return p


# ---------------------------------------------------------------------------
# Laurent series at infinity


@dataclass(frozen=True)
class LaurentSeries:
    """Coefficients of z**top, z**(top-1), ..., z**(-depth) with jet entries."""

    space: JetSpace
    top_power: int
    coeffs: np.ndarray = field(repr=False)

    @property
    def depth(self) -> int:
        return -(self.top_power - len(self.coeffs) + 1)

    @property
    def low_power(self) -> int:
        return self.top_power - len(self.coeffs) + 1

    def coeff(self, power: int) -> Jet:
        i = self.top_power - power
        if power > self.top_power:
            return Jet.constant(self.space, 0.0)
        if i >= len(self.coeffs):
            raise AlgebraError(f"power {power} below series depth {self.depth}")
        return Jet(self.space, self.coeffs[i])

    def values(self, power: int) -> complex:
        return self.coeff(power).value

    def powers(self) -> np.ndarray:
        return np.arange(self.top_power, self.low_power - 1, -1)

    def truncate_depth(self, depth: int) -> "LaurentSeries":
        n = self.top_power + depth + 1
        if n <= 0:
            return LaurentSeries(self.space, -depth, np.zeros((1, self.space.size), dtype=complex))
        c = self.coeffs[:n]
        if len(c) < n:
            raise AlgebraError("series too shallow for requested depth")
        return LaurentSeries(self.space, self.top_power, c)

    def __add__(self, other: "LaurentSeries") -> "LaurentSeries":
        top = max(self.top_power, other.top_power)
        low = max(self.low_power, other.low_power)
        out = np.zeros((top - low + 1, self.space.size), dtype=complex)
        for s in (self, other):
            for p in range(min(top, s.top_power), low - 1, -1):
                out[top - p] += s.coeffs[s.top_power - p]
        return LaurentSeries(self.space, top, out)

    def __neg__(self):
        return LaurentSeries(self.space, self.top_power, -self.coeffs)

    def __sub__(self, other):
        return self + (-other)

    def __mul__(self, other: "LaurentSeries") -> "LaurentSeries":
        top = self.top_power + other.top_power
        low = max(self.low_power + other.top_power, other.low_power + self.top_power)
        space = self.space if self.space.size >= other.space.size else other.space
        a, b = self.coeffs, other.coeffs
        if a.shape[1] != space.size:
            a = _embed_scalar(a, space)
        if b.shape[1] != space.size:
            b = _embed_scalar(b, space)
        prod = space.poly_mul(a, b)
        return LaurentSeries(space, top, prod[: top - low + 1])

    def project_parts(self) -> tuple[PolyZ, "LaurentSeries"]:
        return project_parts(self)


def _embed_scalar(c: np.ndarray, space: JetSpace) -> np.ndarray:
    if c.shape[1] != 1:
        raise AlgebraError("cannot combine series from different jet spaces")
    out = np.zeros((len(c), space.size), dtype=complex)
    out[:, 0] = c[:, 0]
    return out


def project_parts(s: LaurentSeries) -> tuple[PolyZ, LaurentSeries]:
    """Split into the polynomial part (powers >= 0) and the principal part (<= -1)."""
    if s.top_power >= 0:
        n_plus = s.top_power + 1
        plus_rows = s.coeffs[:n_plus][::-1]
        minus = s.coeffs[n_plus:]
        if len(minus) == 0:
            minus = np.zeros((1, s.space.size), dtype=complex)
            minus_series = LaurentSeries(s.space, -1, minus) if s.low_power <= -1 else LaurentSeries(
                s.space, -1, np.zeros((0, s.space.size), dtype=complex)
            )
        else:
            minus_series = LaurentSeries(s.space, -1, minus)
        return PolyZ(s.space, plus_rows), minus_series
    return PolyZ.zero(s.space), s


def _series_inv_linear_power(r: complex, e: int, low: int) -> np.ndarray:
    """Coefficients of (z - r)^(-e) from z^(-e) down to z^low."""
    n = -e - low + 1
    if n <= 0:
        return np.zeros(0, dtype=complex)
    k = np.arange(n)
    coeff = np.array([math.comb(int(kk) + e - 1, int(kk)) for kk in k], dtype=float)
    return coeff * (r + 0j) ** k


def _series_sqrt_branch(a0: float, b0: float, low: int) -> np.ndarray:
    """Coefficients of R0(z) = z sqrt(1-a0/z) sqrt(1-b0/z) from z^1 down to z^low."""
    n = 1 - low + 1
    if n <= 0:
        return np.zeros(0, dtype=complex)
    k = np.arange(n)
    ca = np.array([_binom(0.5, int(i)) for i in k]) * (-a0 + 0j) ** k
    cb = np.array([_binom(0.5, int(i)) for i in k]) * (-b0 + 0j) ** k
    return np.convolve(ca, cb)[:n]


def _binom(x: float, k: int) -> float:
    return float(math.prod(x - i for i in range(k)) / math.factorial(k))


# ---------------------------------------------------------------------------
# branch data and field elements


@dataclass(frozen=True)
class BranchRoot:
    """Branch points of R(z)^2 = (z - alpha)(z - beta), analytic off [alpha, beta]."""

    alpha: Jet
    beta: Jet
    extra_roots: tuple = ()

    def __post_init__(self):
        a0, b0 = self.alpha.value, self.beta.value
        if abs(a0.imag) > 1e-12 or abs(b0.imag) > 1e-12:
            raise AlgebraError("branch points must be real at order 0")
        if not a0.real < b0.real:
            raise AlgebraError("branch points must satisfy alpha < beta")

    @property
    def space(self) -> JetSpace:
        return self.alpha.space

    @property
    def alpha0(self) -> float:
        return self.alpha.value.real

    @property
    def beta0(self) -> float:
        return self.beta.value.real

    @property
    def known_roots(self) -> tuple:
        return (complex(self.alpha0), complex(self.beta0), 0j) + tuple(complex(r) for r in self.extra_roots)

    def with_roots(self, roots) -> "BranchRoot":
        return BranchRoot(self.alpha, self.beta, tuple(self.extra_roots) + tuple(roots))

    def truncate(self, space: JetSpace) -> "BranchRoot":
        return BranchRoot(self.alpha.truncate(space), self.beta.truncate(space), self.extra_roots)

    def same_as(self, other: "BranchRoot") -> bool:
        return self is other or (self.alpha0 == other.alpha0 and self.beta0 == other.beta0)

    def S0(self) -> np.ndarray:
        a, b = self.alpha0, self.beta0
        return np.array([a * b, -(a + b), 1.0], dtype=complex)

    def S(self) -> PolyZ:
        one = Jet.constant(self.space, 1.0)
        return PolyZ.from_jets([self.alpha * self.beta, -(self.alpha + self.beta), one])

    def R0(self, z):
        z = np.asarray(z, dtype=complex)
        return np.sqrt(z - self.alpha0) * np.sqrt(z - self.beta0)

    def near_cut(self, z0: complex, tol: float = NEAR_TOL) -> bool:
        z0 = complex(z0)
        x = min(max(z0.real, self.alpha0), self.beta0)
        return abs(z0 - x) < tol

    def sqrt_fn(self, space: JetSpace | None = None) -> "AlgebraicFn":
        """The jet-valued R(z) as a field element."""
        br = self if space is None or space is self.space else self.truncate(space)
        sp_ = br.space
        K = sp_.max_grade
        dS = br.S() - PolyZ.numeric(sp_, br.S0())
        S0 = PolyZ.numeric(sp_, br.S0())
        B = PolyZ.zero(sp_)
        dS_pow = PolyZ.numeric(sp_, [1.0])
        for k in range(K + 1):
            term = dS_pow
            for _ in range(K - k):
                term = term * S0
            B = B + term * _binom(0.5, k)
            dS_pow = dS_pow * dS
        denom = {complex(br.alpha0): K, complex(br.beta0): K} if K else {}
        return AlgebraicFn(PolyZ.zero(sp_), B, denom, br)


@dataclass(frozen=True)
class AlgebraicFn:
    """(A + B R0) / D, with D = prod (z - r)^e given by ``denom``."""

    a_part: PolyZ
    b_part: PolyZ
    denom: dict
    branch: BranchRoot

    def __post_init__(self):
        if self.a_part.space is not self.b_part.space:
            raise AlgebraError("numerator parts must share a jet space")
        object.__setattr__(self, "denom", {complex(r): int(e) for r, e in self.denom.items() if e})

    # construction helpers
    @classmethod
    def from_poly(cls, p: PolyZ, branch: BranchRoot) -> "AlgebraicFn":
        return cls(p, PolyZ.zero(p.space), {}, branch)

    @classmethod
    def constant(cls, value, space: JetSpace, branch: BranchRoot) -> "AlgebraicFn":
        return cls.from_poly(PolyZ.numeric(space, [value]), branch)

    @classmethod
    def r0(cls, space: JetSpace, branch: BranchRoot) -> "AlgebraicFn":
        return cls(PolyZ.zero(space), PolyZ.numeric(space, [1.0]), {}, branch)

    @property
    def space(self) -> JetSpace:
        return self.a_part.space

    @property
    def denom_degree(self) -> int:
        return sum(self.denom.values())

    def denom_poly(self) -> np.ndarray:
        return _numeric_from_roots(self.denom)

    def is_zero(self) -> bool:
        return self.a_part.is_zero() and self.b_part.is_zero()

    # -- arithmetic -----------------------------------------------------------

    def _check(self, other: "AlgebraicFn"):
        if not self.branch.same_as(other.branch):
            raise AlgebraError("field elements use different branch data")
        if other.space is not self.space:
            raise AlgebraError("field elements live in different jet spaces")

    def _coerce(self, other) -> "AlgebraicFn":
        if isinstance(other, AlgebraicFn):
            self._check(other)
            return other
        if isinstance(other, PolyZ):
            return AlgebraicFn.from_poly(other, self.branch)
        if isinstance(other, Jet):
            return AlgebraicFn.from_poly(PolyZ.from_jets([other]), self.branch)
        return AlgebraicFn.constant(other, self.space, self.branch)

    def _rescale(self, target: dict) -> tuple[PolyZ, PolyZ]:
        extra = {r: target[r] - self.denom.get(r, 0) for r in target}
        if not any(extra.values()):
            return self.a_part, self.b_part
        mult = PolyZ.numeric(self.space, _numeric_from_roots(extra))
        return self.a_part * mult, self.b_part * mult

    def __add__(self, other):
        other = self._coerce(other)
        if other.is_zero():
            return self
        if self.is_zero():
            return other
        target = dict(self.denom)
        for r, e in other.denom.items():
            target[r] = max(target.get(r, 0), e)
        a1, b1 = self._rescale(target)
        a2, b2 = other._rescale(target)
        return AlgebraicFn(a1 + a2, b1 + b2, target, self.branch)

    __radd__ = __add__

    def __neg__(self):
        return AlgebraicFn(-self.a_part, -self.b_part, self.denom, self.branch)

    def __sub__(self, other):
        return self + (-self._coerce(other))

    def __rsub__(self, other):
        return self._coerce(other) - self

    def __mul__(self, other):
        if isinstance(other, (int, float, complex, np.number)):
            return AlgebraicFn(self.a_part * other, self.b_part * other, self.denom, self.branch)
        if isinstance(other, Jet):
            return AlgebraicFn(self.a_part * other, self.b_part * other, self.denom, self.branch)
        other = self._coerce(other)
        S0 = PolyZ.numeric(self.space, self.branch.S0())
        A1, B1, A2, B2 = self.a_part, self.b_part, other.a_part, other.b_part
        A = A1 * A2 + (B1 * B2) * S0
        B = A1 * B2 + A2 * B1
        denom = dict(self.denom)
        for r, e in other.denom.items():
            denom[r] = denom.get(r, 0) + e
        return AlgebraicFn(A, B, denom, self.branch)

    __rmul__ = __mul__

    def mul_poly(self, p: PolyZ) -> "AlgebraicFn":
        return AlgebraicFn(self.a_part * p, self.b_part * p, self.denom, self.branch)

    def div_roots(self, roots: dict, lead: complex = 1.0) -> "AlgebraicFn":
        """Divide by lead * prod (z - r)^e for roots already known exactly."""
        denom = dict(self.denom)
        for r, e in roots.items():
            denom[complex(r)] = denom.get(complex(r), 0) + e
        return AlgebraicFn(self.a_part * (1.0 / lead), self.b_part * (1.0 / lead), denom, self.branch)

    def reciprocal(self) -> "AlgebraicFn":
        A, B = self.a_part, self.b_part
        S0 = PolyZ.numeric(self.space, self.branch.S0())
        N = A * A - (B * B) * S0
        N0 = N.order0()
        if len(N0) == 0 or not np.any(N0):
            raise AlgebraError("division by a field element with vanishing order-0 part")
        Nprime = N - PolyZ.numeric(self.space, N0)
        N0p = PolyZ.numeric(self.space, N0)
        powers = [PolyZ.numeric(self.space, [1.0])]
        while len(powers) <= self.space.max_grade:
            nxt = powers[-1] * (-Nprime)
            if nxt.is_zero():
                break
            powers.append(nxt)
        K = len(powers) - 1
        series = PolyZ.zero(self.space)
        for k, pw in enumerate(powers):
            term = pw
            for _ in range(K - k):
                term = term * N0p
            series = series + term
        lead, roots = factor_numeric(N0, self.branch.known_roots + tuple(self.denom))
        roots = {r: e * (K + 1) for r, e in roots.items()}
        dpoly = PolyZ.numeric(self.space, self.denom_poly())
        num_a = (A * dpoly) * series
        num_b = -(B * dpoly) * series
        return AlgebraicFn(num_a, num_b, {}, self.branch).div_roots(roots, lead ** (K + 1))

    def __truediv__(self, other):
        if isinstance(other, (int, float, complex, np.number)):
            return self * (1.0 / other)
        if isinstance(other, Jet):
            return self * other.reciprocal()
        return self * self._coerce(other).reciprocal()

    def __rtruediv__(self, other):
        return self._coerce(other) * self.reciprocal()

    # -- jet maps ---------------------------------------------------------------

    def partial(self, var: int, k: int = 1) -> "AlgebraicFn":
        A = self.a_part.partial(var, k)
        B = self.b_part.partial(var, k)
        return AlgebraicFn(A, B, self.denom, self.branch.truncate(A.space))

    def truncate(self, space: JetSpace) -> "AlgebraicFn":
        if space is self.space:
            return self
        return AlgebraicFn(
            self.a_part.truncate(space), self.b_part.truncate(space), self.denom, self.branch.truncate(space)
        )

    def grade_part(self, k: int) -> "AlgebraicFn":
        return AlgebraicFn(self.a_part.grade_part(k), self.b_part.grade_part(k), self.denom, self.branch)

    # -- evaluation -------------------------------------------------------------

    def _check_point(self, z0: complex):
        if self.branch.near_cut(z0):
            raise AlgebraError(f"evaluation point {z0} lies on the cut")
        for r in self.denom:
            if abs(z0 - r) < NEAR_TOL:
                raise AlgebraError(f"evaluation point {z0} hits a denominator root {r}")

    def __call__(self, z0) -> Jet:
        return alg_eval(self, z0)

    def eval_many(self, zs) -> np.ndarray:
        """Jet coefficient arrays at many complex points, shape (len(zs), size)."""
        zs = np.atleast_1d(np.asarray(zs, dtype=complex))
        for z0 in zs:
            self._check_point(complex(z0))
        A = self.a_part.eval_many(zs)
        B = self.b_part.eval_many(zs)
        R0 = self.branch.R0(zs)
        D = np.polynomial.polynomial.polyval(zs, self.denom_poly())
        return (A + B * R0[:, None]) / D[:, None]

    def values(self, zs) -> np.ndarray:
        """Order-0 values at many points."""
        return self.eval_many(zs)[:, 0]

    def eval_regular(self, z0: complex, radius: float, nodes: int = 64) -> Jet:
        """Value at a removable singularity via the mean over a small circle."""
        theta = 2 * np.pi * (np.arange(nodes) + 0.5) / nodes
        pts = z0 + radius * np.exp(1j * theta)
        return Jet(self.space, self.eval_many(pts).mean(axis=0))

    def laurent(self, depth: int) -> LaurentSeries:
        return laurent_expand(self, depth)

    def __repr__(self):
        return (
            f"AlgebraicFn(degA={self.a_part.degree}, degB={self.b_part.degree}, "
            f"denom_deg={self.denom_degree}, space={self.space.groups})"
        )


# ---------------------------------------------------------------------------
# operations


def field_arith(f: AlgebraicFn, g: AlgebraicFn, op: str) -> AlgebraicFn:
    if op == "add":
        return f + g
    if op == "sub":
        return f - g
    if op == "mul":
        return f * g
    if op == "div":
        return f / g
    raise AlgebraError(f"unknown op {op!r}")


def factor_numeric(p: np.ndarray, known=()) -> tuple[complex, dict]:
    """Factor a numeric polynomial (low-to-high) as lead * prod (z - r)^e.

    Known roots are deflated first so that repeated factors keep exact keys;
    remaining roots are found from the companion matrix and snapped onto known
    ones when they agree to ``SNAP_TOL``.
    """
    p = np.trim_zeros(np.asarray(p, dtype=complex), "b")
    if len(p) == 0:
        raise AlgebraError("cannot factor the zero polynomial")
    roots: dict = {}
    known = list(dict.fromkeys(complex(r) for r in known))
    for r in known:
        while len(p) > 1:
            q, rem = _synthetic_div(p, r)
            scale = np.sum(np.abs(p) * (abs(r) ** np.arange(len(p))))
            if abs(rem) <= 1e-10 * max(scale, 1e-300):
                roots[r] = roots.get(r, 0) + 1
                p = q
            else:
                break
    lead = complex(p[-1])
    if len(p) > 1:
        for r in np.roots(p[::-1]):
            r = complex(r)
            match = next((k for k in list(roots) + known if abs(k - r) <= SNAP_TOL * max(1.0, abs(r))), None)
            key = match if match is not None else r
            roots[key] = roots.get(key, 0) + 1
    return lead, roots


def _synthetic_div(p: np.ndarray, r: complex) -> tuple[np.ndarray, complex]:
    n = len(p) - 1
    q = np.zeros(n, dtype=complex)
    acc = p[-1]
    for k in range(n - 1, -1, -1):
        q[k] = acc
        acc = p[k] + acc * r
    return q, acc


def laurent_expand(f: AlgebraicFn, depth: int) -> LaurentSeries:
    """Expansion of f at z = infinity down to z**(-depth)."""
    if depth < 1:
        raise AlgebraError("Laurent depth must be >= 1")
    space = f.space
    degA = f.a_part.degree
    degB = f.b_part.degree if not f.b_part.is_zero() else None
    dD = f.denom_degree
    top_num = max(degA, degB + 1 if degB is not None else -1)
    top = top_num - dD
    if top_num < 0 or top < -depth:
        return LaurentSeries(space, -1, np.zeros((depth, space.size), dtype=complex))
    low_num = -depth + dD
    low_inv = -depth - top_num
    inv = np.array([1.0 + 0j])
    for r, e in f.denom.items():
        factor = _series_inv_linear_power(r, e, low_inv + dD - e)
        inv = np.convolve(inv, factor) if len(factor) else np.zeros(0, dtype=complex)
    inv = inv[: -dD - low_inv + 1]

    n_num = top_num - low_num + 1
    num = np.zeros((n_num, space.size), dtype=complex)
    for k in range(degA, -1, -1):
        i = top_num - k
        if i < n_num:
            num[i] += f.a_part.coeffs[k]
    if degB is not None:
        r0 = _series_sqrt_branch(f.branch.alpha0, f.branch.beta0, low_num - degB)
        b_rows = f.b_part.coeffs[::-1]
        off = top_num - (degB + 1)
        for i, c in enumerate(r0):
            lo = off + i
            if lo >= n_num:
                break
            m = min(len(b_rows), n_num - lo)
            num[lo : lo + m] += c * b_rows[:m]

    n_out = top + depth + 1
    out = np.zeros((n_out, space.size), dtype=complex)
    for i, c in enumerate(inv[:n_out]):
        if c == 0:
            continue
        m = min(n_num, n_out - i)
        out[i : i + m] += c * num[:m]
    return LaurentSeries(space, top, out)


def laurent_R(branch: BranchRoot, depth: int, power: int = 1) -> LaurentSeries:
    """Jet-valued expansion of R(z)**power (power = +1 or -1) via the binomial series."""
    if power not in (1, -1):
        raise AlgebraError("power must be +1 or -1")
    space = branch.space
    n = power + depth + 1
    x = 0.5 * power
    one = np.zeros(space.size, dtype=complex)
    one[0] = 1.0

    def series(c: Jet) -> np.ndarray:
        rows = np.zeros((n, space.size), dtype=complex)
        pw = one.copy()
        for k in range(n):
            rows[k] = _binom(x, k) * pw
            pw = space.mul_arrays(pw, -c.coeffs)
        return rows

    sa, sb = series(branch.alpha), series(branch.beta)
    prod = space.poly_mul(sa, sb)[:n]
    return LaurentSeries(space, power, prod)


def alg_eval(f: AlgebraicFn, z0) -> Jet:
    """Value of f at z0 (complex number or jet), principal branch with R ~ z."""
    if not isinstance(z0, Jet):
        f._check_point(complex(z0))
        return Jet(f.space, f.eval_many([complex(z0)])[0])
    space = f.space
    z_val = z0.value
    f._check_point(z_val)
    A = Jet(space, f.a_part.eval_array(z0))
    B = Jet(space, f.b_part.eval_array(z0))
    r0_val = complex(f.branch.R0(z_val))
    s = (z0 - f.branch.alpha0) * (z0 - f.branch.beta0)
    R0 = (s / (r0_val * r0_val)).sqrt() * r0_val
    D = Jet.constant(space, 1.0)
    for r, e in f.denom.items():
        D = D * (z0 - r) ** e
    return (A + B * R0) / D


def poly_roots_lifted(p: PolyZ) -> list[Jet]:
    """Roots of the order-0 polynomial, lifted to jets by Newton iteration."""
    c0 = np.trim_zeros(p.order0(), "b")
    if len(c0) < 2:
        return []
    roots0 = np.roots(c0[::-1])
    scale = max(1.0, float(np.max(np.abs(roots0))))
    for i in range(len(roots0)):
        for j in range(i + 1, len(roots0)):
            if abs(roots0[i] - roots0[j]) < 1e-6 * scale:
                raise AlgebraError("confluent roots unsupported")
    dp = p.derivative()
    out = []
    for r in roots0:
        r = complex(r)
        for _ in range(3):
            num = np.polynomial.polynomial.polyval(r, c0)
            den = np.polynomial.polynomial.polyval(r, dp.order0())
            r -= num / den
        z = Jet.constant(p.space, r)
        for _ in range(p.space.max_grade + 1):
            z = z - p(z) / dp(z)
        out.append(z)
    return out


__all__ = [
    "AlgebraError",
    "AlgebraicFn",
    "BranchRoot",
    "JetError",
    "LaurentSeries",
    "PolyZ",
    "SCALAR_SPACE",
    "alg_eval",
    "factor_numeric",
    "field_arith",
    "laurent_R",
    "laurent_expand",
    "poly_roots_lifted",
    "project_parts",
]
