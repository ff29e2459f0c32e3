"""Truncated multivariate Taylor jets.

A :class:`Jet` is a polynomial in coupling perturbations ``x_1..x_m`` truncated
at a fixed order, stored in Taylor-coefficient convention: the coefficient of
``x^mu`` already carries the ``1/mu!`` factor, so products are plain Cauchy
products.

Variables may be split into groups, each with its own truncation order.  With a
single group this is the usual total-degree truncation; with two groups
(probe couplings and Taylor couplings) a monomial survives when its degree in
*each* group stays within that group's order.  Both truncations are ideals, so
the quotient is a ring and every operation below is exact to truncation.
"""
from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from functools import cached_property, lru_cache

import numpy as np
import scipy.sparse as sp


class JetError(ValueError):
    """Raised for invalid jet operations (non-invertible, insufficient order)."""


def _group_monomials(nvars: int, order: int) -> list[tuple[int, ...]]:
    out = []
    for deg in range(order + 1):
        for combo in itertools.combinations_with_replacement(range(nvars), deg):
            mono = [0] * nvars
            for v in combo:
                mono[v] += 1
            out.append(tuple(mono))
    return out


@dataclass(frozen=True)
class JetSpace:
    """Monomial basis and multiplication table for a truncated jet ring."""

    groups: tuple[tuple[int, int], ...]
    _cache: dict = field(default_factory=dict, compare=False, repr=False, hash=False)

    @property
    def nvars(self) -> int:
        return sum(n for n, _ in self.groups)

    @property
    def max_grade(self) -> int:
        return sum(k for n, k in self.groups if n > 0)

    @cached_property
    def monomials(self) -> np.ndarray:
        per_group = [_group_monomials(n, k) for n, k in self.groups]
        monos = [sum(parts, ()) for parts in itertools.product(*per_group)]
        monos.sort(key=lambda m: (sum(m), tuple(-e for e in m)))
        return np.array(monos, dtype=np.int64).reshape(len(monos), self.nvars)

    @cached_property
    def index(self) -> dict[tuple[int, ...], int]:
        return {tuple(int(e) for e in m): i for i, m in enumerate(self.monomials)}

    @property
    def size(self) -> int:
        return len(self.monomials)

    @cached_property
    def grade(self) -> np.ndarray:
        return self.monomials.sum(axis=1)

    def group_of(self, var: int) -> int:
        start = 0
        for g, (n, _) in enumerate(self.groups):
            if start <= var < start + n:
                return g
            start += n
        raise JetError(f"variable {var} out of range")

    def group_slice(self, g: int) -> slice:
        start = sum(n for n, _ in self.groups[:g])
        return slice(start, start + self.groups[g][0])

    @cached_property
    def mul_table(self) -> tuple[np.ndarray, np.ndarray, sp.csr_matrix]:
        idx = self.index
        I, J, K = [], [], []
        monos = [tuple(int(e) for e in m) for m in self.monomials]
        grades = self.grade
        top = self.max_grade
        # monomials are sorted by grade, so partners of `a` form a prefix
        ends = np.searchsorted(grades, np.arange(top + 1), side="right")
        for i, a in enumerate(monos):
            for j in range(ends[top - grades[i]]):
                b = monos[j]
                k = idx.get(tuple(x + y for x, y in zip(a, b)))
                if k is not None:
                    I.append(i)
                    J.append(j)
                    K.append(k)
        I = np.array(I, dtype=np.int64)
        J = np.array(J, dtype=np.int64)
        K = np.array(K, dtype=np.int64)
        scatter = sp.csr_matrix(
            (np.ones(len(K)), (np.arange(len(K)), K)), shape=(len(K), self.size)
        )
        return I, J, scatter

    # -- coefficient-array kernels (last axis = jet basis) --------------------

    def mul_arrays(self, a: np.ndarray, b: np.ndarray) -> np.ndarray:
        if self.size == 1:
            return a * b
        I, J, scatter = self.mul_table
        a, b = np.broadcast_arrays(a, b)
        shape = a.shape
        prod = (a[..., I] * b[..., J]).reshape(-1, len(I))
        return np.asarray(prod @ scatter).reshape(shape)

    def poly_mul(self, A: np.ndarray, B: np.ndarray) -> np.ndarray:
        """Product of polynomials in z whose coefficients are jets; shape (deg+1, size)."""
        na, nb = len(A), len(B)
        if na == 0 or nb == 0:
            return np.zeros((0, self.size), dtype=complex)
        out = np.zeros((na + nb - 1, self.size), dtype=complex)
        if self.size == 1:
            out[:, 0] = np.convolve(A[:, 0], B[:, 0])
            return out
        if na > nb:
            A, B, na, nb = B, A, nb, na
        a_scalar = not A[:, 1:].any()
        b_scalar = not B[:, 1:].any()
        if a_scalar or b_scalar:
            S, T = (A, B) if a_scalar else (B, A)
            for p in range(len(S)):
                if S[p, 0] != 0:
                    out[p : p + len(T)] += S[p, 0] * T
            return out
        I, J, scatter = self.mul_table
        BJ = B[:, J]
        for p in range(na):
            row = A[p]
            if not row.any():
                continue
            if not row[1:].any():
                out[p : p + nb] += row[0] * B
            else:
                out[p : p + nb] += np.asarray((row[I] * BJ) @ scatter)
        return out

    def nilpotent_series(self, eps: np.ndarray, coeffs) -> np.ndarray:
        """Evaluate sum_k coeffs[k] * eps**k for eps with vanishing order-0 part."""
        n = min(len(coeffs) - 1, self.max_grade)
        out = np.zeros_like(eps)
        out[..., 0] = coeffs[n]
        for k in range(n - 1, -1, -1):
            out = self.mul_arrays(out, eps)
            out[..., 0] += coeffs[k]
        return out

    def reciprocal_arrays(self, b: np.ndarray) -> np.ndarray:
        b0 = b[..., 0]
        if np.any(b0 == 0):
            raise JetError("non-invertible jet")
        eps = b / b0[..., None]
        eps[..., 0] = 0.0
        alt = [(-1.0) ** k for k in range(self.max_grade + 1)]
        return self.nilpotent_series(eps, alt) / b0[..., None]

    # -- maps between spaces --------------------------------------------------

    def reduced(self, var: int, k: int) -> "JetSpace":
        g = self.group_of(var)
        n, order = self.groups[g]
        if k > order:
            raise JetError("insufficient jet order")
        groups = list(self.groups)
        groups[g] = (n, order - k)
        return jet_space(tuple(groups))

    def partial_map(self, var: int, k: int) -> tuple["JetSpace", np.ndarray, np.ndarray, np.ndarray]:
        key = ("partial", var, k)
        if key not in self._cache:
            target = self.reduced(var, k)
            src, dst, fac = [], [], []
            for i, m in enumerate(self.monomials):
                if m[var] >= k:
                    mm = m.copy()
                    mm[var] -= k
                    src.append(i)
                    dst.append(target.index[tuple(int(e) for e in mm)])
                    fac.append(math.perm(int(m[var]), k))
            self._cache[key] = (
                target,
                np.array(src, dtype=np.int64),
                np.array(dst, dtype=np.int64),
                np.array(fac, dtype=float),
            )
        return self._cache[key]

    def projection_from(self, other: "JetSpace") -> np.ndarray:
        """Indices into ``other`` for each monomial of ``self`` (self must embed in other)."""
        key = ("proj", other.groups)
        if key not in self._cache:
            try:
                self._cache[key] = np.array(
                    [other.index[tuple(int(e) for e in m)] for m in self.monomials],
                    dtype=np.int64,
                )
            except KeyError as exc:
                raise JetError(f"space {self.groups} does not embed in {other.groups}") from exc
        return self._cache[key]

    def grade_mask(self, k: int) -> np.ndarray:
        return self.grade == k


@lru_cache(maxsize=None)
def jet_space(groups: tuple[tuple[int, int], ...]) -> JetSpace:
    return JetSpace(tuple((int(n), int(k)) for n, k in groups))


def total_degree_space(num_vars: int, order: int) -> JetSpace:
    return jet_space(((num_vars, order),))


SCALAR_SPACE = jet_space(((0, 0),))


class Jet:
    """Immutable truncated Taylor jet with complex coefficients."""

    __slots__ = ("space", "coeffs")
    __array_priority__ = 100

    def __init__(self, space: JetSpace, coeffs):
        c = np.array(coeffs, dtype=complex).reshape(space.size)
        c.flags.writeable = False
        object.__setattr__(self, "space", space)
        object.__setattr__(self, "coeffs", c)

    def __setattr__(self, name, value):
        raise AttributeError("Jet is immutable")

    @classmethod
    def constant(cls, space: JetSpace, value) -> "Jet":
        c = np.zeros(space.size, dtype=complex)
        c[0] = value
        return cls(space, c)

    @classmethod
    def variable(cls, space: JetSpace, var: int, value=0.0) -> "Jet":
        c = np.zeros(space.size, dtype=complex)
        c[0] = value
        mono = [0] * space.nvars
        mono[var] = 1
        c[space.index[tuple(mono)]] = 1.0
        return cls(space, c)

    @property
    def value(self) -> complex:
        return complex(self.coeffs[0])

    @property
    def order(self) -> int:
        return self.space.max_grade

    def coeff(self, mono) -> complex:
        return complex(self.coeffs[self.space.index[tuple(mono)]])

    def _lift(self, other) -> np.ndarray:
        if isinstance(other, Jet):
            if other.space is not self.space:
                raise JetError("jets live in different spaces")
            return np.array(other.coeffs)
        c = np.zeros(self.space.size, dtype=complex)
        c[0] = other
        return c

    def __add__(self, other):
        return Jet(self.space, self.coeffs + self._lift(other))

    __radd__ = __add__

    def __sub__(self, other):
        return Jet(self.space, self.coeffs - self._lift(other))

    def __rsub__(self, other):
        return Jet(self.space, self._lift(other) - self.coeffs)

    def __neg__(self):
        return Jet(self.space, -self.coeffs)

    def __mul__(self, other):
        if not isinstance(other, Jet):
            return Jet(self.space, self.coeffs * complex(other))
        return Jet(self.space, self.space.mul_arrays(self.coeffs, self._lift(other)))

    __rmul__ = __mul__

    def reciprocal(self) -> "Jet":
        return Jet(self.space, self.space.reciprocal_arrays(np.array(self.coeffs)))

    def __truediv__(self, other):
        if not isinstance(other, Jet):
            return Jet(self.space, self.coeffs / complex(other))
        return self * other.reciprocal()

    def __rtruediv__(self, other):
        return self.reciprocal() * other

    def __pow__(self, n: int):
        if n < 0:
            return self.reciprocal() ** (-n)
        out = Jet.constant(self.space, 1.0)
        for _ in range(n):
            out = out * self
        return out

    def sqrt(self) -> "Jet":
        return jet_sqrt(self)

    def partial(self, var: int, k: int = 1) -> "Jet":
        return jet_extract_partial(self, var, k)

    def truncate(self, space: JetSpace) -> "Jet":
        return Jet(space, self.coeffs[space.projection_from(self.space)])

    def __repr__(self):
        nz = [(tuple(int(e) for e in m), c) for m, c in zip(self.space.monomials, self.coeffs) if c != 0]
        return f"Jet({nz[:6]}{'...' if len(nz) > 6 else ''})"


def jet_arith(a: Jet, b: Jet, op: str) -> Jet:
    if a.space is not b.space:
        raise JetError("jets must share num_vars and order")
    if op == "add":
        return a + b
    if op == "sub":
        return a - b
    if op == "mul":
        return a * b
    if op == "div":
        return a / b
    raise JetError(f"unknown op {op!r}")


def _binom_half(k: int) -> float:
    return float(math.prod(0.5 - i for i in range(k)) / math.factorial(k))


def jet_sqrt(a: Jet) -> Jet:
    """Principal square root; the order-0 part must have positive real part."""
    a0 = a.value
    if a0 == 0 or a0.real <= 0:
        raise JetError("square root of a jet needs positive real order-0 part")
    eps = np.array(a.coeffs) / a0
    eps[0] = 0.0
    coeffs = [_binom_half(k) for k in range(a.space.max_grade + 1)]
    return Jet(a.space, np.sqrt(a0) * a.space.nilpotent_series(eps, coeffs))


def jet_extract_partial(a: Jet, var: int, k: int = 1) -> Jet:
    """Jet of the k-th partial derivative in direction ``var`` (order drops by k)."""
    if k == 0:
        return a
    target, src, dst, fac = a.space.partial_map(var, k)
    c = np.zeros(target.size, dtype=complex)
    c[dst] = a.coeffs[src] * fac
    return Jet(target, c)
