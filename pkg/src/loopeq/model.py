"""External fields V(x) = x^2/2 + sum_j t_j x^j and their coupling jets."""
from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np

from .algebra import PolyZ
from .jets import Jet, JetSpace, jet_space


class FieldError(ValueError):
    """Invalid external-field configuration."""


@dataclass(frozen=True)
class AdmissibilityParams:
    T_bound: float = 1.0
    gamma: float = 1.0

    def __post_init__(self):
        if self.T_bound <= 0 or self.gamma <= 0:
            raise FieldError("T and gamma must be positive")


@dataclass(frozen=True)
class ExternalField:
    """Polynomial potential with probe couplings carried as jet directions.

    Couplings ``t_1..t_probe_m`` are jet variables ``0..probe_m-1`` (the physical
    values sit at the base point, the rest are zero).  Optional Taylor
    directions form a second variable group with its own truncation order;
    they duplicate physical couplings so that high-order Taylor data in a few
    directions does not force high order in every probe direction.
    """

    upsilon: int
    t_phys: tuple
    probe_m: int
    jet_order: int
    taylor_dirs: tuple = ()
    taylor_order: int = 0

    @property
    def space(self) -> JetSpace:
        groups = [(self.probe_m, self.jet_order)]
        if self.taylor_dirs:
            groups.append((len(self.taylor_dirs), self.taylor_order))
        return jet_space(tuple(groups))

    @property
    def is_gaussian(self) -> bool:
        return not any(self.t_phys)

    @property
    def degree(self) -> int:
        """Effective order-0 degree of V (2 at the Gaussian point)."""
        for j in range(self.upsilon, 2, -1):
            if self.t_phys[j - 1] != 0:
                return j
        return 2

    def t(self, j: int) -> float:
        return float(self.t_phys[j - 1]) if 1 <= j <= self.upsilon else 0.0

    def coupling(self, j: int) -> Jet:
        """Jet of t_j: base value plus unit first-order seeds."""
        space = self.space
        c = np.zeros(space.size, dtype=complex)
        c[0] = self.t(j)
        if j <= self.probe_m and self.jet_order > 0:
            mono = [0] * space.nvars
            mono[j - 1] = 1
            c[space.index[tuple(mono)]] = 1.0
        if j in self.taylor_dirs and self.taylor_order > 0:
            mono = [0] * space.nvars
            mono[self.probe_m + self.taylor_dirs.index(j)] = 1
            c[space.index[tuple(mono)]] = 1.0
        return Jet(space, c)

    def v_prime_coeffs(self) -> np.ndarray:
        """Order-0 coefficients of V'(z), low to high."""
        c = np.zeros(max(self.upsilon, 2), dtype=float)
        c[1] = 1.0
        for j in range(1, self.upsilon + 1):
            c[j - 1] += j * self.t(j)
        return np.trim_zeros(c, "b")

    def potential(self, x):
        x = np.asarray(x, dtype=float)
        out = 0.5 * x * x
        for j in range(1, self.upsilon + 1):
            if self.t(j):
                out = out + self.t(j) * x**j
        return out

    def v_prime_values(self, x):
        return np.polynomial.polynomial.polyval(np.asarray(x), self.v_prime_coeffs())

    def scaled(self, s: float) -> "ExternalField":
        return replace(self, t_phys=tuple(s * t for t in self.t_phys))

    def with_jets(self, probe_m: int | None = None, jet_order: int | None = None, **kw) -> "ExternalField":
        return replace(
            self,
            probe_m=self.probe_m if probe_m is None else probe_m,
            jet_order=self.jet_order if jet_order is None else jet_order,
            **kw,
        )


def build_field(
    upsilon: int,
    t_phys,
    probe_m: int | None = None,
    jet_order: int = 0,
    taylor_dirs=(),
    taylor_order: int = 0,
) -> ExternalField:
    t_phys = tuple(float(t) for t in t_phys)
    if len(t_phys) != upsilon:
        raise FieldError(f"expected {upsilon} couplings, got {len(t_phys)}")
    probe_m = upsilon if probe_m is None else int(probe_m)
    if probe_m < upsilon:
        raise FieldError("probe_m must be >= upsilon")
    if jet_order < 0 or taylor_order < 0:
        raise FieldError("jet orders must be non-negative")
    if any(t_phys):
        if upsilon % 2:
            raise FieldError("upsilon must be even")
        if t_phys[-1] <= 0:
            raise FieldError("t_upsilon must be positive")
    for j in taylor_dirs:
        if not 1 <= j <= upsilon:
            raise FieldError(f"Taylor direction {j} is not a physical coupling")
    return ExternalField(upsilon, t_phys, probe_m, int(jet_order), tuple(taylor_dirs), int(taylor_order))


def admissibility_check(field: ExternalField, params: AdmissibilityParams = AdmissibilityParams()):
    """Membership of the couplings in T(T, gamma); returns (ok, reason)."""
    t = np.asarray(field.t_phys, dtype=float)
    if not t.any():
        return True, "Gaussian closure point"
    norm = float(np.linalg.norm(t))
    if norm > params.T_bound:
        return False, f"|t| = {norm:.6g} exceeds T = {params.T_bound:.6g}"
    lower = params.gamma * float(np.sum(np.abs(t[:-1])))
    if not t[-1] > lower:
        return False, f"t_upsilon = {t[-1]:.6g} <= gamma * sum|t_j| = {lower:.6g}"
    return True, "inside T(T, gamma)"


def v_prime(field: ExternalField) -> PolyZ:
    """V'(z) = z + sum_j j t_j z^(j-1) with jet-valued couplings."""
    space = field.space
    top = max(field.probe_m, field.upsilon, 2)
    rows = np.zeros((top, space.size), dtype=complex)
    rows[1, 0] = 1.0
    for j in range(1, top + 1):
        rows[j - 1] += j * field.coupling(j).coeffs
    return PolyZ(space, rows)
