import math

import numpy as np
import pytest

from loopeq.equilibrium import solve_equilibrium
from loopeq.model import build_field
from loopeq.oracles import (
    ContourSpec,
    OracleError,
    contour_residual,
    default_contour,
    finite_n_moment,
    finite_n_one_point,
    finite_n_partition,
    hermite_one_point,
    moment_extrapolation,
    pairing_genus_counts,
    tail_mass,
    ward_identity_check,
)

GAUSS = build_field(4, (0,) * 4)


def test_pairing_counts_small_cases():
    t = pairing_genus_counts(4)
    assert t.row(1) == {0: 1}
    assert t.row(2) == {0: 2, 1: 1}
    assert t.row(4) == {0: 14, 1: 70, 2: 21}


def test_pairing_counts_invariants():
    t = pairing_genus_counts(6)
    for j in range(1, 7):
        assert sum(t.row(j).values()) == math.prod(range(1, 2 * j, 2))
        assert t.count(j, 0) == math.comb(2 * j, j) // (j + 1)


def test_pairing_bound():
    with pytest.raises(OracleError):
        pairing_genus_counts(9)


def test_one_point_n1_is_gaussian_density():
    x = np.linspace(-3, 3, 7)
    d = finite_n_one_point(GAUSS, 1, x, fast_path=False)
    assert np.allclose(d.values, np.exp(-x * x / 2) / np.sqrt(2 * np.pi), rtol=1e-10)
    assert d.mass == pytest.approx(1, abs=1e-12)


@pytest.mark.parametrize("N", [3, 17, 40])
def test_stieltjes_matches_hermite(N):
    x = np.linspace(-2.5, 2.5, 41)
    slow = finite_n_one_point(GAUSS, N, x, fast_path=False).values
    assert np.allclose(slow, hermite_one_point(N, x), atol=1e-10, rtol=1e-10)


def test_moments_match_enumeration():
    t = pairing_genus_counts(4)
    for N in (3, 10):
        for j in (1, 2, 3, 4):
            assert finite_n_moment(GAUSS, N, 2 * j) == pytest.approx(t.moment(j, N), rel=1e-9)


def test_quartic_density_normalized():
    f = build_field(4, (0, 0, 0, 0.05))
    d = finite_n_one_point(f, 12)
    assert d.mass == pytest.approx(1, abs=1e-10)
    assert np.all(d.values >= 0)


def test_moment_fit_gaussian_exact():
    a = moment_extrapolation(GAUSS, 4, [20, 30, 40, 50, 60])
    assert a[0] == pytest.approx(2, abs=1e-9)
    assert a[2] == pytest.approx(1, abs=1e-6)
    assert abs(a[1]) < 1e-8


def test_partition_sign_and_base():
    assert finite_n_partition(GAUSS, 5) == 0
    assert finite_n_partition(build_field(4, (0, 0, 0, 0.05)), 2) < 0


def test_partition_n2_matches_direct_quadrature():
    from scipy import integrate

    f = build_field(4, (0, 0, 0, 0.05))
    N = 2

    def Z(field):
        w = lambda a, b: (a - b) ** 2 * np.exp(-N * (field.potential(a) + field.potential(b)))
        return integrate.dblquad(w, -8, 8, -8, 8, epsabs=1e-13)[0]

    direct = math.log(Z(f) / Z(GAUSS))
    assert finite_n_partition(f, N) == pytest.approx(direct, abs=1e-8)


def test_tail_mass_decreases():
    m = [tail_mass(GAUSS, N) for N in (10, 20, 30)]
    assert m[0] > m[1] > m[2] > 0


def test_ward_identity_small_n():
    for N, tol in ((1, 1e-8), (2, 1e-6)):
        rep = ward_identity_check(build_field(4, (0, 0, 0, 0.05)), N, [2j, 1 + 2j])
        assert rep.max_residual < tol


def test_ward_rejects_real_points():
    with pytest.raises(OracleError):
        ward_identity_check(GAUSS, 1, [3.0])


def test_contour_validation(gauss_hier):
    eq = gauss_hier.eq
    with pytest.raises(OracleError):
        contour_residual(gauss_hier, 1, z_samples=[1.0 + 0.5j])
    with pytest.raises(OracleError):
        contour_residual(gauss_hier, 1, ContourSpec(0.0, 2.1, 2.1, 0.5, 256))
    c = default_contour(eq)
    assert c.semi_real >= 2.5


def test_contour_spectral_convergence(gauss_hier):
    eq = gauss_hier.eq
    c64 = default_contour(eq, nodes=64)
    c128 = default_contour(eq, nodes=128)
    r64 = contour_residual(gauss_hier, 1, c64, (3.5, 4j))
    r128 = contour_residual(gauss_hier, 1, c128, (3.5, 4j))
    assert r128 < max(r64 * 1e-2, 1e-12)
