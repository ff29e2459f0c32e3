import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from loopeq.algebra import (
    AlgebraError,
    AlgebraicFn,
    BranchRoot,
    PolyZ,
    factor_numeric,
    laurent_expand,
    project_parts,
)
from loopeq.jets import Jet, SCALAR_SPACE, total_degree_space


def branch(a=-2.0, b=2.0, space=SCALAR_SPACE):
    return BranchRoot(Jet.constant(space, a), Jet.constant(space, b))


def test_polyz_product_and_derivative():
    p = PolyZ.numeric(SCALAR_SPACE, [1, 2])  # 1 + 2z
    q = PolyZ.numeric(SCALAR_SPACE, [0, 0, 3])  # 3z^2
    r = p * q
    assert np.allclose(r.order0(), [0, 0, 3, 6])
    assert np.allclose(r.derivative().order0(), [0, 6, 18])
    assert r(2.0).value == pytest.approx(3 * 4 + 6 * 8)


def test_sqrt_laurent_is_catalan():
    # R(z) = sqrt(z^2 - 4) = z - sum_k C_{k-1} 2/z^(2k-1) ... check through 1/R
    br = branch()
    R = AlgebraicFn.r0(SCALAR_SPACE, br)
    s = laurent_expand(R, 9)
    assert s.values(1) == pytest.approx(1)
    assert s.values(-1) == pytest.approx(-2)
    assert s.values(-3) == pytest.approx(-2)
    assert s.values(-5) == pytest.approx(-4)
    assert s.values(-7) == pytest.approx(-10)


def test_reciprocal_roundtrip_and_projection():
    br = branch(-1.5, 2.5)
    R = AlgebraicFn.r0(SCALAR_SPACE, br)
    f = R + AlgebraicFn.from_poly(PolyZ.numeric(SCALAR_SPACE, [0.3, 1.0]), br)
    one = laurent_expand(f * f.reciprocal(), 8)
    plus, minus = project_parts(one)
    assert np.allclose(plus.order0(), [1.0])
    assert np.max(np.abs(minus.coeffs)) < 1e-12


def test_pointwise_matches_laurent_far_out():
    br = branch()
    R = AlgebraicFn.r0(SCALAR_SPACE, br)
    g = (AlgebraicFn.from_poly(PolyZ.numeric(SCALAR_SPACE, [0, 1]), br) - R) * 0.5
    z = 7.0 + 1.0j
    s = laurent_expand(g, 30)
    series = sum(s.values(p) * z ** p for p in s.powers())
    assert g.values(np.array([z]))[0] == pytest.approx(series, rel=1e-12)
    assert g.values(np.array([z]))[0] == pytest.approx((z - np.sqrt(z * z - 4)) / 2, rel=1e-12)


def test_jet_branch_points_give_derivatives_of_R():
    space = total_degree_space(1, 2)
    b = Jet.variable(space, 0, 2.0)
    br = BranchRoot(-b, b)
    R = br.sqrt_fn()
    z = 3.0
    val = R(z)
    # R = sqrt(z^2 - b^2): dR/db = -b/R, d2R/db2 / 2
    r0 = math.sqrt(z * z - 4)
    assert val.value == pytest.approx(r0)
    assert val.coeff((1,)) == pytest.approx(-2 / r0)
    d2 = -1 / r0 - 4 / r0 ** 3
    assert val.coeff((2,)) == pytest.approx(d2 / 2)


@settings(max_examples=30, deadline=None)
@given(st.lists(st.floats(-3, 3), min_size=1, max_size=5))
def test_factor_numeric_reconstructs(roots):
    p = np.polynomial.polynomial.polyfromroots(roots) * 2.0
    lead, fac = factor_numeric(p)
    assert lead == pytest.approx(2.0)
    assert sum(fac.values()) == len(roots)
    rebuilt = np.polynomial.polynomial.polyfromroots([r for r, e in fac.items() for _ in range(e)]) * lead
    assert np.allclose(rebuilt, p, atol=1e-6 * max(1, np.max(np.abs(p))))


def test_bad_branch_rejected():
    with pytest.raises(AlgebraError):
        branch(2.0, -2.0)


def test_laurent_depth_validated():
    R = AlgebraicFn.r0(SCALAR_SPACE, branch())
    with pytest.raises(AlgebraError):
        laurent_expand(R, 0)
