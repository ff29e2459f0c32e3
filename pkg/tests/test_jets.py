import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from loopeq.jets import Jet, JetError, jet_space, total_degree_space

SPACE = total_degree_space(3, 3)
GROUPED = jet_space(((2, 2), (1, 3)))

coeff = st.floats(-2, 2, allow_nan=False)


def jets(space, const=None):
    return st.lists(coeff, min_size=space.size, max_size=space.size).map(
        lambda c: Jet(space, [const if const is not None and i == 0 else x for i, x in enumerate(c)])
    )


def close(a, b, tol=1e-9):
    return np.allclose(a.coeffs, b.coeffs, atol=tol, rtol=tol)


@settings(max_examples=40, deadline=None)
@given(jets(SPACE), jets(SPACE), jets(SPACE))
def test_ring_axioms(a, b, c):
    assert close((a * b) * c, a * (b * c))
    assert close(a * (b + c), a * b + a * c)
    assert close(a * b, b * a)


@settings(max_examples=40, deadline=None)
@given(jets(GROUPED, const=1.5))
def test_reciprocal_and_sqrt(a):
    one = Jet.constant(GROUPED, 1.0)
    assert close(a * a.reciprocal(), one)
    r = a.sqrt()
    assert close(r * r, a)


def test_grouped_truncation_keeps_monomials_per_group():
    monos = {tuple(m) for m in GROUPED.monomials}
    assert (2, 0, 3) in monos
    assert (1, 2, 0) not in monos  # probe group order 2 exceeded
    assert GROUPED.max_grade == 5


def test_taylor_convention_of_exp_like_series():
    # (1 + x)^3 in one variable: Taylor coefficients are binomials
    space = total_degree_space(1, 4)
    x = Jet.variable(space, 0)
    p = (1 + x) ** 3
    assert np.allclose(p.coeffs.real, [1, 3, 3, 1, 0])


def test_partial_factorial_conversion():
    space = total_degree_space(2, 3)
    x, y = Jet.variable(space, 0, 0.5), Jet.variable(space, 1, -1.0)
    f = x ** 3 * y + x * y
    d = f.partial(0)
    # d/dx (x^3 y + x y) = 3x^2 y + y at (0.5, -1)
    assert d.value == pytest.approx(3 * 0.25 * -1 + -1)
    assert d.space.groups == ((2, 2),)
    d2 = f.partial(0, 2)
    assert d2.value == pytest.approx(6 * 0.5 * -1)


def test_partial_beyond_order_raises():
    x = Jet.variable(total_degree_space(1, 1), 0)
    with pytest.raises(JetError):
        x.partial(0, 2)


def test_zero_base_reciprocal_raises():
    x = Jet.variable(total_degree_space(1, 2), 0)
    with pytest.raises(JetError):
        x.reciprocal()


def test_truncate_projects():
    x = Jet.variable(SPACE, 0, 1.0)
    small = total_degree_space(3, 1)
    t = ((1 + x) ** 2).truncate(small)
    assert t.coeff((0, 0, 0)) == pytest.approx(4)
    assert t.coeff((1, 0, 0)) == pytest.approx(4)


@settings(max_examples=25, deadline=None)
@given(st.floats(0.2, 3.0), st.floats(-0.2, 1))
def test_sqrt_derivatives_match_calculus(a, s):
    space = total_degree_space(1, 3)
    x = Jet.variable(space, 0, a)
    r = (x + s * x * x).sqrt()
    f = lambda u: math.sqrt(u + s * u * u)
    h = 1e-4
    fd = (f(a + h) - f(a - h)) / (2 * h)
    assert r.coeff((1,)).real == pytest.approx(fd, rel=1e-6, abs=1e-8)
