import numpy as np
import pytest

from loopeq.algebra import laurent_expand
from loopeq.estimator import build_solved
from loopeq.jets import JetError
from loopeq.loop import (
    LoopError,
    extract_eg_derivatives,
    probe_stability,
    projection_residual,
    solve_hierarchy,
    vertex_derivative,
)
from loopeq.model import build_field
from loopeq.oracles import pairing_genus_counts


def test_gaussian_levels_are_gluing_counts(gauss_hier):
    table = pairing_genus_counts(6)
    for g in (0, 1, 2):
        s = gauss_hier.laurent(g, 13)
        for j in range(1, 7):
            assert s.values(-2 * j - 1) == pytest.approx(table.count(j, g), abs=1e-8)


def test_projection_residual_small(gauss_hier, quartic_hier):
    for g in (1, 2):
        assert projection_residual(gauss_hier, g) < 1e-8
    assert projection_residual(quartic_hier, 1) < 1e-8
    # the genus-two Laurent data converges slowly in the probe count away from t=0
    assert projection_residual(quartic_hier, 2) < 1e-5


def test_pointwise_closed_form_genus_one(gauss_hier):
    z = np.array([3.0, 2.5j, -4.0 + 1.0j])
    R = np.sqrt(z - 2) * np.sqrt(z + 2)
    assert np.allclose(gauss_hier.values(1, z), R ** -5, rtol=1e-8)


def test_vertex_derivative_consumes_one_order():
    f = build_field(4, (0,) * 4, probe_m=8, jet_order=1)
    hier = solve_hierarchy(f, 0, 10)
    dP = vertex_derivative(hier.levels[0])
    assert dP.space.groups[0][1] == 0
    with pytest.raises(JetError):
        vertex_derivative(dP)


def test_eg_table_hessian_symmetric(gauss_hier):
    table = extract_eg_derivatives(gauss_hier)
    assert table.derivative(0, 4) == pytest.approx(-2)
    assert table.derivative(1, 4) == pytest.approx(-1)
    assert table.derivative(0, 2) == pytest.approx(-1)
    assert table.symmetry_defect(0) < 1e-10
    assert table.symmetry_defect(1) < 1e-10


def test_taylor_assembly_gaussian_series():
    f = build_field(4, (0,) * 4, probe_m=8, jet_order=1, taylor_dirs=(4,), taylor_order=3)
    table = extract_eg_derivatives(solve_hierarchy(f, 1, 8))
    # e_0 = sum_k (-12 t)^k (2k-1)! / (k! (k+2)!)
    assert table.taylor[0][(1,)] == pytest.approx(-2)
    assert table.taylor[0][(2,)] == pytest.approx(18)
    assert table.taylor[0][(3,)] == pytest.approx(-288)
    assert table.taylor[1][(2,)] == pytest.approx(30)
    assert table.evaluate(0, [0.0]) == 0


def test_probe_truncation_converges():
    f = build_field(4, (0, 0, 0, 0.05), probe_m=48, jet_order=1)
    assert probe_stability(f, 1, 8) < 1e-7


def test_requires_jet_order():
    f = build_field(4, (0,) * 4, probe_m=6, jet_order=1)
    with pytest.raises(JetError):
        solve_hierarchy(f, 2, 8)


def test_depth_guard_for_eg_table():
    _, hier = build_solved(4, (0,) * 4, None, 1, 4)
    with pytest.raises(LoopError):
        extract_eg_derivatives(hier)


def test_vertex_derivative_gaussian_two_point():
    # at t=0, d/dV P_0 = 1/(z^2 - 4)^2
    f = build_field(4, (0,) * 4, probe_m=12, jet_order=1)
    hier = solve_hierarchy(f, 0, 10)
    s = laurent_expand(vertex_derivative(hier.levels[0]), 10)
    for p, c in ((-4, 1), (-6, 8), (-8, 48), (-10, 256)):
        assert s.values(p) == pytest.approx(c, abs=1e-9)
    assert abs(s.values(-5)) < 1e-12
