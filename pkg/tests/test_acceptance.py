"""Acceptance criteria, one test per criterion, each printing a PASS/FAIL line.

Run with ``pytest -v tests/test_acceptance.py``; the lines are collected in the
"acceptance criteria" section of the terminal summary.
"""
import math
import sys
import time

import numpy as np
import pytest

from loopeq.algebra import AlgebraicFn, laurent_expand, project_parts
from loopeq.equilibrium import effective_potential, solve_equilibrium
from loopeq.estimator import build_solved
from loopeq.loop import extract_eg_derivatives, solve_hierarchy
from loopeq.model import AdmissibilityParams, admissibility_check, build_field, v_prime
from loopeq.oracles import (
    bulk_remainder,
    contour_residual,
    finite_n_moment,
    finite_n_partition,
    moment_extrapolation,
    pairing_genus_counts,
    tail_mass,
    ward_identity_check,
)
from loopeq.verify import random_fields, run_suite

ZERO = (0.0, 0.0, 0.0, 0.0)
Z_SAMPLES = (3.0, 4j, -5.0, 2.5 + 2.5j, -3.0 - 2.0j)


def test_c01_gaussian_equilibrium(acceptance_log):
    t0 = time.perf_counter()
    eq = solve_equilibrium(build_field(4, ZERO))
    dt = time.perf_counter() - t0
    h = eq.h.order0()
    errs = {
        "alpha": abs(eq.alpha + 2),
        "beta": abs(eq.beta - 2),
        "h": max(abs(h[0] - 1), float(np.max(np.abs(h[1:]), initial=0.0))),
        "l": abs(eq.lagrange_l - 1),
    }
    worst = max(errs.values())
    ok = worst <= 1e-10 and dt < 0.1
    assert acceptance_log(1, ok, f"max error {worst:.2e} (tol 1e-10), runtime {dt:.3f}s (< 0.1s)")


def test_c02_catalan(acceptance_log):
    t0 = time.perf_counter()
    _, hier = build_solved(4, ZERO, None, 0, 15)
    s = hier.laurent(0, 15)
    dt = time.perf_counter() - t0
    table = pairing_genus_counts(7)
    got = [s.values(-2 * j - 1).real for j in range(0, 7)]
    want = [1] + [table.count(j, 0) for j in range(1, 7)]
    assert want == [1, 1, 2, 5, 14, 42, 132]
    err = max(abs(a - b) for a, b in zip(got, want))
    ok = err <= 1e-10 and dt < 1
    assert acceptance_log(2, ok, f"eps_0 = {[round(v) for v in got]}, max error {err:.2e}, runtime {dt:.3f}s")


def test_c03_genus_one(acceptance_log):
    t0 = time.perf_counter()
    _, hier = build_solved(4, ZERO, None, 1, 9)
    s = hier.laurent(1, 9)
    dt = time.perf_counter() - t0
    table = pairing_genus_counts(4)
    got = [s.values(p).real for p in (-5, -7, -9)]
    want = [table.count(j, 1) for j in (2, 3, 4)]
    assert want == [1, 10, 70]
    err = max(abs(a - b) for a, b in zip(got, want))
    ok = err <= 1e-8 and dt < 5
    assert acceptance_log(3, ok, f"(z^-5, z^-7, z^-9) = {tuple(round(v, 9) for v in got)}, "
                                 f"max error {err:.2e}, runtime {dt:.2f}s")


def test_c04_genus_two(acceptance_log):
    t0 = time.perf_counter()
    _, hier = build_solved(4, ZERO, None, 2, 9)
    c = hier.laurent(2, 9).values(-9).real
    dt = time.perf_counter() - t0
    want = pairing_genus_counts(4).count(4, 2)
    err = abs(c - want)
    ok = want == 21 and err <= 1e-6 and dt < 30
    assert acceptance_log(4, ok, f"z^-9 of P_2 = {c:.10f} vs {want}, runtime {dt:.2f}s")


def test_c05_map_count_derivatives(acceptance_log):
    _, hier = build_solved(4, ZERO, None, 1, 8)
    table = extract_eg_derivatives(hier)
    counts = pairing_genus_counts(2)
    d0, d1 = table.derivative(0, 4), table.derivative(1, 4)
    err = max(abs(d0 + counts.count(2, 0)), abs(d1 + counts.count(2, 1)))
    ok = err <= 1e-8 and counts.count(2, 0) == 2 and counts.count(2, 1) == 1
    assert acceptance_log(5, ok, f"de0/dt4 = {d0:.12f}, de1/dt4 = {d1:.12f}, error {err:.2e}")


@pytest.fixture(scope="module")
def twenty_fields():
    fields = random_fields(20, seed=2024)
    for f, _ in fields:
        assert admissibility_check(f, AdmissibilityParams())[0]
    assert {f.upsilon for f, _ in fields} == {4, 6}
    return fields


def test_c06_endpoint_normalization_duality(acceptance_log, twenty_fields):
    worst_poly = worst_two = 0.0
    for field, eq in twenty_fields:
        diff = AlgebraicFn.from_poly(v_prime(field), eq.branch) - eq.M()
        plus, minus = project_parts(laurent_expand(diff, 3))
        worst_poly = max(worst_poly, float(np.max(np.abs(plus.order0()), initial=0.0)))
        worst_two = max(worst_two, abs(minus.values(-1) - 2))
    ok = worst_poly <= 1e-10 and worst_two <= 1e-10
    assert acceptance_log(6, ok, f"20 fields: max |poly part| {worst_poly:.2e}, "
                                 f"max |[z^-1] - 2| {worst_two:.2e} (tol 1e-10)")


def test_c07_variational(acceptance_log, twenty_fields):
    worst, margin = 0.0, math.inf
    for _, eq in twenty_fields:
        a, b = eq.alpha, eq.beta
        k = np.arange(1, 65)
        inner = 0.5 * (a + b) + 0.5 * (b - a) * np.cos((2 * k - 1) * np.pi / 128)
        outer = np.concatenate([a - np.geomspace(0.02, 2.0, 16), b + np.geomspace(0.02, 2.0, 16)])
        phi_in = effective_potential(eq, inner)
        l = float(np.mean(phi_in))
        worst = max(worst, float(np.max(np.abs(phi_in - l))))
        margin = min(margin, float(np.min(effective_potential(eq, outer) - l)))
    ok = worst <= 1e-8 and margin > 0
    assert acceptance_log(7, ok, f"20 fields: max equality deviation {worst:.2e} (tol 1e-8), "
                                 f"min exterior margin {margin:.2e} (> 0)")


@pytest.mark.parametrize("t4", [0.0, 0.05])
def test_c08_contour_residual(acceptance_log, t4):
    _, hier = build_solved(4, (0.0, 0.0, 0.0, t4), None, 2, 12)
    res = {g: contour_residual(hier, g, z_samples=Z_SAMPLES) for g in (1, 2)}
    ok = max(res.values()) <= 1e-8
    assert acceptance_log(8, ok, f"t4={t4:g}: residual g=1 {res[1]:.2e}, g=2 {res[2]:.2e} "
                                 f"at 5 z-samples (tol 1e-8)")


def test_c09_bulk_correction(acceptance_log):
    eq = solve_equilibrium(build_field(4, ZERO))
    x = np.linspace(-1, 1, 401)
    r20 = float(np.max(np.abs(bulk_remainder(eq, 20, x))))
    r40 = float(np.max(np.abs(bulk_remainder(eq, 40, x))))
    ratio = r40 / r20
    assert acceptance_log(9, ratio <= 0.35, f"sup remainder N=20 {r20:.3e}, N=40 {r40:.3e}, "
                                            f"ratio {ratio:.4f} (<= 0.35)")


@pytest.mark.parametrize("t4", [0.0, 0.05])
def test_c10_even_power_structure(acceptance_log, t4):
    field = build_field(4, (0.0, 0.0, 0.0, t4))
    _, hier = build_solved(4, field.t_phys, None, 1, 8)
    p1 = hier.laurent(1, 8)
    Ns = list(range(20, 61, 5))
    ok, parts = True, []
    for j in (2, 4, 6):
        a = moment_extrapolation(field, j, Ns)
        c = p1.values(-j - 1).real
        odd = max(abs(a[1]), abs(a[3])) / abs(a[0])
        # a vanishing genus-one coefficient is compared on the leading scale
        match = abs(a[2] - c) / abs(c) if c else abs(a[2]) / abs(a[0])
        ok &= odd <= 1e-4 and match <= 0.05
        # diagnostic only: a fit that also carries the genus-two N^-4 term
        m = [finite_n_moment(field, N, j) for N in Ns]
        a5 = np.linalg.lstsq(np.vstack([np.power(Ns, -k, dtype=float) for k in range(5)]).T, m, rcond=None)[0]
        parts.append(f"j={j}: a1/a0 {abs(a[1] / a[0]):.1e}, a3/a0 {abs(a[3] / a[0]):.1e}, "
                     f"a2 {a[2]:.5f} vs P_1 {c:.5f} [5-term fit a3/a0 {abs(a5[3] / a5[0]):.1e}]")
    assert acceptance_log(10, ok, f"t4={t4:g}: " + "; ".join(parts) + " (odd tol 1e-4, a2 tol 5%)")


def test_c11_partition_expansion(acceptance_log):
    t4 = 0.01
    field = build_field(4, ZERO, 8, 1, (4,), 4)
    table = extract_eg_derivatives(solve_hierarchy(field, 1, 8))
    e0, e1 = table.evaluate(0, [t4]), table.evaluate(1, [t4])
    phys = build_field(4, (0.0, 0.0, 0.0, t4))
    r4 = abs(finite_n_partition(phys, 4) - (16 * e0 + e1))
    r12 = abs(finite_n_partition(phys, 12) - (144 * e0 + e1))
    factor = r4 / r12
    # diagnostic only: closed-form planar and torus free energies of the quartic
    a2 = (math.sqrt(1 + 48 * t4) - 1) / (24 * t4)
    x0, x1 = 0.5 * math.log(a2) - (a2 - 1) * (9 - a2) / 24, -math.log(2 - a2) / 12
    exact = abs(finite_n_partition(phys, 4) - 16 * x0 - x1) / abs(finite_n_partition(phys, 12) - 144 * x0 - x1)
    assert acceptance_log(11, factor >= 10, f"residual N=4 {r4:.3e}, N=12 {r12:.3e}, factor {factor:.3f} (>= 10); "
                                            f"with closed-form e_0, e_1 the factor is {exact:.3f}")


def test_c12_ward_identity(acceptance_log):
    field = build_field(4, ZERO)
    zs = (2j, 1.0 + 2.0j, -1.5 + 1.5j)
    r1 = ward_identity_check(field, 1, zs).max_residual
    r2 = ward_identity_check(field, 2, zs).max_residual
    ok = r1 <= 1e-8 and r2 <= 1e-6
    assert acceptance_log(12, ok, f"N=1 residual {r1:.2e} (tol 1e-8), N=2 residual {r2:.2e} (tol 1e-6)")


def test_c13_tail_bound(acceptance_log):
    field = build_field(4, ZERO)
    Ns = np.arange(10, 61, 5)
    logs = np.log([tail_mass(field, int(N), 0.5) for N in Ns])
    slope, icpt = np.polyfit(Ns, logs, 1)
    r2 = 1 - np.sum((logs - (slope * Ns + icpt)) ** 2) / np.sum((logs - logs.mean()) ** 2)
    ok = bool(np.all(np.diff(logs) < 0)) and slope < 0 and r2 >= 0.99
    assert acceptance_log(13, ok, f"slope {slope:.4f} per N, R^2 {r2:.5f} (>= 0.99)")


def test_full_suite_runtime_budget():
    t0 = time.perf_counter()
    checks = run_suite("full", 2)
    dt = time.perf_counter() - t0
    assert len(checks) > 13
    assert dt < 180, f"full verify suite took {dt:.1f}s"


if __name__ == "__main__":
    sys.exit(pytest.main([__file__, "-v"]))
