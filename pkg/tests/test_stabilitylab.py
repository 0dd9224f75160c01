import dataclasses

import numpy as np
import pytest

from vemlab.mesh import generate_collapsing_quad, regular_polygon, unit_square
from vemlab.polybasis import poly_dim
from vemlab.space import build_projectors, conforming, nonconforming
from vemlab.stab import StabKind, build_stabilization
from vemlab.oracle import OracleConfig, solve_basis
from vemlab.stabilitylab import (StabilityLabError, collapse_sweep,
                                 full_lower_constant, h_sweep,
                                 interp_bound_check, kernel_basis,
                                 measure_element, p_sweep,
                                 quasi_optimality_check, random_bound_defect,
                                 reports_to_csv, stability_constants,
                                 zero_mean_upper_sample)

FAST = OracleConfig(level=2)


def test_kernel_dimension_counting():
    # kernel dim = N_K - dim P_p
    cases = [(conforming(1), 4, 1), (conforming(2), 9, 3),
             (nonconforming(1), 4, 1), (nonconforming(2), 9, 3)]
    for kind, n_dofs, k_dim in cases:
        projs = build_projectors(unit_square(), kind)
        kb = kernel_basis(projs)
        assert projs.pinabla.shape[1] == n_dofs
        assert kb.dim == k_dim
        assert np.abs(projs.pinabla @ kb.matrix).max() < 1e-10


def test_kernel_anchor_vector():
    projs = build_projectors(unit_square(), conforming(1))
    kb = kernel_basis(projs)
    v = kb.matrix[:, 0]
    target = np.array([0.5, -0.5, 0.5, -0.5])
    assert min(np.abs(v - target).max(), np.abs(v + target).max()) < 1e-12


def test_rank_defect_reported():
    projs = build_projectors(unit_square(), conforming(1))
    bad = dataclasses.replace(projs, pinabla=np.zeros_like(projs.pinabla))
    with pytest.raises(StabilityLabError):
        kernel_basis(bad)


def test_one_dimensional_kernel_rayleigh():
    # with a single kernel direction both constants equal one Rayleigh quotient
    poly = unit_square()
    projs = build_projectors(poly, conforming(1))
    kb = kernel_basis(projs)
    stab = build_stabilization(poly, projs, StabKind.DOFI_DOFI)
    oracle = solve_basis(poly, conforming(1), FAST)
    a_star, a_sup = stability_constants(stab, oracle.gram(), kb)
    w = kb.matrix[:, 0]
    rq = (w @ stab.matrix @ w) / (w @ oracle.gram() @ w)
    assert abs(a_star - rq) < 1e-10
    assert abs(a_sup - rq) < 1e-10


def test_constant_anchors_unit_square():
    # closed-form pencil values on the unit square at the lowest degree
    r = measure_element(unit_square(), conforming(1), StabKind.DOFI_DOFI, FAST)
    assert abs(r.alpha_star - 1.5) < 1e-10
    assert abs(r.alpha_sup - 1.5) < 1e-10
    r2 = measure_element(unit_square(), conforming(1), StabKind.PROJECTED, FAST)
    assert abs(r2.alpha_star - 1.0 / (2.0 * np.sqrt(2.0))) < 1e-10


def test_random_bound_defect_zero():
    poly = regular_polygon(5)
    projs = build_projectors(poly, conforming(2))
    kb = kernel_basis(projs)
    stab = build_stabilization(poly, projs, StabKind.DOFI_DOFI)
    oracle = solve_basis(poly, conforming(2), FAST)
    a_star, a_sup = stability_constants(stab, oracle.gram(), kb)
    defect = random_bound_defect(stab, oracle.gram(), kb, a_star, a_sup,
                                 n_samples=50, seed=1)
    assert defect <= 1e-12


def test_measure_scale_invariance():
    from vemlab.mesh import polygon_geometry
    base = regular_polygon(5)
    moved = polygon_geometry(10.0 * base.vertices + np.array([3.0, 4.0]))
    for sk in (StabKind.DOFI_DOFI, StabKind.PROJECTED):
        r1 = measure_element(base, conforming(2), sk, FAST)
        r2 = measure_element(moved, conforming(2), sk, FAST)
        assert abs(r1.alpha_star - r2.alpha_star) < 1e-9 * r1.alpha_star
        assert abs(r1.alpha_sup - r2.alpha_sup) < 1e-9 * r1.alpha_sup


def test_h_sweep_constant_in_h():
    reports = h_sweep(conforming(2), StabKind.DOFI_DOFI,
                      hs=(1.0, 0.5), config=FAST)
    assert len(reports) == 2
    stars = [r.alpha_star for r in reports]
    assert abs(stars[0] - stars[1]) < 1e-9 * stars[0]


def test_p_sweep_ratio_growth():
    reports = p_sweep(conforming, StabKind.DOFI_DOFI,
                      p_range=range(1, 4), config=FAST)
    assert [r.p for r in reports] == [1, 2, 3]
    assert all(r.ok for r in reports)
    assert reports[-1].ratio > reports[0].ratio


def test_full_lower_constant_positive():
    poly = regular_polygon(5)
    projs = build_projectors(poly, conforming(2))
    stab = build_stabilization(poly, projs, StabKind.DOFI_DOFI)
    oracle = solve_basis(poly, conforming(2), FAST)
    c = full_lower_constant(stab, oracle.gram())
    assert c > 0.0
    # never larger than the kernel-restricted lower constant
    kb = kernel_basis(projs)
    a_star, _ = stability_constants(stab, oracle.gram(), kb)
    assert c <= a_star + 1e-10


def test_zero_mean_upper_sample():
    poly = unit_square()
    h = poly.diameter

    def v(x, y):
        return np.sin(np.pi * x) * np.sin(np.pi * y) * x

    raw_val, semi2 = zero_mean_upper_sample(poly, conforming(2),
                                            StabKind.DOFI_DOFI, v, FAST)
    assert raw_val > 0.0 and semi2 > 0.0
    r = measure_element(poly, conforming(2), StabKind.DOFI_DOFI, FAST)
    assert raw_val <= 10.0 * r.alpha_sup * semi2


def test_interp_bound_smooth_function():
    def v(x, y):
        return np.sin(np.pi * x) * np.sin(np.pi * y)

    res = interp_bound_check(unit_square(), 2, v, config=OracleConfig(level=3))
    assert res.passed()
    assert res.lhs <= res.rhs * (1.0 + 1e-3)
    assert res.alpha_star > 0.0


def test_interp_bound_polynomial_exact():
    # a degree-p target is interpolated exactly, both sides vanish
    def v(x, y):
        return x ** 2 - 3.0 * x * y

    res = interp_bound_check(unit_square(), 2, v, config=OracleConfig(level=3))
    assert res.lhs < 1e-7
    assert res.best_err < 1e-7


def test_quasi_optimality_nonconforming():
    def v(x, y):
        return np.exp(x) * np.sin(y)

    res = quasi_optimality_check(regular_polygon(5), 2, v,
                                 config=OracleConfig(level=3))
    assert res.passed()
    assert res.lhs <= res.best_err * (1.0 + 1e-3)


def test_collapse_sweep_flags_failures():
    cfg = OracleConfig(level=2, residual_tol=1e-30)
    reports = collapse_sweep((0.5, 0.1), conforming(2),
                             StabKind.DOFI_DOFI, config=cfg)
    assert len(reports) == 2
    assert all(not r.ok for r in reports)
    assert all(np.isnan(r.alpha_star) for r in reports)


def test_collapse_sweep_monotone_ratio():
    reports = collapse_sweep((1.0, 0.1, 0.01), conforming(2),
                             StabKind.DOFI_DOFI, config=FAST)
    assert all(r.ok for r in reports)
    ratios = [r.ratio for r in reports]
    assert ratios[1] > ratios[0]
    assert ratios[2] > ratios[1]
    eps = [r.eps for r in reports]
    assert eps == [1.0, 0.1, 0.01]
    mins = [r.min_edge_ratio for r in reports]
    assert mins[0] > mins[1] > mins[2]


def test_reports_to_csv():
    reports = h_sweep(conforming(1), StabKind.DOFI_DOFI, hs=(1.0,), config=FAST)
    text = reports_to_csv(reports, header_comment="# demo")
    lines = text.strip().splitlines()
    assert lines[0] == "# demo"
    assert lines[1].startswith("kind,stab,p,h,")
    assert len(lines) == 3
    fields = lines[2].split(",")
    assert fields[0] == "conforming"
    assert fields[1] == "dofi"
    assert int(fields[2]) == 1
    # nan flags survive the round trip
    bad = dataclasses.replace(reports[0], alpha_star=float("nan"),
                              alpha_sup=float("nan"))
    text2 = reports_to_csv([bad])
    assert "nan" in text2.splitlines()[1]
