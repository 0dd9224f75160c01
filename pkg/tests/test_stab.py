import numpy as np
import pytest

from vemlab.mesh import polygon_geometry, random_convex_polygon, regular_polygon, unit_square
from vemlab.polybasis import poly_dim
from vemlab.space import build_projectors, conforming, dofs_of_polynomial, enhanced, nonconforming
from vemlab.stab import (StabKind, boundary_mass, build_stabilization,
                         stab_dofi, stab_projected)

ALL_KINDS = [conforming, enhanced, nonconforming]
ALL_STABS = [StabKind.DOFI_DOFI, StabKind.PROJECTED]


def test_symmetric_positive_semidefinite():
    rng = np.random.default_rng(3)
    for kindf in ALL_KINDS:
        for p in (1, 2, 3):
            poly = random_convex_polygon(6, rng)
            projs = build_projectors(poly, kindf(p))
            for sk in ALL_STABS:
                S = build_stabilization(poly, projs, sk).matrix
                assert np.abs(S - S.T).max() < 1e-12
                ev = np.linalg.eigvalsh(S)
                assert ev.min() > -1e-10 * max(1.0, ev.max())


def test_vanishes_on_polynomial_dofs():
    rng = np.random.default_rng(9)
    for kindf in ALL_KINDS:
        for p in (1, 2, 3):
            poly = random_convex_polygon(5, rng)
            kind = kindf(p)
            projs = build_projectors(poly, kind)
            for sk in ALL_STABS:
                S = build_stabilization(poly, projs, sk).matrix
                for _ in range(4):
                    coeffs = rng.uniform(-1, 1, size=poly_dim(p))
                    d = dofs_of_polynomial(poly, kind, coeffs)
                    assert np.abs(S @ d).max() < 1e-10 * max(1.0, np.abs(d).max())


def test_dofi_raw_is_identity():
    for kindf in ALL_KINDS:
        projs = build_projectors(regular_polygon(5), kindf(2))
        stab = stab_dofi(projs)
        assert np.array_equal(stab.raw, np.eye(projs.n_dofs))
        assert stab.kind is StabKind.DOFI_DOFI


def test_kernel_vector_anchors_unit_square():
    # on the unit square at p=1 the alternating vertex vector spans the
    # projector kernel; both quadratic forms have closed-form values there
    poly = unit_square()
    projs = build_projectors(poly, conforming(1))
    w = np.array([1.0, -1.0, 1.0, -1.0])
    assert np.abs(projs.pinabla @ w).max() < 1e-13

    s_dofi = w @ stab_dofi(projs).matrix @ w
    assert abs(s_dofi - 4.0) < 1e-12

    s_proj = w @ stab_projected(poly, projs).matrix @ w
    assert abs(s_proj - 4.0 / (3.0 * np.sqrt(2.0))) < 1e-12


def test_scaling_and_translation_invariance():
    base = regular_polygon(6)
    moved = polygon_geometry(4.0 * base.vertices + np.array([7.0, -3.0]))
    for kindf in ALL_KINDS:
        for p in (1, 2, 3):
            pr1 = build_projectors(base, kindf(p))
            pr2 = build_projectors(moved, kindf(p))
            for sk in ALL_STABS:
                S1 = build_stabilization(base, pr1, sk).matrix
                S2 = build_stabilization(moved, pr2, sk).matrix
                assert np.abs(S1 - S2).max() < 1e-12 * max(1.0, np.abs(S1).max())


def test_boundary_mass_constant_trace():
    # the all-ones vertex/edge vector has trace identically one, so its
    # boundary Gram value equals the perimeter
    for p in (1, 2, 3):
        poly = regular_polygon(5)
        projs = build_projectors(poly, conforming(p))
        B = boundary_mass(poly, projs)
        d = np.ones(projs.n_dofs)
        perimeter = sum(e.length for e in poly.edges)
        assert abs(d @ B @ d - perimeter) < 1e-12
        # bulk moment dofs never touch the boundary form
        if p >= 2:
            n_bulk = poly_dim(p - 2)
            assert np.abs(B[-n_bulk:, :]).max() == 0.0


def test_boundary_mass_vs_quadrature():
    poly = unit_square()
    projs = build_projectors(poly, conforming(2))
    B = boundary_mass(poly, projs)
    # vertex 0 hat function against itself: each adjacent edge contributes
    # int_0^1 ((2t-1)(t-1))^2 dt = 7/30 in the quadratic trace basis
    xs = np.linspace(0.0, 1.0, 20001)
    phi = (2 * xs - 1) * (xs - 1)
    val = 2.0 * np.trapezoid(phi * phi, xs)
    assert abs(B[0, 0] - val) < 1e-8


def test_projected_stab_distinct_from_dofi():
    poly = regular_polygon(5)
    projs = build_projectors(poly, conforming(2))
    S1 = stab_dofi(projs).matrix
    S2 = stab_projected(poly, projs).matrix
    assert np.abs(S1 - S2).max() > 1e-3


def test_enhanced_projected_uses_full_degree_bulk():
    poly = regular_polygon(5)
    pr_enh = build_projectors(poly, enhanced(2))
    pr_conf = build_projectors(poly, conforming(2))
    raw_enh = stab_projected(poly, pr_enh).raw
    raw_conf = stab_projected(poly, pr_conf).raw
    assert raw_enh.shape == raw_conf.shape
    assert np.abs(raw_enh - raw_conf).max() > 1e-6


def test_raw_positive_definite_projected():
    rng = np.random.default_rng(29)
    for kindf in ALL_KINDS:
        for p in (1, 2, 3):
            poly = random_convex_polygon(5, rng)
            projs = build_projectors(poly, kindf(p))
            raw = stab_projected(poly, projs).raw
            ev = np.linalg.eigvalsh(0.5 * (raw + raw.T))
            assert ev.min() > 1e-12


def test_build_dispatch():
    projs = build_projectors(unit_square(), conforming(1))
    s = build_stabilization(unit_square(), projs, StabKind.PROJECTED)
    assert s.kind is StabKind.PROJECTED
    with pytest.raises(ValueError):
        build_stabilization(unit_square(), projs, "bogus")
