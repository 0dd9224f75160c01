import numpy as np
import pytest

from vemlab.mesh import (generate_collapsing_quad, random_convex_polygon,
                         regular_polygon, unit_square)
from vemlab.polybasis import MonomialBasis2D, monomial_indices, poly_dim
from vemlab.space import (ConstantFix, SpaceFamily, build_projectors,
                          compute_pi0_edge, compute_pinabla, conforming,
                          dof_matrix, dof_table, dofs_of_polynomial, enhanced,
                          grad_gram, interpolate_dofs, mass_matrix,
                          monomial_integrals, nonconforming)

ALL_KINDS = [conforming, enhanced, nonconforming]


def random_coeffs(rng, p):
    return rng.uniform(-1.0, 1.0, size=poly_dim(p))


def poly_callable(basis, coeffs):
    def f(x, y):
        pts = np.column_stack([np.atleast_1d(x).ravel(), np.atleast_1d(y).ravel()])
        vals = basis.eval(pts) @ coeffs
        return vals.reshape(np.shape(x)) if np.ndim(x) else vals[0]
    return f


def test_dof_counts():
    for kindf in ALL_KINDS:
        for p in (1, 2, 3, 4):
            for poly in (unit_square(), regular_polygon(6)):
                table = dof_table(poly, kindf(p))
                n_v = poly.n_vertices
                assert table.n_dofs == n_v * p + poly_dim(p - 2)


def test_vertex_and_edge_layout_conforming():
    table = dof_table(unit_square(), conforming(3))
    assert list(table.vertex_index) == [0, 1, 2, 3]
    # two interior nodes per edge, then two bulk moments
    assert table.edge_index.shape == (4, 2)
    assert table.n_dofs == 4 * 3 + 3


def test_dof_matrix_reproduces_polynomial_dofs():
    # route 1: dof_matrix applied to coefficients
    # route 2: interpolate the callable polynomial through quadrature
    rng = np.random.default_rng(11)
    for kindf in ALL_KINDS:
        for p in (1, 2, 3):
            poly = random_convex_polygon(5, rng)
            kind = kindf(p)
            basis = MonomialBasis2D.for_polygon(poly, p)
            coeffs = random_coeffs(rng, p)
            direct = dofs_of_polynomial(poly, kind, coeffs)
            via_interp = interpolate_dofs(poly, kind, poly_callable(basis, coeffs))
            assert np.abs(direct - via_interp).max() < 1e-12


def test_pinabla_reproduces_polynomials():
    rng = np.random.default_rng(5)
    for kindf in ALL_KINDS:
        for p in (1, 2, 3):
            for _ in range(5):
                poly = random_convex_polygon(rng.integers(3, 8), rng)
                kind = kindf(p)
                pin, _ = compute_pinabla(poly, kind)
                coeffs = random_coeffs(rng, p)
                dofs = dofs_of_polynomial(poly, kind, coeffs)
                assert np.abs(pin @ dofs - coeffs).max() < 1e-10


def test_pinabla_hand_anchor_unit_square():
    # first vertex basis function of the lowest-degree conforming space
    pin, _ = compute_pinabla(unit_square(), conforming(1))
    e1 = np.array([1.0, 0.0, 0.0, 0.0])
    c = pin @ e1
    h = np.sqrt(2.0)
    # gradient of the projection is (c1, c2)/h
    assert np.allclose(c[1:] / h, [-0.5, -0.5], atol=1e-12)
    # the alternating vertex pattern projects to zero
    w = np.array([1.0, -1.0, 1.0, -1.0])
    assert np.abs(pin @ w).max() < 1e-12


def test_pinabla_dof_is_projection():
    for kindf in ALL_KINDS:
        for p in (1, 2, 3):
            projs = build_projectors(regular_polygon(5), kindf(p))
            P = projs.pinabla_dof
            assert np.abs(P @ P - P).max() < 1e-9


def test_constant_fix_variants_agree_on_polynomials():
    rng = np.random.default_rng(17)
    poly = regular_polygon(5)
    for p in (2, 3):
        kind = conforming(p)
        coeffs = random_coeffs(rng, p)
        dofs = dofs_of_polynomial(poly, kind, coeffs)
        for fix in (ConstantFix.BOUNDARY_MEAN, ConstantFix.BULK_MEAN,
                    ConstantFix.VERTEX_AVERAGE):
            pin, _ = compute_pinabla(poly, kind, constant_fix=fix)
            assert np.abs(pin @ dofs - coeffs).max() < 1e-10


def test_constant_fix_invalid_combinations():
    with pytest.raises(ValueError):
        compute_pinabla(unit_square(), nonconforming(2),
                        constant_fix=ConstantFix.VERTEX_AVERAGE)
    with pytest.raises(ValueError):
        compute_pinabla(unit_square(), conforming(1),
                        constant_fix=ConstantFix.BULK_MEAN)


def test_pi0_moment_projection():
    rng = np.random.default_rng(23)
    for kindf in ALL_KINDS:
        for p in (2, 3):
            poly = random_convex_polygon(6, rng)
            kind = kindf(p)
            projs = build_projectors(poly, kind)
            # a polynomial of degree p-2 is reproduced exactly
            low = random_coeffs(rng, p - 2)
            coeffs = np.zeros(poly_dim(p))
            coeffs[:poly_dim(p - 2)] = low
            dofs = dofs_of_polynomial(poly, kind, coeffs)
            assert np.abs(projs.pi0 @ dofs - low).max() < 1e-11


def test_pi0_full_enhanced_reproduces_degree_p():
    rng = np.random.default_rng(31)
    for p in (1, 2, 3):
        poly = random_convex_polygon(5, rng)
        projs = build_projectors(poly, enhanced(p))
        assert projs.pi0_full is not None
        coeffs = random_coeffs(rng, p)
        dofs = dofs_of_polynomial(poly, enhanced(p), coeffs)
        assert np.abs(projs.pi0_full @ dofs - coeffs).max() < 1e-10


def test_pi0_full_absent_for_standard_spaces():
    projs = build_projectors(unit_square(), conforming(2))
    assert projs.pi0_full is None


def test_pi0_edge_nonconforming_only():
    poly = unit_square()
    with pytest.raises(ValueError):
        compute_pi0_edge(poly, conforming(2))
    rng = np.random.default_rng(41)
    for p in (1, 2, 3):
        kind = nonconforming(p)
        pi0e = compute_pi0_edge(poly, kind)
        coeffs = random_coeffs(rng, p)
        basis = MonomialBasis2D.for_polygon(poly, p)
        dofs = dofs_of_polynomial(poly, kind, coeffs)
        f = poly_callable(basis, coeffs)
        for e, edge in enumerate(poly.edges):
            # compare the edge projection against direct trace sampling
            mid = 0.5 * (poly.vertices[edge.start] + poly.vertices[edge.end])
            c_e = pi0e[e] @ dofs
            # value at the midpoint: only the constant edge monomial survives
            assert abs(c_e[0] - f(*mid)) < 1e-9 or p >= 2
            if p == 1:
                assert abs(c_e[0] - f(*mid)) < 1e-10


def test_grad_gram_scale_invariance():
    from vemlab.mesh import polygon_geometry
    base = regular_polygon(5)
    scaled = polygon_geometry(3.0 * base.vertices + np.array([1.0, -2.0]))
    for p in (1, 2, 3):
        g1 = grad_gram(base, MonomialBasis2D.for_polygon(base, p))
        g2 = grad_gram(scaled, MonomialBasis2D.for_polygon(scaled, p))
        # the scaled-monomial gradient Gram is scale and translation invariant
        assert np.abs(g1 - g2).max() < 1e-12 * max(1.0, np.abs(g1).max())


def test_mass_matrix_spd_and_constant_row():
    poly = regular_polygon(7)
    basis = MonomialBasis2D.for_polygon(poly, 2)
    M = mass_matrix(poly, basis)
    assert np.abs(M - M.T).max() < 1e-13
    assert np.linalg.eigvalsh(M).min() > 0.0
    ints = monomial_integrals(poly, basis)
    assert np.abs(M[0] - ints).max() < 1e-13
    assert abs(ints[0] - poly.area) < 1e-13


def test_projectors_survive_near_collapse():
    rng = np.random.default_rng(47)
    sliver = generate_collapsing_quad(1e-6)
    for kindf in (conforming, nonconforming):
        kind = kindf(2)
        pin, _ = compute_pinabla(sliver, kind)
        coeffs = random_coeffs(rng, 2)
        dofs = dofs_of_polynomial(sliver, kind, coeffs)
        assert np.abs(pin @ dofs - coeffs).max() < 1e-6


def test_interpolation_exact_on_space_polynomials():
    rng = np.random.default_rng(53)
    poly = generate_collapsing_quad(0.4)
    for kindf in ALL_KINDS:
        for p in (1, 2, 3):
            kind = kindf(p)
            coeffs = random_coeffs(rng, p)
            basis = MonomialBasis2D.for_polygon(poly, p)
            dofs = interpolate_dofs(poly, kind, poly_callable(basis, coeffs))
            projs = build_projectors(poly, kind)
            assert np.abs(projs.pinabla @ dofs - coeffs).max() < 1e-10


def test_space_labels():
    assert conforming(2).label == "conforming"
    assert enhanced(1).label == "enhanced"
    assert nonconforming(3).label == "nonconforming"
    assert conforming(2).family is SpaceFamily.CONFORMING
    assert conforming(2).has_pointwise_trace
    assert not nonconforming(2).has_pointwise_trace
