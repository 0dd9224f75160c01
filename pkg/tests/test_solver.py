import numpy as np
import pytest

from vemlab.mesh import generate_square_mesh as square_mesh
from vemlab.mesh import unit_square
from vemlab.polybasis import poly_dim
from vemlab.space import (build_projectors, conforming, dofs_of_polynomial,
                          enhanced, grad_gram, nonconforming)
from vemlab.stab import StabKind
from vemlab.polybasis import MonomialBasis2D
from vemlab.solver import (ProblemSpec, SolverError, assemble, build_dof_map,
                           h1_projection_error, local_load, local_stiffness,
                           mms_poly, mms_sinsin, run_convergence_study, solve,
                           solve_poisson)

ALL_KINDS = [conforming, enhanced, nonconforming]


def constant_fn(x, y):
    return np.ones_like(np.asarray(x, dtype=float))


def test_local_stiffness_annihilates_constants():
    rng = np.random.default_rng(7)
    from vemlab.mesh import random_convex_polygon
    for kindf in ALL_KINDS:
        for p in (1, 2, 3):
            poly = random_convex_polygon(6, rng)
            for sk in (StabKind.DOFI_DOFI, StabKind.PROJECTED):
                loc = local_stiffness(poly, kindf(p), sk)
                ones = dofs_of_polynomial(poly, kindf(p),
                                          np.eye(poly_dim(p))[0])
                assert np.abs(loc.a_loc @ ones).max() < 1e-11


def test_local_stiffness_polynomial_energy():
    # for u in P_p the discrete energy equals the exact Dirichlet energy
    rng = np.random.default_rng(13)
    from vemlab.mesh import random_convex_polygon
    for kindf in ALL_KINDS:
        for p in (1, 2, 3):
            poly = random_convex_polygon(5, rng)
            kind = kindf(p)
            loc = local_stiffness(poly, kind, StabKind.DOFI_DOFI)
            basis = MonomialBasis2D.for_polygon(poly, p)
            G = grad_gram(poly, basis)
            c = rng.uniform(-1, 1, size=poly_dim(p))
            d = dofs_of_polynomial(poly, kind, c)
            assert abs(d @ loc.a_loc @ d - c @ G @ c) < 1e-10 * max(1.0, c @ G @ c)


def test_unit_square_p1_dofi_eigenvalues():
    loc = local_stiffness(unit_square(), conforming(1), StabKind.DOFI_DOFI)
    ev = np.linalg.eigvalsh(loc.a_loc)
    assert np.allclose(ev, [0.0, 1.0, 1.0, 1.0], atol=1e-12)


def test_local_load_constant_source():
    projs1 = build_projectors(unit_square(), conforming(1))
    b1 = local_load(unit_square(), projs1, constant_fn)
    assert np.allclose(b1, 0.25, atol=1e-13)

    projs2 = build_projectors(unit_square(), conforming(2))
    b2 = local_load(unit_square(), projs2, constant_fn)
    # only the bulk moment dof sees a constant source, with weight |K|
    assert np.abs(b2[:-1]).max() < 1e-13
    assert abs(b2[-1] - 1.0) < 1e-12


def test_dof_map_counts():
    mesh = square_mesh(2)
    dm1 = build_dof_map(mesh, conforming(1))
    assert dm1.n_global == 9
    assert len(dm1.boundary) == 8
    dm1n = build_dof_map(mesh, nonconforming(1))
    assert dm1n.n_global == 12
    assert len(dm1n.boundary) == 8
    dm2 = build_dof_map(mesh, conforming(2))
    # 9 vertices + 12 edges + 4 moments
    assert dm2.n_global == 9 + 12 + 4
    dm3 = build_dof_map(mesh, nonconforming(2))
    assert dm3.n_global == 2 * 12 + 4


def test_free_dof_counts_n2():
    mesh = square_mesh(2)
    spec = ProblemSpec(conforming(1), StabKind.DOFI_DOFI, mms_sinsin())
    res = solve(assemble(mesh, spec))
    assert res.n_free == 1
    spec_n = ProblemSpec(nonconforming(1), StabKind.DOFI_DOFI, mms_sinsin())
    res_n = solve(assemble(mesh, spec_n))
    assert res_n.n_free == 4


def test_patch_reproduction():
    # a degree-p manufactured solution is recovered to machine precision
    mesh = square_mesh(3)
    for kindf in ALL_KINDS:
        for p in (1, 2):
            mms = mms_poly(p)
            spec = ProblemSpec(kindf(p), StabKind.DOFI_DOFI, mms)
            res = solve(assemble(mesh, spec))
            _, err = h1_projection_error(res, mms.grad)
            assert err < 1e-10
            assert res.residual < 1e-10


def test_cg_matches_direct():
    mesh = square_mesh(4)
    spec = ProblemSpec(conforming(2), StabKind.PROJECTED, mms_sinsin())
    system = assemble(mesh, spec)
    direct = solve(system, method="direct")
    cg = solve(system, method="cg", tol=1e-13)
    assert np.abs(direct.u - cg.u).max() < 1e-9
    assert cg.method == "cg"


def test_unknown_method_rejected():
    mesh = square_mesh(2)
    spec = ProblemSpec(conforming(1), StabKind.DOFI_DOFI, mms_sinsin())
    with pytest.raises(SolverError):
        solve(assemble(mesh, spec), method="qr")


def test_congruent_cache_matches_uncached():
    mesh = square_mesh(3)
    spec = ProblemSpec(conforming(2), StabKind.PROJECTED, mms_sinsin())
    s1 = assemble(mesh, spec, share_congruent=True)
    s2 = assemble(mesh, spec, share_congruent=False)
    scale = np.abs(s1.A.data).max()
    assert np.abs((s1.A - s2.A).toarray()).max() < 1e-13 * scale
    assert np.abs(s1.b - s2.b).max() < 1e-14
    r1, r2 = solve(s1), solve(s2)
    assert np.abs(r1.u - r2.u).max() < 1e-12


def test_solve_poisson_wrapper():
    mesh = square_mesh(4)
    spec = ProblemSpec(conforming(1), StabKind.DOFI_DOFI, mms_sinsin())
    res, err = solve_poisson(mesh, spec)
    assert res.n_dof == 25
    assert err < 1.0


def test_first_order_rate():
    spec = ProblemSpec(conforming(1), StabKind.DOFI_DOFI, mms_sinsin())
    rows = run_convergence_study(spec, [4, 8, 16])
    assert np.isnan(rows[0].rate)
    rates = [r.rate for r in rows[1:]]
    for r in rates:
        assert 0.85 < r < 1.15
    assert rows[-1].err < rows[0].err


def test_gram_condition_tracked():
    mesh = square_mesh(2)
    spec = ProblemSpec(conforming(3), StabKind.DOFI_DOFI, mms_sinsin())
    system = assemble(mesh, spec)
    assert 1.0 <= system.max_gram_cond < 1e8
