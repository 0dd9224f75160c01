"""Poisson solver on polygonal meshes: local matrices, assembly, errors.

The discrete bilinear form on each cell is the projected-gradient consistency
term plus the chosen stabilization; the load pairs the source with the bulk
L2 projection (a vertex/edge-mean rule at p = 1).  Dirichlet data is imposed
by eliminating boundary DoFs.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from .mesh import Polygon, PolygonalMesh
from .polybasis import (EdgeBasis, MonomialBasis2D, edge_points_weights,
                        edge_quadrature, gauss_lobatto_nodes, poly_dim,
                        polygon_quadrature)
from .space import ConstantFix, ProjectorSet, SpaceKind, build_projectors
from .stab import StabilizationMatrix, StabKind, build_stabilization


class SolverError(RuntimeError):
    """Raised when the linear solve fails or does not reach the tolerance."""


@dataclass(frozen=True)
class Manufactured:
    """An exact solution with gradient, source and Dirichlet data."""

    name: str
    u: object         # u(x, y)
    grad: object      # grad(x, y) -> (ux, uy)
    f: object         # -Laplacian u


def mms_sinsin() -> Manufactured:
    pi = np.pi

    def u(x, y):
        return np.sin(pi * x) * np.sin(pi * y)

    def grad(x, y):
        return (pi * np.cos(pi * x) * np.sin(pi * y),
                pi * np.sin(pi * x) * np.cos(pi * y))

    def f(x, y):
        return 2.0 * pi ** 2 * np.sin(pi * x) * np.sin(pi * y)

    return Manufactured("sinsin", u, grad, f)


class _Poly2:
    """Bivariate polynomial from a coefficient grid c[i, j] on x^i y^j."""

    def __init__(self, c):
        self.c = np.asarray(c, dtype=float)

    def __call__(self, x, y):
        return np.polynomial.polynomial.polyval2d(x, y, self.c)

    def dx(self):
        c = self.c
        out = np.zeros((max(c.shape[0] - 1, 1), c.shape[1]))
        for i in range(1, c.shape[0]):
            out[i - 1] += i * c[i]
        return _Poly2(out)

    def dy(self):
        c = self.c
        out = np.zeros((c.shape[0], max(c.shape[1] - 1, 1)))
        for j in range(1, c.shape[1]):
            out[:, j - 1] += j * c[:, j]
        return _Poly2(out)


def mms_poly(deg: int) -> Manufactured:
    """Deterministic complete polynomial of the given total degree."""
    if deg < 0:
        raise ValueError("degree must be >= 0")
    n = deg + 1
    c = np.zeros((n, n))
    for i in range(n):
        for j in range(n - i):
            c[i, j] = 1.0 + ((3 * i + 5 * j + i * j) % 4)
    u = _Poly2(c)
    ux, uy = u.dx(), u.dy()
    uxx, uyy = ux.dx(), uy.dy()

    def f(x, y):
        return -(uxx(x, y) + uyy(x, y))

    def grad(x, y):
        return (ux(x, y), uy(x, y))

    return Manufactured(f"poly{deg}", u, grad, f)


@dataclass(frozen=True)
class ProblemSpec:
    kind: SpaceKind
    stab: StabKind
    mms: Manufactured
    constant_fix: ConstantFix = ConstantFix.BOUNDARY_MEAN


@dataclass
class LocalElementMatrices:
    poly: Polygon
    projectors: ProjectorSet
    stab: StabilizationMatrix
    a_loc: np.ndarray
    gram_cond: float


def local_stiffness(poly: Polygon, kind: SpaceKind, stab_kind: StabKind,
                    constant_fix: ConstantFix = ConstantFix.BOUNDARY_MEAN) -> LocalElementMatrices:
    """Consistency term plus stabilization for one cell."""
    projs = build_projectors(poly, kind, constant_fix)
    S = build_stabilization(poly, projs, stab_kind)
    A = projs.pinabla.T @ projs.grad_gram @ projs.pinabla + S.matrix
    A = 0.5 * (A + A.T)
    cond = float(np.linalg.cond(projs.grad_gram[1:, 1:]))
    return LocalElementMatrices(poly, projs, S, A, cond)


def local_load(poly: Polygon, projs: ProjectorSet, f, level: int = 2) -> np.ndarray:
    """Load vector (f, Pi0 v); at p = 1 the lowest-moment mean rule."""
    p = projs.kind.degree
    table = projs.table
    b = np.zeros(table.n_dofs)
    if p >= 2:
        basis_sub = MonomialBasis2D(p - 2, projs.basis.centroid, projs.basis.diameter,
                                    projs.basis.indices[:poly_dim(p - 2)])
        pts, w = polygon_quadrature(poly, 2 * p + 2, level=level)
        fm = (basis_sub.eval(pts) * (w * f(pts[:, 0], pts[:, 1]))[:, None]).sum(axis=0)
        b = projs.pi0.T @ fm
    else:
        fK = poly.area * float(f(poly.centroid[0], poly.centroid[1]))
        if projs.kind.has_pointwise_trace:
            b[table.vertex_index] = fK / poly.n_vertices
        else:
            b[table.edge_index[:, 0]] = fK / poly.n_edges
    return b


# ---------------------------------------------------------------------------
# global DoF management

@dataclass
class DofMap:
    kind: SpaceKind
    n_global: int
    cell_dofs: list[np.ndarray]
    cell_signs: list[np.ndarray]
    boundary: np.ndarray          # global ids of Dirichlet DoFs
    n_vertex: int
    n_edge_block: int


def build_dof_map(mesh: PolygonalMesh, kind: SpaceKind) -> DofMap:
    p = kind.degree
    n_v = len(mesh.vertices)
    n_e = len(mesh.edges)
    n_m = poly_dim(p - 2)

    if kind.has_pointwise_trace:
        per_edge = p - 1
        edge_base = n_v
        cell_base = n_v + n_e * per_edge
    else:
        per_edge = p
        edge_base = 0
        cell_base = n_e * per_edge

    cell_dofs, cell_signs = [], []
    for c, cell in enumerate(mesh.cells):
        ids, signs = [], []
        if kind.has_pointwise_trace:
            ids += list(cell)
            signs += [1.0] * len(cell)
        for eid, forward in mesh.cell_edges[c]:
            base = edge_base + eid * per_edge
            if kind.has_pointwise_trace:
                rng = range(per_edge) if forward else range(per_edge - 1, -1, -1)
                ids += [base + k for k in rng]
                signs += [1.0] * per_edge
            else:
                ids += [base + k for k in range(per_edge)]
                signs += [1.0] * per_edge if forward else [(-1.0) ** k for k in range(per_edge)]
        ids += [cell_base + c * n_m + k for k in range(n_m)]
        signs += [1.0] * n_m
        cell_dofs.append(np.array(ids, dtype=np.int64))
        cell_signs.append(np.array(signs))

    bnd = set()
    for eid in mesh.boundary_edges():
        if kind.has_pointwise_trace:
            bnd.add(mesh.edges[eid].lo)
            bnd.add(mesh.edges[eid].hi)
            for k in range(per_edge):
                bnd.add(edge_base + eid * per_edge + k)
        else:
            for k in range(per_edge):
                bnd.add(edge_base + eid * per_edge + k)
    boundary = np.array(sorted(bnd), dtype=np.int64)
    n_global = cell_base + len(mesh.cells) * n_m
    return DofMap(kind, n_global, cell_dofs, cell_signs, boundary, n_v, n_e * per_edge)


def dirichlet_values(mesh: PolygonalMesh, kind: SpaceKind, g) -> np.ndarray:
    """Values for every boundary DoF, indexed like DofMap.boundary.

    Conforming data is sampled at vertices and edge nodes; nonconforming data
    is integrated against the canonical (low -> high vertex) edge basis.
    """
    p = kind.degree
    dm = build_dof_map(mesh, kind)
    vals = np.zeros(dm.n_global)
    if kind.has_pointwise_trace:
        params = gauss_lobatto_nodes(p)[1:-1] if p >= 2 else np.zeros(0)
        for vid in mesh.boundary_vertices():
            vals[vid] = g(mesh.vertices[vid, 0], mesh.vertices[vid, 1])
        for eid in mesh.boundary_edges():
            e = mesh.edges[eid]
            lo, hi = mesh.vertices[e.lo], mesh.vertices[e.hi]
            t = 0.5 * (1.0 + params)
            pts = lo[None, :] + t[:, None] * (hi - lo)[None, :]
            base = dm.n_vertex + eid * (p - 1)
            vals[base:base + p - 1] = g(pts[:, 0], pts[:, 1])
    else:
        rule = edge_quadrature(2 * p)
        for eid in mesh.boundary_edges():
            e = mesh.edges[eid]
            lo, hi = mesh.vertices[e.lo], mesh.vertices[e.hi]
            h = float(np.hypot(*(hi - lo)))
            pts, w = edge_points_weights(rule, lo, hi)
            eb = EdgeBasis(p - 1, h).eval_param(rule.points)
            gv = g(pts[:, 0], pts[:, 1])
            vals[eid * p:(eid + 1) * p] = (eb * w[:, None]).T @ gv / h
    return vals[dm.boundary]


@dataclass
class GlobalSystem:
    mesh: PolygonalMesh
    spec: ProblemSpec
    A: sp.csr_matrix
    b: np.ndarray
    dofmap: DofMap
    dirichlet: np.ndarray         # values on dofmap.boundary
    cells: list[LocalElementMatrices]
    max_gram_cond: float


def _shape_key(poly: Polygon, kind: SpaceKind, stab_kind: StabKind):
    rel = (poly.vertices - poly.centroid) / poly.diameter
    return (kind.family, kind.degree, stab_kind,
            poly.n_vertices, round(poly.diameter, 14),
            tuple(np.round(rel, 12).ravel()))


def assemble(mesh: PolygonalMesh, spec: ProblemSpec, *, load_level: int = 2,
             share_congruent: bool = True) -> GlobalSystem:
    """Assemble the global stiffness matrix and load vector.

    Congruent cells (translates of one shape) share their local matrices
    unless share_congruent is False.
    """
    dm = build_dof_map(mesh, spec.kind)
    rows, cols, vals = [], [], []
    b = np.zeros(dm.n_global)
    cells = []
    cache = {}
    max_cond = 0.0

    for c in range(mesh.n_cells):
        poly = mesh.cell_polygon(c)
        key = _shape_key(poly, spec.kind, spec.stab) if share_congruent else None
        if key is not None and key in cache:
            # all local matrices are invariant under translation and scaling of
            # the cell, but the monomial basis origin must follow the cell
            ref = cache[key]
            basis = MonomialBasis2D.for_polygon(poly, spec.kind.degree)
            projs = replace(ref.projectors, basis=basis)
            loc = LocalElementMatrices(poly, projs, ref.stab, ref.a_loc,
                                       ref.gram_cond)
        else:
            loc = local_stiffness(poly, spec.kind, spec.stab, spec.constant_fix)
            if key is not None:
                cache[key] = loc
        cells.append(loc)
        max_cond = max(max_cond, loc.gram_cond)

        ids = dm.cell_dofs[c]
        s = dm.cell_signs[c]
        A_signed = loc.a_loc * np.outer(s, s)
        rows.append(np.repeat(ids, len(ids)))
        cols.append(np.tile(ids, len(ids)))
        vals.append(A_signed.ravel())

        b_loc = local_load(poly, loc.projectors, spec.mms.f, level=load_level)
        np.add.at(b, ids, s * b_loc)

    A = sp.coo_matrix((np.concatenate(vals),
                       (np.concatenate(rows), np.concatenate(cols))),
                      shape=(dm.n_global, dm.n_global)).tocsr()
    g = dirichlet_values(mesh, spec.kind, spec.mms.u)
    return GlobalSystem(mesh, spec, A, b, dm, g, cells, max_cond)


@dataclass
class SolveResult:
    system: GlobalSystem
    u: np.ndarray                 # full global DoF vector
    residual: float
    method: str
    n_free: int

    @property
    def n_dof(self) -> int:
        return self.system.dofmap.n_global


def solve(system: GlobalSystem, method: str = "direct", tol: float = 1e-12,
          maxiter: int | None = None) -> SolveResult:
    dm = system.dofmap
    n = dm.n_global
    free = np.setdiff1d(np.arange(n), dm.boundary, assume_unique=False)
    u = np.zeros(n)
    u[dm.boundary] = system.dirichlet

    if len(free) == 0:
        return SolveResult(system, u, 0.0, method, 0)

    A = system.A
    Aff = A[free][:, free].tocsc()
    rhs = system.b[free] - A[free][:, dm.boundary] @ system.dirichlet

    if method == "direct":
        uf = spla.splu(Aff).solve(rhs)
    elif method == "cg":
        maxiter = maxiter or 20 * len(free)
        try:
            uf, info = spla.cg(Aff, rhs, rtol=tol, maxiter=maxiter)
        except TypeError:   # older scipy spells the kwarg tol
            uf, info = spla.cg(Aff, rhs, tol=tol, maxiter=maxiter)
        if info != 0:
            raise SolverError(f"CG failed to converge (info={info})")
    else:
        raise SolverError(f"unknown solve method {method!r}")

    scale = max(float(np.linalg.norm(rhs)), 1e-300)
    res = float(np.linalg.norm(Aff @ uf - rhs)) / scale
    if res > max(tol * 100.0, 1e-9):
        raise SolverError(f"linear solve residual {res:.3e} above tolerance")
    u[free] = uf
    return SolveResult(system, u, res, method, len(free))


def h1_projection_error(result: SolveResult, grad_exact, level: int = 2):
    """Broken H1 distance between the exact gradient and the projected solution.

    Returns (per_cell, total).
    """
    sys_ = result.system
    per_cell = np.zeros(sys_.mesh.n_cells)
    p = sys_.spec.kind.degree
    for c, loc in enumerate(sys_.cells):
        ids = sys_.dofmap.cell_dofs[c]
        s = sys_.dofmap.cell_signs[c]
        u_loc = s * result.u[ids]
        coeffs = loc.projectors.pinabla @ u_loc
        pts, w = polygon_quadrature(loc.poly, 2 * p + 2, level=level)
        gmono = loc.projectors.basis.grad(pts)        # (q, dim, 2)
        gh = np.einsum("qid,i->qd", gmono, coeffs)
        gx, gy = grad_exact(pts[:, 0], pts[:, 1])
        diff = (gx - gh[:, 0]) ** 2 + (gy - gh[:, 1]) ** 2
        per_cell[c] = float(w @ diff)
    total = math.sqrt(max(per_cell.sum(), 0.0))
    return np.sqrt(np.maximum(per_cell, 0.0)), total


def solve_poisson(mesh: PolygonalMesh, spec: ProblemSpec, method: str = "direct"):
    """Assemble, solve and measure the projected H1 error in one call."""
    system = assemble(mesh, spec)
    result = solve(system, method=method)
    _, err = h1_projection_error(result, spec.mms.grad)
    return result, err


@dataclass(frozen=True)
class ConvergenceRow:
    n: int
    h_max: float
    n_dof: int
    err: float
    rate: float   # nan on the first row


def run_convergence_study(spec: ProblemSpec, ns, domain=(0.0, 0.0, 1.0, 1.0),
                          method: str = "direct") -> list[ConvergenceRow]:
    from .mesh import generate_square_mesh

    rows = []
    prev = None
    for n in ns:
        mesh = generate_square_mesh(n, domain)
        result, err = solve_poisson(mesh, spec, method=method)
        h = mesh.max_diameter()
        rate = float("nan")
        if prev is not None and err > 0 and prev[1] > 0:
            rate = math.log(prev[1] / err) / math.log(prev[0] / h)
        rows.append(ConvergenceRow(n, h, result.n_dof, err, rate))
        prev = (h, err)
    return rows
