"""Local virtual element spaces: DoF tables, energy and L2 projectors.

Three local spaces on a polygon K share the operator core:

* conforming    - vertex values, Gauss-Lobatto edge values, bulk moments
* enhanced      - conforming DoFs, bulk L2 projector extended to full degree
* nonconforming - scaled edge moments and bulk moments

The energy projector PiNabla maps DoF vectors to polynomial coefficients and
is exact on polynomials; its constant part is fixed by a configurable mean
condition (boundary mean by default).
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum

import numpy as np

from .mesh import GeometryError, Polygon
from .polybasis import (EdgeBasis, MonomialBasis2D, edge_points_weights,
                        edge_quadrature, gauss_lobatto_nodes, lagrange_matrix,
                        laplacian_matrix, monomial_indices, poly_dim,
                        polygon_quadrature)


class SpaceFamily(Enum):
    CONFORMING = "conforming"
    ENHANCED = "enhanced"
    NONCONFORMING = "nonconforming"


@dataclass(frozen=True)
class SpaceKind:
    family: SpaceFamily
    degree: int

    def __post_init__(self):
        if self.degree < 1:
            raise ValueError("degree must be >= 1")

    @property
    def has_pointwise_trace(self) -> bool:
        return self.family in (SpaceFamily.CONFORMING, SpaceFamily.ENHANCED)

    @property
    def label(self) -> str:
        return self.family.value


def conforming(p: int) -> SpaceKind:
    return SpaceKind(SpaceFamily.CONFORMING, p)


def enhanced(p: int) -> SpaceKind:
    return SpaceKind(SpaceFamily.ENHANCED, p)


def nonconforming(p: int) -> SpaceKind:
    return SpaceKind(SpaceFamily.NONCONFORMING, p)


class ConstantFix(Enum):
    """How the constant part of PiNabla is pinned down."""

    BOUNDARY_MEAN = "boundary_mean"
    BULK_MEAN = "bulk_mean"
    VERTEX_AVERAGE = "vertex_average"


@dataclass(frozen=True)
class DofDescriptor:
    kind: str      # "vertex" | "edge_node" | "edge_moment" | "moment"
    entity: int    # vertex or edge id; -1 for bulk moments
    index: int     # node/moment index on the entity, or position in P_{p-2}


@dataclass(frozen=True)
class DofTable:
    """Local DoF layout: vertices, then edge DoFs edge by edge, then moments."""

    kind: SpaceKind
    n_dofs: int
    descriptors: tuple[DofDescriptor, ...]
    vertex_index: np.ndarray       # (n_v,) or empty for nonconforming
    edge_index: np.ndarray         # (n_e, per_edge)
    moment_index: np.ndarray       # (dim P_{p-2},)
    edge_node_params: np.ndarray   # conforming: interior Gauss-Lobatto xi, (p-1,)


def dof_table(poly: Polygon, kind: SpaceKind) -> DofTable:
    p = kind.degree
    n_v = poly.n_vertices
    n_m = poly_dim(p - 2)
    desc = []
    if kind.has_pointwise_trace:
        vertex_index = np.arange(n_v, dtype=np.int64)
        desc += [DofDescriptor("vertex", i, 0) for i in range(n_v)]
        per_edge = p - 1
        edge_index = (n_v + np.arange(n_v * per_edge, dtype=np.int64)).reshape(n_v, per_edge)
        for e in range(n_v):
            desc += [DofDescriptor("edge_node", e, m) for m in range(per_edge)]
        params = gauss_lobatto_nodes(p)[1:-1] if p >= 2 else np.zeros(0)
        base = n_v + n_v * per_edge
    else:
        vertex_index = np.zeros(0, dtype=np.int64)
        per_edge = p
        edge_index = np.arange(n_v * per_edge, dtype=np.int64).reshape(n_v, per_edge)
        for e in range(n_v):
            desc += [DofDescriptor("edge_moment", e, m) for m in range(per_edge)]
        params = np.zeros(0)
        base = n_v * per_edge
    moment_index = base + np.arange(n_m, dtype=np.int64)
    desc += [DofDescriptor("moment", -1, m) for m in range(n_m)]
    n_dofs = base + n_m
    assert n_dofs == n_v * p + n_m
    return DofTable(kind, n_dofs, tuple(desc), vertex_index, edge_index,
                    moment_index, params)


def edge_trace_dofs(table: DofTable, e: int):
    """Conforming trace on edge e: DoF ids and Gauss-Lobatto xi, endpoints included."""
    n_v = len(table.vertex_index)
    ids = np.concatenate(([table.vertex_index[e]], table.edge_index[e],
                          [table.vertex_index[(e + 1) % n_v]]))
    xi = np.concatenate(([-1.0], table.edge_node_params, [1.0]))
    return ids.astype(np.int64), xi


def dof_matrix(poly: Polygon, kind: SpaceKind) -> np.ndarray:
    """(N_K, dim P_p) matrix of every DoF functional applied to every monomial."""
    p = kind.degree
    basis = MonomialBasis2D.for_polygon(poly, p)
    table = dof_table(poly, kind)
    D = np.zeros((table.n_dofs, basis.dim))

    if kind.has_pointwise_trace:
        D[table.vertex_index] = basis.eval(poly.vertices)
        if p >= 2:
            for e, edge in enumerate(poly.edges):
                v0 = poly.vertices[edge.start]
                v1 = poly.vertices[edge.end]
                t = 0.5 * (1.0 + table.edge_node_params)
                pts = v0[None, :] + t[:, None] * (v1 - v0)[None, :]
                D[table.edge_index[e]] = basis.eval(pts)
    else:
        rule = edge_quadrature(2 * p)
        for e, edge in enumerate(poly.edges):
            v0 = poly.vertices[edge.start]
            v1 = poly.vertices[edge.end]
            pts, w = edge_points_weights(rule, v0, v1)
            eb = EdgeBasis(p - 1, edge.length).eval_param(rule.points)
            vals = basis.eval(pts)
            D[table.edge_index[e]] = (eb * w[:, None]).T @ vals / edge.length

    if p >= 2:
        pts, w = polygon_quadrature(poly, 2 * p)
        vals = basis.eval(pts)
        sub = vals[:, :poly_dim(p - 2)]
        D[table.moment_index] = (sub * w[:, None]).T @ vals / poly.area
    return D


def dofs_of_polynomial(poly: Polygon, kind: SpaceKind, coeffs) -> np.ndarray:
    """DoF vector of the polynomial with the given monomial coefficients."""
    coeffs = np.asarray(coeffs, dtype=float)
    return dof_matrix(poly, kind) @ coeffs


def grad_gram(poly: Polygon, basis: MonomialBasis2D) -> np.ndarray:
    """Exact gradient Gram matrix of the scaled monomials over the polygon."""
    deg = max(2 * basis.degree - 2, 0)
    pts, w = polygon_quadrature(poly, deg)
    g = basis.grad(pts)          # (n, dim, 2)
    return np.einsum("q,qid,qjd->ij", w, g, g)


def mass_matrix(poly: Polygon, basis: MonomialBasis2D, up_to: int | None = None) -> np.ndarray:
    """Exact monomial mass matrix; optionally only the first dim P_{up_to} rows."""
    pts, w = polygon_quadrature(poly, 2 * basis.degree)
    vals = basis.eval(pts)
    rows = vals if up_to is None else vals[:, :poly_dim(up_to)]
    return (rows * w[:, None]).T @ vals


def monomial_integrals(poly: Polygon, basis: MonomialBasis2D) -> np.ndarray:
    pts, w = polygon_quadrature(poly, basis.degree)
    return w @ basis.eval(pts)


def _edge_normal_grad_coeffs(poly, basis, e, edge_rule):
    """n . grad m_alpha on edge e expanded in the edge monomial basis.

    The restriction has degree <= p-1, so its L2(e) projection onto the edge
    basis is the exact expansion; returns (p, dim P_p) coefficients.
    """
    p = basis.degree
    edge = poly.edges[e]
    v0, v1 = poly.vertices[edge.start], poly.vertices[edge.end]
    pts, w = edge_points_weights(edge_rule, v0, v1)
    gn = basis.grad(pts) @ edge.normal      # (n_q, dim)
    eb = EdgeBasis(p - 1, edge.length)
    E = eb.eval_param(edge_rule.points)     # (n_q, p)
    M = eb.mass_matrix()
    rhs = (E * w[:, None]).T @ gn           # (p, dim)
    return np.linalg.solve(M, rhs)


def _boundary_functional_rows(poly, kind, table, basis, fix):
    """P0 functional applied to the monomials and to the virtual basis (row pair)."""
    p = kind.degree
    dim = basis.dim
    row_m = np.zeros(dim)
    row_phi = np.zeros(table.n_dofs)
    if fix is ConstantFix.BOUNDARY_MEAN:
        per = sum(e.length for e in poly.edges)
        rule = edge_quadrature(2 * p)
        for e, edge in enumerate(poly.edges):
            v0, v1 = poly.vertices[edge.start], poly.vertices[edge.end]
            pts, w = edge_points_weights(rule, v0, v1)
            row_m += w @ basis.eval(pts)
            if kind.has_pointwise_trace:
                ids, xi = edge_trace_dofs(table, e)
                lag = lagrange_matrix(xi, rule.points)
                np.add.at(row_phi, ids, w @ lag)
            else:
                row_phi[table.edge_index[e][0]] += edge.length
        row_m /= per
        row_phi /= per
    elif fix is ConstantFix.BULK_MEAN:
        if p < 2:
            raise ValueError("bulk-mean constant fixing needs internal moments (p >= 2)")
        row_m = monomial_integrals(poly, basis) / poly.area
        row_phi[table.moment_index[0]] = 1.0
    elif fix is ConstantFix.VERTEX_AVERAGE:
        if not kind.has_pointwise_trace:
            raise ValueError("vertex-average constant fixing needs vertex DoFs")
        row_m = basis.eval(poly.vertices).mean(axis=0)
        row_phi[table.vertex_index] = 1.0 / poly.n_vertices
    else:
        raise ValueError(f"unknown constant fix {fix!r}")
    return row_m, row_phi


def compute_pinabla(poly: Polygon, kind: SpaceKind,
                    constant_fix: ConstantFix = ConstantFix.BOUNDARY_MEAN):
    """Energy projector onto P_p.

    Returns (PiNabla, PiNablaDof): coefficients (dim P_p, N_K) and the
    DoF-to-DoF form (N_K, N_K).  Raises GeometryError when the fixed Gram
    system is numerically singular.
    """
    p = kind.degree
    basis = MonomialBasis2D.for_polygon(poly, p)
    table = dof_table(poly, kind)
    G = grad_gram(poly, basis)
    B = np.zeros((basis.dim, table.n_dofs))

    # bulk part: -(Laplacian m_alpha, phi_j) through the moment DoFs
    if p >= 2:
        L = laplacian_matrix(basis)            # (dim P_{p-2}, dim P_p)
        B[:, table.moment_index] -= poly.area * L.T

    # boundary part: (n . grad m_alpha, phi_j) edge by edge
    rule = edge_quadrature(2 * p)
    for e, edge in enumerate(poly.edges):
        v0, v1 = poly.vertices[edge.start], poly.vertices[edge.end]
        pts, w = edge_points_weights(rule, v0, v1)
        gn = basis.grad(pts) @ edge.normal     # (n_q, dim)
        if kind.has_pointwise_trace:
            ids, xi = edge_trace_dofs(table, e)
            lag = lagrange_matrix(xi, rule.points)   # (n_q, p+1)
            contrib = gn.T @ (lag * w[:, None])      # (dim, p+1)
            np.add.at(B, (slice(None), ids), contrib)
        else:
            C = _edge_normal_grad_coeffs(poly, basis, e, rule)  # (p, dim)
            B[:, table.edge_index[e]] += edge.length * C.T

    row_m, row_phi = _boundary_functional_rows(poly, kind, table, basis, constant_fix)
    Gfix = G.copy()
    Gfix[0] = row_m
    Bfix = B.copy()
    Bfix[0] = row_phi

    cond = np.linalg.cond(Gfix)
    if not np.isfinite(cond) or cond > 1e14:
        raise GeometryError(
            f"singular projector Gram matrix (condition estimate {cond:.3e}); "
            "polygon is numerically degenerate")
    pinabla = np.linalg.solve(Gfix, Bfix)
    pinabla_dof = dof_matrix(poly, kind) @ pinabla
    return pinabla, pinabla_dof


def compute_pi0(poly: Polygon, kind: SpaceKind, pinabla: np.ndarray | None = None):
    """Bulk L2 projectors from the moment DoFs.

    Returns (Pi0, Pi0Full): Pi0 maps DoFs to P_{p-2} coefficients; Pi0Full is
    the full-degree projector available in the enhanced space (None otherwise).
    """
    p = kind.degree
    basis = MonomialBasis2D.for_polygon(poly, p)
    table = dof_table(poly, kind)
    n_m = poly_dim(p - 2)
    pi0 = np.zeros((n_m, table.n_dofs))
    if n_m:
        M = mass_matrix(poly, basis, up_to=p - 2)[:, :n_m]
        R = np.zeros((n_m, table.n_dofs))
        R[np.arange(n_m), table.moment_index] = poly.area
        pi0 = np.linalg.solve(M, R)

    pi0_full = None
    if kind.family is SpaceFamily.ENHANCED:
        if pinabla is None:
            pinabla, _ = compute_pinabla(poly, kind)
        Mfull = mass_matrix(poly, basis)
        R = np.zeros((basis.dim, table.n_dofs))
        R[:n_m, table.moment_index] = poly.area * np.eye(n_m)
        high = Mfull @ pinabla
        R[n_m:] = high[n_m:]
        pi0_full = np.linalg.solve(Mfull, R)
    return pi0, pi0_full


def compute_pi0_edge(poly: Polygon, kind: SpaceKind):
    """Per-edge L2 projectors onto P_{p-1}(e) for the nonconforming space.

    Returns a tuple of (p, N_K) matrices mapping DoFs to edge-basis coefficients.
    """
    if kind.has_pointwise_trace:
        raise ValueError("edge projectors are defined for the nonconforming space")
    p = kind.degree
    table = dof_table(poly, kind)
    out = []
    for e, edge in enumerate(poly.edges):
        M = EdgeBasis(p - 1, edge.length).mass_matrix()
        R = np.zeros((p, table.n_dofs))
        R[np.arange(p), table.edge_index[e]] = edge.length
        out.append(np.linalg.solve(M, R))
    return tuple(out)


@dataclass(frozen=True)
class ProjectorSet:
    """All local projectors for one polygon and space kind."""

    kind: SpaceKind
    basis: MonomialBasis2D
    table: DofTable
    pinabla: np.ndarray
    pinabla_dof: np.ndarray
    pi0: np.ndarray
    pi0_full: np.ndarray | None
    pi0_edge: tuple[np.ndarray, ...] | None
    grad_gram: np.ndarray

    @property
    def n_dofs(self) -> int:
        return self.table.n_dofs


def build_projectors(poly: Polygon, kind: SpaceKind,
                     constant_fix: ConstantFix = ConstantFix.BOUNDARY_MEAN) -> ProjectorSet:
    basis = MonomialBasis2D.for_polygon(poly, kind.degree)
    table = dof_table(poly, kind)
    G = grad_gram(poly, basis)
    pinabla, pinabla_dof = compute_pinabla(poly, kind, constant_fix)
    pi0, pi0_full = compute_pi0(poly, kind, pinabla)
    pi0_edge = None if kind.has_pointwise_trace else compute_pi0_edge(poly, kind)
    return ProjectorSet(kind, basis, table, pinabla, pinabla_dof, pi0, pi0_full,
                        pi0_edge, G)


def interpolate_dofs(poly: Polygon, kind: SpaceKind, v, *, level: int = 2,
                     analytic_moments=None) -> np.ndarray:
    """DoF vector of a smooth function v(x, y).

    Bulk moments use sub-triangulation quadrature at the given level; edge
    moments use a high-order Gauss rule.  `analytic_moments`, if given, maps a
    multi-index to the scaled bulk moment and bypasses quadrature.
    """
    p = kind.degree
    table = dof_table(poly, kind)
    out = np.zeros(table.n_dofs)

    if kind.has_pointwise_trace:
        out[table.vertex_index] = v(poly.vertices[:, 0], poly.vertices[:, 1])
        if p >= 2:
            for e, edge in enumerate(poly.edges):
                v0, v1 = poly.vertices[edge.start], poly.vertices[edge.end]
                t = 0.5 * (1.0 + table.edge_node_params)
                pts = v0[None, :] + t[:, None] * (v1 - v0)[None, :]
                out[table.edge_index[e]] = v(pts[:, 0], pts[:, 1])
    else:
        rule = edge_quadrature(2 * p + 12)
        for e, edge in enumerate(poly.edges):
            v0, v1 = poly.vertices[edge.start], poly.vertices[edge.end]
            pts, w = edge_points_weights(rule, v0, v1)
            eb = EdgeBasis(p - 1, edge.length).eval_param(rule.points)
            vals = v(pts[:, 0], pts[:, 1])
            out[table.edge_index[e]] = (eb * w[:, None]).T @ vals / edge.length

    if p >= 2:
        idx = monomial_indices(p - 2)
        if analytic_moments is not None:
            out[table.moment_index] = [analytic_moments(tuple(a)) for a in idx]
        else:
            basis = MonomialBasis2D.for_polygon(poly, p - 2)
            pts, w = polygon_quadrature(poly, 2 * p + 2, level=max(level, 2))
            vals = basis.eval(pts)
            fv = v(pts[:, 0], pts[:, 1])
            out[table.moment_index] = (vals * (w * fv)[:, None]).sum(axis=0) / poly.area
    return out
