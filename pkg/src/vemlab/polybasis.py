"""Scaled monomial bases on polygons and edges, plus edge/triangle quadrature."""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from .mesh import Polygon, subtriangulate


def poly_dim(p: int) -> int:
    """dim P_p in two variables; 0 for p < 0."""
    return 0 if p < 0 else (p + 1) * (p + 2) // 2


def monomial_indices(p: int) -> np.ndarray:
    """Multi-indices of the 2D monomials up to total degree p, graded order.

    Within each degree block the x-exponent decreases, so the sequence starts
    (0,0), (1,0), (0,1), (2,0), (1,1), (0,2), ...
    """
    if p < 0:
        return np.zeros((0, 2), dtype=np.int64)
    rows = []
    for d in range(p + 1):
        for a1 in range(d, -1, -1):
            rows.append((a1, d - a1))
    return np.array(rows, dtype=np.int64)


@dataclass(frozen=True)
class MonomialBasis2D:
    """Scaled monomials m_a(x) = ((x - x_K)/h_K)^a1 * ((y - y_K)/h_K)^a2."""

    degree: int
    centroid: np.ndarray
    diameter: float
    indices: np.ndarray

    @classmethod
    def for_polygon(cls, poly: Polygon, degree: int) -> "MonomialBasis2D":
        return cls(degree, poly.centroid, poly.diameter, monomial_indices(degree))

    @property
    def dim(self) -> int:
        return len(self.indices)

    def eval(self, points) -> np.ndarray:
        """(n_points, dim) array of monomial values."""
        pts = np.atleast_2d(np.asarray(points, dtype=float))
        xi = (pts - self.centroid) / self.diameter
        px = xi[:, 0][:, None] ** self.indices[:, 0][None, :]
        py = xi[:, 1][:, None] ** self.indices[:, 1][None, :]
        return px * py

    def grad(self, points) -> np.ndarray:
        """(n_points, dim, 2) array of monomial gradients."""
        pts = np.atleast_2d(np.asarray(points, dtype=float))
        xi = (pts - self.centroid) / self.diameter
        a1 = self.indices[:, 0][None, :]
        a2 = self.indices[:, 1][None, :]
        x = xi[:, 0][:, None]
        y = xi[:, 1][:, None]
        gx = np.where(a1 > 0, a1 * x ** np.maximum(a1 - 1, 0) * y ** a2, 0.0)
        gy = np.where(a2 > 0, a2 * x ** a1 * y ** np.maximum(a2 - 1, 0), 0.0)
        return np.stack([gx, gy], axis=-1) / self.diameter


def eval_monomials(basis: MonomialBasis2D, point) -> np.ndarray:
    return basis.eval(np.asarray(point, dtype=float)[None, :])[0]


def grad_monomials(basis: MonomialBasis2D, point) -> np.ndarray:
    """(2, dim) gradient of every monomial at one point."""
    return basis.grad(np.asarray(point, dtype=float)[None, :])[0].T


def laplacian_in_basis(basis: MonomialBasis2D, alpha) -> np.ndarray:
    """Coefficients of Laplacian(m_alpha) over the degree-(p-2) monomials."""
    sub = monomial_indices(basis.degree - 2)
    pos = {(int(a), int(b)): i for i, (a, b) in enumerate(sub)}
    out = np.zeros(len(sub))
    a1, a2 = int(alpha[0]), int(alpha[1])
    h2 = basis.diameter ** 2
    if a1 >= 2:
        out[pos[(a1 - 2, a2)]] += a1 * (a1 - 1) / h2
    if a2 >= 2:
        out[pos[(a1, a2 - 2)]] += a2 * (a2 - 1) / h2
    return out


def laplacian_matrix(basis: MonomialBasis2D) -> np.ndarray:
    """(dim P_{p-2}, dim P_p) matrix mapping coefficients to Laplacian coefficients."""
    out = np.zeros((poly_dim(basis.degree - 2), basis.dim))
    for j, alpha in enumerate(basis.indices):
        out[:, j] = laplacian_in_basis(basis, alpha)
    return out


@dataclass(frozen=True)
class EdgeBasis:
    """Scaled edge monomials m_b(s) = ((s - s_mid)/h_e)^b in arclength s."""

    degree: int
    length: float

    @property
    def dim(self) -> int:
        return self.degree + 1

    def eval_param(self, xi) -> np.ndarray:
        """Values at reference coordinates xi in [-1, 1]; (n, dim)."""
        xi = np.atleast_1d(np.asarray(xi, dtype=float))
        tau = 0.5 * xi   # (s - s_mid)/h_e
        return tau[:, None] ** np.arange(self.degree + 1)[None, :]

    def mass_matrix(self) -> np.ndarray:
        """Exact edge mass matrix: integral over the edge of m_i m_j ds."""
        n = self.degree + 1
        i = np.arange(n)[:, None]
        j = np.arange(n)[None, :]
        s = i + j
        M = np.where(s % 2 == 0, self.length / ((s + 1) * 2.0 ** s), 0.0)
        return M


# ---------------------------------------------------------------------------
# 1D node sets and quadrature

def gauss_lobatto_nodes(p: int) -> np.ndarray:
    """The p+1 Gauss-Lobatto nodes on [-1, 1] (endpoints plus roots of P_p')."""
    if p < 1:
        raise ValueError("p must be >= 1")
    if p == 1:
        return np.array([-1.0, 1.0])
    dP = np.polynomial.legendre.Legendre.basis(p).deriv()
    interior = np.sort(np.real(dP.roots()))
    nodes = np.concatenate(([-1.0], interior, [1.0]))
    return 0.5 * (nodes - nodes[::-1])   # exact symmetry


@dataclass(frozen=True)
class QuadratureRule:
    """points: (n,) on [-1,1] for edges, (n,2) on the unit reference triangle
    {(0,0),(1,0),(0,1)} for triangles; weights sum to the reference measure."""

    points: np.ndarray
    weights: np.ndarray
    degree: int


@lru_cache(maxsize=None)
def edge_quadrature(degree: int) -> QuadratureRule:
    """Gauss-Legendre rule on [-1, 1] exact to the requested degree."""
    if degree < 0:
        raise ValueError("degree must be >= 0")
    n = degree // 2 + 1
    x, w = np.polynomial.legendre.leggauss(n)
    x.flags.writeable = False
    w.flags.writeable = False
    return QuadratureRule(x, w, degree)


@lru_cache(maxsize=None)
def triangle_quadrature(degree: int) -> QuadratureRule:
    """Positive-weight rule on the reference triangle, exact to the requested degree.

    Collapsed tensor-product Gauss rule: the square [0,1]^2 is mapped by
    (u, v) -> (u, v(1-u)) with Jacobian (1-u), which raises the u-degree of a
    degree-d integrand to at most d+1.
    """
    if degree < 0:
        raise ValueError("degree must be >= 0")
    n = (degree + 3) // 2   # 2n-1 >= degree+1
    x, w = np.polynomial.legendre.leggauss(n)
    u = 0.5 * (x + 1.0)
    wu = 0.5 * w
    U, V = np.meshgrid(u, u, indexing="ij")
    WU, WV = np.meshgrid(wu, wu, indexing="ij")
    pts = np.stack([U.ravel(), (V * (1.0 - U)).ravel()], axis=1)
    wts = (WU * WV * (1.0 - U)).ravel()
    pts.flags.writeable = False
    wts.flags.writeable = False
    return QuadratureRule(pts, wts, degree)


def triangle_points_weights(rule: QuadratureRule, a, b, c):
    """Physical points and weights; weights sum to the triangle area."""
    a = np.asarray(a, dtype=float)
    B = np.stack([np.asarray(b, dtype=float) - a, np.asarray(c, dtype=float) - a], axis=1)
    det = B[0, 0] * B[1, 1] - B[0, 1] * B[1, 0]
    pts = a[None, :] + rule.points @ B.T
    return pts, rule.weights * abs(det)


def polygon_quadrature(poly: Polygon, degree: int, level: int = 0):
    """Quadrature over a polygon via its centroid-fan sub-triangulation.

    Exactness equals the triangle rule's on every sub-triangle, hence on the
    polygon; level > 0 refines the fan for non-polynomial integrands.
    """
    tri = subtriangulate(poly, level)
    rule = triangle_quadrature(degree)
    all_pts, all_w = [], []
    for t in tri.triangles:
        pts, w = triangle_points_weights(rule, tri.points[t[0]], tri.points[t[1]],
                                         tri.points[t[2]])
        all_pts.append(pts)
        all_w.append(w)
    return np.concatenate(all_pts), np.concatenate(all_w)


def edge_points_weights(rule: QuadratureRule, v0, v1):
    """Map an edge rule from [-1,1] onto the segment v0 -> v1."""
    v0 = np.asarray(v0, dtype=float)
    v1 = np.asarray(v1, dtype=float)
    mid = 0.5 * (v0 + v1)
    half = 0.5 * (v1 - v0)
    pts = mid[None, :] + rule.points[:, None] * half[None, :]
    h = np.hypot(*(v1 - v0))
    return pts, rule.weights * (h / 2.0)


def lagrange_matrix(nodes: np.ndarray, x: np.ndarray) -> np.ndarray:
    """(len(x), len(nodes)) values of the Lagrange basis on `nodes` at `x`.

    Barycentric form; exact node hits handled explicitly.
    """
    nodes = np.asarray(nodes, dtype=float)
    x = np.atleast_1d(np.asarray(x, dtype=float))
    diff = nodes[:, None] - nodes[None, :]
    np.fill_diagonal(diff, 1.0)
    w = 1.0 / diff.prod(axis=1)
    dx = x[:, None] - nodes[None, :]
    hit = dx == 0.0
    out = np.empty((len(x), len(nodes)))
    safe = np.where(hit, 1.0, dx)
    terms = w[None, :] / safe
    denom = terms.sum(axis=1)
    out[:] = terms / denom[:, None]
    rows = hit.any(axis=1)
    out[rows] = hit[rows].astype(float)
    return out
