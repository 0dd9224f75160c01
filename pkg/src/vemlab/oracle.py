"""Fine-mesh finite element ground truth for the virtual basis functions.

Each virtual basis function solves a local PDE (polynomial Laplacian, with a
polynomial trace or polynomial normal flux).  The oracle realizes it with
continuous Lagrange elements on the quadrisected centroid-fan triangulation:

* conforming    - Dirichlet trace imposed at fine boundary nodes, bulk moment
                  constraints enforced through Lagrange multipliers
* nonconforming - free boundary; edge-moment and bulk-moment constraints all
                  enforced through Lagrange multipliers

The element degree defaults to max(2, p) so degree-p polynomials belong to
the fine space and unisolvence/membership checks are meaningful at tight
tolerances.  All N_K right-hand sides reuse one sparse factorization.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from .mesh import Polygon, subtriangulate
from .polybasis import (EdgeBasis, MonomialBasis2D, edge_quadrature,
                        gauss_lobatto_nodes, lagrange_matrix, monomial_indices,
                        poly_dim, triangle_quadrature)
from .space import (SpaceFamily, SpaceKind, conforming, dof_table, grad_gram,
                    monomial_integrals, nonconforming)


class OracleError(RuntimeError):
    """Raised when a fine-mesh solve fails or misses its residual tolerance."""


@dataclass(frozen=True)
class OracleConfig:
    level: int = 4
    fem_degree: int | None = None   # None: max(2, p)
    residual_tol: float = 1e-10

    def degree_for(self, p: int) -> int:
        return self.fem_degree if self.fem_degree is not None else max(2, p)


@lru_cache(maxsize=8)
def _reference_element(k: int):
    """Lattice nodes, monomial exponents and coefficient matrix of P_k."""
    nodes = []
    for j in range(k + 1):
        for i in range(k + 1 - j):
            nodes.append((i / k, j / k))
    nodes = np.array(nodes)
    exps = monomial_indices(k)
    V = nodes[:, 0][:, None] ** exps[:, 0][None, :] * nodes[:, 1][:, None] ** exps[:, 1][None, :]
    C = np.linalg.inv(V)        # column l: monomial coefficients of basis fn l
    lattice = []
    for j in range(k + 1):
        for i in range(k + 1 - j):
            lattice.append((i, j))
    return nodes, np.array(lattice, dtype=np.int64), exps, C


def _eval_ref_basis(C, exps, pts):
    P = pts[:, 0][:, None] ** exps[:, 0][None, :] * pts[:, 1][:, None] ** exps[:, 1][None, :]
    return P @ C


def _eval_ref_grad(C, exps, pts):
    e1 = exps[:, 0][None, :]
    e2 = exps[:, 1][None, :]
    x = pts[:, 0][:, None]
    y = pts[:, 1][:, None]
    dx = np.where(e1 > 0, e1 * x ** np.maximum(e1 - 1, 0) * y ** e2, 0.0)
    dy = np.where(e2 > 0, e2 * x ** e1 * y ** np.maximum(e2 - 1, 0), 0.0)
    return np.stack([dx @ C, dy @ C], axis=-1)    # (nq, nb, 2)


class FineSpace:
    """Continuous P_k Lagrange space on the sub-triangulated polygon."""

    def __init__(self, poly: Polygon, level: int, degree: int):
        if degree < 1:
            raise OracleError("fem degree must be >= 1")
        self.poly = poly
        self.level = level
        self.degree = degree
        self.tri = subtriangulate(poly, level)
        k = degree
        pts = self.tri.points
        tris = self.tri.triangles
        n_pt = len(pts)
        n_tri = len(tris)

        # global fine edges
        edge_ids: dict[tuple[int, int], int] = {}
        for t in tris:
            for a, b in ((t[0], t[1]), (t[1], t[2]), (t[2], t[0])):
                key = (a, b) if a < b else (b, a)
                edge_ids.setdefault(key, len(edge_ids))
        self._edge_ids = edge_ids
        n_ed = len(edge_ids)
        n_int = (k - 1) * (k - 2) // 2

        self.n_nodes = n_pt + (k - 1) * n_ed + n_int * n_tri
        self._n_pt = n_pt
        self._edge_base = n_pt
        self._tri_base = n_pt + (k - 1) * n_ed

        coords = np.zeros((self.n_nodes, 2))
        coords[:n_pt] = pts
        if k >= 2:
            for (a, b), eid in edge_ids.items():
                for m in range(1, k):
                    coords[n_pt + eid * (k - 1) + (m - 1)] = pts[a] + (pts[b] - pts[a]) * (m / k)

        ref_nodes, lattice, exps, C = _reference_element(k)
        self._exps = exps
        self._C = C
        interior_local = [n for n, (i, j) in enumerate(lattice)
                          if i > 0 and j > 0 and i + j < k]

        nb = len(lattice)
        elem = np.zeros((n_tri, nb), dtype=np.int64)
        for ti, (a, b, c) in enumerate(tris):
            for n, (i, j) in enumerate(lattice):
                if i == 0 and j == 0:
                    g = a
                elif i == k and j == 0:
                    g = b
                elif i == 0 and j == k:
                    g = c
                elif j == 0:
                    u, v = (a, b) if a < b else (b, a)
                    m = i if a < b else k - i
                    g = n_pt + edge_ids[(u, v)] * (k - 1) + (m - 1)
                elif i == 0:
                    u, v = (a, c) if a < c else (c, a)
                    m = j if a < c else k - j
                    g = n_pt + edge_ids[(u, v)] * (k - 1) + (m - 1)
                elif i + j == k:
                    u, v = (b, c) if b < c else (c, b)
                    m = j if b < c else k - j
                    g = n_pt + edge_ids[(u, v)] * (k - 1) + (m - 1)
                else:
                    g = self._tri_base + n_int * ti + interior_local.index(n)
                elem[ti, n] = g
        self.elem = elem
        if k >= 3:
            A0 = pts[tris[:, 0]]
            Bm = np.stack([pts[tris[:, 1]] - A0, pts[tris[:, 2]] - A0], axis=-1)
            for li, n in enumerate(interior_local):
                ph = A0 + Bm @ ref_nodes[n]
                coords[self._tri_base + li::n_int] = ph
        self.node_coords = coords

        # tabulate once on a rule good for stiffness and monomial pairings
        rule = triangle_quadrature(2 * k + 8)
        self._rule = rule
        self._N = _eval_ref_basis(C, exps, rule.points)          # (nq, nb)
        self._dN = _eval_ref_grad(C, exps, rule.points)          # (nq, nb, 2)

        A0 = pts[tris[:, 0]]
        B = np.stack([pts[tris[:, 1]] - A0, pts[tris[:, 2]] - A0], axis=-1)  # (m,2,2)
        det = B[:, 0, 0] * B[:, 1, 1] - B[:, 0, 1] * B[:, 1, 0]
        inv = np.empty_like(B)
        inv[:, 0, 0] = B[:, 1, 1]
        inv[:, 0, 1] = -B[:, 0, 1]
        inv[:, 1, 0] = -B[:, 1, 0]
        inv[:, 1, 1] = B[:, 0, 0]
        inv /= det[:, None, None]
        self._B = B
        self._A0 = A0
        self._absdet = np.abs(det)
        self._invBT = np.swapaxes(inv, 1, 2)

        self.stiffness = self._assemble_stiffness()

    # -- assembly -----------------------------------------------------------

    def _assemble_stiffness(self) -> sp.csr_matrix:
        nb = self.elem.shape[1]
        n_tri = len(self.elem)
        w = self._rule.weights
        rows, cols, vals = [], [], []
        chunk = 512
        for s in range(0, n_tri, chunk):
            sl = slice(s, min(s + chunk, n_tri))
            G = np.einsum("mij,qlj->mqli", self._invBT[sl], self._dN)
            Aloc = np.einsum("q,mqli,mqni,m->mln", w, G, G, self._absdet[sl])
            ids = self.elem[sl]
            rows.append(np.repeat(ids, nb, axis=1).ravel())
            cols.append(np.tile(ids, (1, nb)).ravel())
            vals.append(Aloc.ravel())
        A = sp.coo_matrix((np.concatenate(vals),
                           (np.concatenate(rows), np.concatenate(cols))),
                          shape=(self.n_nodes, self.n_nodes)).tocsr()
        return A

    def quad_points(self):
        """Physical quadrature points per triangle: (m, nq, 2) and weights (m, nq)."""
        pts = self._A0[:, None, :] + np.einsum("mij,qj->mqi", self._B, self._rule.points)
        w = self._rule.weights[None, :] * self._absdet[:, None]
        return pts, w

    def pair_with(self, funcs_at) -> np.ndarray:
        """(n_nodes, n_funcs) matrix of integrals basis_i * f_j over the polygon.

        funcs_at(points (n,2)) must return (n, n_funcs) values.
        """
        pts, w = self.quad_points()
        m, nq, _ = pts.shape
        vals = funcs_at(pts.reshape(-1, 2)).reshape(m, nq, -1)
        contrib = np.einsum("mq,ql,mqf->mlf", w, self._N, vals)
        out = np.zeros((self.n_nodes, vals.shape[2]))
        np.add.at(out, self.elem, contrib)
        return out

    def integrate(self, funcs_at) -> np.ndarray:
        pts, w = self.quad_points()
        vals = funcs_at(pts.reshape(-1, 2)).reshape(w.shape[0], w.shape[1], -1)
        return np.einsum("mq,mqf->f", w, vals)

    def interpolate(self, v) -> np.ndarray:
        """Nodal interpolant of a smooth v(x, y)."""
        return np.asarray(v(self.node_coords[:, 0], self.node_coords[:, 1]), dtype=float)

    def energy(self, w1, w2=None) -> float:
        w2 = w1 if w2 is None else w2
        return float(w1 @ (self.stiffness @ w2))

    # -- boundary structure --------------------------------------------------

    def boundary_segments(self, e: int):
        """Fine segments (u, v, edge id) lying on polygon edge e, u/v point ids."""
        segs = []
        for (a, b), eid in self._edge_ids.items():
            if e in self.tri.point_edges[a] and e in self.tri.point_edges[b]:
                segs.append((a, b, eid))
        return segs

    def segment_trace_dofs(self, a: int, b: int, eid: int):
        """Node ids along segment a->b at parameters m/k measured from min(a,b)."""
        k = self.degree
        lo, hi = (a, b) if a < b else (b, a)
        ids = [lo] + [self._edge_base + eid * (k - 1) + (m - 1) for m in range(1, k)] + [hi]
        return np.array(ids, dtype=np.int64)

    def boundary_nodes(self):
        """(node id, polygon edge set) for every node on the polygon boundary."""
        out = []
        for pid in range(self._n_pt):
            if self.tri.point_edges[pid]:
                out.append((pid, self.tri.point_edges[pid]))
        k = self.degree
        if k >= 2:
            for (a, b), eid in self._edge_ids.items():
                shared = self.tri.point_edges[a] & self.tri.point_edges[b]
                if shared:
                    for m in range(1, k):
                        out.append((self._edge_base + eid * (k - 1) + (m - 1), shared))
        return out

    def edge_pairing(self, e: int, n_funcs_degree: int) -> np.ndarray:
        """(n_nodes, deg+1) integrals of basis_i * edge-monomial_b over polygon edge e."""
        poly = self.poly
        edge = poly.edges[e]
        v0 = poly.vertices[edge.start]
        tang = edge.tangent
        eb = EdgeBasis(n_funcs_degree, edge.length)
        k = self.degree
        rule = edge_quadrature(k + n_funcs_degree + 2)
        tnodes = np.arange(k + 1) / k
        lag = lagrange_matrix(tnodes, 0.5 * (rule.points + 1.0))   # (nq, k+1)
        out = np.zeros((self.n_nodes, n_funcs_degree + 1))
        for a, b, eid in self.boundary_segments(e):
            lo, hi = (a, b) if a < b else (b, a)
            plo, phi = self.tri.points[lo], self.tri.points[hi]
            seg_len = float(np.hypot(*(phi - plo)))
            t = 0.5 * (rule.points + 1.0)
            pts = plo[None, :] + t[:, None] * (phi - plo)[None, :]
            s = (pts - v0[None, :]) @ tang                       # arclength on edge e
            tau = (s - 0.5 * edge.length) / edge.length
            mono = tau[:, None] ** np.arange(n_funcs_degree + 1)[None, :]
            wq = rule.weights * (seg_len / 2.0)
            ids = self.segment_trace_dofs(a, b, eid)
            np.add.at(out, ids, np.einsum("q,ql,qb->lb", wq, lag, mono))
        return out

    def trace_eval_matrix(self, e: int, s_values: np.ndarray) -> sp.csr_matrix:
        """Sparse (len(s), n_nodes) evaluation of the trace at arclengths s on edge e."""
        poly = self.poly
        edge = poly.edges[e]
        v0 = poly.vertices[edge.start]
        tang = edge.tangent
        segs = self.boundary_segments(e)
        k = self.degree
        tnodes = np.arange(k + 1) / k
        starts, ends, infos = [], [], []
        for a, b, eid in segs:
            lo, hi = (a, b) if a < b else (b, a)
            s_lo = float((self.tri.points[lo] - v0) @ tang)
            s_hi = float((self.tri.points[hi] - v0) @ tang)
            lo_s, hi_s = min(s_lo, s_hi), max(s_lo, s_hi)
            infos.append((lo_s, hi_s, s_lo, s_hi, a, b, eid))
        infos.sort()
        rows, cols, vals = [], [], []
        for r, sv in enumerate(np.atleast_1d(s_values)):
            seg = None
            for lo_s, hi_s, s_lo, s_hi, a, b, eid in infos:
                if lo_s - 1e-12 <= sv <= hi_s + 1e-12:
                    seg = (s_lo, s_hi, a, b, eid)
                    break
            if seg is None:
                raise OracleError(f"arclength {sv} not on edge {e}")
            s_lo, s_hi, a, b, eid = seg
            t = (sv - s_lo) / (s_hi - s_lo)   # parameter from min(a,b)
            lag = lagrange_matrix(tnodes, np.array([t]))[0]
            ids = self.segment_trace_dofs(a, b, eid)
            rows += [r] * len(ids)
            cols += list(ids)
            vals += list(lag)
        return sp.coo_matrix((vals, (rows, cols)),
                             shape=(len(np.atleast_1d(s_values)), self.n_nodes)).tocsr()

    def monomial_pairing(self, basis: MonomialBasis2D, up_to: int | None = None) -> np.ndarray:
        """(n_nodes, dim) integrals basis_i * m_alpha over the polygon."""
        dim = basis.dim if up_to is None else poly_dim(up_to)

        def f(pts):
            return basis.eval(pts)[:, :dim]

        return self.pair_with(f)

    def grad_monomial_pairing(self, basis: MonomialBasis2D) -> np.ndarray:
        """(n_nodes, dim) integrals grad(basis_i) . grad(m_alpha)."""
        pts, w = self.quad_points()
        m, nq, _ = pts.shape
        gm = basis.grad(pts.reshape(-1, 2)).reshape(m, nq, basis.dim, 2)
        G = np.einsum("mij,qlj->mqli", self._invBT, self._dN)
        contrib = np.einsum("mq,mqli,mqfi->mlf", w, G, gm)
        out = np.zeros((self.n_nodes, basis.dim))
        np.add.at(out, self.elem, contrib)
        return out


# ---------------------------------------------------------------------------
# virtual basis solves

@dataclass
class VirtualBasisOracle:
    """Fine representations of all local basis functions of one space."""

    poly: Polygon
    kind: SpaceKind
    config: OracleConfig
    fine: FineSpace
    W: np.ndarray          # (n_nodes, N_K) basis columns

    @property
    def n_dofs(self) -> int:
        return self.W.shape[1]

    def gram(self) -> np.ndarray:
        """Exact-gradient Gram matrix of the basis, (N_K, N_K)."""
        G = self.W.T @ (self.fine.stiffness @ self.W)
        return 0.5 * (G + G.T)

    def function_dofs(self, w: np.ndarray) -> np.ndarray:
        """Apply every DoF functional of the space to a fine function."""
        return self._dof_application() @ w

    def dof_application(self) -> np.ndarray:
        """(N_K, N_K) matrix dof_i(basis_j); identity iff the space is unisolvent."""
        return self._dof_application() @ self.W

    def _dof_application(self):
        if not hasattr(self, "_dof_app_cache"):
            self._dof_app_cache = _dof_application_matrix(self.poly, self.kind, self.fine)
        return self._dof_app_cache


def _dof_application_matrix(poly, kind, fine):
    """(N_K, n_nodes) matrix applying each DoF functional to fine nodal vectors."""
    p = kind.degree
    table = dof_table(poly, kind)
    out = np.zeros((table.n_dofs, fine.n_nodes))
    if kind.has_pointwise_trace:
        for i in range(poly.n_vertices):
            out[table.vertex_index[i], i] = 1.0   # polygon vertices are fine points 0..n-1
        if p >= 2:
            xi = gauss_lobatto_nodes(p)[1:-1]
            for e, edge in enumerate(poly.edges):
                s = edge.length * 0.5 * (1.0 + xi)
                E = fine.trace_eval_matrix(e, s)
                out[table.edge_index[e]] = E.toarray()
    else:
        for e, edge in enumerate(poly.edges):
            pair = fine.edge_pairing(e, p - 1)     # (n_nodes, p)
            out[table.edge_index[e]] = pair.T / edge.length
    if p >= 2:
        basis = MonomialBasis2D.for_polygon(poly, p)
        pair = fine.monomial_pairing(basis, up_to=p - 2)
        out[table.moment_index] = pair.T / poly.area
    return out


def _check_residual(K, X, RHS, tol, what):
    R = K @ X - RHS
    scale = max(float(np.abs(RHS).max()), float(np.abs(X).max()), 1.0)
    rel = float(np.abs(R).max()) / scale
    if not np.isfinite(rel) or rel > tol:
        raise OracleError(f"{what}: saddle solve residual {rel:.3e} exceeds {tol:.1e}")


def solve_basis_conforming(poly: Polygon, p: int,
                           config: OracleConfig = OracleConfig()) -> VirtualBasisOracle:
    """Oracle basis of the conforming space of degree p."""
    kind = conforming(p)
    fine = FineSpace(poly, config.level, config.degree_for(p))
    table = dof_table(poly, kind)
    N = table.n_dofs
    n_m = poly_dim(p - 2)

    # boundary data for all basis functions at once
    bnodes = fine.boundary_nodes()
    b_ids = np.array([g for g, _ in bnodes], dtype=np.int64)
    T = np.zeros((len(bnodes), N))
    xi_full = np.concatenate(([-1.0], gauss_lobatto_nodes(p)[1:-1], [1.0])) if p >= 2 \
        else np.array([-1.0, 1.0])
    for r, (g, edges) in enumerate(bnodes):
        if g < poly.n_vertices:
            T[r, table.vertex_index[g]] = 1.0
            continue
        e = next(iter(edges))
        edge = poly.edges[e]
        x = fine.node_coords[g]
        s = float((x - poly.vertices[edge.start]) @ edge.tangent)
        xi = 2.0 * s / edge.length - 1.0
        lag = lagrange_matrix(xi_full, np.array([xi]))[0]
        ids = np.concatenate(([table.vertex_index[edge.start]],
                              table.edge_index[e],
                              [table.vertex_index[edge.end]]))
        T[r, ids] = lag

    mask = np.ones(fine.n_nodes, dtype=bool)
    mask[b_ids] = False
    interior = np.nonzero(mask)[0]
    A = fine.stiffness
    A_ii = A[interior][:, interior]
    A_ib = A[interior][:, b_ids]

    if n_m:
        basis = MonomialBasis2D.for_polygon(poly, p)
        Mc = fine.monomial_pairing(basis, up_to=p - 2)   # (n_nodes, n_m)
        Mc_i = sp.csr_matrix(Mc[interior])
        K = sp.bmat([[A_ii, -Mc_i], [-Mc_i.T, None]], format="csc")
        tgt = np.zeros((n_m, N))
        tgt[np.arange(n_m), table.moment_index] = poly.area
        RHS = np.vstack([-A_ib @ T, Mc[b_ids].T @ T - tgt])
    else:
        K = A_ii.tocsc()
        RHS = -A_ib @ T

    lu = spla.splu(K)
    X = np.column_stack([lu.solve(RHS[:, j]) for j in range(N)])
    _check_residual(K, X, RHS, config.residual_tol, f"conforming oracle p={p}")

    W = np.zeros((fine.n_nodes, N))
    W[b_ids] = T
    W[interior] = X[:len(interior)]
    return VirtualBasisOracle(poly, kind, config, fine, W)


def solve_basis_nonconforming(poly: Polygon, p: int,
                              config: OracleConfig = OracleConfig()) -> VirtualBasisOracle:
    """Oracle basis of the nonconforming space of degree p."""
    kind = nonconforming(p)
    fine = FineSpace(poly, config.level, config.degree_for(p))
    table = dof_table(poly, kind)
    N = table.n_dofs
    n_m = poly_dim(p - 2)
    n_e = poly.n_edges

    cols = []
    tgt_rows = []
    for e, edge in enumerate(poly.edges):
        pair = fine.edge_pairing(e, p - 1)          # (n_nodes, p)
        cols.append(pair)
        t = np.zeros((p, N))
        t[np.arange(p), table.edge_index[e]] = edge.length
        tgt_rows.append(t)
    if n_m:
        basis = MonomialBasis2D.for_polygon(poly, p)
        cols.append(fine.monomial_pairing(basis, up_to=p - 2))
        t = np.zeros((n_m, N))
        t[np.arange(n_m), table.moment_index] = poly.area
        tgt_rows.append(t)
    Mall = np.hstack(cols)                           # (n_nodes, n_c)
    tgt = np.vstack(tgt_rows)                        # (n_c, N)
    n_c = Mall.shape[1]
    assert n_c == n_e * p + n_m == N

    Msp = sp.csr_matrix(Mall)
    K = sp.bmat([[fine.stiffness, -Msp], [-Msp.T, None]], format="csc")
    RHS = np.vstack([np.zeros((fine.n_nodes, N)), -tgt])
    lu = spla.splu(K)
    X = np.column_stack([lu.solve(RHS[:, j]) for j in range(N)])
    _check_residual(K, X, RHS, config.residual_tol, f"nonconforming oracle p={p}")

    W = X[:fine.n_nodes]
    oracle = VirtualBasisOracle(poly, kind, config, fine, W)
    oracle.multipliers = X[fine.n_nodes:]
    return oracle


def solve_basis(poly: Polygon, kind: SpaceKind,
                config: OracleConfig = OracleConfig()) -> VirtualBasisOracle:
    if kind.family is SpaceFamily.CONFORMING:
        return solve_basis_conforming(poly, kind.degree, config)
    if kind.family is SpaceFamily.NONCONFORMING:
        return solve_basis_nonconforming(poly, kind.degree, config)
    raise OracleError("no fine-mesh oracle for the enhanced space")


def unisolvence_defect(oracle: VirtualBasisOracle) -> float:
    """Max deviation of dof_i(basis_j) from the identity matrix."""
    D = oracle.dof_application()
    return float(np.abs(D - np.eye(oracle.n_dofs)).max())


# ---------------------------------------------------------------------------
# seminorms and best polynomial approximation

@dataclass
class BestApprox:
    seminorm: float       # |v|_{1,K} of the fine interpolant
    best_err: float       # min over degree-p polynomials of |v - q|_{1,K}
    coeffs: np.ndarray    # minimizer coefficients (constant fixed by mean match)


def seminorm_and_best_approx(poly: Polygon, v, p: int,
                             config: OracleConfig = OracleConfig(),
                             fine: FineSpace | None = None,
                             v_fine: np.ndarray | None = None) -> BestApprox:
    """Interpolate v on the fine mesh, measure |v|_1 and its distance to P_p.

    The minimizer's gradient part solves the normal equations in the exact
    monomial gradient Gram matrix; its constant matches the mean of v over K.
    """
    if fine is None:
        fine = FineSpace(poly, config.level, config.degree_for(p))
    vf = fine.interpolate(v) if v_fine is None else v_fine
    basis = MonomialBasis2D.for_polygon(poly, p)
    G = grad_gram(poly, basis)
    P = fine.grad_monomial_pairing(basis)        # (n_nodes, dim)
    r = P.T @ vf
    M0 = monomial_integrals(poly, basis)
    ones = fine.pair_with(lambda pts: np.ones((len(pts), 1)))[:, 0]
    Gfix = G.copy()
    Gfix[0] = M0
    rfix = r.copy()
    rfix[0] = ones @ vf
    coeffs = np.linalg.solve(Gfix, rfix)
    e2 = fine.energy(vf) - 2.0 * coeffs @ r + coeffs @ G @ coeffs
    return BestApprox(float(np.sqrt(max(fine.energy(vf), 0.0))),
                      float(np.sqrt(max(e2, 0.0))), coeffs)


def oracle_gram_drift(poly: Polygon, kind: SpaceKind, config: OracleConfig) -> float:
    """Max relative change of Gram entries between level and level+1."""
    o1 = solve_basis(poly, kind, config)
    o2 = solve_basis(poly, kind, OracleConfig(config.level + 1, config.fem_degree,
                                              config.residual_tol))
    G1, G2 = o1.gram(), o2.gram()
    return float(np.abs(G1 - G2).max() / np.abs(G2).max())
