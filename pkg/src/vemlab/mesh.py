"""Polygonal cells, structured mesh generation, sub-triangulation and JSON mesh I/O."""

from __future__ import annotations

import json
import math
from dataclasses import dataclass

import numpy as np


class GeometryError(ValueError):
    """Raised for degenerate, self-intersecting or clockwise polygon input."""


class MeshFormatError(ValueError):
    """Raised when a mesh file or cell array violates the schema or connectivity rules."""


@dataclass(frozen=True)
class Edge:
    """One directed polygon edge (start -> end in CCW order)."""

    start: int
    end: int
    length: float
    normal: np.ndarray    # outward unit normal
    tangent: np.ndarray   # unit tangent, start -> end
    midpoint: np.ndarray


@dataclass(frozen=True)
class Polygon:
    """A simple CCW polygon with precomputed geometric data.

    vertices : (n, 2) array, counterclockwise
    area     : positive area
    centroid : area centroid
    diameter : max pairwise vertex distance h_K
    edges    : edge i runs from vertex i to vertex i+1 (mod n)
    """

    vertices: np.ndarray
    area: float
    centroid: np.ndarray
    diameter: float
    edges: tuple[Edge, ...]

    @property
    def n_vertices(self) -> int:
        return len(self.vertices)

    @property
    def n_edges(self) -> int:
        return len(self.vertices)

    @property
    def min_edge_ratio(self) -> float:
        """Shortest edge over diameter, a shape-degeneracy indicator."""
        return min(e.length for e in self.edges) / self.diameter

    @property
    def area_ratio(self) -> float:
        """Area over squared diameter, a second shape indicator."""
        return self.area / self.diameter ** 2


def _signed_area_and_centroid(verts):
    x, y = verts[:, 0], verts[:, 1]
    xn, yn = np.roll(x, -1), np.roll(y, -1)
    cross = x * yn - xn * y
    a = 0.5 * cross.sum()
    if a == 0.0:
        raise GeometryError("polygon has zero signed area")
    cx = ((x + xn) * cross).sum() / (6.0 * a)
    cy = ((y + yn) * cross).sum() / (6.0 * a)
    return a, np.array([cx, cy])


def _orient(p, q, r):
    return (q[0] - p[0]) * (r[1] - p[1]) - (q[1] - p[1]) * (r[0] - p[0])


def _on_segment(p, q, r):
    return (min(p[0], q[0]) - 1e-14 <= r[0] <= max(p[0], q[0]) + 1e-14
            and min(p[1], q[1]) - 1e-14 <= r[1] <= max(p[1], q[1]) + 1e-14)


def _segments_intersect(p1, q1, p2, q2):
    d1 = _orient(p2, q2, p1)
    d2 = _orient(p2, q2, q1)
    d3 = _orient(p1, q1, p2)
    d4 = _orient(p1, q1, q2)
    if ((d1 > 0) != (d2 > 0)) and ((d3 > 0) != (d4 > 0)):
        return True
    if d1 == 0 and _on_segment(p2, q2, p1):
        return True
    if d2 == 0 and _on_segment(p2, q2, q1):
        return True
    if d3 == 0 and _on_segment(p1, q1, p2):
        return True
    if d4 == 0 and _on_segment(p1, q1, q2):
        return True
    return False


def polygon_geometry(vertices) -> Polygon:
    """Validate a vertex loop and compute area, centroid, diameter and edge data.

    Rejects polygons with fewer than 3 vertices, non-finite coordinates,
    clockwise orientation, zero-length edges and self-intersections.
    """
    verts = np.asarray(vertices, dtype=float)
    if verts.ndim != 2 or verts.shape[1] != 2 or len(verts) < 3:
        raise GeometryError("expected an (n, 2) vertex array with n >= 3")
    if not np.all(np.isfinite(verts)):
        raise GeometryError("non-finite vertex coordinate")

    n = len(verts)
    seg = np.roll(verts, -1, axis=0) - verts
    lengths = np.hypot(seg[:, 0], seg[:, 1])
    if np.any(lengths == 0.0):
        raise GeometryError("zero-length edge (repeated vertex)")

    a, centroid = _signed_area_and_centroid(verts)
    if a < 0:
        raise GeometryError("vertices are ordered clockwise; counterclockwise required")

    # simplicity: no two non-adjacent edges may touch
    for i in range(n):
        for j in range(i + 1, n):
            if j == i or (j - i) % n == 1 or (i - j) % n == 1:
                continue
            if _segments_intersect(verts[i], verts[(i + 1) % n],
                                   verts[j], verts[(j + 1) % n]):
                raise GeometryError(f"edges {i} and {j} intersect (non-simple polygon)")

    diam = 0.0
    for i in range(n):
        d = np.hypot(verts[i + 1:, 0] - verts[i, 0], verts[i + 1:, 1] - verts[i, 1])
        if len(d):
            diam = max(diam, d.max())

    edges = []
    for i in range(n):
        t = seg[i] / lengths[i]
        normal = np.array([t[1], -t[0]])      # outward for CCW loops
        mid = 0.5 * (verts[i] + verts[(i + 1) % n])
        edges.append(Edge(i, (i + 1) % n, float(lengths[i]), normal, t, mid))

    return Polygon(verts, float(a), centroid, float(diam), tuple(edges))


def unit_square() -> Polygon:
    return polygon_geometry([[0.0, 0.0], [1.0, 0.0], [1.0, 1.0], [0.0, 1.0]])


def square_polygon(h: float, origin=(0.0, 0.0)) -> Polygon:
    x0, y0 = origin
    return polygon_geometry([[x0, y0], [x0 + h, y0], [x0 + h, y0 + h], [x0, y0 + h]])


def generate_collapsing_quad(eps: float) -> Polygon:
    """Quad (0,0), (1,0), (1,eps), (0,1) whose top-right vertex collapses onto the
    bottom edge as eps -> 0.  Exact area is (1 + eps) / 2."""
    if not (0.0 < eps <= 1.0):
        raise GeometryError("eps must lie in (0, 1]")
    return polygon_geometry([[0.0, 0.0], [1.0, 0.0], [1.0, eps], [0.0, 1.0]])


def regular_polygon(n: int, radius: float = 1.0, center=(0.0, 0.0)) -> Polygon:
    ang = 2.0 * np.pi * np.arange(n) / n
    verts = np.stack([center[0] + radius * np.cos(ang),
                      center[1] + radius * np.sin(ang)], axis=1)
    return polygon_geometry(verts)


def random_convex_polygon(n: int, rng, radius: float = 1.0) -> Polygon:
    """Irregular convex polygon: n points on a circle at sorted random angles."""
    while True:
        ang = np.sort(rng.uniform(0.0, 2.0 * np.pi, size=n))
        gaps = np.diff(np.concatenate([ang, [ang[0] + 2.0 * np.pi]]))
        if gaps.min() > 0.3 * (2.0 * np.pi / n):
            break
    verts = np.stack([radius * np.cos(ang), radius * np.sin(ang)], axis=1)
    return polygon_geometry(verts)


# ---------------------------------------------------------------------------
# sub-triangulation (centroid fan + uniform quadrisection)

@dataclass(frozen=True)
class SubTriangulation:
    """Centroid-fan triangulation of a polygon, quadrisected `level` times.

    points      : (n_pts, 2) triangulation points; the first n_vertices entries
                  are the polygon vertices, entry n_vertices is the centroid
    triangles   : (n_tri, 3) CCW vertex triples into `points`
    point_edges : per point, frozenset of polygon edge ids the point lies on
    """

    polygon: Polygon
    level: int
    points: np.ndarray
    triangles: np.ndarray
    point_edges: tuple[frozenset, ...]

    @property
    def n_triangles(self) -> int:
        return len(self.triangles)

    def triangle_areas(self) -> np.ndarray:
        p = self.points
        a, b, c = (p[self.triangles[:, k]] for k in range(3))
        return 0.5 * ((b[:, 0] - a[:, 0]) * (c[:, 1] - a[:, 1])
                      - (b[:, 1] - a[:, 1]) * (c[:, 0] - a[:, 0]))


def subtriangulate(poly: Polygon, level: int = 0) -> SubTriangulation:
    """Fan the polygon about its centroid, then quadrisect `level` times.

    Requires the polygon to be star-shaped with respect to its centroid;
    otherwise a fan triangle would be inverted and a GeometryError is raised.
    """
    if level < 0:
        raise GeometryError("level must be >= 0")
    n = poly.n_vertices
    pts = [poly.vertices[i].copy() for i in range(n)] + [poly.centroid.copy()]
    pt_edges = [frozenset({(i - 1) % n, i}) for i in range(n)] + [frozenset()]
    tris = [(i, (i + 1) % n, n) for i in range(n)]

    for i, (a, b, c) in enumerate(tris):
        if _orient(pts[a], pts[b], pts[c]) <= 0.0:
            raise GeometryError(
                f"polygon is not star-shaped about its centroid (fan triangle {i})")

    for _ in range(level):
        midpoint = {}

        def mid(a, b):
            key = (a, b) if a < b else (b, a)
            if key not in midpoint:
                pts.append(0.5 * (pts[a] + pts[b]))
                pt_edges.append(pt_edges[a] & pt_edges[b])
                midpoint[key] = len(pts) - 1
            return midpoint[key]

        new_tris = []
        for a, b, c in tris:
            ab, bc, ca = mid(a, b), mid(b, c), mid(c, a)
            new_tris += [(a, ab, ca), (ab, b, bc), (ca, bc, c), (ab, bc, ca)]
        tris = new_tris

    return SubTriangulation(poly, level, np.array(pts),
                            np.array(tris, dtype=np.int64), tuple(pt_edges))


# ---------------------------------------------------------------------------
# polygonal meshes

@dataclass(frozen=True)
class MeshEdge:
    lo: int
    hi: int
    cells: tuple[int, ...]   # incident cell ids (1 = boundary, 2 = interior)


@dataclass(frozen=True)
class PolygonalMesh:
    """A conforming mesh of simple CCW polygonal cells.

    cell_edges[c][k] = (edge id, forward) for local edge k of cell c, where
    forward means the cell traverses the edge from its lower to its higher
    global vertex index.
    """

    vertices: np.ndarray
    cells: tuple[tuple[int, ...], ...]
    edges: tuple[MeshEdge, ...]
    cell_edges: tuple[tuple[tuple[int, bool], ...], ...]

    @property
    def n_cells(self) -> int:
        return len(self.cells)

    def cell_polygon(self, c: int) -> Polygon:
        return polygon_geometry(self.vertices[list(self.cells[c])])

    def boundary_edges(self) -> list[int]:
        return [i for i, e in enumerate(self.edges) if len(e.cells) == 1]

    def boundary_vertices(self) -> np.ndarray:
        out = set()
        for i in self.boundary_edges():
            out.add(self.edges[i].lo)
            out.add(self.edges[i].hi)
        return np.array(sorted(out), dtype=np.int64)

    def max_diameter(self) -> float:
        return max(self.cell_polygon(c).diameter for c in range(self.n_cells))


def build_mesh(vertices, cells) -> PolygonalMesh:
    """Assemble and validate mesh connectivity from raw vertex/cell arrays."""
    verts = np.asarray(vertices, dtype=float)
    if verts.ndim != 2 or verts.shape[1] != 2:
        raise MeshFormatError("vertices must form an (n, 2) array")
    cells = tuple(tuple(int(i) for i in cell) for cell in cells)

    for ci, cell in enumerate(cells):
        if len(cell) < 3:
            raise MeshFormatError(f"cell {ci} has fewer than 3 vertices")
        if any(i < 0 or i >= len(verts) for i in cell):
            raise MeshFormatError(f"cell {ci} references an out-of-range vertex")
        if len(set(cell)) != len(cell):
            raise MeshFormatError(f"cell {ci} repeats a vertex")
        try:
            polygon_geometry(verts[list(cell)])
        except GeometryError as exc:
            raise MeshFormatError(f"cell {ci}: {exc}") from exc

    directed = {}
    edge_ids = {}
    edge_cells = {}
    cell_edges = []
    for ci, cell in enumerate(cells):
        loc = []
        for k in range(len(cell)):
            a, b = cell[k], cell[(k + 1) % len(cell)]
            if (a, b) in directed:
                raise MeshFormatError(
                    f"directed edge ({a}, {b}) used by cells {directed[(a, b)]} and {ci}; "
                    "shared edges must be traversed in opposite directions")
            directed[(a, b)] = ci
            key = (a, b) if a < b else (b, a)
            if key not in edge_ids:
                edge_ids[key] = len(edge_ids)
                edge_cells[key] = []
            if len(edge_cells[key]) >= 2:
                raise MeshFormatError(
                    f"edge {key} shared by more than two cells (cell {ci})")
            edge_cells[key].append(ci)
            loc.append((edge_ids[key], (a, b) == key))
        cell_edges.append(tuple(loc))

    edges = [None] * len(edge_ids)
    for key, eid in edge_ids.items():
        edges[eid] = MeshEdge(key[0], key[1], tuple(edge_cells[key]))

    return PolygonalMesh(verts, cells, tuple(edges), tuple(cell_edges))


def generate_square_mesh(n: int, domain=(0.0, 0.0, 1.0, 1.0)) -> PolygonalMesh:
    """n x n grid of square cells on an axis-aligned rectangle."""
    if n < 1:
        raise MeshFormatError("n must be >= 1")
    x0, y0, x1, y1 = domain
    if not (x1 > x0 and y1 > y0):
        raise MeshFormatError("domain must satisfy x1 > x0 and y1 > y0")
    xs = np.linspace(x0, x1, n + 1)
    ys = np.linspace(y0, y1, n + 1)
    verts = np.array([[x, y] for y in ys for x in xs])
    cells = []
    for j in range(n):
        for i in range(n):
            v = j * (n + 1) + i
            cells.append((v, v + 1, v + n + 2, v + n + 1))
    return build_mesh(verts, cells)


def collapse_mesh(eps: float) -> PolygonalMesh:
    """Single-cell mesh holding the collapsing quad."""
    q = generate_collapsing_quad(eps)
    return build_mesh(q.vertices, [tuple(range(4))])


# ---------------------------------------------------------------------------
# JSON mesh files
#
# schema: {"vertices": [[x, y], ...], "cells": [[i0, i1, ...], ...]}
# with 0-based CCW cells and floats written with 17 significant digits so the
# decimal representation round-trips bit-exactly.

def _fmt(x: float) -> str:
    s = format(float(x), ".17g")
    return s


def save_mesh(mesh: PolygonalMesh, path) -> None:
    lines = ['{', '  "vertices": [']
    rows = [f'    [{_fmt(x)}, {_fmt(y)}]' for x, y in mesh.vertices]
    lines.append(",\n".join(rows))
    lines.append('  ],')
    lines.append('  "cells": [')
    rows = ['    [' + ', '.join(str(i) for i in cell) + ']' for cell in mesh.cells]
    lines.append(",\n".join(rows))
    lines.append('  ]')
    lines.append('}')
    with open(path, "w") as fh:
        fh.write("\n".join(lines) + "\n")


def load_mesh(path) -> PolygonalMesh:
    with open(path) as fh:
        try:
            data = json.load(fh)
        except json.JSONDecodeError as exc:
            raise MeshFormatError(f"invalid JSON: {exc}") from exc
    if not isinstance(data, dict) or "vertices" not in data or "cells" not in data:
        raise MeshFormatError('mesh file must contain "vertices" and "cells"')
    verts = data["vertices"]
    cells = data["cells"]
    if (not isinstance(verts, list)
            or any(not isinstance(v, list) or len(v) != 2
                   or not all(isinstance(c, (int, float)) for c in v) for v in verts)):
        raise MeshFormatError("vertices must be a list of [x, y] number pairs")
    if (not isinstance(cells, list)
            or any(not isinstance(c, list)
                   or any(not isinstance(i, int) or isinstance(i, bool) for i in c)
                   for c in cells)):
        raise MeshFormatError("cells must be a list of integer index lists")
    return build_mesh(np.array(verts, dtype=float), cells)
