"""Stabilizing bilinear forms for the local virtual spaces.

Both forms are assembled in the DoF basis and shipped composed with the
energy-projector complement (I - PiNablaDof) on both sides, so the shipped
matrix vanishes on DoF vectors of polynomials up to degree p.  The raw,
uncomposed form is kept alongside for diagnostics and the interpolation
identities that rely on it.
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum

import numpy as np

from .mesh import Polygon
from .polybasis import (EdgeBasis, edge_points_weights, edge_quadrature,
                        lagrange_matrix)
from .space import ProjectorSet, SpaceFamily, edge_trace_dofs, mass_matrix


class StabKind(Enum):
    DOFI_DOFI = "dofi"
    PROJECTED = "proj"


@dataclass(frozen=True)
class StabilizationMatrix:
    kind: StabKind
    matrix: np.ndarray   # composed form (I - Pi)^T S_raw (I - Pi)
    raw: np.ndarray      # S_raw in the DoF basis


def _compose(raw: np.ndarray, projs: ProjectorSet) -> np.ndarray:
    C = np.eye(projs.n_dofs) - projs.pinabla_dof
    S = C.T @ raw @ C
    return 0.5 * (S + S.T)


def stab_dofi(projs: ProjectorSet) -> StabilizationMatrix:
    """Euclidean DoF product, composed with the projector complement."""
    raw = np.eye(projs.n_dofs)
    return StabilizationMatrix(StabKind.DOFI_DOFI, _compose(raw, projs), raw)


def boundary_mass(poly: Polygon, projs: ProjectorSet) -> np.ndarray:
    """Exact L2(boundary) Gram matrix of the conforming traces in the DoF basis."""
    p = projs.kind.degree
    table = projs.table
    out = np.zeros((table.n_dofs, table.n_dofs))
    rule = edge_quadrature(2 * p)
    for e, edge in enumerate(poly.edges):
        ids, xi = edge_trace_dofs(table, e)
        lag = lagrange_matrix(xi, rule.points)           # (n_q, p+1)
        M = (lag * rule.weights[:, None]).T @ lag * (edge.length / 2.0)
        out[np.ix_(ids, ids)] += M
    return out


def stab_projected(poly: Polygon, projs: ProjectorSet) -> StabilizationMatrix:
    """Trace term plus scaled bulk L2-projection term.

    conforming/enhanced : h^-1 (u, v)_{boundary} + h^-2 (Pi0 u, Pi0 v)_K
    nonconforming       : h^-1 sum_e (Pi0e u, Pi0e v)_e + h^-2 (Pi0 u, Pi0 v)_K

    The enhanced space uses its full-degree bulk projector.
    """
    h = poly.diameter
    p = projs.kind.degree
    table = projs.table
    raw = np.zeros((table.n_dofs, table.n_dofs))

    if projs.kind.has_pointwise_trace:
        raw += boundary_mass(poly, projs) / h
    else:
        for e, edge in enumerate(poly.edges):
            Me = EdgeBasis(p - 1, edge.length).mass_matrix()
            P = projs.pi0_edge[e]
            raw += P.T @ Me @ P / h

    if projs.kind.family is SpaceFamily.ENHANCED:
        Mfull = mass_matrix(poly, projs.basis)
        raw += projs.pi0_full.T @ Mfull @ projs.pi0_full / h ** 2
    elif p >= 2:
        Msub = mass_matrix(poly, projs.basis, up_to=p - 2)[:, :projs.pi0.shape[0]]
        raw += projs.pi0.T @ Msub @ projs.pi0 / h ** 2

    raw = 0.5 * (raw + raw.T)
    return StabilizationMatrix(StabKind.PROJECTED, _compose(raw, projs), raw)


def build_stabilization(poly: Polygon, projs: ProjectorSet,
                        stab_kind: StabKind) -> StabilizationMatrix:
    if stab_kind is StabKind.DOFI_DOFI:
        return stab_dofi(projs)
    if stab_kind is StabKind.PROJECTED:
        return stab_projected(poly, projs)
    raise ValueError(f"unknown stabilization {stab_kind!r}")
