"""Measurement of stabilization constants and stability-implied bounds.

The constants are the extreme generalized eigenvalues of the pencil
(Kb' S Kb, Kb' G Kb), where Kb spans the DoF-space kernel of the energy
projector, S is the assembled stabilization and G is the exact-gradient
Gram matrix of the virtual basis computed by the fine-mesh oracle.  Sweeps
vary the element size, the polynomial degree and the element shape; the
interpolation checks compare DoF interpolants against best polynomial
approximation, all sides measured in the oracle's fine space.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
import scipy.linalg as sla

from .mesh import Polygon, generate_collapsing_quad, square_polygon, unit_square
from .oracle import (OracleConfig, OracleError, seminorm_and_best_approx,
                     solve_basis)
from .polybasis import poly_dim
from .space import (ProjectorSet, SpaceKind, build_projectors, conforming,
                    interpolate_dofs, nonconforming)
from .stab import StabKind, StabilizationMatrix, build_stabilization


class StabilityLabError(RuntimeError):
    """Raised when a kernel extraction or eigenvalue measurement is invalid."""


@dataclass(frozen=True)
class KernelBasis:
    """Orthonormal DoF-space basis of the kernel of the energy projector."""

    matrix: np.ndarray    # (N_K, N_K - dim P_p)

    @property
    def dim(self) -> int:
        return self.matrix.shape[1]


def kernel_basis(projectors: ProjectorSet, rank_tol: float = 1e-9) -> KernelBasis:
    """Orthonormal nullspace of the DoF-to-coefficient projector matrix."""
    pin = projectors.pinabla
    n_dofs = pin.shape[1]
    n_poly = pin.shape[0]
    U, s, Vt = np.linalg.svd(pin)
    cutoff = rank_tol * s[0]
    rank = int(np.sum(s > cutoff))
    if rank != n_poly:
        raise StabilityLabError(
            f"energy projector rank {rank}, expected {n_poly}; "
            "degenerate geometry or projector construction failure")
    kb = Vt[rank:].T
    defect = float(np.abs(pin @ kb).max())
    if defect > rank_tol * max(s[0], 1.0):
        raise StabilityLabError(f"kernel residual {defect:.3e} exceeds tolerance")
    return KernelBasis(kb)


@dataclass(frozen=True)
class StabilityReport:
    """One measured element: context plus the two stability constants."""

    kind: str
    stab: str
    p: int
    h: float
    geom_tag: str
    eps: float            # nan unless the element is a collapsing quad
    alpha_star: float
    alpha_sup: float
    oracle_level: int
    min_edge_ratio: float

    @property
    def ratio(self) -> float:
        return self.alpha_sup / self.alpha_star

    @property
    def ok(self) -> bool:
        return math.isfinite(self.alpha_star) and math.isfinite(self.alpha_sup)


def stability_constants(stab: StabilizationMatrix, gram: np.ndarray,
                        kb: KernelBasis) -> tuple[float, float]:
    """Extreme generalized eigenvalues of the restricted (S, G) pencil."""
    S_r = kb.matrix.T @ stab.matrix @ kb.matrix
    G_r = kb.matrix.T @ gram @ kb.matrix
    S_r = 0.5 * (S_r + S_r.T)
    G_r = 0.5 * (G_r + G_r.T)
    g_eigs = np.linalg.eigvalsh(G_r)
    if g_eigs[0] <= 0.0:
        raise StabilityLabError(
            f"restricted Gram not positive definite (min eig {g_eigs[0]:.3e}); "
            "oracle Gram unreliable")
    vals = sla.eigh(S_r, G_r, eigvals_only=True)
    return float(vals[0]), float(vals[-1])


def measure_element(poly: Polygon, kind: SpaceKind, stab_kind: StabKind,
                    config: OracleConfig = OracleConfig(), geom_tag: str = "",
                    eps: float = float("nan")) -> StabilityReport:
    """Stability constants of one element, exact Gram from the oracle."""
    projectors = build_projectors(poly, kind)
    stab = build_stabilization(poly, projectors, stab_kind)
    gram = solve_basis(poly, kind, config).gram()
    kb = kernel_basis(projectors)
    a_star, a_sup = stability_constants(stab, gram, kb)
    return StabilityReport(kind.label, stab_kind.value, kind.degree,
                           poly.diameter, geom_tag, eps, a_star, a_sup,
                           config.level, poly.min_edge_ratio)


def h_sweep(kind: SpaceKind, stab_kind: StabKind, hs=(1.0, 0.5, 0.25),
            config: OracleConfig = OracleConfig()) -> list[StabilityReport]:
    """Same square element shape at shrinking sizes."""
    return [measure_element(square_polygon(h), kind, stab_kind, config,
                            geom_tag=f"square:h={h:g}") for h in hs]


def p_sweep(family, stab_kind: StabKind, p_range=range(1, 7),
            poly: Polygon | None = None,
            config: OracleConfig = OracleConfig()) -> list[StabilityReport]:
    """Degree sweep on a fixed element; family is conforming/nonconforming."""
    if poly is None:
        poly = unit_square()
    return [measure_element(poly, family(p), stab_kind, config,
                            geom_tag="unit-square") for p in p_range]


def collapse_sweep(eps_range, kind: SpaceKind, stab_kind: StabKind,
                   config: OracleConfig = OracleConfig()) -> list[StabilityReport]:
    """Quad with one vertex sliding onto an edge; failed rows carry nan."""
    rows = []
    for eps in eps_range:
        poly = generate_collapsing_quad(eps)
        try:
            rep = measure_element(poly, kind, stab_kind, config,
                                  geom_tag="collapse", eps=eps)
        except (OracleError, StabilityLabError):
            rep = StabilityReport(kind.label, stab_kind.value, kind.degree,
                                  poly.diameter, "collapse", eps,
                                  float("nan"), float("nan"), config.level,
                                  poly.min_edge_ratio)
        rows.append(rep)
    return rows


def random_bound_defect(stab: StabilizationMatrix, gram: np.ndarray,
                        kb: KernelBasis, a_star: float, a_sup: float,
                        n_samples: int = 100, seed: int = 0) -> float:
    """Worst relative violation of a_star <= S(w)/G(w) <= a_sup on the kernel."""
    rng = np.random.default_rng(seed)
    worst = 0.0
    for _ in range(n_samples):
        w = kb.matrix @ rng.standard_normal(kb.dim)
        g = float(w @ gram @ w)
        s = float(w @ stab.matrix @ w)
        q = s / g
        worst = max(worst, (a_star - q) / a_star, (q - a_sup) / a_sup)
    return worst


def full_lower_constant(stab: StabilizationMatrix, gram: np.ndarray,
                        tol: float = 1e-9) -> float:
    """Min of S_raw/G over all DoF vectors orthogonal to the constants.

    The uncomposed form is the one whose lower bound extends from
    ker(PiNabla) to the whole local space; the Gram's own kernel (the
    constant mode) is removed so the quotient is well defined.
    """
    G = 0.5 * (gram + gram.T)
    evals, evecs = np.linalg.eigh(G)
    keep = evals > tol * evals[-1]
    if keep.sum() != len(evals) - 1:
        raise StabilityLabError(
            f"Gram nullity {len(evals) - keep.sum()}, expected 1 (constants)")
    Q = evecs[:, keep]
    S_r = Q.T @ stab.raw @ Q
    G_r = np.diag(evals[keep])
    vals = sla.eigh(0.5 * (S_r + S_r.T), G_r, eigvals_only=True)
    return float(vals[0])


def raw_form_value(poly: Polygon, projectors: ProjectorSet,
                   stab: StabilizationMatrix, dofs: np.ndarray) -> float:
    """Apply the uncomposed stabilization form directly to a DoF vector."""
    return float(dofs @ stab.raw @ dofs)


def zero_mean_upper_sample(poly: Polygon, kind: SpaceKind, stab_kind: StabKind,
                           v, config: OracleConfig = OracleConfig()) -> tuple[float, float]:
    """(raw form of the DoFs of v, |v|^2 seminorm) for a smooth function v.

    Feeding a non-virtual function through the raw DoF form probes how far
    the upper stability bound extends beyond the local space.
    """
    projectors = build_projectors(poly, kind)
    stab = build_stabilization(poly, projectors, stab_kind)
    dofs = interpolate_dofs(poly, kind, v)
    ba = seminorm_and_best_approx(poly, v, kind.degree, config)
    return raw_form_value(poly, projectors, stab, dofs), ba.seminorm ** 2


@dataclass(frozen=True)
class InterpBoundResult:
    lhs: float            # |v - v_I| in the exact seminorm
    best_err: float       # |v - q_p| with q_p the mean-matched minimizer
    alpha_star: float
    alpha_sup: float

    @property
    def rhs(self) -> float:
        return (1.0 + self.alpha_sup / self.alpha_star) * self.best_err

    def passed(self, slack: float = 1e-3) -> bool:
        return self.lhs <= self.rhs * (1.0 + slack)


def interp_bound_check(poly: Polygon, p: int, v,
                       stab_kind: StabKind = StabKind.DOFI_DOFI,
                       kind: SpaceKind | None = None,
                       config: OracleConfig = OracleConfig()) -> InterpBoundResult:
    """Measure |v - v_I| against (1 + a_sup/a_star) |v - q_p| on one element."""
    if kind is None:
        kind = conforming(p)
    projectors = build_projectors(poly, kind)
    stab = build_stabilization(poly, projectors, stab_kind)
    oracle = solve_basis(poly, kind, config)
    kb = kernel_basis(projectors)
    a_star, a_sup = stability_constants(stab, oracle.gram(), kb)

    fine = oracle.fine
    v_fine = fine.interpolate(v)
    v_dofs = interpolate_dofs(poly, kind, v)
    diff = v_fine - oracle.W @ v_dofs
    lhs = math.sqrt(max(fine.energy(diff), 0.0))
    ba = seminorm_and_best_approx(poly, v, p, config, fine=fine, v_fine=v_fine)
    return InterpBoundResult(lhs, ba.best_err, a_star, a_sup)


@dataclass(frozen=True)
class QuasiOptimalityResult:
    lhs: float            # |v - v_I|
    best_err: float       # inf over degree-p polynomials of |v - q|

    def passed(self, slack: float = 1e-3) -> bool:
        return self.lhs <= self.best_err * (1.0 + slack)


def quasi_optimality_check(poly: Polygon, p: int, v,
                           config: OracleConfig = OracleConfig()) -> QuasiOptimalityResult:
    """Nonconforming moment interpolation is exactly best-approximation bounded.

    The interpolant's DoFs are the fine-space moments of v, so the defining
    orthogonality holds discretely and the constant is 1 up to oracle error.
    """
    kind = nonconforming(p)
    oracle = solve_basis(poly, kind, config)
    fine = oracle.fine
    v_fine = fine.interpolate(v)
    v_dofs = oracle.function_dofs(v_fine)
    diff = v_fine - oracle.W @ v_dofs
    lhs = math.sqrt(max(fine.energy(diff), 0.0))
    ba = seminorm_and_best_approx(poly, v, p, config, fine=fine, v_fine=v_fine)
    return QuasiOptimalityResult(lhs, ba.best_err)


CSV_COLUMNS = ("kind", "stab", "p", "h", "geom_tag", "eps", "alpha_star",
               "alpha_sup", "ratio", "oracle_level", "min_edge_ratio")


def reports_to_csv(reports, header_comment: str | None = None) -> str:
    """Deterministic CSV text for a list of StabilityReport rows."""
    lines = []
    if header_comment:
        lines.append(header_comment)
    lines.append(",".join(CSV_COLUMNS))
    for r in reports:
        lines.append(",".join([
            r.kind, r.stab, str(r.p), f"{r.h:.17g}", r.geom_tag,
            f"{r.eps:.17g}", f"{r.alpha_star:.17g}", f"{r.alpha_sup:.17g}",
            f"{r.ratio:.17g}" if r.ok else "nan",
            str(r.oracle_level), f"{r.min_edge_ratio:.17g}",
        ]))
    return "\n".join(lines) + "\n"
