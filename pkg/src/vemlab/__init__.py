"""vemlab: virtual element method on polygons with a stability measurement lab."""

__version__ = "0.1.0"

from .mesh import (GeometryError, MeshFormatError, Polygon, PolygonalMesh,
                   SubTriangulation, build_mesh, generate_collapsing_quad,
                   generate_square_mesh, load_mesh, polygon_geometry,
                   regular_polygon, save_mesh, subtriangulate, unit_square)
from .polybasis import (EdgeBasis, MonomialBasis2D, QuadratureRule,
                        edge_quadrature, gauss_lobatto_nodes, monomial_indices,
                        poly_dim, triangle_quadrature)
from .space import (ConstantFix, DofTable, ProjectorSet, SpaceFamily, SpaceKind,
                    build_projectors, compute_pi0, compute_pi0_edge,
                    compute_pinabla, conforming, dof_table, dofs_of_polynomial,
                    enhanced, interpolate_dofs, nonconforming)
from .stab import StabilizationMatrix, StabKind, build_stabilization
from .solver import (Manufactured, ProblemSpec, SolverError, mms_poly,
                     mms_sinsin, run_convergence_study, solve_poisson)
from .oracle import (OracleConfig, OracleError, seminorm_and_best_approx,
                     solve_basis, unisolvence_defect)
from .stabilitylab import (StabilityLabError, StabilityReport, collapse_sweep,
                           h_sweep, interp_bound_check, kernel_basis,
                           measure_element, p_sweep, quasi_optimality_check,
                           reports_to_csv, stability_constants)
