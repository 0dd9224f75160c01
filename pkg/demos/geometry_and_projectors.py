"""Tour of the geometric building blocks: polygons, DoF layouts, projectors.

Builds a pentagon, prints its shape metrics, then shows that the energy
projector recovers polynomial coefficients exactly from DoF vectors alone.
"""

import numpy as np

from vemlab.mesh import regular_polygon
from vemlab.polybasis import MonomialBasis2D, poly_dim
from vemlab.space import (build_projectors, conforming, dof_table,
                          dofs_of_polynomial, nonconforming)


def main():
    poly = regular_polygon(5)
    print("regular pentagon")
    print(f"  area      {poly.area:.6f}")
    print(f"  diameter  {poly.diameter:.6f}")
    print(f"  centroid  ({poly.centroid[0]:.6f}, {poly.centroid[1]:.6f})")

    print("\nDoF counts, n_v * p + dim P_(p-2):")
    for p in (1, 2, 3, 4):
        rows = []
        for kindf in (conforming, nonconforming):
            table = dof_table(poly, kindf(p))
            rows.append(f"{kindf(p).label}={table.n_dofs}")
        print(f"  p={p}: " + "  ".join(rows))

    print("\nenergy projector reproduces polynomials from their DoFs:")
    rng = np.random.default_rng(0)
    for p in (1, 2, 3):
        kind = conforming(p)
        projs = build_projectors(poly, kind)
        coeffs = rng.uniform(-1.0, 1.0, size=poly_dim(p))
        dofs = dofs_of_polynomial(poly, kind, coeffs)
        err = np.abs(projs.pinabla @ dofs - coeffs).max()
        print(f"  p={p}: reconstruction error {err:.2e}")

    print("\nprojector kernel grows with degree (non-polynomial content):")
    for p in (1, 2, 3, 4):
        projs = build_projectors(poly, conforming(p))
        n = projs.pinabla.shape[1]
        print(f"  p={p}: {n} DoFs, dim P_p = {poly_dim(p)}, "
              f"kernel dim = {n - poly_dim(p)}")

    basis = MonomialBasis2D.for_polygon(poly, 2)
    pts = poly.vertices
    vals = basis.eval(pts)
    print("\nscaled monomials at the first vertex:", np.round(vals[0], 4))


if __name__ == "__main__":
    main()
