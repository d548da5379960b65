"""Constants of the unit cube under grid refinement.

The continuum values follow from separation of variables: the first
Dirichlet Laplacian eigenvalue is 3 pi^2, the first positive Neumann one is
pi^2 and the first cavity (double-rot) eigenvalue is 2 pi^2.  The lumped
staggered discretization converges to them at second order, so a Richardson
step on two levels recovers several more digits.
"""

import numpy as np

from maxcon import BoundarySpec, build_complex, build_grid, maxwell_rot_constant, poincare_constant

exact = {
    "c_p (Gamma)": 1 / (np.sqrt(3) * np.pi),
    "c_p (empty)": 1 / np.pi,
    "c_m,rot": 1 / (np.sqrt(2) * np.pi),
}

levels = [4, 8, 12]
rows = []
for n in levels:
    grid = build_grid((n, n, n))
    dirichlet = build_complex(grid, BoundarySpec.dirichlet())
    neumann = build_complex(grid, BoundarySpec.neumann())
    rows.append({
        "c_p (Gamma)": poincare_constant(dirichlet),
        "c_p (empty)": poincare_constant(neumann),
        "c_m,rot": maxwell_rot_constant(dirichlet),
    })

print(f"{'n':>4} " + " ".join(f"{k:>14}" for k in exact))
for n, row in zip(levels, rows):
    print(f"{n:>4} " + " ".join(f"{row[k]:14.8f}" for k in exact))

h = [1 / n for n in levels]
r = (h[-2] / h[-1]) ** 2
print(f"{'rich':>4} " + " ".join(f"{rows[-1][k] + (rows[-1][k] - rows[-2][k]) / (r - 1):14.8f}" for k in exact))
print(f"{'cont':>4} " + " ".join(f"{v:14.8f}" for v in exact.values()))

# the full Maxwell constant is the larger of the two: the rot side wins
# with tangential conditions, the Poincare side with normal ones
last = rows[-1]
print("\nc_m (Gamma) =", max(last["c_p (Gamma)"], last["c_m,rot"]), "(rot side)")
print("c_m (empty) =", max(last["c_p (empty)"], last["c_m,rot"]), "(Poincare side)")
