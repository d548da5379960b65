"""Mixed tangential/normal boundary conditions on a box.

Adding tangential faces shrinks the admissible space for the Poincare
inequality, so the constant can only decrease; it is smallest with every
face tangential.  A single tangential face behaves like a quarter wave and
its constant (about 2/pi) exceeds the full normal one (1/pi).  Two opposite
tangential faces carry a one-dimensional space of harmonic fields, spanned
by the constant field pointing from one face to the other.
"""

import numpy as np

from maxcon import BoundarySpec, build_complex, build_grid, harmonic_dimension, maxwell_rot_constant, poincare_constant

grid = build_grid((6, 6, 6))
configs = [[], ["x0"], ["x0", "x1"], ["x0", "y0"], ["x0", "x1", "y0", "y1"], list("x0 x1 y0 y1 z0 z1".split())]

print(f"{'tangential faces':<22} {'c_p':>10} {'c_m,rot':>10} {'rot swapped':>12} {'harmonic':>9}")
for faces in configs:
    bc = BoundarySpec.from_tangential(faces)
    ops = build_complex(grid, bc)
    c_p = poincare_constant(ops)
    c_rot = maxwell_rot_constant(ops)
    # tangential and normal rotation constants coincide
    c_rot_swapped = maxwell_rot_constant(build_complex(grid, bc.swapped()))
    dim = harmonic_dimension(ops)
    print(f"{','.join(faces) or '(none)':<22} {c_p:10.6f} {c_rot:10.6f} {c_rot_swapped:12.6f} {dim:9d}")

print(f"\nreference: 1/pi = {1 / np.pi:.6f}, 2/pi = {2 / np.pi:.6f}, 1/(sqrt(3) pi) = {1 / (np.sqrt(3) * np.pi):.6f}")
