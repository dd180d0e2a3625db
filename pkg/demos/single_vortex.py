"""
A single vortex and its radial profile
======================================

Solve the scalar vortex equation for one zero at the origin, compare the
density ``1 - e^u`` against the radial ODE solution and watch the energy
stay at ``2 pi`` while the core shrinks like ``1/sqrt(r)``.
"""

import math

from vortexlab import ZeroConfig, solve_radial, solve_vortex, total_energy
from vortexlab.concentrate import component_radius_check, decay_fit
from vortexlab.vortex import radial_profile_error

zeros = ZeroConfig([(0.0, 0.0)])

# the grid is chosen from r: spacing at most 0.25/sqrt(r), boundary well outside the disk
for r in (16.0, 64.0, 256.0):
    f = solve_vortex(zeros, r)
    prof = solve_radial(1, r, 1.5 * f.grid.R)
    E = total_energy(f)
    c_hat, _, r2 = decay_fit(f)
    print(f"r={r:6g}  grid n={f.grid.n:4d}  E/2pi={E / (2 * math.pi):.5f}  "
          f"radial error={radial_profile_error(f, prof):.1e}  "
          f"core radius*sqrt(r)={component_radius_check(f)[0]:.3f}  decay rate={c_hat:.3f} (r2 {r2:.4f})")

# a zero of multiplicity two carries twice the energy
f = solve_vortex(ZeroConfig([(0.1, -0.2)], [2]), 64.0)
print(f"multiplicity 2: E/2pi = {total_energy(f) / (2 * math.pi):.5f}")
