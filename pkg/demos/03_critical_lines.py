"""
Critical lines and symmetry restoration
=======================================

For each ``mu**2`` on a grid the coupling that makes the pole mass vanish
is ``lambda0 = sqrt(6 mu**2 / S)``, and the bare mass follows from the
tadpole. A hotter lattice needs a smaller coupling to stay symmetric.
"""

import numpy as np

from thermalphi4.gap import detect_crossings, physical_mass, solve_gap, trace_critical_line
from thermalphi4.lattice import LatticeSpec

spec = LatticeSpec.nearest_neighbor(30)
grid = np.geomspace(1e-3, 50, 60)
cold = trace_critical_line(0.5, grid, spec)
hot = trace_critical_line(1.0, grid, spec)

print(f"{'mu^2 a^2':>10} {'lambda_c(0.5)':>14} {'lambda_c(1.0)':>14}")
for p, q in list(zip(cold.points, hot.points))[::8]:
    print(f"{p.mu_sq:10.4g} {p.lambda0:14.6g} {q.lambda0:14.6g}")

###############################################################################
# In the ``(m0**2, lambda0)`` plane the two lines cross at strongly negative
# bare mass. Against ``mu**2`` they never do.

for plane in ("m0", "mu"):
    rep = detect_crossings(cold, hot, plane)
    print(f"crossings in the {plane} plane: {[(round(c.abscissa, 3), round(c.lambda0, 3)) for c in rep.crossings]}")

###############################################################################
# A point between the lines is broken when cold and symmetric when hot.

m0_sq, lam = -0.1, 0.265
for T in (0.5, 1.0):
    g = solve_gap(m0_sq, lam, T, spec)
    print(f"T a = {T}: m_P^2 a^2 = {physical_mass(g.mu_sq, lam, T, spec).mp_sq:+.4e}")
