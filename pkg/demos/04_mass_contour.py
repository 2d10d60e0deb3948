"""
Physical mass at fixed coupling
===============================

Starting deep in the symmetric phase, ``mu**2`` is lowered with a step that
shrinks with the physical mass until ``m_P**2`` changes sign. The crossing
itself is bracketed and refined.
"""

from thermalphi4.gap import trace_mass_contour
from thermalphi4.lattice import LatticeSpec

spec = LatticeSpec.nearest_neighbor(30)
mc = trace_mass_contour(1.0, [0.25, 0.5, 1.0, 2.0], 1.0, spec, min_step=1e-3)

print(f"{'T a':>6} {'m0^2 a^2 at boundary':>22} {'mu^2 a^2':>12} {'z':>10}")
for b in mc.boundary:
    print(f"{b.T:6.2f} {b.m0_sq:22.8f} {b.mu_sq:12.8f} {b.z:10.6f}")
print(f"\n{len(mc.rows)} contour rows in total")
