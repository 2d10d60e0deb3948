"""
Thermal renormalization of the interaction range
================================================

At fixed axial trap frequency the transverse frequency sets the bare mass
and the temperature enters through ``Tbar = kB T / (hbar omega_x)``. The
self-consistent tadpole plus sunrise pole mass gives the range of the
Yukawa couplings.
"""

import math

from thermalphi4.constants import species
from thermalphi4.ions import IonChainSpec, thermal_phase_map

two_pi = 2 * math.pi
ca = species("Ca40")
spec = IonChainSpec(30, ca.mass, two_pi * 0.45e6, two_pi * 6.5e6, two_pi * 6.0e6)
wz = [two_pi * f * 1e6 for f in (5.6, 5.8, 6.0, 6.5)]
tbar = [0.5, 2, 5, 10, 20, 40]
grid = thermal_phase_map(spec, wz, tbar, two_pi * 0.318e6, threads=2)

print(f"lambdabar0 = {grid.lambdabar0:.5f}")
print("xi_eff,P / d")
print(" omega_z/2pi " + "".join(f"{t:>9g}" for t in tbar))
for i, w in enumerate(wz):
    print(f"{w / two_pi / 1e6:9.2f} MHz" + "".join(f"{x:9.3f}" for x in grid.xi_over_d[i]))

print("\nm_P^2 = 0 boundary")
for w, t in grid.critical_curve:
    print(f"  Tbar = {t:5g}: omega_zc/2pi = {w / two_pi / 1e6:.4f} MHz")
