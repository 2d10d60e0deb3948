"""
Tadpole and sunrise mass shifts on a 30-site ring
=================================================

Both self-energies are evaluated with the Matsubara sums done in closed form.
Dividing out the coupling gives numbers that depend only on ``mu a`` and
``T a``.
"""

import math

import numpy as np

from thermalphi4.lattice import LatticeSpec
from thermalphi4.loops import sunrise_kernel, tadpole_shift, tadpole_shift_infinite
from thermalphi4.special_fn import continuum_integral

spec = LatticeSpec.nearest_neighbor(30)
mu2 = 1.0

###############################################################################
# At zero temperature the ring is already close to the infinite lattice, where
# the tadpole reduces to a complete elliptic integral.

ref = tadpole_shift_infinite(mu2, 1.0)
print(f"Sigma_td / lambda0 at T = 0:  N1 = 30 -> {tadpole_shift(mu2, 0.0, 1.0, spec).value:.15f}")
print(f"                              N1 = oo -> {ref:.15f}")

###############################################################################
# Heating the ring raises the tadpole shift (the thermal mass) and deepens the
# sunrise shift. The continuum value of the zero-temperature sunrise is shown
# for reference.

sr_cont = -continuum_integral() / (6 * (2 * math.pi) ** 4)
print(f"\n{'T a':>6} {'Sigma_td/lambda0':>18} {'mu^2 Sigma_sr/lambda0^2':>25}")
for T in np.linspace(0.1, 2.0, 8):
    td = tadpole_shift(mu2, T, 1.0, spec).value
    sr = -mu2 * sunrise_kernel(mu2, T, spec) / 6
    print(f"{T:6.3f} {td:18.10f} {sr:25.10f}")
print(f"continuum zero-temperature sunrise: {sr_cont:.10f}")
