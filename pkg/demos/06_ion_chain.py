"""
Ion crystal, transverse phonons and spin-spin couplings
=======================================================

A 30-ion calcium chain in a 127 kHz axial trap. The exact couplings come from
the full transverse normal-mode sum; the coarse-grained ones from a dipolar
tail plus a staggered Yukawa term.
"""

import math

from scipy import constants as sc

from thermalphi4.constants import species
from thermalphi4.ions import (IonChainSpec, classical_critical_kappa, coarse_grained_couplings,
                             exact_spin_couplings, matched_lamb_dicke, recoil_energy,
                             solve_equilibrium, transverse_normal_modes)

ca = species("40Ca+")
two_pi = 2 * math.pi
spec = IonChainSpec(30, ca.mass, two_pi * 127e3, two_pi * 2.93e6, two_pi * 2.89e6)
eq = solve_equilibrium(spec)
modes = transverse_normal_modes(eq, spec)

print(f"bulk spacing d = {eq.bulk_spacing * spec.length_scale * 1e6:.3f} um, l/d = {eq.length_ratio:.4f}")
kc = classical_critical_kappa(30, eq.bulk_spacing)
print(f"classical linear-zigzag point: omega_zc/2pi = {spec.axial_freq / math.sqrt(kc) / two_pi / 1e6:.3f} MHz")
print(f"zigzag mode at omega_z/2pi = 2.89 MHz: {modes.frequencies[-1] / two_pi / 1e6:.3f} MHz")

###############################################################################
# Couplings at a beatnote well below the phonon band. With the Lamb-Dicke
# factor matched to the exact normalization, the coarse-grained form tracks
# the exact couplings at long range.

dk = two_pi * 411.5e12 / sc.c
er = recoil_energy(dk, ca.mass)
rabi, det = two_pi * 1e6, two_pi * 1.5e6
ex = exact_spin_couplings(modes, rabi, det, er).hertz()
cg = coarse_grained_couplings(eq, spec, det, rabi, matched_lamb_dicke(er, spec.axial_freq)).hertz()
print(f"\n{'j':>3} {'J_15,j exact [Hz]':>18} {'coarse-grained [Hz]':>20}")
for j in range(15, 30, 2):
    print(f"{j + 1:3d} {ex[14, j]:18.3f} {cg[14, j]:20.3f}")
