"""
Truncated Matsubara sums against the closed forms
=================================================

Summing ``n0 = -N0..N0`` explicitly converges to the closed-form result. The
tadpole tail falls off like ``1/N0``, the sunrise much faster. The ``k0**2``
coefficient of the sunrise, needed for the wavefunction renormalization,
is only available as a truncated sum; a central difference of the
un-differentiated sum checks it.
"""

from thermalphi4.lattice import LatticeSpec
from thermalphi4.loops import (MatsubaraTruncation, sunrise_k0_derivative, sunrise_mass_shift,
                               sunrise_mass_shift_truncated, tadpole_shift,
                               tadpole_shift_truncated)

spec = LatticeSpec.nearest_neighbor(30)
mu2, T = 1.0, 0.5

td = tadpole_shift(mu2, T, 1.0, spec).value
sr = sunrise_mass_shift(mu2, T, 1.0, spec).value
print(f"{'N0':>6} {'tadpole gap':>14} {'sunrise gap':>14}")
for n0 in (1, 4, 16, 64, 256):
    tr = MatsubaraTruncation(n0)
    a = td - tadpole_shift_truncated(mu2, T, 1.0, spec, tr).value
    b = sunrise_mass_shift_truncated(mu2, T, 1.0, spec, tr).value - sr
    print(f"{n0:6d} {a:14.3e} {b:14.3e}")

###############################################################################
# Finite-difference check of the derivative at matched truncation.

tr = MatsubaraTruncation(64)
h = 1e-3
s = lambda k0: sunrise_mass_shift_truncated(mu2, T, 1.0, spec, tr, k0=k0).value
fd = (s(h) + s(-h) - 2 * s(0.0)) / (2 * h * h)
d = sunrise_k0_derivative(mu2, T, 1.0, spec, tr).value
print(f"\ndSigma/dk0^2: analytic {d:.12e}  finite difference {fd:.12e}")
