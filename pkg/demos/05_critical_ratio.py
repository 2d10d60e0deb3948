"""
Critical ratio from the lattice and the continuum
=================================================

Close to the Gaussian point the ratio ``f = lambda0 / mu**2`` on the critical
line tends to a universal number. In the continuum it follows from a
two-loop integral with a trigamma closed form. On a large lattice it is
extrapolated with three small-coupling models.
"""

import numpy as np

from thermalphi4.gap import (continuum_integral_quadrature, critical_ratio_continuum,
                             critical_ratio_lattice)
from thermalphi4.special_fn import continuum_integral

print(f"continuum f_c = {critical_ratio_continuum():.6f}")
print(f"I closed form = {continuum_integral():.15f}, quadrature = {continuum_integral_quadrature():.15f}")

grid = np.geomspace(1e-4, 4e-3, 20)
for n in (500, 1000, 2000):
    res = critical_ratio_lattice(n, grid)
    fits = ", ".join(f"{f.model}: {f.f_c:.4f}({f.f_c_err:.0e})" for f in res.fits)
    print(f"N1 = {n:5d}  {fits}")
