"""Thermal and quantum renormalization of the lattice phi^4 model in 1+1 dimensions.

Subpackages by layer:

``special_fn``
    truncated zeta/eta sums, elliptic K, trigamma
``lattice``
    lattice regularizations and trapped-ion reduced parameters
``loops``
    tadpole and sunrise self-energies (closed-form and truncated Matsubara sums)
``gap``
    gap equation, physical mass, critical lines, mass contours, critical ratio
``ions``
    ion crystals, transverse phonons, spin-spin couplings, thermal phase map
``io`` / ``cli``
    run configuration, result tables and the batch command line
"""

__version__ = "0.1.0"
