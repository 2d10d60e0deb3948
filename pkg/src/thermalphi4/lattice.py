"""Dispersion relations and propagators for the two lattice regularizations.

Two discretizations of the scalar field are supported:

* :class:`NearestNeighbor` -- the textbook lattice with spacing ``a`` in
  natural units, lattice momentum ``(2/a) sin(k a / 2)``.
* :class:`TrappedIonDipolar` -- the transverse phonons of an ion chain, whose
  spatial "momentum" carries the dipolar tail of the Coulomb interaction.

Both are wrapped by :class:`LatticeSpec`, which exposes the quantities the
loop sums need: the squared lattice momentum on the Brillouin grid and the
inverse-spacing prefactor of the loop measure. For the ion case everything is
reduced to units of the axial trap frequency.

Quasi-momenta of the ion functions are passed as the dimensionless product
``k d``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional, Union

import numpy as np
from scipy import constants as sc

from .errors import GaplessError, PhysicsDomainError, PoleError, InstabilityError
from .special_fn import truncated_eta, truncated_zeta

__all__ = [
    "NearestNeighbor",
    "IonReducedParams",
    "TrappedIonDipolar",
    "LatticeSpec",
    "DimensionlessCouplings",
    "brillouin_grid",
    "lattice_momentum",
    "ion_dispersion",
    "ion_lattice_momentum_sq",
    "tadpole_propagator",
    "ion_propagator_si",
    "coulomb_length",
    "sound_speed",
    "reduce_to_dimensionless",
    "redimensionalize",
]


def coulomb_length(mass: float, axial_freq: float, charge: float = 1.0) -> float:
    """Length scale ``l`` with ``l**3 = q**2 / (4 pi eps0 m omega_x**2)``."""
    q = charge * sc.e
    return (q * q / (4 * math.pi * sc.epsilon_0 * mass * axial_freq ** 2)) ** (1 / 3)


@dataclass(frozen=True)
class NearestNeighbor:
    spacing: float = 1.0

    def __post_init__(self):
        if not self.spacing > 0:
            raise PhysicsDomainError("lattice spacing must be positive")


@dataclass(frozen=True)
class IonReducedParams:
    """Reduced trap parameters of a homogeneous ion chain.

    Attributes
    ----------
    length_ratio : float
        ``l / d``, Coulomb length over bulk spacing.
    axial_freq, transverse_freq : float
        ``omega_x`` and ``omega_z`` in rad/s.
    luttinger : float
        ``K0 = m d c_t / hbar``.
    n_sites : int
        Number of ions ``N1`` (even).
    """

    length_ratio: float
    axial_freq: float
    transverse_freq: float
    luttinger: float
    n_sites: int

    def __post_init__(self):
        if not (self.length_ratio > 0 and self.axial_freq > 0 and self.transverse_freq > 0):
            raise PhysicsDomainError("ion parameters must be positive")
        if not self.luttinger > 0:
            raise PhysicsDomainError("Luttinger parameter must be positive")
        if self.n_sites < 2 or self.n_sites % 2:
            raise PhysicsDomainError("n_sites must be an even integer >= 2")

    @classmethod
    def from_chain(cls, n_sites, length_ratio, axial_freq, transverse_freq, mass, spacing):
        """Build from physical inputs, deriving ``K0`` from the sound speed."""
        eta = truncated_eta(1, n_sites // 2)
        c_t = spacing * axial_freq * length_ratio ** 1.5 * math.sqrt(eta)
        k0 = mass * spacing * c_t / sc.hbar
        return cls(length_ratio, axial_freq, transverse_freq, k0, n_sites)

    @property
    def zeta3(self) -> float:
        return truncated_zeta(3, self.n_sites // 2)

    @property
    def zeta5(self) -> float:
        return truncated_zeta(5, self.n_sites // 2)

    @property
    def eta1(self) -> float:
        return truncated_eta(1, self.n_sites // 2)

    @property
    def loop_prefactor(self) -> float:
        """``(l/d)**(3/2) eta(1)**(1/2)``, the ion analogue of ``1/a``."""
        return self.length_ratio ** 1.5 * math.sqrt(self.eta1)

    @property
    def band_offset(self) -> float:
        """``(7/2) (l/d)**3 zeta(3)``: zigzag offset in units of ``omega_x**2``."""
        return 3.5 * self.length_ratio ** 3 * self.zeta3

    def with_transverse(self, transverse_freq: float) -> "IonReducedParams":
        return IonReducedParams(self.length_ratio, self.axial_freq, transverse_freq,
                                self.luttinger, self.n_sites)


@dataclass(frozen=True)
class TrappedIonDipolar:
    ion_params: IonReducedParams


Regularization = Union[NearestNeighbor, TrappedIonDipolar]


@dataclass(frozen=True)
class LatticeSpec:
    """Site count plus regularization.

    In the ion case the loop sums work with dimensionless quantities: mass
    squared ``mubar**2``, temperature ``Tbar`` and coupling ``lambdabar0``.
    """

    n_sites: int
    regularization: Regularization = field(default_factory=NearestNeighbor)

    def __post_init__(self):
        if int(self.n_sites) != self.n_sites or self.n_sites < 2 or self.n_sites % 2:
            raise PhysicsDomainError(f"n_sites must be an even integer >= 2, got {self.n_sites}")
        reg = self.regularization
        if isinstance(reg, TrappedIonDipolar) and reg.ion_params.n_sites != self.n_sites:
            raise PhysicsDomainError("ion_params.n_sites disagrees with n_sites")

    @classmethod
    def nearest_neighbor(cls, n_sites: int, spacing: float = 1.0) -> "LatticeSpec":
        return cls(n_sites, NearestNeighbor(spacing))

    @classmethod
    def trapped_ion(cls, params: IonReducedParams) -> "LatticeSpec":
        return cls(params.n_sites, TrappedIonDipolar(params))

    @property
    def is_ion(self) -> bool:
        return isinstance(self.regularization, TrappedIonDipolar)

    @property
    def inv_spacing(self) -> float:
        """Prefactor that multiplies each loop measure (``1/a`` or its ion analogue)."""
        if self.is_ion:
            return self.regularization.ion_params.loop_prefactor
        return 1.0 / self.regularization.spacing

    def momentum_sq_grid(self) -> np.ndarray:
        """Squared lattice momentum at ``n1 = 1..N1`` in loop units."""
        # n1 = N1 is the zero mode; reduce mod N1 so it is exactly k = 0
        n1 = np.arange(1, self.n_sites + 1) % self.n_sites
        kd = 2 * np.pi * n1 / self.n_sites
        if self.is_ion:
            p = self.regularization.ion_params
            return _ion_khat_sq_reduced(kd, p)
        a = self.regularization.spacing
        return (2.0 / a * np.sin(kd / 2)) ** 2

    def frequencies(self, mu_sq: float) -> np.ndarray:
        """On-shell frequencies ``sqrt(khat**2 + mu**2)`` on the grid.

        Raises
        ------
        GaplessError
            If the smallest squared frequency is not positive.
        """
        w2 = self.momentum_sq_grid() + mu_sq
        if not np.min(w2) > 0:
            raise GaplessError(f"gapless spectrum at mu^2 = {mu_sq!r}")
        return np.sqrt(w2)

    def gap_floor(self) -> float:
        """Smallest ``mu**2`` for which the spectrum stays gapped (exclusive)."""
        return -float(np.min(self.momentum_sq_grid()))


@dataclass(frozen=True)
class DimensionlessCouplings:
    """Ion couplings in units of the axial motional quantum."""

    mbar0_sq: float
    lambdabar0: float
    tbar: float
    mubar_sq: Optional[float] = None

    def __post_init__(self):
        if self.tbar < 0:
            raise PhysicsDomainError("tbar must be non-negative")


def brillouin_grid(spec: LatticeSpec) -> np.ndarray:
    """Quasi-momenta ``2 pi n1 / (N1 a)`` for ``n1 = 1..N1``.

    For the ion regularization the values are ``k d``.
    """
    n1 = np.arange(1, spec.n_sites + 1)
    if spec.is_ion:
        return 2 * np.pi * n1 / spec.n_sites
    return 2 * np.pi * n1 / (spec.n_sites * spec.regularization.spacing)


def lattice_momentum(k, spec: LatticeSpec):
    """Nearest-neighbor lattice momentum ``(2/a) sin(k a / 2)``."""
    if spec.is_ion:
        raise PhysicsDomainError("lattice_momentum applies to the nearest-neighbor lattice")
    a = spec.regularization.spacing
    return 2.0 / a * np.sin(np.asarray(k) * a / 2)


def _dipolar_sum(kd, n_sites: int):
    kd = np.asarray(kd, dtype=float)
    r = np.arange(1, n_sites // 2 + 1, dtype=float)
    s = np.sin(np.multiply.outer(kd, r) / 2) ** 2
    return np.sum(4.0 / r ** 3 * s, axis=-1)


def _ion_khat_sq_reduced(kd, p: IonReducedParams):
    lr3 = p.length_ratio ** 3
    return p.band_offset - lr3 * _dipolar_sum(kd, p.n_sites)


def ion_dispersion(kd, p: IonReducedParams):
    """Transverse phonon dispersion of the homogeneous chain, in rad/s.

    ``omega(k) = omega_z sqrt(1 - kappa_z (l/d)**3 sum_r (4/r**3) sin**2(k d r / 2))``
    with ``kappa_z = (omega_x/omega_z)**2``.

    Raises
    ------
    InstabilityError
        If the radicand is negative (zigzag phase).
    """
    kappa = (p.axial_freq / p.transverse_freq) ** 2
    rad = 1.0 - kappa * p.length_ratio ** 3 * _dipolar_sum(kd, p.n_sites)
    if np.any(rad < 0):
        raise InstabilityError("negative radicand in the ion dispersion (zigzag phase)")
    return p.transverse_freq * np.sqrt(rad)


def ion_lattice_momentum_sq(kd, p: IonReducedParams):
    """Ion analogue of the squared lattice momentum, in (rad/s)**2."""
    return p.axial_freq ** 2 * _ion_khat_sq_reduced(kd, p)


def tadpole_propagator(k0, k, mu_sq, spec: LatticeSpec):
    """Tadpole-resummed Euclidean propagator.

    Nearest neighbor: ``1/(k0**2 + khat**2 + mu**2)``. Ion: the dimensionless
    form ``1/(k0bar**2 + khat**2/omega_x**2 + mubar**2)`` where ``k0bar`` is
    the frequency in units of ``omega_x`` (for a Matsubara mode,
    ``2 pi Tbar n0``) and ``k`` is ``k d``.
    """
    if spec.is_ion:
        khat2 = _ion_khat_sq_reduced(k, spec.regularization.ion_params)
    else:
        khat2 = lattice_momentum(k, spec) ** 2
    den = np.asarray(k0) ** 2 + khat2 + mu_sq
    if np.any(den <= 0):
        raise PoleError("non-positive propagator denominator")
    return 1.0 / den


def ion_propagator_si(k0, kd, mass_energy, p: IonReducedParams):
    """Ion propagator in SI units, ``1/((hbar k0)**2 + (hbar khat)**2 + E**2)``.

    ``k0`` in rad/s, ``mass_energy`` is ``mu c_t**2`` in joules; result in 1/J**2.
    """
    khat2 = ion_lattice_momentum_sq(kd, p)
    den = (sc.hbar * np.asarray(k0)) ** 2 + sc.hbar ** 2 * khat2 + mass_energy ** 2
    if np.any(den <= 0):
        raise PoleError("non-positive propagator denominator")
    return 1.0 / den


def sound_speed(p: IonReducedParams, spacing: float) -> float:
    """Transverse sound speed ``c_t = d omega_x (l/d)**(3/2) eta(1)**(1/2)`` in m/s."""
    return spacing * p.axial_freq * p.loop_prefactor


def reduce_to_dimensionless(p: IonReducedParams, temperature: float, mass: float,
                            spacing: float) -> DimensionlessCouplings:
    """Trap parameters to ``(mbar0**2, lambdabar0, Tbar)``.

    Parameters
    ----------
    p : IonReducedParams
    temperature : float
        Kelvin.
    mass : float
        Ion mass in kg.
    spacing : float
        Bulk spacing ``d`` in metres.
    """
    if not (mass > 0 and spacing > 0 and temperature >= 0):
        raise PhysicsDomainError("mass and spacing must be positive, temperature >= 0")
    wx = p.axial_freq
    mbar0_sq = (p.transverse_freq / wx) ** 2 - p.band_offset
    lam = (729 * p.zeta5 / 2) * (sc.hbar / (mass * wx * spacing ** 2)) \
        * p.length_ratio ** 1.5 / math.sqrt(p.eta1)
    tbar = sc.k * temperature / (sc.hbar * wx)
    return DimensionlessCouplings(mbar0_sq, lam, tbar)


def redimensionalize(dc: DimensionlessCouplings, p: IonReducedParams, mass: float,
                     spacing: float) -> dict:
    """Inverse of :func:`reduce_to_dimensionless`.

    Returns
    -------
    dict
        ``transverse_freq`` (rad/s), ``temperature`` (K), ``lambda0`` (SI,
        kg**3 m**3 s**-2) and ``m0_sq`` (kg**2).
    """
    wx = p.axial_freq
    c_t = sound_speed(p, spacing)
    wz = wx * math.sqrt(dc.mbar0_sq + p.band_offset)
    temp = dc.tbar * sc.hbar * wx / sc.k
    lam_si = dc.lambdabar0 * wx ** 2 * (sc.hbar / c_t) ** 3
    m0_sq = dc.mbar0_sq * (sc.hbar * wx / c_t ** 2) ** 2
    return {"transverse_freq": wz, "temperature": temp, "lambda0": lam_si, "m0_sq": m0_sq}
