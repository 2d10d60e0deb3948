"""Trapped-ion chain: crystal, transverse phonons and spin-spin couplings.

Positions are measured in units of the Coulomb length
``l = (q**2 / (4 pi eps0 m omega_x**2))**(1/3)``. Frequencies are angular
(rad/s). Coupling matrices are stored as ``J / hbar`` in rad/s.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional, Sequence, Tuple

import numpy as np
from scipy import optimize

from ._parallel import pmap
from .constants import HBAR, KB
from .errors import (InstabilityError, NonConvergenceError, PhysicsDomainError, ResonanceError,
                     SoftModeError, ThermalPhi4Error)
from .gap import PhysicalMassResult, bare_mass, critical_coupling, physical_mass, solve_gap
from .lattice import (DimensionlessCouplings, IonReducedParams, LatticeSpec, coulomb_length,
                      reduce_to_dimensionless)
from .loops import DEFAULT_WAVE_MODES, MatsubaraTruncation
from .special_fn import truncated_zeta

__all__ = [
    "IonChainSpec",
    "EquilibriumConfig",
    "NormalModeSet",
    "SpinCouplingMatrix",
    "PhaseMapGrid",
    "EXACT",
    "COARSE_GRAINED",
    "RENORMALIZED",
    "solve_equilibrium",
    "classical_critical_kappa",
    "transverse_normal_modes",
    "exact_spin_couplings",
    "lamb_dicke",
    "matched_lamb_dicke",
    "recoil_energy",
    "reduced_params",
    "coarse_grained_couplings",
    "renormalized_couplings",
    "mean_phonon_number",
    "temperature_for_occupancy",
    "coupling_constraint_margin",
    "thermal_phase_map",
]

EXACT = "exact"
COARSE_GRAINED = "coarse-grained"
RENORMALIZED = "renormalized"


@dataclass(frozen=True)
class IonChainSpec:
    n_ions: int
    mass: float
    axial_freq: float
    transverse_freq_y: float
    transverse_freq_z: float
    charge: float = 1.0

    def __post_init__(self):
        if self.n_ions < 1:
            raise PhysicsDomainError("n_ions must be positive")
        if min(self.mass, self.axial_freq, self.transverse_freq_y, self.transverse_freq_z) <= 0:
            raise PhysicsDomainError("mass and trap frequencies must be positive")

    @property
    def length_scale(self) -> float:
        return coulomb_length(self.mass, self.axial_freq, self.charge)

    def with_transverse_z(self, wz: float) -> "IonChainSpec":
        return IonChainSpec(self.n_ions, self.mass, self.axial_freq, self.transverse_freq_y, wz,
                            self.charge)


@dataclass(frozen=True)
class EquilibriumConfig:
    positions: np.ndarray
    residual_norm: float
    bulk_spacing: float

    @property
    def length_ratio(self) -> float:
        """``l / d``."""
        return 1.0 / self.bulk_spacing


# --------------------------------------------------------------------------- crystal

def _axial_force(u):
    d = u[:, None] - u[None, :]
    np.fill_diagonal(d, np.inf)
    return u - np.sum(np.sign(d) / d ** 2, axis=1)


def _axial_jacobian(u):
    d = np.abs(u[:, None] - u[None, :])
    np.fill_diagonal(d, np.inf)
    c = 2.0 / d ** 3
    J = -c
    np.fill_diagonal(J, 1.0 + c.sum(axis=1))
    return J


def _initial_guess(n):
    if n == 1:
        return np.zeros(1)
    base = np.linspace(-1.0, 1.0, n)

    def outer(L):
        return _axial_force(L * base)[-1]

    hi = 1.0
    while outer(hi) < 0:
        hi *= 2
    L = optimize.brentq(outer, 1e-3, hi)
    return L * base


def _transverse_hessian(u, axial_freq, transverse_freq):
    d = np.abs(u[:, None] - u[None, :])
    np.fill_diagonal(d, np.inf)
    A = axial_freq ** 2 / d ** 3
    H = A.copy()
    np.fill_diagonal(H, transverse_freq ** 2 - A.sum(axis=1))
    return H


def solve_equilibrium(spec: IonChainSpec, tol: float = 1e-12, max_iter: int = 100,
                      check_stability: bool = True) -> EquilibriumConfig:
    """Axial equilibrium of a linear chain.

    Solves ``u_i - sum_j sign(u_i - u_j)/(u_i - u_j)**2 = 0`` by Newton's method
    with backtracking, starting from a uniform chain whose length is rescaled
    until the outermost ion is force-free.

    Raises
    ------
    InstabilityError
        If a transverse Hessian has a negative eigenvalue (zigzag phase).
    NonConvergenceError
    """
    n = spec.n_ions
    u = _initial_guess(n)
    r = _axial_force(u)
    res = float(np.max(np.abs(r)))
    for it in range(max_iter):
        if res <= tol:
            break
        step = np.linalg.solve(_axial_jacobian(u), -r)
        t = 1.0
        while True:
            cand = u + t * step
            if np.all(np.diff(cand) > 0):
                rc = _axial_force(cand)
                rn = float(np.max(np.abs(rc)))
                if rn < res or t < 1e-8:
                    break
            t *= 0.5
        u, r, res = cand, rc, rn
    else:
        if res > tol:
            raise NonConvergenceError(f"equilibrium residual {res} above {tol}", last_iterate=u,
                                      iterations=max_iter)
    # enforce exact inversion symmetry, then polish once
    u = 0.5 * (u - u[::-1])
    r = _axial_force(u)
    u = u + np.linalg.solve(_axial_jacobian(u), -r)
    res = float(np.max(np.abs(_axial_force(u))))
    if check_stability and n > 1:
        for w in (spec.transverse_freq_y, spec.transverse_freq_z):
            ev = np.linalg.eigvalsh(_transverse_hessian(u, spec.axial_freq, w))
            if ev[0] < 0:
                raise InstabilityError("linear chain is unstable against the zigzag mode")
    d = float(np.min(np.diff(u))) if n > 1 else math.inf
    return EquilibriumConfig(u, res, d)


def classical_critical_kappa(n_ions: int, bulk_spacing: float) -> float:
    """``kappa_zc = (2/7) (d/l)**3 / zeta_{N/2}(3)``."""
    if n_ions < 2 or n_ions % 2:
        raise PhysicsDomainError("n_ions must be even")
    return (2.0 / 7.0) * bulk_spacing ** 3 / truncated_zeta(3, n_ions // 2)


# --------------------------------------------------------------------------- phonons

@dataclass(frozen=True)
class NormalModeSet:
    frequencies: np.ndarray
    mode_matrix: np.ndarray
    axial_freq: float


def transverse_normal_modes(eq: EquilibriumConfig, spec: IonChainSpec,
                            axis: str = "z") -> NormalModeSet:
    """Transverse normal modes, sorted by descending frequency.

    The last column of ``mode_matrix`` is the zigzag mode.
    """
    w = spec.transverse_freq_z if axis == "z" else spec.transverse_freq_y
    H = _transverse_hessian(eq.positions, spec.axial_freq, w)
    ev, vec = np.linalg.eigh(H)
    if ev[0] < 0:
        raise InstabilityError("negative transverse eigenvalue")
    order = np.argsort(ev)[::-1]
    vec = vec[:, order]
    # fix sign convention: first nonzero component positive
    for k in range(vec.shape[1]):
        i = int(np.argmax(np.abs(vec[:, k]) > 1e-12))
        if vec[i, k] < 0:
            vec[:, k] = -vec[:, k]
    return NormalModeSet(np.sqrt(ev[order]), vec, spec.axial_freq)


# --------------------------------------------------------------------------- couplings

@dataclass(frozen=True)
class SpinCouplingMatrix:
    """``J_ij / hbar`` in rad/s with zero diagonal."""

    j: np.ndarray
    provenance: str

    def hertz(self) -> np.ndarray:
        """``J_ij / h`` in Hz."""
        return self.j / (2 * math.pi)


def recoil_energy(wavevector: float, mass: float) -> float:
    """``E_R = (hbar dk)**2 / (2 m)`` in joules."""
    return (HBAR * wavevector) ** 2 / (2 * mass)


def lamb_dicke(wavevector: float, mass: float, axial_freq: float) -> float:
    """``eta_x = k sqrt(hbar / (2 m omega_x))``."""
    return wavevector * math.sqrt(HBAR / (2 * mass * axial_freq))


def matched_lamb_dicke(recoil: float, axial_freq: float) -> float:
    """Lamb-Dicke factor that makes the coarse-grained and exact couplings share normalization.

    Far from resonance the exact sum reduces to
    ``Omega**2 E_R omega_x**2 / ((omega_z**2 - Delta**2)**2 |u|**3)``; the
    dipolar term of the coarse-grained form equals this for
    ``eta_x**2 = E_R / (2 hbar omega_x)``.
    """
    return math.sqrt(recoil / (2 * HBAR * axial_freq))


def exact_spin_couplings(modes: NormalModeSet, rabi: float, detuning: float, recoil: float,
                         guard: Optional[float] = None) -> SpinCouplingMatrix:
    """``J_ij = Omega**2 E_R sum_n M_in M_jn / (Delta**2 - omega_n**2)``, divided by hbar."""
    w = modes.frequencies
    if guard is None:
        guard = 1e-6 * modes.axial_freq
    if w.size and np.min(np.abs(detuning - w)) < guard:
        raise ResonanceError("laser beatnote within the guard band of a phonon mode")
    M = modes.mode_matrix
    J = rabi ** 2 * recoil / HBAR * (M / (detuning ** 2 - w ** 2)) @ M.T
    J = 0.5 * (J + J.T)
    np.fill_diagonal(J, 0.0)
    return SpinCouplingMatrix(J, EXACT)


def reduced_params(eq: EquilibriumConfig, spec: IonChainSpec) -> Tuple[IonReducedParams, float]:
    """Homogeneous-chain parameters and bulk spacing ``d`` in metres."""
    if spec.n_ions % 2:
        raise PhysicsDomainError("the coarse-grained description needs an even ion number")
    l = spec.length_scale
    d = eq.bulk_spacing * l
    p = IonReducedParams.from_chain(spec.n_ions, eq.length_ratio, spec.axial_freq,
                                    spec.transverse_freq_z, spec.mass, d)
    return p, d


def _compton(p: IonReducedParams, mbar_sq: float, detuning: float) -> float:
    """``xi / d`` for a dimensionless mass squared."""
    rad = mbar_sq - (detuning / p.axial_freq) ** 2
    if not rad > 0:
        raise SoftModeError(f"effective mass squared {rad} is not positive")
    return p.loop_prefactor / math.sqrt(rad)


def _yukawa_dipolar(eq, spec, p, d, detuning, j_eff, xi_over_d, provenance):
    l = spec.length_scale
    x = eq.positions * l
    n = x.size
    i = np.arange(n)
    X = np.abs(x[:, None] - x[None, :])
    np.fill_diagonal(X, np.inf)
    wx, wz = spec.axial_freq, spec.transverse_freq_z
    xi = xi_over_d * d
    dip = wx ** 4 * p.eta1 / (wz ** 2 - detuning ** 2) ** 2 * l ** 3 / X ** 3
    sign = np.where((i[:, None] - i[None, :]) % 2 == 0, 1.0, -1.0)
    yuk = sign * (xi * d * d / l ** 3) * np.exp(-X / xi)
    J = j_eff * (dip - yuk)
    np.fill_diagonal(J, 0.0)
    return SpinCouplingMatrix(J, provenance)


def _j_eff(p, rabi, lamb_dicke_factor):
    return rabi ** 2 * lamb_dicke_factor ** 2 / p.axial_freq * 2.0 / p.eta1


def coarse_grained_couplings(eq: EquilibriumConfig, spec: IonChainSpec, detuning: float,
                             rabi: float, lamb_dicke_factor: float) -> SpinCouplingMatrix:
    """Yukawa plus dipolar coarse-grained couplings on the inhomogeneous crystal.

    ``J_ij = J_eff [omega_x**4 eta(1)/(omega_z**2 - Delta**2)**2 l**3/|x_ij|**3
    - (-1)**(i-j) (xi d**2 / l**3) exp(-|x_ij|/xi)]`` with
    ``J_eff / hbar = Omega**2 eta_x**2 / omega_x * 2 / eta(1)``.
    """
    p, d = reduced_params(eq, spec)
    mbar0_sq = reduce_to_dimensionless(p, 0.0, spec.mass, d).mbar0_sq
    xi_d = _compton(p, mbar0_sq, detuning)
    return _yukawa_dipolar(eq, spec, p, d, detuning, _j_eff(p, rabi, lamb_dicke_factor), xi_d,
                           COARSE_GRAINED)


def renormalized_couplings(eq: EquilibriumConfig, spec: IonChainSpec, detuning: float,
                           rabi: float, lamb_dicke_factor: float, mp: PhysicalMassResult,
                           dimensionless: Optional[DimensionlessCouplings] = None
                           ) -> SpinCouplingMatrix:
    """Coarse-grained couplings with ``J_eff -> J_eff sqrt(z)`` and the pole mass.

    ``mp.mp_sq`` is the dimensionless physical mass squared ``mbar_P**2``.
    """
    p, d = reduced_params(eq, spec)
    xi_d = _compton(p, mp.mp_sq, detuning)
    j_eff = _j_eff(p, rabi, lamb_dicke_factor) * math.sqrt(mp.z)
    return _yukawa_dipolar(eq, spec, p, d, detuning, j_eff, xi_d, RENORMALIZED)


# --------------------------------------------------------------------------- thermal occupancy

def mean_phonon_number(mode_freq, T, reduced: bool = False):
    """Bose-Einstein occupancy ``1 / (exp(hbar omega / kB T) - 1)``.

    With ``reduced=True`` both arguments are dimensionless (``omega/omega_x``
    and ``Tbar``).
    """
    mode_freq = np.asarray(mode_freq, dtype=float)
    T = np.asarray(T, dtype=float)
    if np.any(mode_freq <= 0) or np.any(T < 0):
        raise PhysicsDomainError("need mode_freq > 0 and T >= 0")
    with np.errstate(divide="ignore", over="ignore"):
        x = mode_freq / T if reduced else HBAR * mode_freq / (KB * T)
        out = np.where(T > 0, 1.0 / np.expm1(x), 0.0)
    return float(out) if out.ndim == 0 else out


def temperature_for_occupancy(mode_freq: float, nbar: float) -> float:
    """Kelvin temperature at which a mode holds ``nbar`` quanta on average."""
    if not (mode_freq > 0 and nbar > 0):
        raise PhysicsDomainError("need mode_freq > 0 and nbar > 0")
    return HBAR * mode_freq / (KB * math.log1p(1.0 / nbar))


def coupling_constraint_margin(g: float, mode_freq: float, nbar: float, detuning: float,
                               mass: float) -> float:
    """Weak-force figure of merit; values much below one validate the spin model.

    ``|g| x0 sqrt(1 + 2 nbar) / hbar / |omega - Delta|`` with the zero-point
    amplitude ``x0 = sqrt(hbar / (2 m omega))``.
    """
    if not (mode_freq > 0 and mass > 0 and nbar >= 0):
        raise PhysicsDomainError("need mode_freq > 0, mass > 0, nbar >= 0")
    gap = abs(mode_freq - detuning)
    if gap == 0:
        raise ResonanceError("beatnote resonant with the mode")
    x0 = math.sqrt(HBAR / (2 * mass * mode_freq))
    return abs(g) * x0 * math.sqrt(1 + 2 * nbar) / HBAR / gap


# --------------------------------------------------------------------------- phase map

@dataclass(frozen=True)
class PhaseMapGrid:
    """Renormalized interaction range over an ``(omega_z, Tbar)`` grid.

    Cell arrays have shape ``(len(omega_z), len(tbar))``; invalid cells hold
    NaN and a non-empty entry in ``status``.
    """

    omega_z: np.ndarray
    tbar: np.ndarray
    xi_over_d: np.ndarray
    nbar: np.ndarray
    omega_zz_p: np.ndarray
    mp_sq: np.ndarray
    z: np.ndarray
    status: Tuple[Tuple[str, ...], ...]
    critical_curve: Tuple[Tuple[float, float], ...]
    lambdabar0: float

    @property
    def valid(self) -> np.ndarray:
        return np.array([[s == "" for s in row] for row in self.status])


def _phase_cell(args):
    p, lam, wz, tbar, detuning, trunc, tol = args
    spec = LatticeSpec.trapped_ion(p)
    wx = p.axial_freq
    nan = (math.nan,) * 5
    try:
        mbar0_sq = (wz / wx) ** 2 - p.band_offset
        gs = solve_gap(mbar0_sq, lam, tbar, spec, tol=tol)
        pm = physical_mass(gs.mu_sq, lam, tbar, spec, trunc)
        if not pm.mp_sq > 0:
            return nan, "broken-phase"
        xi = _compton(p, pm.mp_sq, detuning)
        mbar = math.sqrt(pm.mp_sq)
        nb = float(mean_phonon_number(mbar, tbar, reduced=True))
        return (xi, nb, mbar * wx, pm.mp_sq, pm.z), ""
    except SoftModeError:
        return nan, "soft-mode"
    except ThermalPhi4Error as exc:
        return nan, type(exc).__name__


def _critical_wz(p, lam, tbar):
    spec = LatticeSpec.trapped_ion(p)
    floor = spec.gap_floor()
    f = lambda m: critical_coupling(m, tbar, spec) - lam
    lo = floor + 1e-9 * max(1.0, abs(floor))
    hi = floor + 1.0
    while f(hi) < 0:
        hi = floor + 2 * (hi - floor)
    mc = optimize.brentq(f, lo, hi, xtol=1e-13, rtol=1e-14)
    m0c = bare_mass(mc, lam, tbar, spec)
    return p.axial_freq * math.sqrt(m0c + p.band_offset)


def thermal_phase_map(spec: IonChainSpec, omega_z_values: Sequence[float],
                      tbar_values: Sequence[float], detuning: float,
                      trunc: MatsubaraTruncation = MatsubaraTruncation(DEFAULT_WAVE_MODES),
                      gap_tol: float = 1e-10, threads: int = 1) -> PhaseMapGrid:
    """Thermally renormalized Compton wavelength over ``(omega_z, Tbar)``.

    The crystal is solved once (the axial problem does not depend on
    ``omega_z``). Per cell: bare couplings, gap equation, sunrise pole mass,
    then ``xi_eff,P / d``, ``omega_zz,P = mbar_P omega_x`` and the zigzag
    occupancy. The critical curve lists, for each ``Tbar``, the ``omega_z`` at
    which ``m_P**2 = 0``.
    """
    eq = solve_equilibrium(spec, check_stability=False)
    p0, d = reduced_params(eq, spec)
    lam = reduce_to_dimensionless(p0, 0.0, spec.mass, d).lambdabar0
    wz_arr = np.asarray(omega_z_values, dtype=float)
    t_arr = np.asarray(tbar_values, dtype=float)
    jobs = [(p0.with_transverse(float(wz)), lam, float(wz), float(t), detuning, trunc, gap_tol)
            for wz in wz_arr for t in t_arr]
    cells = pmap(_phase_cell, jobs, threads)
    shape = (wz_arr.size, t_arr.size)
    vals = np.array([c[0] for c in cells], dtype=float).reshape(shape + (5,))
    status = tuple(tuple(cells[i * t_arr.size + j][1] for j in range(t_arr.size))
                   for i in range(wz_arr.size))
    curve = pmap(lambda t: (_critical_wz(p0, lam, float(t)), float(t)), t_arr, threads)
    return PhaseMapGrid(wz_arr, t_arr, vals[..., 0], vals[..., 1], vals[..., 2], vals[..., 3],
                        vals[..., 4], status, tuple(curve), lam)
