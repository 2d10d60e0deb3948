"""Finite-temperature tadpole and sunrise self-energies on a periodic lattice.

Every routine accepts a :class:`~thermalphi4.lattice.LatticeSpec`. Loop
momenta run over the Brillouin grid ``n1 = 1..N1`` and, when truncated,
over Matsubara indices ``n0 = -N0..N0``. Mode addition wraps around the
ring, ``omega_3 = omega((n1 + l1) mod N1)``.

Conventions
-----------
``Sigma_sr(0) = -lambda0**2 S / 6`` where ``S`` is the coupling-free sunrise
kernel returned by :func:`sunrise_kernel`.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .errors import DegenerateKinematicsError, GaplessError, PhysicsDomainError, ResidueError
from .lattice import LatticeSpec
from .special_fn import elliptic_k

__all__ = [
    "MatsubaraTruncation",
    "LoopResult",
    "CLOSED_FORM",
    "TRUNCATED",
    "tadpole_shift",
    "tadpole_shift_truncated",
    "tadpole_shift_infinite",
    "sunrise_kernel",
    "sunrise_mass_shift",
    "sunrise_mass_shift_truncated",
    "sunrise_k0_derivative",
    "wavefunction_renorm",
]

CLOSED_FORM = "closed-form"
TRUNCATED = "truncated"

DEFAULT_WAVE_MODES = 64
DEFAULT_TADPOLE_ORACLE_MODES = 4096


@dataclass(frozen=True)
class MatsubaraTruncation:
    """Matsubara indices kept: ``n0 = -n_modes..n_modes``."""

    n_modes: int

    def __post_init__(self):
        if int(self.n_modes) != self.n_modes or self.n_modes < 1:
            raise PhysicsDomainError("n_modes must be a positive integer")

    @property
    def indices(self) -> np.ndarray:
        return np.arange(-self.n_modes, self.n_modes + 1)


@dataclass(frozen=True)
class LoopResult:
    value: float
    method: str
    n_modes: Optional[int] = None


def _check_T(T, allow_zero=True):
    if T < 0 or (T == 0 and not allow_zero):
        raise PhysicsDomainError(f"invalid temperature {T!r}")


def _bose(w, T):
    if T == 0:
        return np.zeros_like(w)
    return 1.0 / np.expm1(w / T)


def _fsum_rows(a: np.ndarray) -> float:
    # pairwise numpy sums per row, exact merge across rows
    return math.fsum(np.sum(np.atleast_2d(a), axis=-1).tolist())


# --------------------------------------------------------------------------- tadpole

def tadpole_shift(mu_sq: float, T: float, lambda0: float, spec: LatticeSpec) -> LoopResult:
    """Tadpole mass shift with the Matsubara sum done in closed form.

    ``Sigma_td = lambda0/(4 N1) * inv_a * sum_n1 coth(omega/2T)/omega``, using
    ``coth = 1 + 2 n_B`` so that ``T = 0`` is exact.

    Parameters
    ----------
    mu_sq : float
        Tadpole-resummed mass squared (``mubar**2`` for ions).
    T : float
        Temperature, ``T >= 0``.
    lambda0 : float
    spec : LatticeSpec

    Returns
    -------
    LoopResult
    """
    _check_T(T)
    w = spec.frequencies(mu_sq)
    terms = (1.0 + 2.0 * _bose(w, T)) / w
    s = math.fsum(terms.tolist())
    return LoopResult(lambda0 * spec.inv_spacing * s / (4.0 * spec.n_sites), CLOSED_FORM)


def tadpole_shift_truncated(mu_sq: float, T: float, lambda0: float, spec: LatticeSpec,
                            trunc: MatsubaraTruncation = MatsubaraTruncation(DEFAULT_TADPOLE_ORACLE_MODES)
                            ) -> LoopResult:
    """Tadpole shift from the explicit truncated Matsubara double sum."""
    _check_T(T, allow_zero=False)
    w2 = spec.frequencies(mu_sq) ** 2
    n0 = trunc.indices.astype(float)
    den = (2 * np.pi * T * n0[:, None]) ** 2 + w2[None, :]
    s = _fsum_rows(1.0 / den)
    val = 0.5 * lambda0 * T * spec.inv_spacing / spec.n_sites * s
    return LoopResult(val, TRUNCATED, trunc.n_modes)


def tadpole_shift_infinite(mu_sq: float, lambda0: float, spacing: float = 1.0) -> float:
    """Zero-temperature nearest-neighbour tadpole shift for ``N1 -> infinity``.

    ``Sigma_td = lambda0 K(m) / (2 pi sqrt(mu**2 a**2 + 4))`` with
    ``m = 4 / (mu**2 a**2 + 4)``.
    """
    x = mu_sq * spacing * spacing
    if not x > 0:
        raise GaplessError("need mu^2 > 0")
    return lambda0 * elliptic_k(4.0 / (x + 4.0)) / (2.0 * math.pi * math.sqrt(x + 4.0))


# --------------------------------------------------------------------------- sunrise

_ROW_CHUNK = 256


def _sunrise_block(w1, w2, w3, T):
    """Closed-form summand for arrays of frequency triples (up to prefactor)."""
    base = 1.0 / (w1 * w2 * w3 * (w1 + w2 + w3))
    if T == 0:
        return base
    n1, n2, n3 = _bose(w1, T), _bose(w2, T), _bose(w3, T)
    d12 = w1 + w2 - w3
    d13 = w1 + w3 - w2
    d23 = w2 + w3 - w1
    prod = d12 * d13 * d23
    # coth_i coth_j - 1 = 2 (n_i + n_j + 2 n_i n_j)
    c12 = 2 * (n1 + n2 + 2 * n1 * n2)
    c13 = 2 * (n1 + n3 + 2 * n1 * n3)
    c23 = 2 * (n2 + n3 + 2 * n2 * n3)
    thermal = ((w1 ** 2 + w2 ** 2 - w3 ** 2) * w3 * c12
               + (w1 ** 2 + w3 ** 2 - w2 ** 2) * w2 * c13
               + (w2 ** 2 + w3 ** 2 - w1 ** 2) * w1 * c23) / prod
    return base * (1.0 + thermal)


def _sunrise_rows(w, rows, T, eps_den):
    n = w.size
    j = np.arange(n)
    w1 = w[rows][:, None]
    w2 = w[None, :]
    # array index i holds n1 = i + 1, so omega(n1 + l1) sits at (i + j + 1) mod N1
    w3 = w[(rows[:, None] + j[None, :] + 1) % n]
    w1b, w2b = np.broadcast_arrays(w1, w2)
    vals = _sunrise_block(w1b, w2b, w3, T)
    if T > 0:
        scale = float(np.max(w))
        dmin = np.minimum(np.minimum(np.abs(w1b + w2b - w3), np.abs(w1b + w3 - w2b)),
                          np.abs(w2b + w3 - w1b))
        bad = dmin < eps_den * scale
        if np.any(bad):
            vals = vals.copy()
            vals[bad] = _degenerate_limit(w1b[bad], w2b[bad], w3[bad], T, eps_den * scale,
                                          rows, bad)
    return vals


def _degenerate_limit(w1, w2, w3, T, delta, rows, bad):
    # removable singularity: symmetric average of perturbed evaluations
    h = max(delta, 1e-6 * float(np.max(w3)))
    vp = _sunrise_block(w1, w2, w3 + h, T)
    vm = _sunrise_block(w1, w2, w3 - h, T)
    out = 0.5 * (vp + vm)
    if not np.all(np.isfinite(out)):
        ii, jj = np.nonzero(bad)
        idx = [(int(rows[a]) + 1, int(b) + 1) for a, b in zip(ii[:5], jj[:5])]
        raise DegenerateKinematicsError("degenerate sunrise kinematics", indices=idx)
    return out


def sunrise_matrix(mu_sq: float, T: float, spec: LatticeSpec, eps_den: float = 1e-12) -> np.ndarray:
    """Closed-form summand for every ``(n1, l1)`` pair, shape ``(N1, N1)``."""
    _check_T(T)
    w = spec.frequencies(mu_sq)
    return _sunrise_rows(w, np.arange(w.size), T, eps_den)


def sunrise_kernel(mu_sq: float, T: float, spec: LatticeSpec, eps_den: float = 1e-12) -> float:
    """Coupling-free sunrise kernel ``S`` with ``Sigma_sr(0) = -lambda0**2 S / 6``.

    ``S = inv_a**2 / (4 N1**2) * sum_{n1,l1} [omega1 omega2 omega3 sum(omega)]**-1 (1 + thermal)``.
    The sum is evaluated in row blocks; each block is summed pairwise and
    blocks are merged exactly, so the result does not depend on threading.
    """
    _check_T(T)
    w = spec.frequencies(mu_sq)
    n = w.size
    partial = []
    for start in range(0, n, _ROW_CHUNK):
        rows = np.arange(start, min(start + _ROW_CHUNK, n))
        partial.extend(np.sum(_sunrise_rows(w, rows, T, eps_den), axis=1).tolist())
    s = math.fsum(partial)
    return spec.inv_spacing ** 2 * s / (4.0 * n * n)


def sunrise_mass_shift(mu_sq: float, T: float, lambda0: float, spec: LatticeSpec,
                       eps_den: float = 1e-12) -> LoopResult:
    """Sunrise self-energy at zero external momentum, closed-form Matsubara sums."""
    S = sunrise_kernel(mu_sq, T, spec, eps_den)
    return LoopResult(-lambda0 ** 2 * S / 6.0, CLOSED_FORM)


def _matsubara_props(w, T, trunc):
    n0 = trunc.indices.astype(float)
    nu = 2 * np.pi * T * n0
    return 1.0 / (nu[None, :] ** 2 + w[:, None] ** 2)


def _truncated_triple(w, T, trunc, third):
    """``sum_{n1,l1,n0,l0} D(n0,n1) D(l0,l1) F(n0+l0, n1+l1)``.

    ``third(u, w3)`` gives ``F`` for Matsubara frequency ``u`` of the summed
    mode. The inner ``(n0, l0)`` sum is a Hankel contraction.
    """
    n = w.size
    M = 2 * trunc.n_modes + 1
    D = _matsubara_props(w, T, trunc)  # (N1, M)
    s_idx = np.arange(2 * M - 1)
    u = 2 * np.pi * T * (s_idx - 2 * trunc.n_modes).astype(float)
    F = third(u[None, :], w[:, None])  # (N1, 2M-1)
    hank = np.arange(M)[:, None] + np.arange(M)[None, :]
    j = np.arange(n)
    partial = []
    for i in range(n):
        k3 = (i + j + 1) % n
        # H[l, a, b] = F[k3[l], a + b]
        H = F[k3][:, hank]
        row = np.einsum("a,lab,lb->l", D[i], H, D, optimize=False)
        partial.extend(row.tolist())
    return math.fsum(partial)


def sunrise_mass_shift_truncated(mu_sq: float, T: float, lambda0: float, spec: LatticeSpec,
                                 trunc: MatsubaraTruncation = MatsubaraTruncation(DEFAULT_WAVE_MODES),
                                 k0: float = 0.0) -> LoopResult:
    """Sunrise self-energy ``Sigma_sr(k0, 0)`` from the truncated double Matsubara sum.

    The external frequency ``k0`` flows through the third propagator.
    """
    _check_T(T, allow_zero=False)
    w = spec.frequencies(mu_sq)

    def third(u, w3):
        return 1.0 / ((u + k0) ** 2 + w3 ** 2)

    s = _truncated_triple(w, T, trunc, third)
    pref = spec.inv_spacing ** 2 * T * T / spec.n_sites ** 2
    return LoopResult(-lambda0 ** 2 / 6.0 * pref * s, TRUNCATED, trunc.n_modes)


def sunrise_k0_derivative(mu_sq: float, T: float, lambda0: float, spec: LatticeSpec,
                          trunc: MatsubaraTruncation = MatsubaraTruncation(DEFAULT_WAVE_MODES),
                          form: str = "exact") -> LoopResult:
    """Coefficient of ``k0**2`` in ``Sigma_sr(k0, 0)``, truncated Matsubara sums.

    Parameters
    ----------
    form : {"exact", "approx"}
        ``"exact"`` is half the second derivative of the truncated sum,
        integrand ``D1 D2 (D3**2 - 4 u**2 D3**3)``. ``"approx"`` uses the
        integrand ``D1 D2 omega3**2 D3**3``; it differs from the exact
        coefficient and fails a finite-difference check.
    """
    _check_T(T, allow_zero=False)
    w = spec.frequencies(mu_sq)
    if form == "exact":
        def third(u, w3):
            d = 1.0 / (u ** 2 + w3 ** 2)
            return d * d - 4.0 * u * u * d ** 3
    elif form == "approx":
        def third(u, w3):
            d = 1.0 / (u ** 2 + w3 ** 2)
            return w3 ** 2 * d ** 3
    else:
        raise ValueError(f"unknown form {form!r}")
    s = _truncated_triple(w, T, trunc, third)
    pref = spec.inv_spacing ** 2 * T * T / spec.n_sites ** 2
    return LoopResult(lambda0 ** 2 / 6.0 * pref * s, TRUNCATED, trunc.n_modes)


def wavefunction_renorm(deriv) -> float:
    """``z = 1 / (1 + dSigma/dk0**2)``; accepts a :class:`LoopResult` or a float."""
    d = deriv.value if isinstance(deriv, LoopResult) else float(deriv)
    if not 1.0 + d > 0:
        raise ResidueError(f"non-physical residue: 1 + dSigma/dk0^2 = {1.0 + d}")
    return 1.0 / (1.0 + d)
