"""Self-consistent gap equation, physical mass and critical-line routines.

The tadpole resummation fixes ``mu**2 = m0**2 + Sigma_td(mu**2)``. The sunrise
diagram then shifts the pole to ``m_P**2 = z (mu**2 + Sigma_sr(0))``.

Critical lines and mass contours are traced in the inverse direction: a grid
of ``mu**2`` values is given, and the bare mass follows without iteration as
``m0**2 = mu**2 - Sigma_td(mu**2)``.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass
from typing import Sequence, Tuple

import numpy as np
from scipy import integrate, optimize

from ._parallel import pmap
from .errors import (GaplessError, KernelSignError, NonConvergenceError, PhysicsDomainError,
                     StallError, ThermalPhi4Error)
from .lattice import LatticeSpec
from .loops import (DEFAULT_WAVE_MODES, MatsubaraTruncation, sunrise_k0_derivative,
                    sunrise_kernel, tadpole_shift, wavefunction_renorm)
from .special_fn import continuum_integral

__all__ = [
    "GapSolution",
    "PhysicalMassResult",
    "CriticalPoint",
    "CriticalLine",
    "ContourRow",
    "MassContour",
    "CriticalRatioFit",
    "CriticalRatioResult",
    "Crossing",
    "CrossingReport",
    "solve_gap",
    "bare_mass",
    "physical_mass",
    "critical_coupling",
    "trace_critical_line",
    "trace_mass_contour",
    "critical_ratio_continuum",
    "continuum_integral_quadrature",
    "critical_ratio_lattice",
    "detect_crossings",
    "FIT_MODELS",
]


# --------------------------------------------------------------------------- gap equation

@dataclass(frozen=True)
class GapSolution:
    mu_sq: float
    m0_sq: float
    lambda0: float
    T: float
    sigma_td: float
    iterations: int
    residual: float


def bare_mass(mu_sq: float, lambda0: float, T: float, spec: LatticeSpec) -> float:
    """Inverse gap map ``m0**2 = mu**2 - Sigma_td(mu**2)``."""
    return mu_sq - tadpole_shift(mu_sq, T, lambda0, spec).value


def solve_gap(m0_sq: float, lambda0: float, T: float, spec: LatticeSpec, tol: float = 1e-10,
              max_iter: int = 500, alpha: float = 0.5) -> GapSolution:
    """Solve ``mu**2 = m0**2 + Sigma_td(mu**2)``.

    Damped fixed-point iteration, ``mu_new = (1-alpha) mu + alpha (m0 + Sigma)``.
    If an iterate leaves the gapped domain, or the residual stops shrinking,
    the solver switches to a bracketed root search on the (monotone) residual.

    Raises
    ------
    GaplessError
        No gapped solution exists (only possible at ``lambda0 = 0``).
    NonConvergenceError
        ``max_iter`` exceeded.
    """
    if lambda0 < 0:
        raise PhysicsDomainError("lambda0 must be non-negative")
    floor = spec.gap_floor()

    def sigma(mu):
        return tadpole_shift(mu, T, lambda0, spec).value

    if lambda0 == 0:
        if not m0_sq > floor:
            raise GaplessError(f"free theory with m0^2 = {m0_sq} has no gapped solution")
        return GapSolution(m0_sq, m0_sq, 0.0, T, 0.0, 1, 0.0)

    def resid(mu):
        return mu - m0_sq - sigma(mu)

    mu = max(m0_sq, floor + max(1.0, abs(floor)))
    prev = math.inf
    for it in range(1, max_iter + 1):
        s = sigma(mu)
        r = mu - m0_sq - s
        if abs(r) <= tol:
            return GapSolution(mu, m0_sq, lambda0, T, s, it, abs(r))
        if abs(r) >= prev:
            break
        prev = abs(r)
        new = (1 - alpha) * mu + alpha * (m0_sq + s)
        if not new > floor:
            break
        mu = new
    else:
        raise NonConvergenceError("gap iteration exceeded max_iter", last_iterate=mu,
                                  iterations=max_iter)
    # bracketed fallback; the residual is strictly increasing in mu
    step = 1e-12 * max(1.0, abs(floor))
    lo = floor + step
    while resid(lo) > 0:
        step *= 0.5
        lo = floor + step
        if step < 1e-300:
            raise GaplessError("gap equation has no gapped solution")
    hi = max(mu, lo) + 1.0
    while resid(hi) < 0:
        hi = 2 * hi - lo
    root, info = optimize.brentq(resid, lo, hi, xtol=tol * 1e-3, rtol=4 * np.finfo(float).eps,
                                 maxiter=max_iter, full_output=True, disp=False)
    if not info.converged:
        raise NonConvergenceError("bracketed gap search failed", last_iterate=root,
                                  iterations=info.iterations)
    s = sigma(root)
    r = abs(root - m0_sq - s)
    if r > tol:
        raise NonConvergenceError(f"gap residual {r} above tolerance", last_iterate=root,
                                  iterations=info.iterations)
    return GapSolution(root, m0_sq, lambda0, T, s, it + info.iterations, r)


# --------------------------------------------------------------------------- physical mass

@dataclass(frozen=True)
class PhysicalMassResult:
    mp_sq: float
    z: float
    sigma_sr0: float
    dsigma_dk0sq: float


def physical_mass(mu_sq: float, lambda0: float, T: float, spec: LatticeSpec,
                  trunc: MatsubaraTruncation = MatsubaraTruncation(DEFAULT_WAVE_MODES),
                  form: str = "exact") -> PhysicalMassResult:
    """Sunrise-corrected pole mass ``m_P**2 = z (mu**2 + Sigma_sr(0))``.

    The ``k0**2`` derivative needs a truncated Matsubara sum and therefore
    ``T > 0``; at ``lambda0 = 0`` the free result is returned exactly.
    """
    if lambda0 == 0:
        spec.frequencies(mu_sq)
        return PhysicalMassResult(mu_sq, 1.0, 0.0, 0.0)
    S = sunrise_kernel(mu_sq, T, spec)
    sig = -lambda0 ** 2 * S / 6.0
    if T <= 0:
        raise PhysicsDomainError("wavefunction renormalization needs T > 0")
    d = sunrise_k0_derivative(mu_sq, T, lambda0, spec, trunc, form=form).value
    z = wavefunction_renorm(d)
    return PhysicalMassResult(z * (mu_sq + sig), z, sig, d)


# --------------------------------------------------------------------------- routine R1

@dataclass(frozen=True)
class CriticalPoint:
    mu_sq: float
    lambda0: float
    m0_sq: float


@dataclass(frozen=True)
class CriticalLine:
    T: float
    points: Tuple[CriticalPoint, ...]

    def arrays(self):
        p = self.points
        return (np.array([q.mu_sq for q in p]), np.array([q.lambda0 for q in p]),
                np.array([q.m0_sq for q in p]))


def critical_coupling(mu_sq: float, T: float, spec: LatticeSpec) -> float:
    """Coupling on the ``m_P**2 = 0`` line at given ``mu**2``: ``sqrt(6 mu**2 / S)``."""
    S = sunrise_kernel(mu_sq, T, spec)
    if not S > 0:
        raise KernelSignError(f"sunrise kernel S = {S} is not positive")
    return math.sqrt(6.0 * mu_sq / S)


def _critical_point(mu_sq, T, spec):
    try:
        lam = critical_coupling(mu_sq, T, spec)
        return CriticalPoint(mu_sq, lam, bare_mass(mu_sq, lam, T, spec))
    except ThermalPhi4Error as exc:
        exc.args = (f"{exc.args[0] if exc.args else exc} at mu^2 = {mu_sq!r}, T = {T!r}",) \
            + exc.args[1:]
        raise


def trace_critical_line(T: float, mu_sq_grid: Sequence[float], spec: LatticeSpec,
                        threads: int = 1) -> CriticalLine:
    """Critical line at temperature ``T`` over a grid of ``mu**2`` values.

    For each ``mu**2``: ``lambda0 = sqrt(6 mu**2 / S(mu, T))`` and
    ``m0**2 = mu**2 - Sigma_td(mu**2, lambda0, T)``. Points are returned in
    increasing ``mu**2``.
    """
    grid = np.sort(np.asarray(mu_sq_grid, dtype=float))
    if grid.size and not grid[0] > 0:
        raise PhysicsDomainError("mu^2 grid must be strictly positive")
    pts = pmap(lambda m: _critical_point(float(m), T, spec), grid, threads)
    return CriticalLine(T, tuple(pts))


# --------------------------------------------------------------------------- routine R2

@dataclass(frozen=True)
class ContourRow:
    T: float
    m0_sq: float
    mu_sq: float
    mp_sq: float
    z: float


@dataclass(frozen=True)
class MassContour:
    lambda0: float
    rows: Tuple[ContourRow, ...]
    boundary: Tuple[ContourRow, ...] = ()


def _contour_row(mu, lambda0, T, spec, trunc):
    pm = physical_mass(mu, lambda0, T, spec, trunc)
    return ContourRow(T, bare_mass(mu, lambda0, T, spec), mu, pm.mp_sq, pm.z)


def _scan_one_T(T, lambda0, mu_start, spec, c, min_step, trunc, max_steps):
    a = 1.0 / spec.inv_spacing
    floor = spec.gap_floor()
    rows = []
    mu = mu_start
    row = _contour_row(mu, lambda0, T, spec, trunc)
    if row.mp_sq < 0:
        raise PhysicsDomainError(f"m_P^2 < 0 already at mu_start = {mu_start} (T = {T})")
    for _ in range(max_steps):
        rows.append(row)
        eps = c * row.mp_sq * a * a / (1.0 + T * a) ** (1.0 / 3.0)
        eps = max(eps, min_step)
        if eps < 1e-14:
            raise StallError(f"adaptive step {eps} underflowed at mu^2 = {mu}", last_iterate=mu)
        nxt = mu - eps
        if not nxt > floor:
            # boundary only reachable in the free limit, where m_P^2 -> mu^2
            if lambda0 == 0:
                return rows, ContourRow(T, floor, floor, 0.0, 1.0)
            nxt = floor + 0.5 * (mu - floor)
        new = _contour_row(nxt, lambda0, T, spec, trunc)
        if new.mp_sq / new.z < 0:
            f = lambda m: physical_mass(m, lambda0, T, spec, trunc).mp_sq
            mc = optimize.brentq(f, nxt, mu, xtol=1e-14, rtol=1e-13)
            return rows, _contour_row(mc, lambda0, T, spec, trunc)
        mu, row = nxt, new
    raise NonConvergenceError(f"mass contour did not reach the boundary at T = {T}",
                              last_iterate=mu, iterations=max_steps)


def trace_mass_contour(lambda0: float, T_values: Sequence[float], mu_start: float,
                       spec: LatticeSpec, c: float = 0.1, min_step: float = 1e-4,
                       trunc: MatsubaraTruncation = MatsubaraTruncation(DEFAULT_WAVE_MODES),
                       max_steps: int = 100000, threads: int = 1) -> MassContour:
    """Descend ``mu**2`` at fixed coupling until the physical mass vanishes.

    The step is ``eps = c m_P**2 a**2 / (1 + T a)**(1/3)``, bounded below by
    ``min_step`` because the bare rule shrinks geometrically near the boundary.
    The crossing itself is located with a bracketed root search and stored in
    ``boundary``, one row per temperature.
    """
    res = pmap(lambda T: _scan_one_T(float(T), lambda0, mu_start, spec, c, min_step, trunc,
                                     max_steps), list(T_values), threads)
    rows = tuple(r for rs, _ in res for r in rs)
    boundary = tuple(b for _, b in res)
    return MassContour(lambda0, rows, boundary)


# --------------------------------------------------------------------------- critical ratio

def critical_ratio_continuum() -> float:
    """``f_c = sqrt(6 (2 pi)**4 / I)`` from the trigamma closed form of ``I``."""
    return math.sqrt(6.0 * (2 * math.pi) ** 4 / continuum_integral())


def continuum_integral_quadrature(epsabs: float = 1e-13, epsrel: float = 1e-11) -> float:
    """Independent evaluation of ``I`` by 2D quadrature.

    After the angular integration,
    ``I = 4 pi**2 int dk k/(k**2+1) int dq q / ((q**2+1) sqrt((q**2+k**2+1)**2 - 4 k**2 q**2))``.
    Both radial integrals run over the half line with adaptive quadrature.
    """
    def inner(q, k):
        A = q * q + k * k + 1
        return q / ((q * q + 1) * math.sqrt(A * A - 4 * k * k * q * q))

    def outer(k):
        v, _ = integrate.quad(inner, 0, math.inf, args=(k,), epsabs=epsabs, epsrel=epsrel,
                              limit=200)
        return k / (k * k + 1) * v

    val, _ = integrate.quad(outer, 0, math.inf, epsabs=epsabs, epsrel=epsrel, limit=200)
    return 4 * math.pi ** 2 * val


def _m_linear(x):
    return np.column_stack([np.ones_like(x), x])


def _m_lin_xlogx(x):
    return np.column_stack([np.ones_like(x), x, x * np.log(x)])


def _m_xlogx(x):
    return np.column_stack([np.ones_like(x), x * np.log(x)])


FIT_MODELS = {
    "linear": _m_linear,
    "linear+xlogx": _m_lin_xlogx,
    "xlogx": _m_xlogx,
}


@dataclass(frozen=True)
class CriticalRatioFit:
    model: str
    coeffs: Tuple[float, ...]
    covariance: Tuple[Tuple[float, ...], ...]
    f_c: float
    f_c_err: float
    residuals: Tuple[float, ...]
    condition: float
    ill_conditioned: bool


@dataclass(frozen=True)
class CriticalRatioResult:
    n_sites: int
    x: Tuple[float, ...]
    f: Tuple[float, ...]
    fits: Tuple[CriticalRatioFit, ...]

    def fit(self, model: str) -> CriticalRatioFit:
        for ft in self.fits:
            if ft.model == model:
                return ft
        raise KeyError(model)


def _lsq(model, x, f, cond_limit):
    A = FIT_MODELS[model](x)
    coef, _, rank, sv = np.linalg.lstsq(A, f, rcond=None)
    res = f - A @ coef
    dof = max(len(f) - A.shape[1], 1)
    s2 = float(res @ res) / dof
    cov = s2 * np.linalg.pinv(A.T @ A)
    cond = float(sv[0] / sv[-1]) if sv[-1] > 0 else math.inf
    bad = cond > cond_limit or rank < A.shape[1]
    if bad:
        warnings.warn(f"fit model {model!r} is ill-conditioned (cond = {cond:.3g})")
    return CriticalRatioFit(model, tuple(coef.tolist()), tuple(map(tuple, cov.tolist())),
                            float(coef[0]), math.sqrt(max(cov[0, 0], 0.0)),
                            tuple(res.tolist()), cond, bad)


def critical_ratio_lattice(n_sites: int, mu_sq_grid: Sequence[float],
                           fit_models: Sequence[str] = tuple(FIT_MODELS), T: float = 0.0,
                           spacing: float = 1.0, threads: int = 1,
                           cond_limit: float = 1e10) -> CriticalRatioResult:
    """Lattice estimate of ``f_c = lambda0 / mu**2`` at ``lambda0 a**2 -> 0``.

    Points are taken on the critical line at temperature ``T`` (zero by
    default). Each model is a linear least-squares fit in ``x = lambda0 a**2``
    whose intercept is the extrapolated ratio; its standard error comes from
    the residual-scaled covariance.
    """
    spec = LatticeSpec.nearest_neighbor(n_sites, spacing)
    line = trace_critical_line(T, mu_sq_grid, spec, threads)
    mu, lam, _ = line.arrays()
    x = lam * spacing ** 2
    f = lam / mu
    fits = tuple(_lsq(m, x, f, cond_limit) for m in fit_models)
    return CriticalRatioResult(n_sites, tuple(x.tolist()), tuple(f.tolist()), fits)


# --------------------------------------------------------------------------- crossings

@dataclass(frozen=True)
class Crossing:
    abscissa: float
    lambda0: float
    segment_a: int
    segment_b: int


@dataclass(frozen=True)
class CrossingReport:
    plane: str
    crossings: Tuple[Crossing, ...]
    note: str = ""


def _segments_intersect(p1, p2, q1, q2):
    d1 = p2 - p1
    d2 = q2 - q1
    den = d1[0] * d2[1] - d1[1] * d2[0]
    if den == 0:
        return None
    w = q1 - p1
    t = (w[0] * d2[1] - w[1] * d2[0]) / den
    u = (w[0] * d1[1] - w[1] * d1[0]) / den
    if 0 <= t < 1 and 0 <= u < 1:
        return p1 + t * d1
    return None


def detect_crossings(line_a: CriticalLine, line_b: CriticalLine, plane: str = "m0") -> CrossingReport:
    """Intersections of two critical lines, piecewise linear between points.

    Parameters
    ----------
    plane : {"m0", "mu"}
        Abscissa of the comparison plane, ``m0**2`` or ``mu**2``; ``lambda0``
        is the ordinate.
    """
    if plane not in ("m0", "mu"):
        raise ValueError("plane must be 'm0' or 'mu'")
    mu_a, lam_a, m0_a = line_a.arrays()
    mu_b, lam_b, m0_b = line_b.arrays()
    if line_a.T == line_b.T and line_a.points == line_b.points:
        return CrossingReport(plane, (), "identical lines")
    xa = m0_a if plane == "m0" else mu_a
    xb = m0_b if plane == "m0" else mu_b
    if xa.size < 2 or xb.size < 2:
        return CrossingReport(plane, (), "too few points")
    if max(xa.min(), xb.min()) > min(xa.max(), xb.max()):
        return CrossingReport(plane, (), "non-overlapping ranges")
    A = np.column_stack([xa, lam_a])
    B = np.column_stack([xb, lam_b])
    out = []
    for i in range(len(A) - 1):
        for j in range(len(B) - 1):
            hit = _segments_intersect(A[i], A[i + 1], B[j], B[j + 1])
            if hit is not None:
                out.append(Crossing(float(hit[0]), float(hit[1]), i, j))
    return CrossingReport(plane, tuple(out))
