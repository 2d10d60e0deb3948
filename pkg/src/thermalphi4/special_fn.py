"""Special functions used by the closed-form loop sums.

All series are accumulated with :func:`math.fsum`, which returns the
correctly rounded sum of its inputs.

Functions
---------
truncated_zeta
    Partial sum of the Riemann zeta series.
truncated_eta
    Partial sum of the Dirichlet eta series.
elliptic_k
    Complete elliptic integral of the first kind, parameter convention.
polygamma1
    Trigamma function.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

from .errors import DomainError

__all__ = [
    "TruncationOrder",
    "truncated_zeta",
    "truncated_eta",
    "elliptic_k",
    "polygamma1",
    "continuum_integral",
]


@dataclass(frozen=True)
class TruncationOrder:
    """Number of terms kept in a truncated Dirichlet series.

    For a chain of ``N`` sites the series run up to ``N // 2``; use
    :meth:`from_sites` for that convention.
    """

    n_terms: int

    def __post_init__(self):
        if int(self.n_terms) != self.n_terms or self.n_terms < 1:
            raise DomainError(f"n_terms must be a positive integer, got {self.n_terms!r}")

    @classmethod
    def from_sites(cls, n_sites: int) -> "TruncationOrder":
        return cls(n_sites // 2)


def _order(order) -> int:
    if isinstance(order, TruncationOrder):
        return order.n_terms
    return TruncationOrder(order).n_terms


def truncated_zeta(s: float, order) -> float:
    """Partial sum ``sum_{r=1}^{n} r**(-s)``.

    Parameters
    ----------
    s : float
        Exponent, must be positive.
    order : TruncationOrder or int
        Number of terms ``n``.

    Returns
    -------
    float
    """
    if not s > 0:
        raise DomainError(f"truncated_zeta needs s > 0, got {s}")
    n = _order(order)
    return math.fsum(r ** (-s) for r in range(1, n + 1))


def truncated_eta(s: float, order) -> float:
    """Partial alternating sum ``sum_{r=1}^{n} (-1)**(r+1) r**(-s)``."""
    if not s > 0:
        raise DomainError(f"truncated_eta needs s > 0, got {s}")
    n = _order(order)
    return math.fsum((r ** (-s) if r % 2 else -(r ** (-s))) for r in range(1, n + 1))


def elliptic_k(m: float) -> float:
    """Complete elliptic integral of the first kind ``K(m)``.

    Uses ``K(m) = pi / (2 AGM(1, sqrt(1 - m)))``.

    Parameters
    ----------
    m : float
        Parameter (not modulus), ``0 <= m < 1``.

    Raises
    ------
    DomainError
        For ``m < 0`` or ``m >= 1``; the integral diverges at ``m = 1``.
    """
    m = float(m)
    if not (0.0 <= m < 1.0):
        raise DomainError(f"elliptic_k needs 0 <= m < 1, got {m}")
    a, b = 1.0, math.sqrt(1.0 - m)
    for _ in range(64):
        if abs(a - b) <= 1e-16 * a:
            break
        a, b = 0.5 * (a + b), math.sqrt(a * b)
    return math.pi / (a + b)


# B_{2k} for k = 1..8
_BERNOULLI = (1 / 6, -1 / 30, 1 / 42, -1 / 30, 5 / 66, -691 / 2730, 7 / 6, -3617 / 510)
_SHIFT = 12.0


def polygamma1(z: float) -> float:
    """Trigamma function ``psi_1(z)`` for real ``z > 0``.

    Small arguments are shifted upward with ``psi_1(z) = psi_1(z+1) + 1/z**2``
    until ``z >= 12``, where the asymptotic series
    ``1/z + 1/(2 z**2) + sum_k B_2k / z**(2k+1)`` is accurate to double
    precision.
    """
    z = float(z)
    if not z > 0:
        raise DomainError(f"polygamma1 needs z > 0, got {z}")
    terms = []
    while z < _SHIFT:
        terms.append(1.0 / (z * z))
        z += 1.0
    inv = 1.0 / z
    inv2 = inv * inv
    tail = 0.0
    p = inv * inv2
    for b in _BERNOULLI:
        tail += b * p
        p *= inv2
    terms.extend([inv, 0.5 * inv2, tail])
    return math.fsum(terms)


def continuum_integral() -> float:
    """Unit-mass two-loop integral ``I`` of the continuum sunrise diagram.

    ``I = (pi**2/18) (psi_1(1/6) + psi_1(1/3) - psi_1(2/3) - psi_1(5/6))``,
    so that ``mu**2 Sigma_sr / lambda**2 = -I / (6 (2 pi)**4)`` at zero
    temperature.
    """
    s = math.fsum([polygamma1(1 / 6), polygamma1(1 / 3), -polygamma1(2 / 3), -polygamma1(5 / 6)])
    return math.pi ** 2 / 18.0 * s
