"""Exception hierarchy shared by all modules.

The CLI maps these onto process exit codes, so every raised error should be
one of the classes below rather than a bare ``ValueError``.
"""


class ThermalPhi4Error(Exception):
    """Base class for library errors."""


class ConfigError(ThermalPhi4Error):
    """Invalid or unknown run configuration."""


class PhysicsDomainError(ThermalPhi4Error, ValueError):
    """Input outside the physical domain of a formula."""


class DomainError(PhysicsDomainError):
    """Argument outside the domain of a special function."""


class GaplessError(PhysicsDomainError):
    """Non-positive gap in the propagator spectrum (IR divergence)."""


class PoleError(PhysicsDomainError):
    """Propagator evaluated on or beyond its pole."""


class DegenerateKinematicsError(PhysicsDomainError):
    """Vanishing threshold denominator in the closed-form sunrise sum."""

    def __init__(self, message, indices=None):
        super().__init__(message)
        self.indices = indices


class ResidueError(PhysicsDomainError):
    """Non-physical propagator residue (1 + dSigma/dk0^2 <= 0)."""


class KernelSignError(PhysicsDomainError):
    """Sunrise kernel with the wrong sign."""


class InstabilityError(PhysicsDomainError):
    """Ion crystal beyond the linear-to-zigzag instability."""


class ResonanceError(PhysicsDomainError):
    """Laser beatnote resonant with a phonon mode."""


class SoftModeError(PhysicsDomainError):
    """Effective mass squared non-positive (beyond the soft-mode point)."""


class NonConvergenceError(ThermalPhi4Error):
    """Iterative solver failed to reach tolerance."""

    def __init__(self, message, last_iterate=None, iterations=None):
        super().__init__(message)
        self.last_iterate = last_iterate
        self.iterations = iterations


class StallError(NonConvergenceError):
    """Adaptive step fell below its floor."""
