import math

import mpmath
import numpy as np
import pytest
from scipy import integrate

from thermalphi4.errors import GaplessError, PhysicsDomainError, ResidueError
from thermalphi4.lattice import LatticeSpec
from thermalphi4.loops import (MatsubaraTruncation, _sunrise_block, sunrise_k0_derivative,
                               sunrise_kernel, sunrise_mass_shift, sunrise_mass_shift_truncated,
                               tadpole_shift, tadpole_shift_infinite, tadpole_shift_truncated,
                               wavefunction_renorm)

NN30 = LatticeSpec.nearest_neighbor(30)
NN4 = LatticeSpec.nearest_neighbor(4)


# --------------------------------------------------------------------------- tadpole

def test_tadpole_matches_infinite_matsubara_sum():
    # oracle: sum over all n0 done by mpmath.nsum, per spatial mode
    T, mu2, lam = 0.7, 0.5, 2.0
    w = NN4.frequencies(mu2)
    tot = mpmath.mpf(0)
    for wi in w:
        f = lambda n, wi=wi: 1 / ((2 * mpmath.pi * T * n) ** 2 + wi ** 2)
        tot += mpmath.nsum(f, [-mpmath.inf, mpmath.inf])
    ref = 0.5 * lam * T / 4 * float(tot)
    assert tadpole_shift(mu2, T, lam, NN4).value == pytest.approx(ref, rel=1e-13)


def test_tadpole_zero_temperature_infinite_lattice():
    # T = 0 closed form on a large ring reproduces the elliptic-integral limit
    got = tadpole_shift(1.0, 0.0, 1.0, LatticeSpec.nearest_neighbor(2000)).value
    assert got == pytest.approx(tadpole_shift_infinite(1.0, 1.0), rel=1e-12)


def test_tadpole_infinite_against_quadrature():
    mu2 = 0.3
    f = lambda q: 1.0 / math.sqrt(mu2 + 4 * math.sin(q / 2) ** 2)
    ref = integrate.quad(f, -math.pi, math.pi, epsabs=1e-13, epsrel=1e-12)[0] / (8 * math.pi)
    assert tadpole_shift_infinite(mu2, 1.0) == pytest.approx(ref, rel=1e-12)


def test_tadpole_finite_size_deviation_decreases():
    ref = tadpole_shift_infinite(1.0, 1.0)
    devs = [abs(tadpole_shift(1.0, 0.0, 1.0, LatticeSpec.nearest_neighbor(n)).value / ref - 1)
            for n in (4, 6, 8, 12, 16, 20)]
    assert all(b < a for a, b in zip(devs, devs[1:]))


def test_tadpole_linear_in_coupling_and_grows_with_T():
    a = tadpole_shift(1.0, 0.5, 1.0, NN30).value
    assert tadpole_shift(1.0, 0.5, 3.0, NN30).value == pytest.approx(3 * a, rel=1e-15)
    assert tadpole_shift(1.0, 1.0, 1.0, NN30).value > a


def test_tadpole_truncated_converges_monotonically():
    closed = tadpole_shift(1.0, 0.5, 1.0, NN30).value
    gaps = [closed - tadpole_shift_truncated(1.0, 0.5, 1.0, NN30, MatsubaraTruncation(n)).value
            for n in (4, 16, 64, 256, 1024)]
    assert all(g > 0 for g in gaps)
    assert all(b < a for a, b in zip(gaps, gaps[1:]))
    # slow tail: gap ~ 1/N0
    assert gaps[-2] / gaps[-1] == pytest.approx(4.0, rel=0.05)


def test_tadpole_truncated_needs_positive_T():
    with pytest.raises(PhysicsDomainError):
        tadpole_shift_truncated(1.0, 0.0, 1.0, NN30)


def test_gapless_rejected():
    with pytest.raises(GaplessError):
        tadpole_shift(-0.1, 0.5, 1.0, NN30)


def test_matsubara_truncation_validation():
    assert MatsubaraTruncation(2).indices.tolist() == [-2, -1, 0, 1, 2]
    with pytest.raises(PhysicsDomainError):
        MatsubaraTruncation(0)


# --------------------------------------------------------------------------- sunrise

def test_zero_temperature_summand_against_frequency_integral():
    # int dk dl / (2 pi)**2 D(k, a) D(l, b) D(k + l, c) = 1 / (4 a b c (a + b + c))
    a, b, c = 0.8, 1.3, 1.9

    def inner(l, k):
        return 1 / ((l * l + b * b) * ((k + l) ** 2 + c * c))

    def outer(k):
        v = integrate.quad(inner, -np.inf, np.inf, args=(k,), epsabs=1e-14, limit=200)[0]
        return v / (k * k + a * a)

    val = integrate.quad(outer, -np.inf, np.inf, epsabs=1e-14, limit=200)[0] / (2 * math.pi) ** 2
    got = float(_sunrise_block(np.array(a), np.array(b), np.array(c), 0.0)) / 4
    assert got == pytest.approx(val, rel=1e-8)


def _matsubara_triple(a, b, c, T, n0):
    n = np.arange(-n0, n0 + 1)
    u = 2 * math.pi * T * n
    d1 = 1 / (u ** 2 + a * a)
    d2 = 1 / (u ** 2 + b * b)
    conv = np.convolve(d1, d2)  # index s <-> a + b = s - 2 n0
    us = 2 * math.pi * T * np.arange(-2 * n0, 2 * n0 + 1)
    return T * T * float(np.dot(conv, 1 / (us ** 2 + c * c)))


@pytest.mark.parametrize("T", [0.3, 1.0])
def test_thermal_summand_against_matsubara_sum(T):
    a, b, c = 0.9, 1.4, 1.7
    s1 = _matsubara_triple(a, b, c, T, 20000)
    s2 = _matsubara_triple(a, b, c, T, 40000)
    ref = 2 * s2 - s1  # Richardson on the 1/N0 tail
    got = float(_sunrise_block(np.array(a), np.array(b), np.array(c), T)) / 4
    assert got == pytest.approx(ref, rel=1e-7)


def test_sunrise_kernel_zero_T_continuum_limit():
    # mu**2 Sigma_sr / lambda**2 -> -I / (6 (2 pi)**4) as mu a -> 0
    from thermalphi4.special_fn import continuum_integral
    spec = LatticeSpec.nearest_neighbor(2000)
    mu2 = 1e-4
    got = -mu2 * sunrise_kernel(mu2, 0.0, spec) / 6
    ref = -continuum_integral() / (6 * (2 * math.pi) ** 4)
    assert got == pytest.approx(ref, rel=2e-3)


def test_sunrise_kernel_positive_and_symmetric():
    from thermalphi4.loops import sunrise_matrix
    m = sunrise_matrix(0.7, 0.4, NN30)
    assert np.all(m > 0)
    assert sunrise_kernel(0.7, 0.4, NN30) > sunrise_kernel(0.7, 0.0, NN30)


def test_sunrise_mass_shift_quadratic_in_coupling():
    a = sunrise_mass_shift(1.0, 0.5, 1.0, NN30).value
    assert a < 0
    assert sunrise_mass_shift(1.0, 0.5, 2.0, NN30).value == pytest.approx(4 * a, rel=1e-15)


def _naive_truncated(mu2, T, spec, n0, k0=0.0):
    w = spec.frequencies(mu2)
    n = w.size
    u = 2 * math.pi * T * np.arange(-n0, n0 + 1)
    tot = 0.0
    for i in range(n):
        for j in range(n):
            w3 = w[(i + j + 1) % n]
            for ua in u:
                for ub in u:
                    tot += (1 / (ua * ua + w[i] ** 2) / (ub * ub + w[j] ** 2)
                            / ((ua + ub + k0) ** 2 + w3 * w3))
    return -1 / 6 * T * T / n ** 2 * tot


@pytest.mark.parametrize("k0", [0.0, 0.37])
def test_truncated_sunrise_against_naive_loops(k0):
    got = sunrise_mass_shift_truncated(0.8, 0.6, 1.0, NN4, MatsubaraTruncation(5), k0=k0).value
    assert got == pytest.approx(_naive_truncated(0.8, 0.6, NN4, 5, k0), rel=1e-13)


def test_truncated_sunrise_gap_shrinks_monotonically():
    closed = sunrise_mass_shift(1.0, 0.5, 1.0, NN30).value
    gaps = [abs(sunrise_mass_shift_truncated(1.0, 0.5, 1.0, NN30, MatsubaraTruncation(n)).value
                - closed) for n in (2, 4, 8, 16, 32, 64)]
    assert all(b < a for a, b in zip(gaps, gaps[1:]))
    assert gaps[-1] / abs(closed) < 1e-6


# --------------------------------------------------------------------------- k0 derivative

@pytest.mark.parametrize("T", [0.1, 0.5, 2.0])
def test_k0_derivative_matches_finite_difference(T):
    tr = MatsubaraTruncation(32)
    h = 1e-3
    s = lambda k0: sunrise_mass_shift_truncated(1.0, T, 1.0, NN30, tr, k0=k0).value
    fd = (s(h) + s(-h) - 2 * s(0.0)) / (2 * h * h)
    d = sunrise_k0_derivative(1.0, T, 1.0, NN30, tr).value
    assert d == pytest.approx(fd, rel=1e-6)


def test_approx_form_disagrees_with_exact():
    tr = MatsubaraTruncation(32)
    ex = sunrise_k0_derivative(1.0, 0.1, 1.0, NN30, tr).value
    ap = sunrise_k0_derivative(1.0, 0.1, 1.0, NN30, tr, form="approx").value
    assert abs(ap / ex - 1) > 0.5
    with pytest.raises(ValueError):
        sunrise_k0_derivative(1.0, 0.1, 1.0, NN30, tr, form="bogus")


def test_k0_derivative_truncation_stable():
    for T in (0.1, 0.5, 1.0, 2.0):
        a = sunrise_k0_derivative(1.0, T, 1.0, NN30, MatsubaraTruncation(64)).value
        b = sunrise_k0_derivative(1.0, T, 1.0, NN30, MatsubaraTruncation(128)).value
        assert abs(b / a - 1) < 1e-4


def test_wavefunction_renorm():
    assert wavefunction_renorm(0.25) == pytest.approx(0.8)
    with pytest.raises(ResidueError):
        wavefunction_renorm(-1.0)
