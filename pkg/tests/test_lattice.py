import math

import numpy as np
import pytest
from scipy import constants as sc

from thermalphi4.constants import species
from thermalphi4.errors import GaplessError, InstabilityError, PhysicsDomainError, PoleError
from thermalphi4.lattice import (DimensionlessCouplings, IonReducedParams, LatticeSpec,
                                 brillouin_grid, coulomb_length, ion_dispersion,
                                 ion_lattice_momentum_sq, lattice_momentum, redimensionalize,
                                 reduce_to_dimensionless, sound_speed, tadpole_propagator)

CA = species("40Ca+")
WX = 2 * math.pi * 0.45e6


@pytest.fixture
def ion_params():
    # N = 30 chain at omega_x / 2 pi = 0.45 MHz, bulk d / l = 0.30489
    l = coulomb_length(CA.mass, WX)
    d = 0.3048936 * l
    return IonReducedParams.from_chain(30, l / d, WX, 2 * math.pi * 6.0e6, CA.mass, d), d


def test_nn_grid_and_momentum():
    spec = LatticeSpec.nearest_neighbor(8, spacing=0.5)
    k = brillouin_grid(spec)
    assert k[-1] == pytest.approx(2 * math.pi / 0.5)
    khat = lattice_momentum(k, spec)
    np.testing.assert_allclose(khat ** 2, spec.momentum_sq_grid(), rtol=1e-15, atol=1e-28)
    assert spec.gap_floor() == pytest.approx(0.0, abs=1e-12)
    assert spec.inv_spacing == 2.0


def test_nn_small_k_continuum_limit():
    spec = LatticeSpec.nearest_neighbor(2000)
    k = 1e-4
    assert lattice_momentum(k, spec) == pytest.approx(k, rel=1e-8)


@pytest.mark.parametrize("n", [0, 3, 7, -2])
def test_bad_site_numbers(n):
    with pytest.raises(PhysicsDomainError):
        LatticeSpec.nearest_neighbor(n)


def test_frequencies_gapless():
    spec = LatticeSpec.nearest_neighbor(10)
    with pytest.raises(GaplessError):
        spec.frequencies(0.0)
    assert spec.frequencies(1.0).min() == pytest.approx(1.0)


def test_propagator_nn_and_pole():
    spec = LatticeSpec.nearest_neighbor(10)
    assert tadpole_propagator(0.3, math.pi, 1.0, spec) == pytest.approx(1 / (0.09 + 4 + 1))
    with pytest.raises(PoleError):
        tadpole_propagator(0.0, 0.0, -1.0, spec)


def test_luttinger_from_sound_speed(ion_params):
    p, d = ion_params
    c_t = sound_speed(p, d)
    assert p.luttinger == pytest.approx(CA.mass * d * c_t / sc.hbar, rel=1e-14)


def test_ion_band_bottom_at_zone_edge(ion_params):
    p, _ = ion_params
    spec = LatticeSpec.trapped_ion(p)
    kd = brillouin_grid(spec)
    kh = spec.momentum_sq_grid()
    # minimum at k d = pi, maximum at k = 0 where it equals the band offset
    assert kd[np.argmin(kh)] == pytest.approx(math.pi)
    assert kh[-1] == pytest.approx(p.band_offset)
    # finite-N mismatch between odd-r sums and 7/2 zeta(3) makes the edge slightly negative
    assert -0.25 < kh.min() < 0
    assert spec.gap_floor() == pytest.approx(-kh.min())


def test_ion_dispersion_consistent_with_reduced_momentum(ion_params):
    p, _ = ion_params
    kd = np.linspace(0.1, math.pi, 7)
    w = ion_dispersion(kd, p)
    # omega**2 = omega_z**2 - omega_x**2 band_offset + khat**2
    lhs = w ** 2
    rhs = p.transverse_freq ** 2 - WX ** 2 * p.band_offset + ion_lattice_momentum_sq(kd, p)
    np.testing.assert_allclose(lhs, rhs, rtol=1e-12)


def test_ion_dispersion_instability(ion_params):
    p, _ = ion_params
    soft = p.with_transverse(2 * math.pi * 1.0e6)
    with pytest.raises(InstabilityError):
        ion_dispersion(np.array([math.pi]), soft)


def test_reduce_redimensionalize_roundtrip(ion_params):
    p, d = ion_params
    dc = reduce_to_dimensionless(p, 1e-4, CA.mass, d)
    back = redimensionalize(dc, p, CA.mass, d)
    assert back["transverse_freq"] == pytest.approx(p.transverse_freq, rel=1e-13)
    assert back["temperature"] == pytest.approx(1e-4, rel=1e-13)
    assert dc.tbar == pytest.approx(sc.k * 1e-4 / (sc.hbar * WX), rel=1e-14)


def test_reduced_mass_sign_tracks_critical_frequency(ion_params):
    p, d = ion_params
    above = reduce_to_dimensionless(p, 0.0, CA.mass, d)
    wzc = WX * math.sqrt(p.band_offset)
    below = reduce_to_dimensionless(p.with_transverse(0.99 * wzc), 0.0, CA.mass, d)
    assert above.mbar0_sq > 0 > below.mbar0_sq
    assert above.lambdabar0 > 0


def test_dimensionless_couplings_validation():
    with pytest.raises(PhysicsDomainError):
        DimensionlessCouplings(1.0, 0.1, -1.0)


def test_ion_params_validation():
    with pytest.raises(PhysicsDomainError):
        IonReducedParams(3.0, WX, WX, 1.0, 31)
