"""
Every FFT-based transform against its direct double sum on 32 x 32 grids
"""

import numpy as np
import pytest

from models import Grid1D, SampledField, UnitMode
from services.phasespace import (
    characteristic_from_kr,
    damped_characteristic,
    direct_wigner,
    kr_conjugate,
    kr_from_wigner,
    marginals,
    p_from_characteristic,
    q_from_characteristic,
    sharpened_characteristic,
    wigner_characteristic,
    wigner_from_characteristic,
    wigner_from_kr,
)
from services.wavefield import from_momentum, to_momentum
from tests import reference

TOL = 1e-10


@pytest.fixture(scope="module")
def random_field():
    rng = np.random.default_rng(2024)
    grid = Grid1D(32, 8.0, UnitMode.DIMENSIONLESS)
    return SampledField.normalized(grid, rng.normal(size=32) + 1j * rng.normal(size=32), wavenumber=1.0)


def axes(field):
    grid = field.grid
    return grid.x, grid.p, grid.spacing, grid.momentum_spacing


def test_momentum_transform(random_field):
    x, p, dx, dp = axes(random_field)
    spectrum = to_momentum(random_field)
    np.testing.assert_allclose(spectrum.amplitudes, reference.momentum(random_field.amplitudes, x, p, dx), atol=TOL)
    np.testing.assert_allclose(from_momentum(spectrum).amplitudes, random_field.amplitudes, atol=TOL)


def test_kr_conjugate(random_field):
    x, p, dx, _ = axes(random_field)
    expected = reference.kr_conjugate(random_field.amplitudes, x, p, dx)
    np.testing.assert_allclose(kr_conjugate(random_field).values, expected, atol=TOL)


def test_characteristic(random_field):
    x, p, dx, dp = axes(random_field)
    krc = kr_conjugate(random_field)
    expected = reference.characteristic(krc.values, x, p, dx, dp)
    np.testing.assert_allclose(characteristic_from_kr(krc).values, expected, atol=TOL)


def test_chirp_wigner(random_field):
    x, p, dx, dp = axes(random_field)
    krc = kr_conjugate(random_field)
    expected = reference.chirp_wigner(krc.values, x, p, dx, dp)
    assert np.max(np.abs(expected.imag)) < TOL
    np.testing.assert_allclose(wigner_from_kr(krc).values, expected.real, atol=TOL)


def test_kr_from_wigner(random_field):
    x, p, dx, dp = axes(random_field)
    wigner = wigner_from_kr(kr_conjugate(random_field))
    expected = reference.kr_from_wigner(wigner.values, x, p, dx, dp)
    np.testing.assert_allclose(kr_from_wigner(wigner).values, expected, atol=TOL)


def test_direct_wigner(random_field):
    x, p, dx, _ = axes(random_field)
    expected = reference.direct_wigner(random_field.amplitudes, x, p, dx)
    assert np.max(np.abs(expected.imag)) < TOL
    np.testing.assert_allclose(direct_wigner(random_field).values, expected.real, atol=TOL)


def test_wigner_from_characteristic(small_gaussian):
    x, p, dx, dp = axes(small_gaussian)
    char = characteristic_from_kr(kr_conjugate(small_gaussian))
    expected = reference.from_characteristic(wigner_characteristic(char).values, x, p, dx, dp)
    np.testing.assert_allclose(wigner_from_characteristic(char).values, expected.real, atol=TOL)


def test_husimi(small_gaussian):
    x, p, dx, dp = axes(small_gaussian)
    char = characteristic_from_kr(kr_conjugate(small_gaussian))
    expected = reference.from_characteristic(damped_characteristic(char, 1.0), x, p, dx, dp)
    np.testing.assert_allclose(q_from_characteristic(char, 1.0).values, expected.real, atol=TOL)


def test_regularized_p(small_gaussian):
    x, p, dx, dp = axes(small_gaussian)
    char = characteristic_from_kr(kr_conjugate(small_gaussian))
    sharpened, _, _ = sharpened_characteristic(char, 1.0)
    expected = reference.from_characteristic(sharpened, x, p, dx, dp)
    p_grid, _ = p_from_characteristic(char, 1.0)
    np.testing.assert_allclose(p_grid.values, expected.real, atol=TOL)


def test_direct_wigner_marginals(random_field):
    x, p, dx, _ = axes(random_field)
    margs = marginals(direct_wigner(random_field))
    np.testing.assert_allclose(margs.position, np.abs(random_field.amplitudes) ** 2, atol=TOL)
    np.testing.assert_allclose(margs.momentum, reference.folded_spectrum(random_field.amplitudes, x, p, dx), atol=TOL)
