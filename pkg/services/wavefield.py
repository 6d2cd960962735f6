"""
Wave Field Service - Gaussian fields, obstructions and the unitary x <-> p transform

Fourier convention: psi~(p) = (2 pi)^(-1/2) * integral psi(x) exp(-i p x) dx.
"""

import logging
import math
from typing import Optional

import numpy as np
from scipy import fft as sp_fft

from models import HENE_WAVENUMBER_MM, Domain, Grid1D, SampledField, UnitMode
from models.errors import ConfigError, GridResolutionError

logger = logging.getLogger(__name__)

SQRT_2PI = math.sqrt(2.0 * math.pi)
MIN_EXTENT_IN_WAISTS = 8.0


def centered_dft(values: np.ndarray, axis: int = -1, inverse: bool = False, workers: int = 1) -> np.ndarray:
    """
    Unnormalized DFT between centered index sets

    out[q] = sum_j values[j] * exp(-/+ 2 pi i (j - n/2)(q - n/2) / n), with the
    + sign when inverse is True.
    """
    shifted = sp_fft.ifftshift(values, axes=axis)
    if inverse:
        transformed = sp_fft.ifft(shifted, axis=axis, norm="forward", workers=workers)
    else:
        transformed = sp_fft.fft(shifted, axis=axis, workers=workers)
    return sp_fft.fftshift(transformed, axes=axis)


def default_wavenumber(unit_mode: UnitMode) -> float:
    """HeNe in millimeter mode; k is absorbed into R in dimensionless mode"""
    return HENE_WAVENUMBER_MM if UnitMode(unit_mode) is UnitMode.MILLIMETERS else 1.0


def make_gaussian(
    grid: Grid1D,
    waist: float,
    curvature_radius: float = math.inf,
    center: float = 0.0,
    wavenumber: Optional[float] = None,
) -> SampledField:
    """
    Normalized Gaussian beam exp(-(x-c)^2/2 sigma^2 + i k (x-c)^2 / 2R)

    Args:
        grid: transverse grid; must span at least 8 waists around the center
        waist: 1/e-intensity half-width sigma
        curvature_radius: wavefront radius R (inf at the waist)
        center: beam center
        wavenumber: k; defaults to HeNe (millimeters) or 1 (dimensionless)

    Returns:
        Unit-norm SampledField
    """
    if not waist > 0:
        raise ConfigError(f"waist must be positive, got {waist}")
    required = MIN_EXTENT_IN_WAISTS * waist + 2.0 * abs(center)
    if grid.extent < required:
        raise GridResolutionError(
            f"grid extent {grid.extent:g} truncates a waist-{waist:g} Gaussian centered at "
            f"{center:g}; need extent >= {required:g}"
        )

    k = default_wavenumber(grid.unit_mode) if wavenumber is None else wavenumber
    offset = grid.x - center
    if math.isinf(curvature_radius):
        amplitudes = np.exp(-offset ** 2 / (2.0 * waist ** 2)).astype(np.complex128)
    else:
        amplitudes = np.exp(-offset ** 2 / (2.0 * waist ** 2) + 1j * k * offset ** 2 / (2.0 * curvature_radius))

    field = SampledField.normalized(grid, amplitudes, wavenumber=k)
    logger.debug("gaussian field: waist=%g R=%g center=%g n=%d", waist, curvature_radius, center, grid.n_points)
    return field


def apply_obstruction(field: SampledField, half_width: float) -> SampledField:
    """
    Zero the field where |x| <= half_width (a wire across the beam)

    The result is deliberately not renormalized.
    """
    if field.domain is not Domain.POSITION:
        raise ConfigError("obstructions act on position-domain fields")
    if not 0 <= half_width < field.grid.extent / 2.0:
        raise ConfigError(
            f"obstruction half-width must lie in [0, {field.grid.extent / 2.0:g}), got {half_width:g}"
        )
    amplitudes = np.array(field.amplitudes)
    amplitudes[np.abs(field.grid.x) <= half_width] = 0.0
    return field.with_amplitudes(amplitudes)


def to_momentum(field: SampledField, workers: int = 1) -> SampledField:
    """psi~(p_j) on the conjugate grid; Parseval holds to rounding"""
    if field.domain is not Domain.POSITION:
        raise ConfigError("field is already in the momentum domain")
    spectrum = centered_dft(field.amplitudes, workers=workers) * (field.grid.spacing / SQRT_2PI)
    return field.with_amplitudes(spectrum, domain=Domain.MOMENTUM)


def from_momentum(field: SampledField, workers: int = 1) -> SampledField:
    """Inverse of to_momentum"""
    if field.domain is not Domain.MOMENTUM:
        raise ConfigError("field is already in the position domain")
    samples = centered_dft(field.amplitudes, inverse=True, workers=workers) * (
        field.grid.momentum_spacing / SQRT_2PI
    )
    return field.with_amplitudes(samples, domain=Domain.POSITION)
