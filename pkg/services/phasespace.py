"""
Phase Space Service - KR distribution, Wigner, P and Q, marginals

Every transform works on the field's own DFT grid: the x axis has spacing
dx, the p axis dp = 2 pi / (n dx), both centered on index n/2. The
characteristic plane reuses the same axes (x' on the x axis, p' on the p
axis), so every change of representation is one centered 2-D DFT plus
elementwise kernels.
"""

import logging
import math
from typing import Optional, Tuple

import numpy as np
from scipy import fft as sp_fft
from scipy.ndimage import distance_transform_edt
from scipy.special import logsumexp

from models import (
    Domain,
    GridKind,
    Marginals,
    PhaseSpaceGrid,
    RegSpec,
    RegularizationReport,
    SampledField,
)
from models.errors import ConfigError, ConventionError, KernelOverflowError
from services.wavefield import SQRT_2PI, centered_dft, to_momentum

logger = logging.getLogger(__name__)

IMAG_RESIDUAL_TOL = 1e-8
NEGATIVITY_TOL = 1e-8
DIRECT_WIGNER_BLOCK = 256
OUTER_BAND_TOL = 1e-8

# ============================================================
# HELPERS
# ============================================================

def _require_kind(psg: PhaseSpaceGrid, *kinds: GridKind) -> None:
    if psg.kind not in kinds:
        expected = ", ".join(kind.value for kind in kinds)
        raise ConfigError(f"expected a {expected} grid, got {psg.kind.value}")

def _require_dft_grid(psg: PhaseSpaceGrid) -> int:
    """The grid must be the square, centered DFT grid of a field"""
    n = psg.x_axis.n
    conjugate = math.isclose(psg.dx * psg.dp * n, 2.0 * math.pi, rel_tol=1e-9)
    centered = psg.x_axis.origin == n // 2 and psg.p_axis.origin == n // 2
    if psg.p_axis.n != n or n % 2 or not conjugate or not centered:
        raise ConfigError(
            f"{psg.kind.value} grid ({psg.x_axis.n} x {psg.p_axis.n}, dx*dp*n="
            f"{psg.dx * psg.dp * n:.6g}) is not a centered DFT grid; this transform "
            "needs the output of kr_conjugate or characteristic_from_kr"
        )
    return n

def _check_imaginary(values: np.ndarray, label: str, tol: float = IMAG_RESIDUAL_TOL) -> np.ndarray:
    """Return the real part after checking the imaginary residual"""
    peak = float(np.max(np.abs(values))) or 1.0
    residual = float(np.max(np.abs(values.imag)))
    logger.debug("%s imaginary residual %.3e (peak %.3e)", label, residual, peak)
    if residual > tol * peak:
        raise ConventionError(
            f"{label} has imaginary residual {residual:.3e} > {tol:.0e} x peak {peak:.3e}; "
            "the Fourier convention or normalization is inconsistent"
        )
    return values.real

def _from_characteristic(values: np.ndarray, char: PhaseSpaceGrid, workers: int) -> np.ndarray:
    """
    X(x, p) = (1 / 4 pi^2) sum M(x'_a, p'_b) e^(-i x p'_b - i p x'_a) dx' dp'

    The x'-sum lands on the p axis and the p'-sum on the x axis, hence the
    transpose.
    """
    summed = centered_dft(values, axis=0, workers=workers)
    summed = centered_dft(summed, axis=1, workers=workers)
    return summed.T * (char.dx * char.dp / (4.0 * math.pi ** 2))

# ============================================================
# KIRKWOOD-RIHACZEK
# ============================================================

def kr_conjugate(field: SampledField, workers: int = 1) -> PhaseSpaceGrid:
    """
    K*(x_i, p_j) = (2 pi)^(-1/2) conj(psi(x_i)) psi~(p_j) e^(i x_i p_j)

    Args:
        field: normalized position-domain field
        workers: scipy.fft worker threads

    Returns:
        KRconj grid on the field's (x, p) DFT grid
    """
    if field.domain is not Domain.POSITION:
        raise ConfigError("kr_conjugate expects a position-domain field")
    grid = field.grid
    spectrum = to_momentum(field, workers=workers).amplitudes
    x, p = grid.x, grid.p
    values = np.conj(field.amplitudes)[:, None] * spectrum[None, :] * np.exp(1j * np.outer(x, p)) / SQRT_2PI
    return PhaseSpaceGrid(
        grid.x_axis,
        grid.p_axis,
        values,
        GridKind.KR_CONJ,
        grid.unit_mode,
        {"wavenumber": repr(field.wavenumber)},
    )

def kr_conjugate_at(field: SampledField, x_values: np.ndarray, p_values: np.ndarray) -> np.ndarray:
    """
    K* at arbitrary (x, p): psi by linear interpolation, psi~ by a direct
    DFT sum. Exact at grid nodes; used as the oracle for scan grids.
    """
    if field.domain is not Domain.POSITION:
        raise ConfigError("kr_conjugate_at expects a position-domain field")
    x_values = np.asarray(x_values, dtype=float)
    p_values = np.asarray(p_values, dtype=float)
    x = field.grid.x
    psi = field.amplitudes

    psi_at = np.interp(x_values, x, psi.real, left=0.0, right=0.0) + 1j * np.interp(
        x_values, x, psi.imag, left=0.0, right=0.0
    )
    spectrum_at = np.exp(-1j * np.outer(p_values, x)) @ psi * (field.grid.spacing / SQRT_2PI)
    return np.conj(psi_at)[:, None] * spectrum_at[None, :] * np.exp(1j * np.outer(x_values, p_values)) / SQRT_2PI

def kr_from_conjugate(krc: PhaseSpaceGrid) -> PhaseSpaceGrid:
    """Elementwise conjugation: KRconj -> KR and back"""
    _require_kind(krc, GridKind.KR_CONJ, GridKind.KR)
    target = GridKind.KR if krc.kind is GridKind.KR_CONJ else GridKind.KR_CONJ
    return krc.derive(np.conj(krc.values), target)

def marginals(psg: PhaseSpaceGrid) -> Marginals:
    """Position (sum over p) and momentum (sum over x) densities"""
    if psg.kind.is_characteristic:
        raise ConfigError(f"{psg.kind.value} grids have no marginals")
    position = np.sum(psg.values, axis=1) * psg.dp
    momentum = np.sum(psg.values, axis=0) * psg.dx
    residual = max(float(np.max(np.abs(np.imag(position)))), float(np.max(np.abs(np.imag(momentum)))))
    if residual > 1e-10 * max(psg.peak, 1e-300):
        logger.warning("%s marginals carry imaginary residual %.3e", psg.kind.value, residual)
    return Marginals(np.real(position).copy(), np.real(momentum).copy(), residual)

# ============================================================
# CHARACTERISTIC FUNCTIONS
# ============================================================

def characteristic_from_kr(krc: PhaseSpaceGrid, workers: int = 1) -> PhaseSpaceGrid:
    """M_KR(x', p') = sum K*(x, p) e^(i x p' + i p x') dx dp"""
    _require_kind(krc, GridKind.KR_CONJ)
    _require_dft_grid(krc)
    summed = centered_dft(krc.values, axis=0, inverse=True, workers=workers)
    summed = centered_dft(summed, axis=1, inverse=True, workers=workers)
    return krc.derive(summed.T * (krc.dx * krc.dp), GridKind.CHAR_KR)

def wigner_characteristic(char: PhaseSpaceGrid) -> PhaseSpaceGrid:
    """M_W = e^(+i x' p' / 2) M_KR"""
    if char.kind is GridKind.CHAR_W:
        return char
    _require_kind(char, GridKind.CHAR_KR)
    return char.derive(np.exp(0.5j * np.outer(char.x, char.p)) * char.values, GridKind.CHAR_W)

def damping_kernel(x_prime: np.ndarray, p_prime: np.ndarray, sigma_ref: float) -> np.ndarray:
    """exp(-(sigma^2 p'^2 + x'^2 / sigma^2) / 4), broadcast x' down rows"""
    return np.exp(-_log_sharpening(x_prime, p_prime, sigma_ref))

def _log_sharpening(x_prime: np.ndarray, p_prime: np.ndarray, sigma_ref: float) -> np.ndarray:
    if not sigma_ref > 0:
        raise ConfigError(f"sigma_ref must be positive, got {sigma_ref}")
    xp = np.asarray(x_prime, dtype=float)[:, None]
    pp = np.asarray(p_prime, dtype=float)[None, :]
    return 0.25 * (sigma_ref ** 2 * pp ** 2 + xp ** 2 / sigma_ref ** 2)

# ============================================================
# WIGNER
# ============================================================

def wigner_from_characteristic(char: PhaseSpaceGrid, workers: int = 1) -> PhaseSpaceGrid:
    """W as the inverse transform of M_W (no kernel)"""
    _require_dft_grid(char)
    m_w = wigner_characteristic(char)
    values = _from_characteristic(m_w.values, m_w, workers)
    peak = float(np.max(np.abs(values))) or 1.0
    residual = float(np.max(np.abs(values.imag)))
    if residual > IMAG_RESIDUAL_TOL * peak:
        # the half-step chirp e^(i x' p' / 2) is not periodic on the grid; broad M_KR leaks
        logger.warning("Wigner (characteristic path) imaginary residual %.3e (peak %.3e) discarded", residual, peak)
    return char.derive(values.real, GridKind.WIGNER, via="characteristic")

def _chirp_transform(values: np.ndarray, inverse: bool, workers: int) -> np.ndarray:
    """
    S[m, l] = sum_{j,k} values[j, k] e^(+/-2i (x_j p_l + p_k x_m)) on the
    central half of each axis, 0 elsewhere. Target frequencies 2p and 2x
    are exactly the even bins of a 2x zero-padded DFT.
    """
    n = values.shape[0]
    spectrum = centered_dft(values, axis=0, inverse=inverse, workers=workers)
    spectrum = centered_dft(spectrum, axis=1, inverse=inverse, workers=workers)

    padded = np.zeros((2 * n, 2 * n), dtype=np.complex128)
    padded[n // 2:n // 2 + n, n // 2:n // 2 + n] = spectrum
    # padded[2l, 2m]: p_l from the x'-sum (rows), x_m from the p'-sum (columns)
    return padded[0::2, 0::2].T.copy()

def wigner_from_kr(krc: PhaseSpaceGrid, workers: int = 1) -> PhaseSpaceGrid:
    """
    W(x, p) = (1/pi) sum K*(x', p') e^(-2i (x' - x)(p' - p)) dx' dp'

    Evaluated as chirp, 2-D DFT sampled at (2p, 2x), residual chirp. Only
    |x| < extent/4 and |p| < p_max/2 are reachable on the same grid; the
    outer band is returned as zeros.
    """
    _require_kind(krc, GridKind.KR_CONJ)
    n = _require_dft_grid(krc)
    magnitude = np.abs(krc.values)
    total = float(np.sum(magnitude)) or 1.0
    band = slice(n // 4, 3 * n // 4)
    outside = 1.0 - float(np.sum(magnitude[band, band])) / total
    if outside > OUTER_BAND_TOL:
        logger.warning("K* holds %.2e of its magnitude outside the central band; Wigner there is returned as 0", outside)
    x, p = krc.x, krc.p
    chirped = krc.values * np.exp(-2j * np.outer(x, p))
    summed = _chirp_transform(chirped, inverse=True, workers=workers)
    values = np.exp(-2j * np.outer(x, p)) * summed * (krc.dx * krc.dp / math.pi)
    real = _check_imaginary(values, "Wigner (chirp path)")
    return krc.derive(real, GridKind.WIGNER, via="chirp")

def kr_from_wigner(wigner: PhaseSpaceGrid, workers: int = 1) -> PhaseSpaceGrid:
    """K*(x, p) = (1/pi) sum W(x', p') e^(2i (x' - x)(p' - p)) dx' dp' on the central band"""
    _require_kind(wigner, GridKind.WIGNER)
    _require_dft_grid(wigner)
    x, p = wigner.x, wigner.p
    chirped = wigner.values * np.exp(2j * np.outer(x, p))
    summed = _chirp_transform(chirped, inverse=False, workers=workers)
    values = np.exp(2j * np.outer(x, p)) * summed * (wigner.dx * wigner.dp / math.pi)
    return wigner.derive(values, GridKind.KR_CONJ, via="wigner")

def direct_wigner(field: SampledField, workers: int = 1, block: int = DIRECT_WIGNER_BLOCK) -> PhaseSpaceGrid:
    """
    W(x_m, p) = (dx / pi) sum_s e^(2i s dx p) psi*(x_m + s dx) psi(x_m - s dx)

    Whole-sample lags, so every product is of grid samples; lags that leave
    the grid count as zero. The sum is periodic in p with half the grid's
    momentum range, so it is evaluated on the central band |p| < p_max/2
    and the outer band is 0, as on the chirp path. Its position marginal is
    |psi|^2 for every field; its momentum marginal is the spectrum folded
    onto the central band, |psi~(p)|^2 + |psi~(p - pi/dx)|^2, which is
    |psi~(p)|^2 when the spectrum lies inside the band. Rows are processed
    in blocks.
    """
    if field.domain is not Domain.POSITION:
        raise ConfigError("direct_wigner expects a position-domain field")
    grid = field.grid
    n = grid.n_points
    half = n // 2
    psi = field.amplitudes
    lags = np.arange(-n, n)
    band = np.arange(n // 4, 3 * n // 4)
    values = np.zeros((n, n), dtype=np.complex128)

    for start in range(0, n, block):
        rows = np.arange(start, min(start + block, n))
        plus = rows[:, None] + lags[None, :]
        minus = rows[:, None] - lags[None, :]
        valid = (plus >= 0) & (plus < n) & (minus >= 0) & (minus < n)
        correlation = np.where(
            valid,
            np.conj(psi[np.clip(plus, 0, n - 1)]) * psi[np.clip(minus, 0, n - 1)],
            0.0,
        )
        # e^(2 pi i s (l - n/2) / (n/2)) only sees s mod n/2
        folded = correlation.reshape(rows.size, 4, half).sum(axis=1)
        spectrum = sp_fft.ifft(folded, axis=1, norm="forward", workers=workers)
        values[np.ix_(rows, band)] = spectrum[:, (band - half) % half] * (grid.spacing / math.pi)

    return PhaseSpaceGrid(
        grid.x_axis,
        grid.p_axis,
        _check_imaginary(values, "direct Wigner"),
        GridKind.WIGNER,
        grid.unit_mode,
        {"via": "direct", "wavenumber": repr(field.wavenumber)},
    )

# ============================================================
# P AND Q
# ============================================================

def damped_characteristic(char: PhaseSpaceGrid, sigma_ref: float) -> np.ndarray:
    """M_Q = damping_kernel * M_W"""
    m_w = wigner_characteristic(char)
    return m_w.values * damping_kernel(m_w.x, m_w.p, sigma_ref)

def q_from_characteristic(char: PhaseSpaceGrid, sigma_ref: float, workers: int = 1) -> PhaseSpaceGrid:
    """Husimi Q: real and nonnegative by construction"""
    _require_kind(char, GridKind.CHAR_KR, GridKind.CHAR_W)
    _require_dft_grid(char)
    values = _from_characteristic(damped_characteristic(char, sigma_ref), char, workers)
    real = _check_imaginary(values, "Q")
    peak = float(np.max(np.abs(real)))
    lowest = float(np.min(real))
    if lowest < -NEGATIVITY_TOL * peak:
        raise ConventionError(f"Q dips to {lowest:.3e} (peak {peak:.3e}); Q must be nonnegative")
    return char.derive(real, GridKind.Q, sigma_ref=repr(sigma_ref))

def _taper_mask(keep: np.ndarray, taper: int) -> np.ndarray:
    if taper == 0:
        return keep.astype(float)
    distance = distance_transform_edt(keep)
    return 0.5 * (1.0 - np.cos(math.pi * np.minimum(distance, taper) / taper))

def sharpened_characteristic(
    char: PhaseSpaceGrid, sigma_ref: float, regularizer: Optional[RegSpec] = None
) -> Tuple[np.ndarray, np.ndarray, RegularizationReport]:
    """
    Masked M_P = M_W e^(+(sigma^2 p'^2 + x'^2/sigma^2)/4) Mask

    Returns:
        (M_P, Mask, report)
    """
    regularizer = regularizer or RegSpec()
    m_w = wigner_characteristic(char)
    log_kernel = _log_sharpening(m_w.x, m_w.p, sigma_ref)
    magnitude = np.abs(m_w.values)

    floor_ok = magnitude > regularizer.eps_floor * float(np.max(magnitude))
    keep = floor_ok & (log_kernel < math.log(1.0 / regularizer.eps_floor))
    mask = _taper_mask(keep, regularizer.taper)
    active = mask > 0

    log_limit = math.log(regularizer.overflow_threshold)
    if np.any(log_kernel[active] > log_limit):
        radius = 2.0 * math.sqrt(float(np.max(log_kernel[active])))
        raise KernelOverflowError(radius, regularizer.overflow_threshold)

    sharpened = np.where(active, m_w.values * np.exp(np.where(active, log_kernel, 0.0)) * mask, 0.0)

    # removed energy over the floor-passing region, in log space
    log_energy = 2.0 * (np.log(magnitude[floor_ok]) + log_kernel[floor_ok])
    kept = floor_ok & active
    log_kept = 2.0 * (np.log(magnitude[kept]) + log_kernel[kept] + np.log(mask[kept]))
    if log_energy.size == 0 or log_kept.size == 0:
        removed = 1.0
    else:
        removed = float(max(0.0, 1.0 - math.exp(logsumexp(log_kept) - logsumexp(log_energy))))

    report = RegularizationReport(
        removed_fraction=removed,
        kept_points=int(np.count_nonzero(active)),
        ill_conditioned=removed > regularizer.ill_conditioned_fraction,
    )
    return sharpened, mask, report

def p_from_characteristic(
    char: PhaseSpaceGrid, sigma_ref: float, regularizer: Optional[RegSpec] = None, workers: int = 1
) -> Tuple[PhaseSpaceGrid, RegularizationReport]:
    """
    Regularized Glauber-Sudarshan P

    Returns:
        (P grid tagged regularized, RegularizationReport)
    """
    _require_kind(char, GridKind.CHAR_KR, GridKind.CHAR_W)
    _require_dft_grid(char)
    sharpened, _, report = sharpened_characteristic(char, sigma_ref, regularizer)
    values = _from_characteristic(sharpened, char, workers)

    peak = float(np.max(np.abs(values))) or 1.0
    residual = float(np.max(np.abs(values.imag)))
    if residual > 1e-6 * peak:
        logger.warning("regularized P imaginary residual %.3e (peak %.3e) discarded", residual, peak)
    if report.ill_conditioned:
        logger.warning(
            "P is ill-conditioned: mask removed %.1f%% of the sharpened characteristic energy",
            100.0 * report.removed_fraction,
        )

    grid = char.derive(
        values.real,
        GridKind.P,
        regularized="true",
        sigma_ref=repr(sigma_ref),
        removed_fraction=f"{report.removed_fraction:.6g}",
        ill_conditioned=str(report.ill_conditioned).lower(),
    )
    return grid, report

