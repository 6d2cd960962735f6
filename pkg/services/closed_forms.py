"""
Closed-form Gaussian-beam references

All functions take the beam waist sigma, wavefront radius R (inf at the
waist) and wavenumber k, and follow the unitary e^(-ipx) convention used by
services.wavefield. Two-argument functions broadcast x down rows and p
across columns.
"""

import math
from typing import Tuple

import numpy as np

SQRT_2PI = math.sqrt(2.0 * math.pi)


def _curvature(curvature_radius: float, wavenumber: float) -> float:
    """kappa = k / R (0 at the waist)"""
    return 0.0 if math.isinf(curvature_radius) else wavenumber / curvature_radius


def gaussian_field(
    x: np.ndarray, waist: float, curvature_radius: float = math.inf, center: float = 0.0, wavenumber: float = 1.0
) -> np.ndarray:
    """Unit-norm psi(x) = (pi sigma^2)^(-1/4) exp(-u^2/2 sigma^2 + i k u^2 / 2R), u = x - center"""
    u = np.asarray(x, dtype=float) - center
    kappa = _curvature(curvature_radius, wavenumber)
    return (math.pi * waist ** 2) ** -0.25 * np.exp(-u ** 2 / (2.0 * waist ** 2) + 0.5j * kappa * u ** 2)


def gaussian_momentum(
    p: np.ndarray, waist: float, curvature_radius: float = math.inf, center: float = 0.0, wavenumber: float = 1.0
) -> np.ndarray:
    """
    psi~(p) from a direct Gaussian integral

    With psi(x) = N exp(-b u^2), b = 1/(2 sigma^2) - i k/(2R), the transform is
    N (2b)^(-1/2) exp(-p^2 / 4b) exp(-i p center), principal square root.
    """
    p = np.asarray(p, dtype=float)
    b = 1.0 / (2.0 * waist ** 2) - 0.5j * _curvature(curvature_radius, wavenumber)
    norm = (math.pi * waist ** 2) ** -0.25
    return norm / np.sqrt(2.0 * b) * np.exp(-p ** 2 / (4.0 * b) - 1j * p * center)


def gaussian_kr_conjugate(
    x: np.ndarray, p: np.ndarray, waist: float, curvature_radius: float = math.inf, center: float = 0.0,
    wavenumber: float = 1.0,
) -> np.ndarray:
    """K*(x, p) = (2 pi)^(-1/2) conj(psi(x)) psi~(p) e^(ixp)"""
    x = np.asarray(x, dtype=float)
    p = np.asarray(p, dtype=float)
    psi = gaussian_field(x, waist, curvature_radius, center, wavenumber)
    spectrum = gaussian_momentum(p, waist, curvature_radius, center, wavenumber)
    return np.conj(psi)[:, None] * spectrum[None, :] * np.exp(1j * np.outer(x, p)) / SQRT_2PI


def gaussian_kr_decomposition(
    x: np.ndarray, p: np.ndarray, waist: float, curvature_radius: float = math.inf, wavenumber: float = 1.0
) -> Tuple[np.ndarray, np.ndarray, np.ndarray, np.ndarray]:
    """
    Real/imaginary factors A + iB = psi(x) and C + iD = psi~(p)

    K* = (2 pi)^(-1/2) [(AC + BD) cos xp + (BC - AD) sin xp
                        + i ((AD - BC) cos xp + (AC + BD) sin xp)]
    """
    psi = gaussian_field(x, waist, curvature_radius, 0.0, wavenumber)
    spectrum = gaussian_momentum(p, waist, curvature_radius, 0.0, wavenumber)
    return psi.real, psi.imag, spectrum.real, spectrum.imag


def gaussian_wigner(
    x: np.ndarray, p: np.ndarray, waist: float, curvature_radius: float = math.inf, center: float = 0.0,
    wavenumber: float = 1.0,
) -> np.ndarray:
    """W(x, p) = (1/pi) exp(-u^2/sigma^2 - sigma^2 (p - k u / R)^2)"""
    u = np.asarray(x, dtype=float)[:, None] - center
    p = np.asarray(p, dtype=float)[None, :]
    kappa = _curvature(curvature_radius, wavenumber)
    return np.exp(-u ** 2 / waist ** 2 - waist ** 2 * (p - kappa * u) ** 2) / math.pi


def gaussian_wigner_characteristic(
    x_prime: np.ndarray, p_prime: np.ndarray, waist: float, curvature_radius: float = math.inf,
    wavenumber: float = 1.0,
) -> np.ndarray:
    """M_W(x', p') = exp(-x'^2 / 4 sigma^2 - sigma^2 (p' + k x' / R)^2 / 4) for a centered beam"""
    xp = np.asarray(x_prime, dtype=float)[:, None]
    pp = np.asarray(p_prime, dtype=float)[None, :]
    kappa = _curvature(curvature_radius, wavenumber)
    return np.exp(-xp ** 2 / (4.0 * waist ** 2) - waist ** 2 * (pp + kappa * xp) ** 2 / 4.0)


def gaussian_kr_characteristic(
    x_prime: np.ndarray, p_prime: np.ndarray, waist: float, curvature_radius: float = math.inf,
    wavenumber: float = 1.0,
) -> np.ndarray:
    """M_KR = exp(-i x' p' / 2) M_W"""
    phase = np.exp(-0.5j * np.outer(x_prime, p_prime))
    return phase * gaussian_wigner_characteristic(x_prime, p_prime, waist, curvature_radius, wavenumber)


def gaussian_husimi(
    x: np.ndarray, p: np.ndarray, waist: float, sigma_ref: float, curvature_radius: float = math.inf,
    wavenumber: float = 1.0,
) -> np.ndarray:
    """
    Q for a centered beam with kernel scale sigma_ref

    M_Q = exp(-v.C.v / 2) with v = (x', p'); the inverse transform is
    exp(-u.C^-1.u / 2) / (2 pi sqrt(det C)) with u = (p, x).
    """
    kappa = _curvature(curvature_radius, wavenumber)
    c11 = 2.0 * (1.0 / (4.0 * waist ** 2) + waist ** 2 * kappa ** 2 / 4.0 + 1.0 / (4.0 * sigma_ref ** 2))
    c12 = 2.0 * waist ** 2 * kappa / 4.0
    c22 = 2.0 * (waist ** 2 + sigma_ref ** 2) / 4.0
    det = c11 * c22 - c12 ** 2
    i11, i12, i22 = c22 / det, -c12 / det, c11 / det

    xs = np.asarray(x, dtype=float)[:, None]
    ps = np.asarray(p, dtype=float)[None, :]
    exponent = -0.5 * (i11 * ps ** 2 + 2.0 * i12 * ps * xs + i22 * xs ** 2)
    return np.exp(exponent) / (2.0 * math.pi * math.sqrt(det))
