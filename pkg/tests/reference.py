"""
Direct double sums for the FFT-based transforms

Only meant for small grids (32 x 32): every function builds the full
exponent tensor explicitly.
"""

import math

import numpy as np

SQRT_2PI = math.sqrt(2.0 * math.pi)


def momentum(psi, x, p, dx):
    """psi~(p) = (2 pi)^(-1/2) sum psi(x) e^(-ipx) dx"""
    return np.exp(-1j * np.outer(p, x)) @ psi * dx / SQRT_2PI


def kr_conjugate(psi, x, p, dx):
    spectrum = momentum(psi, x, p, dx)
    return np.conj(psi)[:, None] * spectrum[None, :] * np.exp(1j * np.outer(x, p)) / SQRT_2PI


def characteristic(values, x, p, dx, dp):
    """M(x'_a, p'_b) = sum K(x_i, p_j) e^(i x_i p'_b + i p_j x'_a) dx dp, primes on the same axes"""
    out = np.zeros((x.size, p.size), dtype=np.complex128)
    for a, x_prime in enumerate(x):
        for b, p_prime in enumerate(p):
            phase = np.exp(1j * (x[:, None] * p_prime + p[None, :] * x_prime))
            out[a, b] = np.sum(values * phase) * dx * dp
    return out


def from_characteristic(values, x, p, dx, dp):
    """X(x, p) = (1 / 4 pi^2) sum M(x'_a, p'_b) e^(-i x p'_b - i p x'_a) dx' dp'"""
    out = np.zeros((x.size, p.size), dtype=np.complex128)
    for i, x_value in enumerate(x):
        for j, p_value in enumerate(p):
            phase = np.exp(-1j * (x_value * p[None, :] + p_value * x[:, None]))
            out[i, j] = np.sum(values * phase) * dx * dp / (4.0 * math.pi ** 2)
    return out


def _central(n):
    return range(n // 4, 3 * n // 4)


def chirp_wigner(krc, x, p, dx, dp):
    """(1/pi) sum K*(x', p') e^(-2i (x' - x)(p' - p)) dx' dp' on the central band, 0 elsewhere"""
    n = x.size
    out = np.zeros((n, n), dtype=np.complex128)
    for m in _central(n):
        for l in _central(n):
            phase = np.exp(-2j * (x[:, None] - x[m]) * (p[None, :] - p[l]))
            out[m, l] = np.sum(krc * phase) * dx * dp / math.pi
    return out


def kr_from_wigner(wigner, x, p, dx, dp):
    n = x.size
    out = np.zeros((n, n), dtype=np.complex128)
    for m in _central(n):
        for l in _central(n):
            phase = np.exp(2j * (x[:, None] - x[m]) * (p[None, :] - p[l]))
            out[m, l] = np.sum(wigner * phase) * dx * dp / math.pi
    return out


def direct_wigner(psi, x, p, dx):
    """(dx / pi) sum_s e^(2i s dx p) psi*(x + s dx) psi(x - s dx) on the central p band, 0 elsewhere"""
    n = x.size
    out = np.zeros((n, n), dtype=np.complex128)
    for i in range(n):
        for l in _central(n):
            total = 0.0j
            for s in range(-n + 1, n):
                if 0 <= i + s < n and 0 <= i - s < n:
                    total += np.conj(psi[i + s]) * psi[i - s] * np.exp(2j * s * dx * p[l])
            out[i, l] = total * dx / math.pi
    return out


def folded_spectrum(psi, x, p, dx):
    """|psi~(p)|^2 + |psi~(p - pi/dx)|^2 on the central band, 0 elsewhere"""
    n = x.size
    out = np.zeros(n)
    for l in _central(n):
        for shift in (0.0, math.pi / dx):
            out[l] += abs(momentum(psi, x, np.array([p[l] - shift]), dx)[0]) ** 2
    return out
