#!/usr/bin/env python3
"""
Tesseral (real) spherical harmonics.

The harmonics are orthonormal on the unit sphere and free of the
Condon-Shortley phase:

    Y_l0 = N_l0 Q_l^0(cos theta)
    Y_lm = sqrt(2) N_lm Q_l^m(cos theta) cos(m phi)        (m > 0)
    Y_lm = sqrt(2) N_l|m| Q_l^|m|(cos theta) sin(|m| phi)  (m < 0)

with Q_l^m = (-1)^m P_l^m (``scipy.special.lpmv`` includes the phase) and
N_lm = sqrt((2l+1)/(4 pi) (l-m)!/(l+m)!), so that Y_00 = 1/sqrt(4 pi).
Coefficient vectors are ordered by ``harmonic_index(l, m) = l^2 + l + m``.
"""

from typing import Tuple

import numpy as np
from scipy.special import gammaln, lpmv


def harmonic_index(l: int, m: int) -> int:
    """Position of (l, m) in a coefficient vector."""
    if l < 0 or abs(m) > l:
        raise ValueError(f"Invalid harmonic degree/order ({l}, {m})")
    return l * l + l + m


def harmonic_count(degree: int) -> int:
    """Number of harmonics up to and including ``degree``."""
    return (degree + 1) ** 2


def _normalization(l: int, m: int) -> float:
    return float(np.sqrt((2 * l + 1) / (4.0 * np.pi) * np.exp(gammaln(l - m + 1) - gammaln(l + m + 1))))


def _legendre(m: int, l: int, x: np.ndarray) -> np.ndarray:
    if m > l:
        return np.zeros_like(x)
    return (-1.0) ** m * lpmv(m, l, x)


def _legendre_dtheta(m: int, l: int, cos_theta: np.ndarray) -> np.ndarray:
    # d/dtheta of Q_l^m(cos theta)
    if m == 0:
        return -_legendre(1, l, cos_theta)
    return 0.5 * ((l + m) * (l - m + 1) * _legendre(m - 1, l, cos_theta)
                  - _legendre(m + 1, l, cos_theta))


def real_sph_harm(l: int, m: int, phi, theta) -> np.ndarray:
    """
    Evaluate the tesseral harmonic Y_lm.

    Args:
        l: Degree (l >= 0)
        m: Order (-l <= m <= l)
        phi: Azimuthal angle(s)
        theta: Polar angle(s)

    Returns:
        Y_lm(phi, theta) with the broadcast shape of the angles
    """
    harmonic_index(l, m)
    phi, theta = np.broadcast_arrays(np.asarray(phi, dtype=float), np.asarray(theta, dtype=float))
    k = abs(m)
    radial = _normalization(l, k) * _legendre(k, l, np.cos(theta))
    if m == 0:
        return radial
    if m > 0:
        return np.sqrt(2.0) * radial * np.cos(k * phi)
    return np.sqrt(2.0) * radial * np.sin(k * phi)


def real_sph_harm_derivatives(l: int, m: int, phi, theta) -> Tuple[np.ndarray, np.ndarray]:
    """Derivatives (dY_lm/dphi, dY_lm/dtheta)."""
    harmonic_index(l, m)
    phi, theta = np.broadcast_arrays(np.asarray(phi, dtype=float), np.asarray(theta, dtype=float))
    k = abs(m)
    norm = _normalization(l, k)
    cos_theta = np.cos(theta)
    radial = norm * _legendre(k, l, cos_theta)
    dradial = norm * _legendre_dtheta(k, l, cos_theta)
    if m == 0:
        return np.zeros_like(radial), dradial
    root2 = np.sqrt(2.0)
    if m > 0:
        return (-root2 * k * radial * np.sin(k * phi), root2 * dradial * np.cos(k * phi))
    return (root2 * k * radial * np.cos(k * phi), root2 * dradial * np.sin(k * phi))


def expand(coefficients: np.ndarray, phi, theta,
           derivatives: bool = False):
    """
    Evaluate the series sum_lm c_lm Y_lm.

    Args:
        coefficients: Vector of length (L+1)^2 ordered by harmonic_index
        phi: Azimuthal angle(s)
        theta: Polar angle(s)
        derivatives: Also return the phi- and theta-derivatives

    Returns:
        The series value, or a tuple (value, d/dphi, d/dtheta)
    """
    coefficients = np.asarray(coefficients, dtype=float)
    degree = int(round(np.sqrt(len(coefficients)))) - 1
    if harmonic_count(degree) != len(coefficients):
        raise ValueError(f"Coefficient count {len(coefficients)} is not a perfect square")
    phi, theta = np.broadcast_arrays(np.asarray(phi, dtype=float), np.asarray(theta, dtype=float))
    value = np.zeros(phi.shape)
    dphi = np.zeros(phi.shape)
    dtheta = np.zeros(phi.shape)
    for l in range(degree + 1):
        for m in range(-l, l + 1):
            c = coefficients[harmonic_index(l, m)]
            if c == 0.0:
                continue
            value += c * real_sph_harm(l, m, phi, theta)
            if derivatives:
                dp, dt = real_sph_harm_derivatives(l, m, phi, theta)
                dphi += c * dp
                dtheta += c * dt
    if derivatives:
        return value, dphi, dtheta
    return value
