#!/usr/bin/env python3
"""
Tests for the tesseral spherical harmonics.
"""

import numpy as np
import pytest

from src.harmonics import (
    expand,
    harmonic_count,
    harmonic_index,
    real_sph_harm,
    real_sph_harm_derivatives,
)

DEGREE = 4


def _quadrature(n_phi=64, n_theta=48):
    """Gauss-Legendre in cos(theta) times the trapezoidal rule in phi."""
    x, w = np.polynomial.legendre.leggauss(n_theta)
    theta = np.arccos(x)
    phi = np.arange(n_phi) * 2.0 * np.pi / n_phi
    pp, tt = np.meshgrid(phi, theta, indexing="ij")
    weights = np.outer(np.full(n_phi, 2.0 * np.pi / n_phi), w)
    return pp, tt, weights


class TestIndexing:
    """Test suite for the coefficient ordering."""

    def test_index_order(self):
        """Test that indices enumerate (l, m) without gaps."""
        indices = [harmonic_index(l, m) for l in range(DEGREE + 1) for m in range(-l, l + 1)]
        assert indices == list(range(harmonic_count(DEGREE)))

    @pytest.mark.parametrize("l,m", [(-1, 0), (2, 3), (1, -2)])
    def test_invalid(self, l, m):
        """Test that invalid degree/order pairs are rejected."""
        with pytest.raises(ValueError):
            harmonic_index(l, m)


class TestRealSphHarm:
    """Test suite for real_sph_harm."""

    def test_constant(self):
        """Test Y_00 = 1/sqrt(4 pi)."""
        assert real_sph_harm(0, 0, 1.3, 0.4) == pytest.approx(1.0 / np.sqrt(4.0 * np.pi))

    def test_no_condon_shortley_phase(self):
        """Test that Y_11 is positive along +x and Y_1-1 along +y."""
        assert real_sph_harm(1, 1, 0.0, np.pi / 2) == pytest.approx(np.sqrt(3.0 / (4.0 * np.pi)))
        assert real_sph_harm(1, -1, np.pi / 2, np.pi / 2) == pytest.approx(np.sqrt(3.0 / (4.0 * np.pi)))
        assert real_sph_harm(1, 0, 0.0, 0.0) == pytest.approx(np.sqrt(3.0 / (4.0 * np.pi)))

    def test_orthonormal(self):
        """Test orthonormality on the unit sphere up to degree 4."""
        pp, tt, weights = _quadrature()
        pairs = [(l, m) for l in range(DEGREE + 1) for m in range(-l, l + 1)]
        values = np.array([real_sph_harm(l, m, pp, tt) for l, m in pairs])
        gram = np.einsum("aij,bij,ij->ab", values, values, weights)
        np.testing.assert_allclose(gram, np.eye(len(pairs)), atol=1e-8)

    def test_broadcasting(self):
        """Test that array arguments broadcast."""
        theta = np.linspace(0.1, 3.0, 5)
        assert real_sph_harm(3, -2, 0.7, theta).shape == (5,)


class TestDerivatives:
    """Test suite for the angular derivatives."""

    @pytest.mark.parametrize("l,m", [(1, 0), (2, 1), (3, -2), (4, 4), (4, -3)])
    def test_finite_differences(self, l, m):
        """Test both derivatives against central differences."""
        phi, theta, h = 0.8, 1.2, 1e-6
        dphi, dtheta = real_sph_harm_derivatives(l, m, phi, theta)
        fd_phi = (real_sph_harm(l, m, phi + h, theta) - real_sph_harm(l, m, phi - h, theta)) / (2 * h)
        fd_theta = (real_sph_harm(l, m, phi, theta + h) - real_sph_harm(l, m, phi, theta - h)) / (2 * h)
        assert dphi == pytest.approx(fd_phi, abs=1e-7)
        assert dtheta == pytest.approx(fd_theta, abs=1e-7)


class TestExpand:
    """Test suite for series evaluation."""

    def test_single_term(self):
        """Test that a unit coefficient reproduces the harmonic."""
        coefficients = np.zeros(harmonic_count(2))
        coefficients[harmonic_index(2, -1)] = 1.0
        assert expand(coefficients, 0.3, 0.9) == pytest.approx(real_sph_harm(2, -1, 0.3, 0.9))

    def test_derivatives(self, rng):
        """Test that the series derivatives match the term-wise sum."""
        coefficients = rng.normal(size=harmonic_count(3))
        value, dphi, dtheta = expand(coefficients, 1.0, 2.0, derivatives=True)
        h = 1e-6
        fd = (expand(coefficients, 1.0 + h, 2.0) - expand(coefficients, 1.0 - h, 2.0)) / (2 * h)
        assert dphi == pytest.approx(fd, abs=1e-6)
        assert value == pytest.approx(expand(coefficients, 1.0, 2.0))

    def test_invalid_length(self):
        """Test that coefficient vectors must have (L+1)^2 entries."""
        with pytest.raises(ValueError):
            expand(np.ones(5), 0.0, 0.0)
