#!/usr/bin/env python3
"""
Tests for the gradient estimators and the initial plane orientation.
"""

import numpy as np
import pytest

from src.errors import UnreconstructableStencilError
from src.initguess import (
    estimate_gradient,
    extreme_cells,
    gauss_green_gradient,
    initial_orientation,
    lse_gradient,
    normal_from_gradient,
    orientation_fix,
    orientation_from_gradient,
)
from src.mesh import build_neighborhood
from src.surfaces import VolumeFractionField, interface_cells

CENTER = 62  # middle cell of the 5^3 cube mesh
SLOPE = np.array([0.1, 0.2, -0.1])


@pytest.fixture(scope="module")
def linear_field(cube_mesh_5):
    """Volume fractions varying linearly with the centroid, all in (0, 1)."""
    return VolumeFractionField.from_alpha(0.5 + cube_mesh_5.cell_centroids @ SLOPE)


@pytest.fixture(scope="module")
def vertex_stencil(cube_mesh_5):
    return build_neighborhood(cube_mesh_5, CENTER, "vertex")


class TestLeastSquares:
    """Test suite for the LSE and LSE* estimators."""

    @pytest.mark.parametrize("use_bulk", [True, False])
    def test_linear_field_exact(self, cube_mesh_5, vertex_stencil, linear_field, use_bulk):
        """Test that linear data is differentiated exactly."""
        estimate = lse_gradient(cube_mesh_5, vertex_stencil, linear_field, use_bulk=use_bulk)
        np.testing.assert_allclose(estimate.gradient, SLOPE, atol=1e-12)
        assert not estimate.singular
        assert estimate.method == ("lse" if use_bulk else "lse-star")

    def test_face_stencil(self, cube_mesh_5, linear_field):
        """Test that the six face neighbours suffice for linear data."""
        stencil = build_neighborhood(cube_mesh_5, CENTER, "face")
        estimate = lse_gradient(cube_mesh_5, stencil, linear_field)
        np.testing.assert_allclose(estimate.gradient, SLOPE, atol=1e-12)

    def test_bulk_members_excluded(self, cube_mesh_5, vertex_stencil):
        """Test that LSE* with fewer than three interface members is singular."""
        alpha = np.zeros(cube_mesh_5.n_cells)
        alpha[CENTER] = 0.5
        alpha[vertex_stencil.neighbours[0]] = 0.5
        field = VolumeFractionField.from_alpha(alpha)
        assert lse_gradient(cube_mesh_5, vertex_stencil, field).singular
        assert not lse_gradient(cube_mesh_5, vertex_stencil, field, use_bulk=True).singular


class TestGaussGreen:
    """Test suite for the Gauss-Green estimator."""

    def test_linear_field_exact(self, cube_mesh_5, vertex_stencil, linear_field):
        """Test that node averages reproduce linear data on a uniform grid."""
        estimate = gauss_green_gradient(cube_mesh_5, vertex_stencil, linear_field)
        np.testing.assert_allclose(estimate.gradient, SLOPE, atol=1e-12)
        assert estimate.covered

    def test_boundary_cell_not_covered(self, cube_mesh_5, linear_field):
        """Test that a boundary cell reports incomplete node coverage."""
        estimate = gauss_green_gradient(cube_mesh_5, build_neighborhood(cube_mesh_5, 0, "vertex"), linear_field)
        assert not estimate.covered

    def test_face_stencil_not_covered(self, cube_mesh_5, linear_field):
        """Test that a face stencil misses cells around the center nodes."""
        estimate = gauss_green_gradient(cube_mesh_5, build_neighborhood(cube_mesh_5, CENTER, "face"), linear_field)
        assert not estimate.covered


class TestOrientation:
    """Test suite for orientation helpers."""

    def test_normal_from_gradient(self):
        """Test n = -g/|g|."""
        np.testing.assert_allclose(normal_from_gradient([0.0, 3.0, 4.0]), [0.0, -0.6, -0.8])
        with pytest.raises(ValueError):
            normal_from_gradient(np.zeros(3))

    def test_orientation_from_gradient(self):
        """Test that an upward gradient gives a downward normal."""
        phi, theta = orientation_from_gradient([0.0, 0.0, 1.0])
        assert theta == pytest.approx(np.pi)
        assert phi == 0.0

    def test_extreme_cells(self, cube_mesh_5, vertex_stencil, linear_field):
        """Test the stencil members holding the smallest and largest fraction."""
        lowest, highest = extreme_cells(vertex_stencil, linear_field)
        values = linear_field.alpha[list(vertex_stencil.member_indices)]
        assert linear_field.alpha[lowest] == values.min()
        assert linear_field.alpha[highest] == values.max()

    def test_orientation_fix(self, cube_mesh_5, vertex_stencil, linear_field):
        """Test that estimates pointing towards decreasing fractions are inverted."""
        vec, uniform = orientation_fix(-SLOPE, cube_mesh_5, vertex_stencil, linear_field)
        assert not uniform
        np.testing.assert_allclose(vec, SLOPE)
        vec, _ = orientation_fix(SLOPE, cube_mesh_5, vertex_stencil, linear_field)
        np.testing.assert_allclose(vec, SLOPE)

    def test_orientation_fix_uniform(self, cube_mesh_5, vertex_stencil):
        """Test that constant data is flagged as uniform."""
        field = VolumeFractionField.from_alpha(np.full(cube_mesh_5.n_cells, 0.3))
        vec, uniform = orientation_fix(SLOPE, cube_mesh_5, vertex_stencil, field)
        assert uniform
        np.testing.assert_allclose(vec, SLOPE)


class TestInitialOrientation:
    """Test suite for initial_orientation."""

    @pytest.mark.parametrize("scheme", ["lse", "lse-star", "gg", "fbnr"])
    def test_linear_field(self, cube_mesh_5, vertex_stencil, linear_field, scheme):
        """Test that the initial normal opposes the linear gradient."""
        initial = initial_orientation(cube_mesh_5, vertex_stencil, linear_field, scheme)
        np.testing.assert_allclose(initial.normal, -SLOPE / np.linalg.norm(SLOPE), atol=1e-10)
        assert not initial.fallback

    def test_halfspace_estimate(self, cube_mesh_5, halfspace, halfspace_field_5):
        """Test that the estimate on halfspace data points near the exact normal."""
        for k in interface_cells(halfspace_field_5):
            stencil = build_neighborhood(cube_mesh_5, k, "vertex")
            initial = initial_orientation(cube_mesh_5, stencil, halfspace_field_5)
            assert initial.normal @ halfspace.normal > 0.7

    def test_singular_fallback(self, cube_mesh_5, vertex_stencil):
        """Test the extreme-cell direction for a singular least-squares matrix."""
        alpha = np.zeros(cube_mesh_5.n_cells)
        alpha[CENTER] = 0.5
        alpha[vertex_stencil.neighbours[0]] = 0.5
        field = VolumeFractionField.from_alpha(alpha)
        initial = initial_orientation(cube_mesh_5, vertex_stencil, field)
        assert initial.fallback
        lowest, highest = extreme_cells(vertex_stencil, field)
        direction = cube_mesh_5.cell_centroids[highest] - cube_mesh_5.cell_centroids[lowest]
        np.testing.assert_allclose(initial.normal, -direction / np.linalg.norm(direction))

    def test_uniform_stencil_raises(self, cube_mesh_5, vertex_stencil):
        """Test that uniform stencil data cannot be reconstructed."""
        field = VolumeFractionField.from_alpha(np.full(cube_mesh_5.n_cells, 0.5))
        with pytest.raises(UnreconstructableStencilError):
            initial_orientation(cube_mesh_5, vertex_stencil, field)

    def test_unknown_scheme(self, cube_mesh_5, vertex_stencil, linear_field):
        """Test that unknown schemes are rejected."""
        with pytest.raises(ValueError, match="Unknown gradient scheme"):
            estimate_gradient(cube_mesh_5, vertex_stencil, linear_field, "youngs")
