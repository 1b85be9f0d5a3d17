#!/usr/bin/env python3
"""
Tests for plane positioning by implicit bracketing.
"""

import numpy as np
import pytest

from src.errors import PositioningError
from src.mesh import generate_tetrahedral_mesh
from src.positioning import (
    CubicModel,
    breakpoints,
    position_gradient,
    position_plane,
    solve_position,
    spline_guess,
)
from src.truncation import Plane, angles_to_normal, normal_to_angles, truncate, vertex_distances

ORIGIN = np.zeros(3)
DIAGONAL = normal_to_angles([1.0, 1.0, 1.0])


class TestHelpers:
    """Test suite for the positioning helpers."""

    @pytest.mark.parametrize("alpha,expected", [(0.0, 0.0), (0.5, 0.5), (1.0, 1.0)])
    def test_spline_guess(self, alpha, expected):
        """Test the inverse spline at the ends and the midpoint."""
        assert spline_guess(alpha, 0.0, 1.0) == pytest.approx(expected, abs=1e-14)

    def test_spline_guess_monotone(self):
        """Test that the initial guess increases with alpha."""
        values = [spline_guess(a, -2.0, 3.0) for a in np.linspace(0.0, 1.0, 11)]
        assert np.all(np.diff(values) > 0.0)

    def test_breakpoints_merge(self):
        """Test that nearly equal distances collapse into one breakpoint."""
        np.testing.assert_allclose(breakpoints([0.5, 0.0, 0.5 + 1e-16, 1.0]), [0.0, 0.5, 1.0])

    def test_cubic_root(self):
        """Test the safeguarded Newton root of a known cubic."""
        # alpha(s) = s^3 about s = 0.5
        model = CubicModel(0.5, (0.125, 0.75, 3.0, 6.0), (0.0, 1.0))
        assert model.root(0.001) == pytest.approx(0.1, abs=1e-12)

    def test_cubic_root_clamps(self):
        """Test that targets beyond the bracket values return the bracket end."""
        model = CubicModel(0.5, (0.5, 1.0, 0.0, 0.0), (0.0, 1.0))
        assert model.root(2.0) == 1.0
        assert model.root(-1.0) == 0.0


class TestSolvePosition:
    """Test suite for solve_position."""

    @pytest.mark.parametrize("alpha", [0.01, 0.3, 0.5, 0.77, 0.999])
    def test_cube_horizontal(self, unit_cube, alpha):
        """Test that s* = alpha for a horizontal plane through the unit cube."""
        assert position_plane(unit_cube, 0.0, 0.0, alpha, ORIGIN) == pytest.approx(alpha, abs=1e-13)

    @pytest.mark.parametrize("t", [0.3, 0.5, 0.9])
    def test_tetrahedron_corner(self, unit_tet, t):
        """Test the corner cut of the reference tetrahedron, alpha = t^3."""
        s = position_plane(unit_tet, *DIAGONAL, t ** 3, ORIGIN)
        assert s == pytest.approx(t / np.sqrt(3.0), abs=1e-13)

    def test_default_base_point_is_centroid(self, unit_tet):
        """Test that s* is measured from the centroid when no base point is given."""
        s = position_plane(unit_tet, *DIAGONAL, 0.125)
        assert s == pytest.approx((0.5 - 0.75) / np.sqrt(3.0), abs=1e-13)

    @pytest.mark.parametrize("cell", ["unit_cube", "unit_tet"])
    def test_random_orientations(self, cell, rng, request):
        """Test that the positioned plane truncates the target volume fraction."""
        poly = request.getfixturevalue(cell)
        for _ in range(30):
            phi = rng.uniform(0.0, 2.0 * np.pi)
            theta = rng.uniform(0.0, np.pi)
            target = rng.uniform(0.0, 1.0)
            result = solve_position(poly, phi, theta, target)
            assert result.residual <= 1e-12
            alpha = truncate(poly, Plane(phi, theta, result.s, poly.centroid)).alpha
            assert alpha == pytest.approx(target, abs=1e-12)
            assert result.bracket[0] <= result.s <= result.bracket[1]

    def test_mesh_cells(self, rng):
        """Test positioning in the cells of a tetrahedral mesh."""
        mesh = generate_tetrahedral_mesh(1)
        for k in range(mesh.n_cells):
            poly = mesh.polyhedron(k)
            phi, theta = rng.uniform(0.0, 2.0 * np.pi), rng.uniform(0.0, np.pi)
            s = position_plane(poly, phi, theta, 0.42)
            assert truncate(poly, Plane(phi, theta, s, poly.centroid)).alpha == pytest.approx(0.42, abs=1e-12)

    def test_empty_and_full(self, unit_cube):
        """Test that alpha 0 and 1 map to the extreme vertex distances."""
        assert position_plane(unit_cube, 0.0, 0.0, 0.0, ORIGIN) == pytest.approx(0.0)
        assert position_plane(unit_cube, 0.0, 0.0, 1.0, ORIGIN) == pytest.approx(1.0)
        result = solve_position(unit_cube, 0.0, 0.0, 1.0, ORIGIN)
        assert result.truncations == 0

    @pytest.mark.parametrize("alpha", [-0.1, 1.5])
    def test_target_out_of_range(self, unit_cube, alpha):
        """Test that targets outside [0, 1] raise PositioningError."""
        with pytest.raises(PositioningError):
            solve_position(unit_cube, 0.0, 0.0, alpha)

    def test_trace_starts_at_spline_guess(self, unit_cube):
        """Test that the iteration record starts at the spline guess."""
        result = solve_position(unit_cube, 0.0, 0.0, 0.3, ORIGIN)
        assert result.trace[0] == pytest.approx(spline_guess(0.3, 0.0, 1.0))
        assert result.truncations >= 1


class TestPositionGradient:
    """Test suite for the implicit derivatives of s*."""

    def test_matches_finite_differences(self, unit_cube, unit_tet):
        """Test ds*/dphi and ds*/dtheta against central differences."""
        h = 1e-6
        for poly in (unit_cube, unit_tet):
            phi, theta, target = 0.9, 1.1, 0.37
            s = position_plane(poly, phi, theta, target)
            result = position_gradient(poly, Plane(phi, theta, s, poly.centroid))
            assert not result.degenerate
            fd = [
                (position_plane(poly, phi + h, theta, target) - position_plane(poly, phi - h, theta, target)) / (2 * h),
                (position_plane(poly, phi, theta + h, target) - position_plane(poly, phi, theta - h, target)) / (2 * h),
            ]
            np.testing.assert_allclose(result.grad, fd, atol=1e-6)

    def test_symmetric_cut_has_zero_gradient(self, unit_cube):
        """Test that tilting the mid plane about the centroid keeps s* = 0."""
        result = position_gradient(unit_cube, Plane(0.3, 0.6, 0.0, unit_cube.centroid))
        np.testing.assert_allclose(result.grad, 0.0, atol=1e-14)

    def test_tangent_plane_is_degenerate(self, unit_cube):
        """Test that a plane touching a single vertex is reported degenerate."""
        result = position_gradient(unit_cube, Plane.from_normal([1, 1, 1], 0.0, ORIGIN))
        assert result.degenerate
        np.testing.assert_array_equal(result.grad, np.zeros(2))


def extruded_cube_position(alpha, phi):
    """
    Closed form s*(phi) and ds*/dphi of the unit cube for theta = pi/2.

    Valid for alpha > 1/2 and tan(phi) <= 1 / (2 - 2 alpha).
    """
    if np.tan(phi) <= 2.0 * (1.0 - alpha):
        return (alpha - 0.5) * np.cos(phi), -(alpha - 0.5) * np.sin(phi)
    root = np.sqrt((1.0 - alpha) * np.sin(2.0 * phi))
    s = 0.5 * (np.cos(phi) + np.sin(phi)) - np.sqrt(2.0 * (1.0 - alpha) * np.sin(phi) * np.cos(phi))
    ds = 0.5 * (np.cos(phi) - np.sin(phi)) - (1.0 - alpha) * np.cos(2.0 * phi) / root
    return s, ds


class TestExtrudedCube:
    """Test suite for positioning in the unit cube with normals in the xy-plane."""

    @pytest.mark.parametrize("alpha", [0.6, 0.75, 0.9])
    def test_closed_form(self, unit_cube, alpha):
        """Test s* and ds*/dphi on both sides of the corner-cut transition."""
        junction = np.arctan(2.0 * (1.0 - alpha))
        angles = [f * junction for f in (0.1, 0.5, 0.9)]
        angles += [junction + f * (0.5 * np.pi - 2.0 * junction) for f in (0.1, 0.5, 0.9)]
        for phi in angles:
            expected_s, expected_ds = extruded_cube_position(alpha, phi)
            s = position_plane(unit_cube, phi, 0.5 * np.pi, alpha)
            assert s == pytest.approx(expected_s, abs=1e-10)
            result = position_gradient(unit_cube, Plane(phi, 0.5 * np.pi, s, unit_cube.centroid))
            assert result.grad[0] == pytest.approx(expected_ds, abs=1e-10)
            assert result.grad[1] == pytest.approx(0.0, abs=1e-10)

    @pytest.mark.parametrize("alpha", [0.6, 0.75, 0.9])
    def test_smooth_transition(self, unit_cube, alpha):
        """Test that s* and its derivative join continuously where the cut reaches the corner."""
        junction = np.arctan(2.0 * (1.0 - alpha))
        s = position_plane(unit_cube, junction, 0.5 * np.pi, alpha)
        assert s == pytest.approx((alpha - 0.5) * np.cos(junction), abs=1e-10)
        derivatives = []
        for phi in (junction - 1e-4, junction + 1e-4):
            expected_s, expected_ds = extruded_cube_position(alpha, phi)
            s = position_plane(unit_cube, phi, 0.5 * np.pi, alpha)
            assert s == pytest.approx(expected_s, abs=1e-10)
            result = position_gradient(unit_cube, Plane(phi, 0.5 * np.pi, s, unit_cube.centroid))
            assert result.grad[0] == pytest.approx(expected_ds, abs=1e-10)
            derivatives.append(result.grad[0])
        assert derivatives[0] == pytest.approx(derivatives[1], abs=1e-3)


class TestTruncationCount:
    """Test suite for the number of truncations per positioning."""

    @pytest.mark.parametrize("alpha", [0.1, 0.5, 0.93])
    def test_single_bracket(self, unit_cube, alpha):
        """Test that a horizontal cut of the cube needs one truncation."""
        assert solve_position(unit_cube, 0.0, 0.0, alpha).truncations == 1

    def test_half_cube(self, unit_cube, rng):
        """Test that halving the cube through its centroid needs one truncation for any normal."""
        for _ in range(20):
            phi, theta = rng.uniform(0.0, 2.0 * np.pi), np.arccos(rng.uniform(-1.0, 1.0))
            result = solve_position(unit_cube, phi, theta, 0.5)
            assert result.truncations == 1
            assert result.s == pytest.approx(0.0, abs=1e-12)

    @pytest.mark.parametrize("cell", ["unit_cube", "unit_tet"])
    def test_guess_in_target_bracket(self, cell, rng, request):
        """Test that one truncation suffices whenever the spline guess lands in the target bracket."""
        poly = request.getfixturevalue(cell)
        hits = 0
        for _ in range(60):
            phi, theta = rng.uniform(0.0, 2.0 * np.pi), np.arccos(rng.uniform(-1.0, 1.0))
            target = rng.uniform(0.05, 0.95)
            points = breakpoints(vertex_distances(poly, angles_to_normal(phi, theta), poly.centroid))
            guess = spline_guess(target, points[0], points[-1])
            i = int(np.clip(np.searchsorted(points, guess, side="right") - 1, 0, len(points) - 2))
            alpha_left = truncate(poly, Plane(phi, theta, points[i], poly.centroid)).alpha
            alpha_right = truncate(poly, Plane(phi, theta, points[i + 1], poly.centroid)).alpha
            if alpha_left + 1e-9 < target < alpha_right - 1e-9:
                hits += 1
                assert solve_position(poly, phi, theta, target).truncations == 1
        assert hits > 0


class TestGreatCircle:
    """Test suite for the continuity of s* along a great circle of normals."""

    @pytest.mark.parametrize("cell", ["unit_cube", "unit_tet"])
    @pytest.mark.parametrize("alpha", [0.2, 0.5, 0.85])
    def test_lipschitz(self, cell, alpha, rng, request):
        """Test |s*(t + dt) - s*(t)| <= R dt, R the largest vertex distance from the base point."""
        poly = request.getfixturevalue(cell)
        u, w = np.linalg.qr(rng.normal(size=(3, 2)))[0].T
        radius = np.linalg.norm(poly.vertices - poly.centroid, axis=1).max()
        t, dt = np.linspace(0.0, 2.0 * np.pi, 401, retstep=True)
        s = [position_plane(poly, *normal_to_angles(np.cos(x) * u + np.sin(x) * w), alpha) for x in t]
        assert np.all(np.abs(np.diff(s)) <= radius * dt + 1e-12)
        assert s[0] == pytest.approx(s[-1], abs=1e-12)
