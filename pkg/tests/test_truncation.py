#!/usr/bin/env python3
"""
Tests for the face-based truncation module

The face sums are checked against exact values, against brute-force
clipping and, for the derivatives, against the Reynolds-transport form and
central finite differences.
"""

import numpy as np
import pytest
from scipy.spatial import ConvexHull

from src.errors import DegenerateGeometryError
from src.mesh import Polyhedron
from src.truncation import (
    Plane,
    angles_to_normal,
    bracket_polynomial,
    cut_polygon,
    face_coefficients,
    normal_derivatives,
    normal_to_angles,
    reynolds_gradient,
    symmetric_volume_difference,
    truncate,
    truncate_with_gradient,
    vertex_distances,
)
from src.clipping import halfspace_fraction

ORIGIN = np.zeros(3)


def _random_planes(poly, rng, count=20):
    """Planes through points near the centroid with random orientation."""
    planes = []
    for _ in range(count):
        phi = rng.uniform(0.0, 2.0 * np.pi)
        theta = rng.uniform(0.2, np.pi - 0.2)
        s = rng.uniform(-0.1, 0.1) * poly.volume ** (1.0 / 3.0)
        planes.append(Plane(phi, theta, s, poly.centroid))
    return planes


def _convex_hull_polyhedron(rng, count=14):
    """Triangulated hull of random points on a stretched sphere, faces oriented outward."""
    points = rng.normal(size=(count, 3))
    points /= np.linalg.norm(points, axis=1)[:, None]
    points *= rng.uniform(0.5, 1.5, size=3)
    hull = ConvexHull(points)
    faces = []
    for simplex, equation in zip(hull.simplices, hull.equations):
        a, b, c = points[simplex]
        if np.cross(b - a, c - a) @ equation[:3] < 0.0:
            simplex = simplex[::-1]
        faces.append(simplex)
    return Polyhedron(points, faces)


def _planes_across(poly, rng, count=20):
    """Random planes with s spread over the whole vertex range of the cell."""
    planes = []
    for _ in range(count):
        phi = rng.uniform(0.0, 2.0 * np.pi)
        theta = np.arccos(rng.uniform(-1.0, 1.0))
        d = vertex_distances(poly, angles_to_normal(phi, theta), poly.centroid)
        planes.append(Plane(phi, theta, rng.uniform(d.min(), d.max()), poly.centroid))
    return planes


@pytest.fixture
def skewed_hex():
    """A sheared hexahedron with planar faces."""
    box = Polyhedron.box()
    shear = np.array([[1.0, 0.3, 0.2], [0.0, 1.0, 0.4], [0.0, 0.0, 1.0]])
    return Polyhedron(box.vertices @ shear.T, box.faces)


class TestAngles:
    """Test suite for normal/angle conversions."""

    def test_round_trip(self, rng):
        """Test that angles_to_normal inverts normal_to_angles."""
        for n in rng.normal(size=(20, 3)):
            n /= np.linalg.norm(n)
            np.testing.assert_allclose(angles_to_normal(*normal_to_angles(n)), n, atol=1e-14)

    def test_ranges(self, rng):
        """Test that phi lies in [0, 2 pi) and theta in [0, pi]."""
        for n in rng.normal(size=(50, 3)):
            phi, theta = normal_to_angles(n)
            assert 0.0 <= phi < 2.0 * np.pi
            assert 0.0 <= theta <= np.pi

    def test_poles(self):
        """Test that phi is 0 at the poles."""
        assert normal_to_angles([0, 0, 2]) == (0.0, 0.0)
        assert normal_to_angles([0, 0, -1]) == (0.0, pytest.approx(np.pi))

    def test_zero_vector(self):
        """Test that the zero vector has no angles."""
        with pytest.raises(ValueError):
            normal_to_angles([0, 0, 0])

    def test_derivatives(self):
        """Test normal derivatives against central differences."""
        phi, theta, h = 1.1, 0.7, 1e-6
        dn = normal_derivatives(phi, theta)
        fd_phi = (angles_to_normal(phi + h, theta) - angles_to_normal(phi - h, theta)) / (2 * h)
        fd_theta = (angles_to_normal(phi, theta + h) - angles_to_normal(phi, theta - h)) / (2 * h)
        np.testing.assert_allclose(dn[0], fd_phi, atol=1e-9)
        np.testing.assert_allclose(dn[1], fd_theta, atol=1e-9)


class TestPlane:
    """Test suite for the Plane record."""

    def test_level(self):
        """Test the level function <x - x_base, n> - s."""
        plane = Plane.from_normal([0, 0, 1], 0.25, [1, 1, 1])
        assert plane.level(np.array([0.0, 0.0, 1.5])) == pytest.approx(0.25)
        assert plane.offset == pytest.approx(1.25)

    def test_inverted_swaps_sides(self):
        """Test that the inverted plane has the opposite level sign."""
        plane = Plane(0.4, 1.2, 0.1, ORIGIN)
        x = np.array([0.3, -0.2, 0.9])
        assert plane.inverted().level(x) == pytest.approx(-plane.level(x))

    def test_non_finite_rejected(self):
        """Test that non-finite parameters are rejected."""
        with pytest.raises(ValueError):
            Plane(np.nan, 0.0, 0.0, ORIGIN)
        with pytest.raises(ValueError):
            Plane(0.0, 0.0, 0.0, [0.0, 0.0])


class TestTruncate:
    """Test suite for truncate."""

    @pytest.mark.parametrize("s", [0.0, 0.1, 0.5, 0.9, 1.0])
    def test_axis_aligned_cube(self, unit_cube, s):
        """Test that alpha equals s for a horizontal plane through the unit cube."""
        result = truncate(unit_cube, Plane.from_normal([0, 0, 1], s, ORIGIN))
        assert result.alpha == pytest.approx(s, abs=1e-14)
        assert not result.degenerate

    def test_plane_missing_cell(self, unit_cube):
        """Test planes above and below the cell."""
        assert truncate(unit_cube, Plane.from_normal([1, 1, 1], 5.0, ORIGIN)).alpha == pytest.approx(1.0, abs=1e-14)
        assert truncate(unit_cube, Plane.from_normal([1, 1, 1], -5.0, ORIGIN)).alpha == 0.0

    def test_tetrahedron_corner(self, unit_tet):
        """Test alpha = t^3 for the corner x + y + z <= t of the reference tetrahedron."""
        for t in (0.2, 0.5, 0.8):
            plane = Plane.from_normal([1, 1, 1], t / np.sqrt(3.0), ORIGIN)
            assert truncate(unit_tet, plane).alpha == pytest.approx(t ** 3, abs=1e-14)

    def test_immersed_areas(self, unit_cube):
        """Test immersed face areas of the half cube."""
        result = truncate(unit_cube, Plane.from_normal([1, 0, 0], 0.5, ORIGIN))
        # faces: bottom, top, y=0, x=1, y=1, x=0
        np.testing.assert_allclose(result.immersed_areas, [0.5, 0.5, 0.5, 0.0, 0.5, 1.0], atol=1e-14)

    @pytest.mark.parametrize("cell", ["unit_cube", "unit_tet", "skewed_hex"])
    def test_matches_clipping(self, cell, rng, request):
        """Test the face sums against brute-force clipping for random planes."""
        poly = request.getfixturevalue(cell)
        for plane in _random_planes(poly, rng):
            expected = halfspace_fraction(poly, plane.normal, plane.offset)
            assert truncate(poly, plane).alpha == pytest.approx(expected, abs=1e-12)

    def test_independent_of_base_point(self, unit_cube):
        """Test that moving x_base along with s leaves the plane unchanged."""
        n = np.array([0.3, -0.5, 0.8]) / np.linalg.norm([0.3, -0.5, 0.8])
        a = Plane.from_normal(n, 0.2, ORIGIN)
        shift = np.array([0.1, 0.4, -0.3])
        b = Plane.from_normal(n, 0.2 - shift @ n, shift)
        assert truncate(unit_cube, a).alpha == pytest.approx(truncate(unit_cube, b).alpha, abs=1e-14)

    def test_parallel_face_partially_immersed(self, unit_cube):
        """Test that a face split by a nearly parallel plane is flagged degenerate."""
        # 1 - <n_top, n>^2 ~ 1e-14, yet the top vertices lie on both sides
        plane = Plane(0.0, 1e-7, 0.0, np.array([0.5, 0.5, 1.0]))
        result = truncate(unit_cube, plane)
        assert result.degenerate
        assert result.alpha == pytest.approx(1.0, abs=1e-6)
        assert result.immersed_areas[1] == pytest.approx(0.5, abs=1e-6)

    def test_interface_area_needs_gradient(self, unit_cube):
        """Test that the interface area requires a gradient evaluation."""
        with pytest.raises(ValueError):
            truncate(unit_cube, Plane.from_normal([0, 0, 1], 0.5, ORIGIN)).interface_area


class TestTruncateWithGradient:
    """Test suite for the analytic gradient of alpha."""

    def test_horizontal_plane(self, unit_cube):
        """Test d alpha/ds = 1 and the interface area of a horizontal cut."""
        result = truncate_with_gradient(unit_cube, Plane(0.3, 0.4, 0.0, unit_cube.centroid))
        assert result.grad[0] > 0.0
        flat = truncate_with_gradient(unit_cube, Plane.from_normal([0, 0, 1], 0.5, ORIGIN))
        assert flat.grad[0] == pytest.approx(1.0)
        assert flat.interface_area == pytest.approx(1.0)

    @pytest.mark.parametrize("cell", ["unit_cube", "unit_tet", "skewed_hex"])
    def test_matches_reynolds_form(self, cell, rng, request):
        """Test the face-sum gradient against the Reynolds-transport gradient."""
        poly = request.getfixturevalue(cell)
        for plane in _random_planes(poly, rng):
            face_based = truncate_with_gradient(poly, plane).grad
            transport = reynolds_gradient(poly, plane)
            assert not transport.empty
            np.testing.assert_allclose(face_based, transport.grad, atol=1e-10)

    @pytest.mark.parametrize("cell", ["unit_cube", "unit_tet", "skewed_hex"])
    def test_matches_finite_differences(self, cell, rng, request):
        """Test the face-sum gradient against central differences."""
        poly = request.getfixturevalue(cell)
        h = 1e-6
        for plane in _random_planes(poly, rng, count=8):
            grad = truncate_with_gradient(poly, plane).grad
            fd = [
                (truncate(poly, plane.with_s(plane.s + h)).alpha
                 - truncate(poly, plane.with_s(plane.s - h)).alpha) / (2 * h),
                (truncate(poly, plane.with_angles(plane.phi + h, plane.theta)).alpha
                 - truncate(poly, plane.with_angles(plane.phi - h, plane.theta)).alpha) / (2 * h),
                (truncate(poly, plane.with_angles(plane.phi, plane.theta + h)).alpha
                 - truncate(poly, plane.with_angles(plane.phi, plane.theta - h)).alpha) / (2 * h),
            ]
            np.testing.assert_allclose(grad, fd, atol=1e-6)

    def test_alpha_matches_truncate(self, unit_tet, rng):
        """Test that both entry points agree on alpha."""
        for plane in _random_planes(unit_tet, rng, count=5):
            assert truncate_with_gradient(unit_tet, plane).alpha == truncate(unit_tet, plane).alpha


class TestCoefficients:
    """Test suite for face coefficients and bracket polynomials."""

    def test_face_origins_on_both_planes(self, skewed_hex):
        """Test that every face origin lies on its face plane and on the cutting plane."""
        plane = Plane(0.7, 1.1, 0.05, skewed_hex.centroid)
        coeffs = face_coefficients(skewed_hex, plane)
        for f in np.flatnonzero(~coeffs.parallel):
            origin = coeffs.face_origins[f]
            anchor = skewed_hex.vertices[skewed_hex.face_anchors[f]]
            assert (origin - anchor) @ skewed_hex.face_normals[f] == pytest.approx(0.0, abs=1e-13)
            assert plane.level(origin) == pytest.approx(0.0, abs=1e-13)

    def test_parallel_faces_flagged(self, unit_cube):
        """Test that faces parallel to the plane have no origin."""
        coeffs = face_coefficients(unit_cube, Plane.from_normal([0, 0, 1], 0.5, ORIGIN))
        assert coeffs.parallel.tolist() == [True, True, False, False, False, False]
        assert np.all(np.isnan(coeffs.face_origins[:2]))

    def test_cube_bracket_is_linear(self, unit_cube):
        """Test that alpha(s) of a horizontal cut is linear in s."""
        plane = Plane.from_normal([0, 0, 1], 0.3, ORIGIN)
        below = unit_cube.vertices[:, 2] <= 0.0
        np.testing.assert_allclose(bracket_polynomial(unit_cube, plane, below), [0.3, 1.0, 0.0, 0.0], atol=1e-14)

    def test_tetrahedron_bracket_is_cubic(self, unit_tet):
        """Test the Taylor data of alpha = 3 sqrt(3) s^3 near the corner of the reference tetrahedron."""
        s = 0.3 / np.sqrt(3.0)
        plane = Plane.from_normal([1, 1, 1], s, ORIGIN)
        below = np.array([True, False, False, False])
        c = 3.0 * np.sqrt(3.0)
        expected = [c * s ** 3, 3 * c * s ** 2, 6 * c * s, 6 * c]
        np.testing.assert_allclose(bracket_polynomial(unit_tet, plane, below), expected, rtol=1e-10)


class TestCutPolygon:
    """Test suite for the cut polygon and the Reynolds gradient."""

    def test_horizontal_cut(self, unit_cube):
        """Test area and centroid of a horizontal cut."""
        cut = cut_polygon(unit_cube, Plane.from_normal([0, 0, 1], 0.25, ORIGIN))
        assert cut.area == pytest.approx(1.0)
        np.testing.assert_allclose(cut.centroid, [0.5, 0.5, 0.25])

    def test_no_cut(self, unit_cube):
        """Test that a missing plane yields an empty cut and a zero gradient."""
        plane = Plane.from_normal([0, 0, 1], 3.0, ORIGIN)
        assert cut_polygon(unit_cube, plane).empty
        result = reynolds_gradient(unit_cube, plane)
        assert result.empty
        np.testing.assert_array_equal(result.grad, np.zeros(3))


class TestSymmetricVolumeDifference:
    """Test suite for symmetric_volume_difference."""

    def test_identical_planes(self, unit_cube):
        """Test that a plane agrees with itself."""
        plane = Plane(0.4, 0.9, 0.0, unit_cube.centroid)
        assert symmetric_volume_difference(unit_cube, plane, plane) == pytest.approx(0.0, abs=1e-14)

    def test_parallel_planes(self, unit_cube):
        """Test the slab between two horizontal planes."""
        a = Plane.from_normal([0, 0, 1], 0.3, ORIGIN)
        b = Plane.from_normal([0, 0, 1], 0.5, ORIGIN)
        assert symmetric_volume_difference(unit_cube, a, b) == pytest.approx(0.2)

    def test_opposite_planes(self, unit_cube):
        """Test that opposite orientations disagree everywhere."""
        plane = Plane.from_normal([0, 0, 1], 0.5, ORIGIN)
        assert symmetric_volume_difference(unit_cube, plane, plane.inverted()) == pytest.approx(1.0)

    def test_symmetric(self, unit_tet):
        """Test symmetry in the two planes."""
        a = Plane(0.3, 0.8, 0.0, unit_tet.centroid)
        b = Plane(0.5, 1.0, 0.01, unit_tet.centroid)
        assert symmetric_volume_difference(unit_tet, a, b) == pytest.approx(
            symmetric_volume_difference(unit_tet, b, a), abs=1e-14)


def test_zero_volume_cell_rejected(unit_cube):
    """Test that a cell without volume raises DegenerateGeometryError."""
    unit_cube.volume = 0.0
    with pytest.raises(DegenerateGeometryError):
        truncate(unit_cube, Plane.from_normal([0, 0, 1], 0.5, ORIGIN))


class TestConvexPolyhedra:
    """Test suite for truncation of general convex cells."""

    def test_hull_matches_clipping(self, rng):
        """Test random convex hulls against brute-force clipping."""
        for _ in range(10):
            poly = _convex_hull_polyhedron(rng)
            for plane in _planes_across(poly, rng):
                expected = halfspace_fraction(poly, plane.normal, plane.offset)
                assert truncate(poly, plane).alpha == pytest.approx(expected, abs=1e-9)

    def test_hull_gradient_matches_reynolds_form(self, rng):
        """Test the face-sum gradient of a convex hull against the transport form."""
        poly = _convex_hull_polyhedron(rng, count=20)
        for plane in _random_planes(poly, rng, count=10):
            transport = reynolds_gradient(poly, plane)
            assert not transport.empty
            np.testing.assert_allclose(truncate_with_gradient(poly, plane).grad, transport.grad, atol=1e-10)

    @pytest.mark.parametrize("cell", ["unit_cube", "unit_tet", "skewed_hex"])
    def test_complement(self, cell, rng, request):
        """Test that a plane and its inverse split the cell into alpha and 1 - alpha."""
        poly = request.getfixturevalue(cell)
        for plane in _planes_across(poly, rng):
            total = truncate(poly, plane).alpha + truncate(poly, plane.inverted()).alpha
            assert total == pytest.approx(1.0, abs=1e-12)

    def test_hull_complement(self, rng):
        """Test the complement identity on convex hulls."""
        poly = _convex_hull_polyhedron(rng)
        for plane in _planes_across(poly, rng):
            total = truncate(poly, plane).alpha + truncate(poly, plane.inverted()).alpha
            assert total == pytest.approx(1.0, abs=1e-12)

    @pytest.mark.parametrize("cell", ["unit_cube", "unit_tet", "skewed_hex", "hull"])
    def test_monotone_in_s(self, cell, rng, request):
        """Test that alpha rises from 0 at the lowest vertex to 1 at the highest."""
        poly = _convex_hull_polyhedron(rng) if cell == "hull" else request.getfixturevalue(cell)
        for _ in range(5):
            phi, theta = rng.uniform(0.0, 2.0 * np.pi), np.arccos(rng.uniform(-1.0, 1.0))
            d = vertex_distances(poly, angles_to_normal(phi, theta), poly.centroid)
            alpha = np.array([truncate(poly, Plane(phi, theta, s, poly.centroid)).alpha
                              for s in np.linspace(d.min(), d.max(), 41)])
            assert alpha[0] == pytest.approx(0.0, abs=1e-13)
            assert alpha[-1] == pytest.approx(1.0, abs=1e-13)
            assert np.all(np.diff(alpha) >= -1e-14)

    @pytest.mark.parametrize("t", [0.1, 0.4, 0.7, 1.0])
    def test_cube_corner(self, unit_cube, t):
        """Test alpha = t^3/6 for the corner x + y + z <= t of the unit cube."""
        plane = Plane.from_normal([1, 1, 1], t / np.sqrt(3.0), ORIGIN)
        assert truncate(unit_cube, plane).alpha == pytest.approx(t ** 3 / 6.0, abs=1e-13)
