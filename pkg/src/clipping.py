#!/usr/bin/env python3
"""
Brute-force halfspace clipping of convex polygons and polyhedra.

Polygons are clipped against a single plane with the Sutherland-Hodgman
rule; a convex polyhedron is clipped face by face and closed again with a
cap polygon assembled from the points lying on the clipping plane. Volumes
follow from the divergence theorem over the resulting face list.

This geometry is independent of the face-based kernel in
:mod:`src.truncation`; it backs the symmetric volume difference of two
planes and serves as an oracle for the truncated volumes.
"""

from typing import List, Sequence, Tuple

import numpy as np

from .mesh import Polyhedron

try:
    from .config import ZERO_TOLERANCE
except ImportError:
    ZERO_TOLERANCE = 1e-14

Halfspace = Tuple[np.ndarray, float]


def clip_polygon(points: np.ndarray, normal: np.ndarray, offset: float,
                 tolerance: float = ZERO_TOLERANCE) -> Tuple[np.ndarray, np.ndarray]:
    """
    Clip a convex polygon to the halfspace <x, normal> <= offset.

    Args:
        points: Polygon vertices in order, shape (k, 3)
        normal: Halfspace normal (need not be unit length)
        offset: Halfspace offset
        tolerance: Thickness of the plane; points within it are kept

    Returns:
        Tuple of (clipped polygon vertices, mask of vertices on the plane)
    """
    points = np.asarray(points, dtype=float)
    dist = points @ normal - offset
    status = np.where(dist > tolerance, 1, np.where(dist < -tolerance, -1, 0))
    out, on_plane = [], []
    k = len(points)
    for j in range(k):
        i = (j - 1) % k
        if status[i] * status[j] == -1:
            t = dist[j] / (dist[j] - dist[i])
            out.append(t * points[i] + (1.0 - t) * points[j])
            on_plane.append(True)
        if status[j] <= 0:
            out.append(points[j])
            on_plane.append(status[j] == 0)
    if not out:
        return np.zeros((0, 3)), np.zeros(0, dtype=bool)
    return np.array(out), np.array(on_plane, dtype=bool)


def polygon_area(points: np.ndarray) -> float:
    if len(points) < 3:
        return 0.0
    rel = points - points[0]
    return float(np.linalg.norm(0.5 * np.cross(rel[1:-1], rel[2:]).sum(axis=0)))


def _cap_polygon(points: np.ndarray, normal: np.ndarray) -> np.ndarray:
    # counter-clockwise around the outward normal of the clipped body
    n = normal / np.linalg.norm(normal)
    helper = np.eye(3)[np.argmin(np.abs(n))]
    u = np.cross(n, helper)
    u /= np.linalg.norm(u)
    v = np.cross(n, u)
    rel = points - points.mean(axis=0)
    angles = np.arctan2(rel @ v, rel @ u)
    return points[np.argsort(angles, kind="stable")]


def clip_polyhedron(faces: Sequence[np.ndarray], normal: np.ndarray, offset: float,
                    tolerance: float = ZERO_TOLERANCE) -> List[np.ndarray]:
    """
    Clip a convex polyhedron, given as outward-oriented face polygons, to a halfspace.

    Args:
        faces: Face vertex coordinates, each ordered counter-clockwise seen from outside
        normal: Halfspace normal
        offset: Halfspace offset
        tolerance: Thickness of the clipping plane

    Returns:
        Face list of the clipped polyhedron (empty when nothing remains)
    """
    normal = np.asarray(normal, dtype=float)
    clipped, cap_points = [], []
    face_in_plane = False
    for face in faces:
        poly, on_plane = clip_polygon(face, normal, offset, tolerance)
        if len(poly) >= 3:
            clipped.append(poly)
            # a face inside the clipping plane already closes the body
            face_in_plane |= bool(on_plane.all())
        if len(poly):
            cap_points.extend(poly[on_plane])
    if not clipped:
        return []
    if not face_in_plane and len(cap_points) >= 3:
        cap = _cap_polygon(np.array(cap_points), normal)
        if polygon_area(cap) > 0.0:
            clipped.append(cap)
    return clipped


def face_list_volume(faces: Sequence[np.ndarray]) -> float:
    """Volume enclosed by outward-oriented face polygons (divergence theorem)."""
    if not faces:
        return 0.0
    ref = faces[0][0]
    volume = 0.0
    for face in faces:
        rel = face - ref
        for j in range(1, len(face) - 1):
            volume += np.dot(rel[0], np.cross(rel[j], rel[j + 1])) / 6.0
    return float(volume)


def polyhedron_faces(poly: Polyhedron) -> List[np.ndarray]:
    return [poly.vertices[f] for f in poly.faces]


def clipped_volume(poly: Polyhedron, halfspaces: Sequence[Halfspace]) -> float:
    """
    Volume of a convex polyhedron intersected with a sequence of halfspaces.

    Args:
        poly: Convex polyhedron
        halfspaces: (normal, offset) pairs describing <x, normal> <= offset

    Returns:
        Volume of the intersection
    """
    faces = polyhedron_faces(poly)
    for normal, offset in halfspaces:
        faces = clip_polyhedron(faces, normal, offset)
        if not faces:
            return 0.0
    return max(face_list_volume(faces), 0.0)


def halfspace_fraction(poly: Polyhedron, normal: np.ndarray, offset: float) -> float:
    """Volume fraction of a convex polyhedron inside <x, normal> <= offset."""
    return clipped_volume(poly, [(np.asarray(normal, dtype=float), float(offset))]) / poly.volume
