#!/usr/bin/env python3
"""
Face-based truncation of polyhedral cells by a plane.

A plane is parametrized by its spherical angles (phi, theta), a signed
distance s and a spatially fixed base point x_base:

    n = [cos(phi) sin(theta), sin(phi) sin(theta), cos(theta)]
    level(x) = <x - x_base, n> - s

and the negative halfspace {level <= 0} defines the truncated volume.

The volume fraction is evaluated by summing over the faces of the cell,

    alpha = (3 |cell|)^-1 sum_f (B0_f + s B1_f) A_f,
    A_f   = 1/2 sum_m (C0_fm + s C1_fm) l_fm,

where A_f is the immersed area of face f and l_fm the immersed length of
its m-th edge. The coefficients only depend on the orientation, which
makes the derivatives with respect to s, phi and theta available in closed
form. All quantities are evaluated at once over the flattened edge arrays
of :class:`src.mesh.Polyhedron`.

The module also provides the independent Reynolds-transport form of the
gradient (an integral over the cut polygon) and the symmetric volume
difference of two planes.
"""

from dataclasses import dataclass, replace
from typing import List, Optional, Sequence, Tuple

import numpy as np

from .clipping import clip_polygon, clipped_volume, polygon_area
from .errors import DegenerateGeometryError
from .mesh import Polyhedron, classify_levels

try:
    from .config import ALPHA_ROUNDOFF_TOLERANCE, PARALLEL_TOLERANCE
except ImportError:
    PARALLEL_TOLERANCE = 1e-12
    ALPHA_ROUNDOFF_TOLERANCE = 1e-12

TWO_PI = 2.0 * np.pi


def angles_to_normal(phi: float, theta: float) -> np.ndarray:
    """Unit normal [cos(phi) sin(theta), sin(phi) sin(theta), cos(theta)]."""
    st = np.sin(theta)
    return np.array([np.cos(phi) * st, np.sin(phi) * st, np.cos(theta)])


def normal_to_angles(normal: Sequence[float]) -> Tuple[float, float]:
    """
    Spherical angles of a normal vector.

    Args:
        normal: Non-zero 3-vector (normalized internally)

    Returns:
        Tuple (phi, theta) with phi in [0, 2 pi) and theta in [0, pi];
        at the poles (theta in {0, pi}) phi is set to 0

    Raises:
        ValueError: If the vector is zero or not finite
    """
    n = np.asarray(normal, dtype=float)
    norm = np.linalg.norm(n)
    if not np.isfinite(norm) or norm == 0.0:
        raise ValueError(f"Cannot convert {n.tolist()} to spherical angles")
    n = n / norm
    rho = np.hypot(n[0], n[1])
    theta = float(np.arctan2(rho, n[2]))
    if rho == 0.0:
        return 0.0, theta
    phi = float(np.arctan2(n[1], n[0])) % TWO_PI
    if phi >= TWO_PI:
        phi = 0.0
    return phi, theta


def normal_derivatives(phi: float, theta: float) -> np.ndarray:
    """Derivatives of the normal with respect to (phi, theta), shape (2, 3)."""
    sp, cp = np.sin(phi), np.cos(phi)
    st, ct = np.sin(theta), np.cos(theta)
    return np.array([
        [-sp * st, cp * st, 0.0],
        [cp * ct, sp * ct, -st],
    ])


@dataclass(frozen=True, eq=False)
class Plane:
    """
    Candidate PLIC plane.

    Attributes:
        phi: Azimuthal angle of the normal (radians)
        theta: Polar angle of the normal (radians)
        s: Signed distance from the base point along the normal
        x_base: Spatially fixed reference point
    """

    phi: float
    theta: float
    s: float
    x_base: np.ndarray

    def __post_init__(self):
        x_base = np.asarray(self.x_base, dtype=float)
        if x_base.shape != (3,):
            raise ValueError(f"x_base must be a 3D point, got shape {x_base.shape}")
        values = (self.phi, self.theta, self.s)
        if not (np.all(np.isfinite(x_base)) and np.all(np.isfinite(values))):
            raise ValueError(f"Plane parameters must be finite, got {values} and {x_base.tolist()}")
        object.__setattr__(self, "phi", float(self.phi))
        object.__setattr__(self, "theta", float(self.theta))
        object.__setattr__(self, "s", float(self.s))
        object.__setattr__(self, "x_base", x_base)

    @classmethod
    def from_normal(cls, normal: Sequence[float], s: float = 0.0,
                    x_base: Sequence[float] = (0.0, 0.0, 0.0)) -> "Plane":
        phi, theta = normal_to_angles(normal)
        return cls(phi, theta, s, np.asarray(x_base, dtype=float))

    @property
    def normal(self) -> np.ndarray:
        return angles_to_normal(self.phi, self.theta)

    @property
    def angles(self) -> Tuple[float, float]:
        return self.phi, self.theta

    @property
    def offset(self) -> float:
        """Offset c of the halfspace {<x, n> <= c}."""
        return self.s + float(self.x_base @ self.normal)

    def level(self, x: np.ndarray) -> np.ndarray:
        return (np.asarray(x, dtype=float) - self.x_base) @ self.normal - self.s

    def with_s(self, s: float) -> "Plane":
        return replace(self, s=float(s))

    def with_angles(self, phi: float, theta: float) -> "Plane":
        return replace(self, phi=float(phi), theta=float(theta))

    def inverted(self) -> "Plane":
        """The same point set with the opposite normal (halfspaces swapped)."""
        phi, theta = normal_to_angles(-self.normal)
        return Plane(phi, theta, -self.s, self.x_base)


@dataclass(frozen=True, eq=False)
class TruncationResult:
    """
    Result of truncating a cell by a plane.

    Attributes:
        alpha: Volume fraction of the cell inside the negative halfspace
        immersed_areas: Immersed area of every face
        volume: Cell volume
        grad: (d alpha/ds, d alpha/dphi, d alpha/dtheta), None if not requested
        degenerate: True if a nearly parallel face is partially immersed;
            its area comes from polygon clipping and its derivative is unreliable
    """

    alpha: float
    immersed_areas: np.ndarray
    volume: float
    grad: Optional[np.ndarray] = None
    degenerate: bool = False

    @property
    def interface_area(self) -> float:
        """Area of the plane segment inside the cell, d alpha/ds |cell|."""
        if self.grad is None:
            raise ValueError("Interface area requires a gradient evaluation")
        return float(self.grad[0] * self.volume)


@dataclass(frozen=True, eq=False)
class FaceCoefficients:
    """Orientation-dependent volume (B) and area (C) coefficients of a cell."""

    B0: np.ndarray
    B1: np.ndarray
    C0: np.ndarray
    C1: np.ndarray
    face_origins: np.ndarray
    parallel: np.ndarray


@dataclass(frozen=True, eq=False)
class CutPolygon:
    """Intersection of a plane with a cell."""

    area: float
    centroid: np.ndarray
    segments: List[Tuple[np.ndarray, np.ndarray]]

    @property
    def empty(self) -> bool:
        return not self.segments or self.area <= 0.0


@dataclass(frozen=True, eq=False)
class ReynoldsGradient:
    """Gradient (d/ds, d/dphi, d/dtheta) of alpha from the Reynolds-transport form."""

    grad: np.ndarray
    empty: bool


@dataclass(eq=False)
class _FaceSums:
    alpha: float
    areas: np.ndarray
    dareas_ds: np.ndarray
    B0: np.ndarray
    B1: np.ndarray
    C1: np.ndarray
    dl_ds: np.ndarray
    parallel: np.ndarray
    degenerate: bool
    grad: Optional[np.ndarray] = None


def _face_sums(poly: Polyhedron, plane: Plane, status: Optional[np.ndarray] = None,
               with_angles: bool = False) -> _FaceSums:
    if not poly.volume > 0.0:
        raise DegenerateGeometryError(f"Cell volume {poly.volume:.3e} is not positive")

    n = plane.normal
    s = plane.s
    # coordinates relative to the base point
    rel = poly.vertices - plane.x_base
    lam = rel @ n - s
    if status is None:
        status = classify_levels(lam)

    ef, i0, i1 = poly.edge_face, poly.edge_start, poly.edge_end
    L = poly.edge_lengths
    a = poly.face_normals @ n
    denom = 1.0 - a * a
    parallel = denom < PARALLEL_TOLERANCE
    B0 = np.einsum("ij,ij->i", rel[poly.face_anchors], poly.face_normals)
    B1 = -a

    st0, st1 = status[i0], status[i1]
    crossing = (st0 * st1) == -1
    ell = np.where((st0 <= 0) & (st1 <= 0), L, 0.0)
    start_below = st0 < 0
    lam_m = np.where(start_below, lam[i0], lam[i1])
    lam_p = np.where(start_below, lam[i1], lam[i0])
    gap = np.where(crossing, lam_p - lam_m, 1.0)
    ell = np.where(crossing, -L * lam_m / gap, ell)
    dl_ds = np.where(crossing, L / gap, 0.0)

    edge_regular = ~parallel[ef]
    safe_denom = np.where(parallel, 1.0, denom)[ef]
    b = -(poly.conormals @ n)
    c = B0 * a
    C1 = np.where(edge_regular, b / safe_denom, 0.0)
    C0 = np.where(edge_regular, np.einsum("ij,ij->i", rel[i0], poly.conormals) - c[ef] * C1, 0.0)
    height = C0 + s * C1

    nf = poly.n_faces
    areas = 0.5 * np.bincount(ef, weights=height * ell, minlength=nf)
    dareas_ds = 0.5 * np.bincount(ef, weights=C1 * ell + height * dl_ds, minlength=nf)

    degenerate = False
    if np.any(parallel):
        n_above = poly.face_vertex_counts(status > 0)
        n_below = poly.face_vertex_counts(status < 0)
        for f in np.flatnonzero(parallel):
            dareas_ds[f] = 0.0
            if n_above[f] == 0:
                areas[f] = poly.face_areas[f]
            elif n_below[f] == 0:
                areas[f] = 0.0
            else:
                degenerate = True
                clipped, _ = clip_polygon(poly.vertices[poly.faces[f]], n, plane.offset)
                areas[f] = polygon_area(clipped)

    weight = B0 + s * B1
    scale = 1.0 / (3.0 * poly.volume)
    alpha = float(weight @ areas * scale)
    sums = _FaceSums(alpha, areas, dareas_ds, B0, B1, C1, dl_ds, parallel, degenerate)

    if with_angles:
        grad = np.empty(3)
        grad[0] = (B1 @ areas + weight @ dareas_ds) * scale
        dlam = rel @ normal_derivatives(plane.phi, plane.theta).T
        for i, dn in enumerate(normal_derivatives(plane.phi, plane.theta), start=1):
            ai = poly.face_normals @ dn
            bi = -(poly.conormals @ dn)
            ci = B0 * ai
            dC1 = np.where(
                edge_regular,
                bi / safe_denom + 2.0 * b * a[ef] * ai[ef] / safe_denom ** 2,
                0.0,
            )
            dC0 = np.where(edge_regular, -(ci[ef] * C1 + c[ef] * dC1), 0.0)
            dlam_m = np.where(start_below, dlam[i0, i - 1], dlam[i1, i - 1])
            dlam_p = np.where(start_below, dlam[i1, i - 1], dlam[i0, i - 1])
            dl = np.where(crossing, L * (lam_m * dlam_p - lam_p * dlam_m) / gap ** 2, 0.0)
            dareas = 0.5 * np.bincount(ef, weights=(dC0 + s * dC1) * ell + height * dl, minlength=nf)
            dareas[parallel] = 0.0
            grad[i] = (-s * ai @ areas + weight @ dareas) * scale
        sums.grad = grad
    return sums


def _checked_alpha(alpha: float) -> float:
    if alpha < -ALPHA_ROUNDOFF_TOLERANCE or alpha > 1.0 + ALPHA_ROUNDOFF_TOLERANCE:
        raise DegenerateGeometryError(f"Truncated volume fraction {alpha!r} is outside [0, 1]")
    return min(max(alpha, 0.0), 1.0)


def truncate(poly: Polyhedron, plane: Plane) -> TruncationResult:
    """
    Volume fraction and immersed face areas of a cell truncated by a plane.

    Args:
        poly: The cell
        plane: The truncating plane

    Returns:
        TruncationResult without gradient

    Raises:
        DegenerateGeometryError: If the cell has no volume or the result
            leaves [0, 1] by more than roundoff
    """
    sums = _face_sums(poly, plane)
    return TruncationResult(
        alpha=_checked_alpha(sums.alpha),
        immersed_areas=sums.areas,
        volume=poly.volume,
        degenerate=sums.degenerate,
    )


def truncate_with_gradient(poly: Polyhedron, plane: Plane) -> TruncationResult:
    """
    Volume fraction of a truncated cell together with its analytic gradient.

    The gradient (d alpha/ds, d alpha/dphi, d alpha/dtheta) follows from
    differentiating the face sums; the coefficient derivatives only need
    <n_f, dn>, <N_fm, dn> and the motion of the immersed edge endpoints.

    Args:
        poly: The cell
        plane: The truncating plane (must not contain a face of the cell)

    Returns:
        TruncationResult with ``grad`` set; ``degenerate`` flags a partially
        immersed, nearly parallel face

    Raises:
        DegenerateGeometryError: As for :func:`truncate`
    """
    sums = _face_sums(poly, plane, with_angles=True)
    return TruncationResult(
        alpha=_checked_alpha(sums.alpha),
        immersed_areas=sums.areas,
        volume=poly.volume,
        grad=sums.grad,
        degenerate=sums.degenerate,
    )


def face_coefficients(poly: Polyhedron, plane: Plane) -> FaceCoefficients:
    """
    Volume and area coefficients of a cell for a given plane orientation.

    Face origins are the points of the face plane closest to the base point
    that also lie on the plane; they are undefined (NaN) for faces parallel
    to the plane, whose C coefficients are reported as zero.
    """
    n = plane.normal
    rel = poly.vertices - plane.x_base
    a = poly.face_normals @ n
    denom = 1.0 - a * a
    parallel = denom < PARALLEL_TOLERANCE
    safe = np.where(parallel, 1.0, denom)
    B0 = np.einsum("ij,ij->i", rel[poly.face_anchors], poly.face_normals)
    ef = poly.edge_face
    b = -(poly.conormals @ n)
    C1 = np.where(parallel[ef], 0.0, b / safe[ef])
    C0 = np.where(parallel[ef], 0.0, np.einsum("ij,ij->i", rel[poly.edge_start], poly.conormals)
                  - (B0 * a)[ef] * C1)
    mu = (B0 - a * plane.s) / safe
    nu = (plane.s - a * B0) / safe
    origins = plane.x_base + mu[:, None] * poly.face_normals + nu[:, None] * n
    origins[parallel] = np.nan
    return FaceCoefficients(B0=B0, B1=-a, C0=C0, C1=C1, face_origins=origins, parallel=parallel)


def vertex_distances(poly: Polyhedron, normal: np.ndarray, x_base: np.ndarray) -> np.ndarray:
    """Signed distances <x_v - x_base, n> of the cell vertices."""
    return (poly.vertices - x_base) @ normal


def bracket_polynomial(poly: Polyhedron, plane: Plane, below: np.ndarray) -> np.ndarray:
    """
    Taylor data of alpha(s) for a fixed partition of the vertices.

    Between two consecutive vertex distances the vertex statuses are fixed
    and alpha is a cubic polynomial in s. Given the partition (``below``
    marks the vertices on the negative side of the bracket), this returns
    the exact value and the first three s-derivatives of that cubic at
    ``plane.s``.

    Args:
        poly: The cell
        plane: Plane at the expansion point
        below: Boolean mask of the vertices below the bracket

    Returns:
        Array [alpha, alpha', alpha'', alpha''']
    """
    status = np.where(below, -1, 1).astype(np.int8)
    sums = _face_sums(poly, plane, status=status)
    s = plane.s
    weight = sums.B0 + s * sums.B1
    d2areas = np.bincount(poly.edge_face, weights=sums.C1 * sums.dl_ds, minlength=poly.n_faces)
    d2areas[sums.parallel] = 0.0
    scale = 1.0 / (3.0 * poly.volume)
    return np.array([
        sums.alpha,
        (sums.B1 @ sums.areas + weight @ sums.dareas_ds) * scale,
        (2.0 * sums.B1 @ sums.dareas_ds + weight @ d2areas) * scale,
        (sums.B1 @ d2areas) / poly.volume,
    ])


def cut_polygon(poly: Polyhedron, plane: Plane) -> CutPolygon:
    """
    Area and centroid of the intersection of a plane with a cell.

    Every face crossed by the plane contributes one or more boundary
    segments of the cut polygon, oriented counter-clockwise around the
    plane normal; area and centroid follow from a triangle fan over these
    segments, so non-convex cuts made of several loops are handled as well.
    """
    n = plane.normal
    lam = plane.level(poly.vertices)
    inside = lam < 0.0
    segments = []
    for face in poly.faces:
        crossings = []
        k = len(face)
        for j in range(k):
            va, vb = face[j], face[(j + 1) % k]
            if inside[va] != inside[vb]:
                t = lam[va] / (lam[va] - lam[vb])
                point = poly.vertices[va] + t * (poly.vertices[vb] - poly.vertices[va])
                crossings.append((bool(inside[va]), point))
        for i, (leaving, point) in enumerate(crossings):
            if leaving:
                entering_point = crossings[(i + 1) % len(crossings)][1]
                segments.append((entering_point, point))

    if not segments:
        return CutPolygon(0.0, plane.x_base + plane.s * n, [])
    origin = np.mean([p for seg in segments for p in seg], axis=0)
    area = 0.0
    moment = np.zeros(3)
    for q, p in segments:
        tri = 0.5 * np.dot(np.cross(q - origin, p - origin), n)
        area += tri
        moment += tri * (origin + q + p) / 3.0
    if area <= 0.0:
        return CutPolygon(0.0, origin, segments)
    return CutPolygon(float(area), moment / area, segments)


def reynolds_gradient(poly: Polyhedron, plane: Plane) -> ReynoldsGradient:
    """
    Gradient of alpha from the Reynolds transport theorem.

    The rate of change of the truncated volume is the flux of the plane's
    motion through the cut polygon. For the affine motion of the plane the
    integral reduces to the polygon area A and centroid c:

        d alpha/ds = A / |cell|,
        d alpha/di = -A <c - x_base, dn/di> / |cell|   for i in (phi, theta)

    Args:
        poly: The cell
        plane: A plane cutting the cell transversally

    Returns:
        ReynoldsGradient; a plane missing the cell yields a zero gradient
        with ``empty`` set
    """
    cut = cut_polygon(poly, plane)
    if cut.empty:
        return ReynoldsGradient(grad=np.zeros(3), empty=True)
    dn = normal_derivatives(plane.phi, plane.theta)
    lever = cut.centroid - plane.x_base
    scale = cut.area / poly.volume
    return ReynoldsGradient(
        grad=np.array([scale, -scale * lever @ dn[0], -scale * lever @ dn[1]]),
        empty=False,
    )


def symmetric_volume_difference(poly: Polyhedron, plane1: Plane, plane2: Plane) -> float:
    """
    Volume of the cell on which two planes disagree about the halfspace.

    Computes |cell & H1+ & H2-| + |cell & H2+ & H1-| by sequential clipping
    of the (convex) cell.
    """
    n1, c1 = plane1.normal, plane1.offset
    n2, c2 = plane2.normal, plane2.offset
    first = clipped_volume(poly, [(n2, c2), (-n1, -c1)])
    second = clipped_volume(poly, [(n1, c1), (-n2, -c2)])
    return first + second
