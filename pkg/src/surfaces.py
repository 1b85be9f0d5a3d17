#!/usr/bin/env python3
"""
Benchmark hypersurfaces and volume fraction initialization.

Hypersurfaces are given as level sets, negative inside:

- halfspace:        <x - x_ref, n_ref>
- sphere:           |x - x0| - R0
- ellipsoid:        sum_i ((x - x0)_i / a_i)^2 - 1
- perturbed sphere: r - R(phi, theta), R^3 = sum_lm c_lm Y_lm(phi, theta)

The perturbed sphere uses tesseral harmonics (see :mod:`src.harmonics`),
so that its enclosed volume is c_00 sqrt(4 pi) / 3 regardless of the
perturbation.

Volume fractions are initialized by classifying every cell through the
signs of the level set at its vertices, face centroids and centroid.
Intersected cells are split into tetrahedra, refined uniformly to the
requested depth, and every leaf contributes the exact volume fraction of
the linear interpolant of the level set. Halfspaces are evaluated with the
truncation kernel and are therefore exact.
"""

import csv
import json
import logging
from abc import ABC, abstractmethod
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Callable, Dict, List, Mapping, Optional, Sequence, Union

import numpy as np

from .harmonics import expand, harmonic_count, harmonic_index
from .mesh import Mesh
from .truncation import Plane, truncate

try:
    from .config import (
        DEFAULT_SUBDIVISION_DEPTH,
        FIELD_CSV_COLUMNS,
        HALFSPACE_BASE_POINT,
        HALFSPACE_NORMAL,
        OBLATE_SEMIAXES,
        PROLATE_SEMIAXES,
        SPHERE_RADIUS,
        VOF_TOLERANCE,
    )
except ImportError:
    DEFAULT_SUBDIVISION_DEPTH = 3
    FIELD_CSV_COLUMNS = ("cell_id", "alpha", "nx", "ny", "nz")
    HALFSPACE_BASE_POINT = (0.4534, 0.5442, 0.4330)
    HALFSPACE_NORMAL = tuple(np.array([1.0, -3.0, 6.0]) / np.sqrt(46.0))
    OBLATE_SEMIAXES = (0.8, 0.8, 0.4)
    PROLATE_SEMIAXES = (0.25, 0.5, 0.75)
    SPHERE_RADIUS = 0.8
    VOF_TOLERANCE = 1e-9

logger = logging.getLogger(__name__)

CLOSEST_POINT_TOLERANCE = 1e-14
CLOSEST_POINT_MAX_STEPS = 50
# Cells per batch of the subdivision quadrature
SUBDIVISION_BATCH = 64


class Hypersurface(ABC):
    """A surface given as the zero level set of a function, negative inside."""

    closed = True

    @abstractmethod
    def level_set(self, x: np.ndarray) -> np.ndarray:
        """Level-set value(s) at point(s) of shape (..., 3)."""

    @abstractmethod
    def gradient(self, x: np.ndarray) -> np.ndarray:
        """Level-set gradient(s) at point(s) of shape (..., 3)."""

    @abstractmethod
    def enclosed_volume(self) -> float:
        """Volume of the interior."""

    @abstractmethod
    def to_mapping(self) -> Dict[str, Any]:
        """JSON-compatible description, inverse of :func:`surface_from_mapping`."""

    def exact_normal(self, x: np.ndarray) -> np.ndarray:
        """Unit outward normal(s), the normalized level-set gradient."""
        g = self.gradient(x)
        norm = np.linalg.norm(g, axis=-1, keepdims=True)
        if np.any(norm == 0.0):
            raise ValueError("Level-set gradient vanishes; the normal is undefined")
        return g / norm


@dataclass(frozen=True, eq=False)
class Halfspace(Hypersurface):
    """Planar interface through ``base_point`` with unit normal ``normal``."""

    base_point: np.ndarray = field(default_factory=lambda: np.array(HALFSPACE_BASE_POINT))
    normal: np.ndarray = field(default_factory=lambda: np.array(HALFSPACE_NORMAL))
    closed = False

    def __post_init__(self):
        n = np.asarray(self.normal, dtype=float)
        norm = np.linalg.norm(n)
        if norm == 0.0:
            raise ValueError("Halfspace normal must be non-zero")
        object.__setattr__(self, "normal", n / norm)
        object.__setattr__(self, "base_point", np.asarray(self.base_point, dtype=float))

    def level_set(self, x):
        return (np.asarray(x, dtype=float) - self.base_point) @ self.normal

    def gradient(self, x):
        x = np.asarray(x, dtype=float)
        return np.broadcast_to(self.normal, x.shape).copy()

    def enclosed_volume(self) -> float:
        raise ValueError("A halfspace is unbounded and encloses no finite volume")

    def plane(self) -> Plane:
        return Plane.from_normal(self.normal, 0.0, self.base_point)

    def to_mapping(self):
        return {"type": "halfspace", "base_point": self.base_point.tolist(),
                "normal": self.normal.tolist()}


@dataclass(frozen=True, eq=False)
class Sphere(Hypersurface):
    center: np.ndarray = field(default_factory=lambda: np.zeros(3))
    radius: float = SPHERE_RADIUS

    def __post_init__(self):
        if not self.radius > 0.0:
            raise ValueError(f"Sphere radius must be positive, got {self.radius}")
        object.__setattr__(self, "center", np.asarray(self.center, dtype=float))

    def level_set(self, x):
        return np.linalg.norm(np.asarray(x, dtype=float) - self.center, axis=-1) - self.radius

    def gradient(self, x):
        rel = np.asarray(x, dtype=float) - self.center
        r = np.linalg.norm(rel, axis=-1, keepdims=True)
        with np.errstate(invalid="ignore", divide="ignore"):
            return np.where(r > 0.0, rel / r, 0.0)

    def enclosed_volume(self) -> float:
        return 4.0 * np.pi * self.radius ** 3 / 3.0

    def to_mapping(self):
        return {"type": "sphere", "center": self.center.tolist(), "radius": self.radius}


@dataclass(frozen=True, eq=False)
class Ellipsoid(Hypersurface):
    center: np.ndarray = field(default_factory=lambda: np.zeros(3))
    semiaxes: np.ndarray = field(default_factory=lambda: np.array(OBLATE_SEMIAXES))

    def __post_init__(self):
        axes = np.asarray(self.semiaxes, dtype=float)
        if axes.shape != (3,) or np.any(axes <= 0.0):
            raise ValueError(f"Ellipsoid semiaxes must be three positive values, got {axes.tolist()}")
        object.__setattr__(self, "semiaxes", axes)
        object.__setattr__(self, "center", np.asarray(self.center, dtype=float))

    def level_set(self, x):
        rel = (np.asarray(x, dtype=float) - self.center) / self.semiaxes
        return np.sum(rel * rel, axis=-1) - 1.0

    def gradient(self, x):
        return 2.0 * (np.asarray(x, dtype=float) - self.center) / self.semiaxes ** 2

    def enclosed_volume(self) -> float:
        return 4.0 * np.pi * float(np.prod(self.semiaxes)) / 3.0

    def to_mapping(self):
        return {"type": "ellipsoid", "center": self.center.tolist(),
                "semiaxes": self.semiaxes.tolist()}


@dataclass(frozen=True, eq=False)
class PerturbedSphere(Hypersurface):
    """
    Sphere whose cubed radius is perturbed by tesseral harmonics.

    Attributes:
        center: Sphere center x0
        coefficients: c_lm ordered by harmonic_index, length (L+1)^2
        seed: Seed the coefficients were drawn with (informational)
        variance: Perturbation parameter sigma0 (informational)
    """

    center: np.ndarray
    coefficients: np.ndarray
    seed: Optional[int] = None
    variance: Optional[float] = None

    def __post_init__(self):
        coefficients = np.asarray(self.coefficients, dtype=float)
        degree = int(round(np.sqrt(len(coefficients)))) - 1
        if degree < 0 or harmonic_count(degree) != len(coefficients):
            raise ValueError(f"Coefficient count {len(coefficients)} is not (L+1)^2")
        object.__setattr__(self, "coefficients", coefficients)
        object.__setattr__(self, "center", np.asarray(self.center, dtype=float))

    @property
    def degree(self) -> int:
        return int(round(np.sqrt(len(self.coefficients)))) - 1

    @property
    def base_radius(self) -> float:
        return float((self.coefficients[0] / np.sqrt(4.0 * np.pi)) ** (1.0 / 3.0))

    def _spherical(self, x):
        rel = np.asarray(x, dtype=float) - self.center
        r = np.linalg.norm(rel, axis=-1)
        if np.any(r == 0.0):
            raise ValueError("The perturbed-sphere level set is undefined at its center")
        theta = np.arctan2(np.hypot(rel[..., 0], rel[..., 1]), rel[..., 2])
        phi = np.arctan2(rel[..., 1], rel[..., 0])
        return r, phi, theta

    def radius_cubed(self, phi, theta):
        return expand(self.coefficients, phi, theta)

    def radius(self, phi, theta):
        return np.cbrt(self.radius_cubed(phi, theta))

    def level_set(self, x):
        r, phi, theta = self._spherical(x)
        return r - self.radius(phi, theta)

    def gradient(self, x):
        r, phi, theta = self._spherical(x)
        cubed, dphi, dtheta = expand(self.coefficients, phi, theta, derivatives=True)
        radius = np.cbrt(cubed)
        # dR = dF / (3 R^2)
        dr_dphi = dphi / (3.0 * radius ** 2)
        dr_dtheta = dtheta / (3.0 * radius ** 2)
        st, ct = np.sin(theta), np.cos(theta)
        sp, cp = np.sin(phi), np.cos(phi)
        e_r = np.stack([st * cp, st * sp, ct], axis=-1)
        e_theta = np.stack([ct * cp, ct * sp, -st], axis=-1)
        e_phi = np.stack([-sp, cp, np.zeros_like(sp)], axis=-1)
        with np.errstate(invalid="ignore", divide="ignore"):
            azimuthal = np.where(st > 0.0, dr_dphi / (r * st), 0.0)
        return e_r - (dr_dtheta / r)[..., None] * e_theta - azimuthal[..., None] * e_phi

    def enclosed_volume(self) -> float:
        return float(self.coefficients[0] * np.sqrt(4.0 * np.pi) / 3.0)

    def min_radius_cubed(self, n_phi: int = 720, n_theta: int = 360) -> float:
        """Minimum of R^3 over an equidistant angular sample of the sphere."""
        phi = (np.arange(n_phi) + 0.5) * 2.0 * np.pi / n_phi
        theta = (np.arange(n_theta) + 0.5) * np.pi / n_theta
        pp, tt = np.meshgrid(phi, theta, indexing="ij")
        return float(self.radius_cubed(pp, tt).min())

    def to_mapping(self):
        mapping = {"type": "perturbed_sphere", "center": self.center.tolist(),
                   "coefficients": self.coefficients.tolist()}
        if self.seed is not None:
            mapping["seed"] = self.seed
        if self.variance is not None:
            mapping["variance"] = self.variance
        return mapping


def perturbed_sphere_coeffs(radius: float, degree: int, variance: float, seed: int) -> np.ndarray:
    """
    Draw the harmonic coefficients of a perturbed sphere.

    c_00 = sqrt(4 pi) R0^3 fixes the enclosed volume; every other coefficient
    is sqrt(sigma0) sqrt(-2 log g1) cos(2 pi g2) with g1, g2 uniform on (0, 1],
    drawn from NumPy's PCG64 generator seeded with ``seed``.

    Args:
        radius: Base radius R0
        degree: Maximum degree L
        variance: Perturbation parameter sigma0
        seed: Generator seed

    Returns:
        Coefficient vector of length (L+1)^2

    Raises:
        ValueError: If the degree or variance is negative
    """
    if degree < 0:
        raise ValueError(f"Degree must be non-negative, got {degree}")
    if variance < 0.0:
        raise ValueError(f"Variance must be non-negative, got {variance}")
    rng = np.random.default_rng(seed)
    coefficients = np.zeros(harmonic_count(degree))
    coefficients[0] = np.sqrt(4.0 * np.pi) * radius ** 3
    amplitude = np.sqrt(variance)
    for l in range(1, degree + 1):
        for m in range(-l, l + 1):
            g1 = 1.0 - rng.random()
            g2 = rng.random()
            coefficients[harmonic_index(l, m)] = (
                amplitude * np.sqrt(-2.0 * np.log(g1)) * np.cos(2.0 * np.pi * g2)
            )
    return coefficients


def perturbed_sphere(radius: float = SPHERE_RADIUS, degree: int = 6, variance: float = 5e-4,
                     seed: int = 0, center: Sequence[float] = (0.0, 0.0, 0.0)) -> PerturbedSphere:
    """
    Build a randomly perturbed sphere.

    Raises:
        ValueError: If the drawn perturbation makes R^3 non-positive somewhere
    """
    surface = PerturbedSphere(
        center=np.asarray(center, dtype=float),
        coefficients=perturbed_sphere_coeffs(radius, degree, variance, seed),
        seed=seed,
        variance=variance,
    )
    if surface.min_radius_cubed(180, 90) <= 0.0:
        raise ValueError(f"Perturbation (variance={variance}, seed={seed}) yields a non-positive radius")
    return surface


def level_set(surface: Hypersurface, x: np.ndarray) -> np.ndarray:
    return surface.level_set(x)


def exact_normal(surface: Hypersurface, x: np.ndarray) -> np.ndarray:
    return surface.exact_normal(x)


def enclosed_volume(surface: Hypersurface) -> float:
    return surface.enclosed_volume()


def closest_point(surface: Hypersurface, x: np.ndarray) -> np.ndarray:
    """
    Project point(s) onto the surface along the level-set gradient.

    Newton steps x <- x - f(x) grad f / |grad f|^2 are repeated until the
    level set vanishes to 1e-14; exact in one step for spheres and halfspaces.

    Raises:
        ValueError: If the gradient vanishes at an iterate
    """
    x = np.array(x, dtype=float)
    for _ in range(CLOSEST_POINT_MAX_STEPS):
        f = surface.level_set(x)
        if np.all(np.abs(f) <= CLOSEST_POINT_TOLERANCE):
            break
        g = surface.gradient(x)
        g2 = np.sum(g * g, axis=-1)
        if np.any(g2 == 0.0):
            raise ValueError("Level-set gradient vanishes during the closest-point projection")
        x = x - (f / g2)[..., None] * g
    return x


def tet_negative_fraction(values: np.ndarray) -> np.ndarray:
    """
    Volume fraction of tetrahedra where a linear function is negative.

    Args:
        values: Function values at the four vertices, shape (..., 4)

    Returns:
        Fractions in [0, 1], shape (...)
    """
    v = np.sort(np.asarray(values, dtype=float), axis=-1)
    v0, v1, v2, v3 = v[..., 0], v[..., 1], v[..., 2], v[..., 3]
    result = np.where(v3 <= 0.0, 1.0, 0.0)
    with np.errstate(divide="ignore", invalid="ignore"):
        one = v0 ** 3 / ((v0 - v1) * (v0 - v2) * (v0 - v3))
        three = 1.0 - v3 ** 3 / ((v3 - v0) * (v3 - v1) * (v3 - v2))
        a, b, c, d = -v0, -v1, v2, v3
        two = (a * a * b * b + a * b * (a + b) * (c + d) + c * d * (a * a + a * b + b * b)) / (
            (a + c) * (a + d) * (b + c) * (b + d)
        )
    result = np.where((v0 < 0.0) & (v1 >= 0.0), one, result)
    result = np.where((v1 < 0.0) & (v2 >= 0.0), two, result)
    result = np.where((v2 < 0.0) & (v3 > 0.0), three, result)
    return np.clip(result, 0.0, 1.0)


# Uniform (red) refinement of a tetrahedron into eight children of equal volume,
# over the points v0..v3, m01, m02, m03, m12, m13, m23
_RED_CHILDREN = np.array([
    [0, 4, 5, 6], [4, 1, 7, 8], [5, 7, 2, 9], [6, 8, 9, 3],
    [4, 5, 6, 8], [4, 5, 7, 8], [5, 6, 8, 9], [5, 7, 8, 9],
])
_EDGE_PAIRS = np.array([[0, 1], [0, 2], [0, 3], [1, 2], [1, 3], [2, 3]])


def _refine(tets: np.ndarray) -> np.ndarray:
    mids = 0.5 * (tets[:, _EDGE_PAIRS[:, 0]] + tets[:, _EDGE_PAIRS[:, 1]])
    points = np.concatenate([tets, mids], axis=1)
    return points[:, _RED_CHILDREN].reshape(-1, 4, 3)


def _cell_tets(mesh: Mesh, k: int) -> np.ndarray:
    """Centroid-fan decomposition of a cell into tetrahedra, shape (t, 4, 3)."""
    centroid = mesh.cell_centroids[k]
    tets = []
    for f, w in mesh.cell_faces[k]:
        fv = mesh.face_vertices[f] if w == 1 else mesh.face_vertices[f][::-1]
        pts = mesh.vertices[list(fv)]
        for j in range(1, len(fv) - 1):
            tets.append([centroid, pts[0], pts[j], pts[j + 1]])
    return np.array(tets)


def _subdivision_fractions(mesh: Mesh, surface: Hypersurface, cells: Sequence[int],
                           depth: int) -> np.ndarray:
    fractions = np.empty(len(cells))
    for start in range(0, len(cells), SUBDIVISION_BATCH):
        batch = cells[start:start + SUBDIVISION_BATCH]
        tets, owners, volumes = [], [], []
        for i, k in enumerate(batch):
            cell_tets = _cell_tets(mesh, k)
            rel = cell_tets[:, 1:] - cell_tets[:, :1]
            volumes.append(np.abs(np.einsum("ij,ij->i", rel[:, 0], np.cross(rel[:, 1], rel[:, 2]))) / 6.0)
            tets.append(cell_tets)
            owners.append(np.full(len(cell_tets), i))
        tets = np.concatenate(tets)
        owners = np.concatenate(owners)
        volumes = np.concatenate(volumes)
        for _ in range(depth):
            tets = _refine(tets)
        leaves = 8 ** depth
        values = surface.level_set(tets.reshape(-1, 3)).reshape(-1, 4)
        leaf_fraction = tet_negative_fraction(values).reshape(-1, leaves).mean(axis=1)
        inside = np.bincount(owners, weights=leaf_fraction * volumes, minlength=len(batch))
        total = np.bincount(owners, weights=volumes, minlength=len(batch))
        fractions[start:start + len(batch)] = inside / total
    return fractions


@dataclass(eq=False)
class VolumeFractionField:
    """
    Per-cell volume fractions with reference normals.

    Attributes:
        alpha: Volume fraction of every cell
        normals: Reference unit normals, NaN rows for cells without one
        eps_alpha: Interface band tolerance
    """

    alpha: np.ndarray
    normals: np.ndarray
    eps_alpha: float = VOF_TOLERANCE

    def __post_init__(self):
        self.alpha = np.asarray(self.alpha, dtype=float)
        self.normals = np.asarray(self.normals, dtype=float)
        if self.normals.shape != (len(self.alpha), 3):
            raise ValueError(
                f"Normals must have shape ({len(self.alpha)}, 3), got {self.normals.shape}"
            )
        if np.any((self.alpha < 0.0) | (self.alpha > 1.0)):
            raise ValueError("Volume fractions must lie in [0, 1]")

    def __len__(self) -> int:
        return len(self.alpha)

    @classmethod
    def from_alpha(cls, alpha: Sequence[float], eps_alpha: float = VOF_TOLERANCE) -> "VolumeFractionField":
        alpha = np.asarray(alpha, dtype=float)
        return cls(alpha, np.full((len(alpha), 3), np.nan), eps_alpha)

    def is_intersected(self, k: int) -> bool:
        return self.eps_alpha <= self.alpha[k] <= 1.0 - self.eps_alpha

    def has_normal(self, k: int) -> bool:
        return bool(np.all(np.isfinite(self.normals[k])))

    def to_csv(self, path: Union[str, Path], header: Optional[List[str]] = None) -> None:
        """Write (cell_id, alpha, nx, ny, nz) rows, preceded by optional '#' comment lines."""
        with open(path, "w", encoding="utf-8", newline="") as f:
            for line in header or []:
                f.write(f"# {line}\n")
            writer = csv.writer(f)
            writer.writerow(FIELD_CSV_COLUMNS)
            for k, (a, n) in enumerate(zip(self.alpha, self.normals)):
                writer.writerow([k, repr(float(a))] + [repr(float(c)) for c in n])

    @classmethod
    def from_csv(cls, path: Union[str, Path], eps_alpha: float = VOF_TOLERANCE) -> "VolumeFractionField":
        with open(path, "r", encoding="utf-8", newline="") as f:
            rows = [row for row in csv.reader(line for line in f if not line.startswith("#"))]
        if not rows or tuple(rows[0]) != FIELD_CSV_COLUMNS:
            raise ValueError(f"{path} is not a volume fraction CSV (expected columns {FIELD_CSV_COLUMNS})")
        data = sorted((int(r[0]), [float(v) for v in r[1:]]) for r in rows[1:])
        if [k for k, _ in data] != list(range(len(data))):
            raise ValueError(f"{path} does not list every cell exactly once")
        values = np.array([v for _, v in data]).reshape(-1, 4)
        return cls(values[:, 0], values[:, 1:], eps_alpha)

    def to_json(self, path: Union[str, Path]) -> None:
        data = {
            "eps_alpha": self.eps_alpha,
            "alpha": self.alpha.tolist(),
            "normals": [None if not np.all(np.isfinite(n)) else n.tolist() for n in self.normals],
        }
        with open(path, "w", encoding="utf-8") as f:
            json.dump(data, f)


def init_volume_fractions(mesh: Mesh, surface: Hypersurface, depth: int = DEFAULT_SUBDIVISION_DEPTH,
                          eps_alpha: float = VOF_TOLERANCE,
                          progress_callback: Optional[Callable[[int, int], None]] = None
                          ) -> VolumeFractionField:
    """
    Initialize per-cell volume fractions and reference normals.

    Args:
        mesh: The mesh
        surface: Halfspace or closed hypersurface
        depth: Uniform refinement depth of the tetrahedral quadrature
        eps_alpha: Interface band tolerance of the resulting field
        progress_callback: Optional callback(current, total) over intersected cells

    Returns:
        VolumeFractionField; reference normals are set on intersected cells
        as the exact normal at the closest surface point of the cell centroid

    Raises:
        ValueError: If depth is negative
    """
    if depth < 0:
        raise ValueError(f"Subdivision depth must be non-negative, got {depth}")
    n_cells = mesh.n_cells
    normals = np.full((n_cells, 3), np.nan)

    if isinstance(surface, Halfspace):
        plane = surface.plane()
        alpha = np.array([truncate(mesh.polyhedron(k), plane).alpha for k in range(n_cells)])
        band = (alpha >= eps_alpha) & (alpha <= 1.0 - eps_alpha)
        normals[band] = surface.normal
        logger.info("Initialized halfspace fractions: %d interface cells", int(band.sum()))
        return VolumeFractionField(alpha, normals, eps_alpha)

    vertex_sign = surface.level_set(mesh.vertices) < 0.0
    face_sign = surface.level_set(mesh.face_centroids) < 0.0
    centroid_sign = surface.level_set(mesh.cell_centroids) < 0.0
    alpha = np.zeros(n_cells)
    cut = []
    for k in range(n_cells):
        signs = [centroid_sign[k]]
        signs.extend(vertex_sign[list(mesh.cell_vertices[k])])
        signs.extend(face_sign[[f for f, _ in mesh.cell_faces[k]]])
        if all(signs):
            alpha[k] = 1.0
        elif any(signs):
            cut.append(k)

    total = len(cut)
    logger.info("Subdividing %d cut cells (depth %d)", total, depth)
    for start in range(0, total, SUBDIVISION_BATCH):
        batch = cut[start:start + SUBDIVISION_BATCH]
        alpha[batch] = _subdivision_fractions(mesh, surface, batch, depth)
        if progress_callback:
            progress_callback(min(start + SUBDIVISION_BATCH, total), total)

    band = np.flatnonzero((alpha >= eps_alpha) & (alpha <= 1.0 - eps_alpha))
    if len(band):
        anchors = closest_point(surface, mesh.cell_centroids[band])
        normals[band] = surface.exact_normal(anchors)
    return VolumeFractionField(alpha, normals, eps_alpha)


def interface_cells(field: VolumeFractionField, eps_alpha: Optional[float] = None) -> List[int]:
    """Labels of the cells with eps_alpha <= alpha <= 1 - eps_alpha."""
    eps = field.eps_alpha if eps_alpha is None else eps_alpha
    return np.flatnonzero((field.alpha >= eps) & (field.alpha <= 1.0 - eps)).tolist()


def surface_from_mapping(mapping: Mapping[str, Any]) -> Hypersurface:
    """
    Build a hypersurface from a JSON/YAML mapping.

    Supported types: ``halfspace`` (base_point, normal), ``sphere`` (center,
    radius), ``ellipsoid`` (center, semiaxes or preset "oblate"/"prolate"),
    ``perturbed_sphere`` (center, radius, degree, variance, seed, or explicit
    coefficients). Omitted values take the benchmark defaults.

    Raises:
        ValueError: If the type is unknown
    """
    kind = str(mapping.get("type", "")).lower()
    center = mapping.get("center", (0.0, 0.0, 0.0))
    if kind == "halfspace":
        return Halfspace(
            np.asarray(mapping.get("base_point", HALFSPACE_BASE_POINT), dtype=float),
            np.asarray(mapping.get("normal", HALFSPACE_NORMAL), dtype=float),
        )
    if kind == "sphere":
        return Sphere(np.asarray(center, dtype=float), float(mapping.get("radius", SPHERE_RADIUS)))
    if kind == "ellipsoid":
        presets = {"oblate": OBLATE_SEMIAXES, "prolate": PROLATE_SEMIAXES}
        if "preset" in mapping:
            preset = str(mapping["preset"]).lower()
            if preset not in presets:
                raise ValueError(f"Unknown ellipsoid preset '{preset}'. Use 'oblate' or 'prolate'")
            axes = presets[preset]
        else:
            axes = mapping.get("semiaxes", OBLATE_SEMIAXES)
        return Ellipsoid(np.asarray(center, dtype=float), np.asarray(axes, dtype=float))
    if kind == "perturbed_sphere":
        if "coefficients" in mapping:
            return PerturbedSphere(
                np.asarray(center, dtype=float),
                np.asarray(mapping["coefficients"], dtype=float),
                seed=mapping.get("seed"),
                variance=mapping.get("variance"),
            )
        return perturbed_sphere(
            radius=float(mapping.get("radius", SPHERE_RADIUS)),
            degree=int(mapping.get("degree", 6)),
            variance=float(mapping.get("variance", 5e-4)),
            seed=int(mapping.get("seed", 0)),
            center=center,
        )
    raise ValueError(
        f"Unknown surface type '{kind}'. "
        "Supported types: halfspace, sphere, ellipsoid, perturbed_sphere"
    )
