#!/usr/bin/env python3
"""
Unstructured polyhedral mesh module.

This module stores meshes as a list of vertices, a list of planar polygonal
faces and a list of cells, each cell being described by its boundary: a list
of face references with an orientation flag. A face is shared by at most two
cells; the first cell referencing it is its owner (flag +1) and the stored
face normal points out of the owner, the second cell is its neighbour and
sees the face with flag -1.

Meshes come from two sources:
1. Legacy ASCII VTK unstructured grids with tetrahedra and hexahedra
   (the format gmsh writes with ``-format vtk``)
2. Structured cuboid meshes generated on an axis-aligned box, optionally
   split into tetrahedra (Kuhn triangulation)

Besides the mesh itself, the module provides the cell neighbourhoods used as
reconstruction stencils and the topological classification of vertices and
edges with respect to a plane.
"""

import json
import logging
from dataclasses import dataclass
from functools import cached_property
from pathlib import Path
from typing import Dict, List, Optional, Sequence, Tuple, Union

import numpy as np

from .errors import InvalidCellError, MeshError, UnsupportedCellTypeError, VTKParseError

try:
    from .config import CLOSURE_TOLERANCE, PLANARITY_TOLERANCE, STENCIL_KINDS, ZERO_TOLERANCE
except ImportError:
    ZERO_TOLERANCE = 1e-14
    PLANARITY_TOLERANCE = 1e-12
    CLOSURE_TOLERANCE = 1e-10
    STENCIL_KINDS = ("face", "edge", "vertex")

logger = logging.getLogger(__name__)

# VTK cell types
VTK_VERTEX = 1
VTK_LINE = 3
VTK_TRIANGLE = 5
VTK_QUAD = 9
VTK_TETRA = 10
VTK_HEXAHEDRON = 12
LOWER_DIMENSIONAL_TYPES = {VTK_VERTEX, VTK_LINE, VTK_TRIANGLE, VTK_QUAD}

# Faces of the VTK reference cells, ordered counter-clockwise seen from outside
TETRA_FACES = ((0, 2, 1), (0, 1, 3), (1, 2, 3), (0, 3, 2))
HEXAHEDRON_FACES = (
    (0, 3, 2, 1), (4, 5, 6, 7),
    (0, 1, 5, 4), (1, 2, 6, 5),
    (2, 3, 7, 6), (3, 0, 4, 7),
)
CELL_FACES = {VTK_TETRA: TETRA_FACES, VTK_HEXAHEDRON: HEXAHEDRON_FACES}
CELL_SIZES = {VTK_TETRA: 4, VTK_HEXAHEDRON: 8}

# Edge status as a function of the statuses of its two vertices,
# indexed by 3 * (status_a + 1) + (status_b + 1)
EDGE_STATUS_TABLE = np.array([-1, -2, 0, -2, 3, 2, 0, 2, 1], dtype=np.int8)


@dataclass(frozen=True, eq=False)
class Face:
    """A planar polygonal face, ordered counter-clockwise w.r.t. its normal."""

    vertex_indices: Tuple[int, ...]
    unit_normal: np.ndarray
    area: float
    centroid: np.ndarray


@dataclass(frozen=True, eq=False)
class Cell:
    """A polyhedral cell described by its boundary faces and orientation flags."""

    face_refs: Tuple[Tuple[int, int], ...]
    volume: float
    centroid: np.ndarray
    vertex_indices: Tuple[int, ...]


@dataclass(frozen=True)
class Stencil:
    """
    A center cell together with its neighbouring cells.

    ``extension`` records whether the stencil was grown to reach a bulk cell:
    ``"none"`` for a plain neighbourhood, ``"extended"`` after a successful
    extension and ``"unavailable"`` when no bulk cell was reachable.
    """

    center_index: int
    member_indices: Tuple[int, ...]
    kind: str
    extension: str = "none"

    def __post_init__(self):
        if self.kind not in STENCIL_KINDS:
            raise ValueError(
                f"Unknown stencil kind '{self.kind}'. "
                f"Supported kinds: {', '.join(STENCIL_KINDS)}"
            )
        if not self.member_indices or self.member_indices[0] != self.center_index:
            raise ValueError("The center cell must be the first stencil member")

    def __len__(self) -> int:
        return len(self.member_indices)

    @property
    def neighbours(self) -> Tuple[int, ...]:
        return self.member_indices[1:]


class Polyhedron:
    """
    Outward-oriented geometric view of a single cell.

    Face vertex lists are ordered counter-clockwise with respect to the
    outward normals. The edges of all faces are flattened into arrays
    (``edge_face``, ``edge_start``, ``edge_end``) so that the geometry
    kernels can evaluate per-edge quantities at once and reduce them per
    face with ``np.bincount``.

    Attributes:
        vertices: Local vertex coordinates, shape (nv, 3)
        faces: Local vertex index arrays of the faces
        face_normals: Outward unit normals, shape (nf, 3)
        face_areas: Face areas, shape (nf,)
        face_anchors: Local index of the first vertex of every face
        volume: Cell volume
        centroid: Cell centroid
        edge_face: Face of every flattened edge
        edge_start: Local start vertex of every flattened edge
        edge_end: Local end vertex of every flattened edge
        conormals: Outward in-face unit co-normals of the edges, shape (ne, 3)
        edge_lengths: Edge lengths, shape (ne,)
    """

    def __init__(self, vertices: np.ndarray, faces: Sequence[Sequence[int]],
                 vertex_ids: Optional[Sequence[int]] = None):
        self.vertices = np.asarray(vertices, dtype=float)
        self.faces = tuple(np.asarray(f, dtype=np.intp) for f in faces)
        self.vertex_ids = None if vertex_ids is None else tuple(int(v) for v in vertex_ids)
        if len(self.faces) < 4:
            raise InvalidCellError(f"A polyhedron needs at least 4 faces, got {len(self.faces)}")

        normals, areas, centroids = [], [], []
        for face in self.faces:
            normal, area, centroid = polygon_geometry(self.vertices[face])
            normals.append(normal)
            areas.append(area)
            centroids.append(centroid)
        self.face_normals = np.array(normals)
        self.face_areas = np.array(areas)
        self.face_centroids = np.array(centroids)
        self.face_anchors = np.array([f[0] for f in self.faces], dtype=np.intp)

        self.edge_face = np.concatenate(
            [np.full(len(f), i, dtype=np.intp) for i, f in enumerate(self.faces)]
        )
        self.edge_start = np.concatenate(self.faces)
        self.edge_end = np.concatenate([np.roll(f, -1) for f in self.faces])
        edges = self.vertices[self.edge_end] - self.vertices[self.edge_start]
        self.edge_lengths = np.linalg.norm(edges, axis=1)
        conormals = np.cross(edges, self.face_normals[self.edge_face])
        norms = np.linalg.norm(conormals, axis=1)
        if np.any(norms <= 0.0):
            raise InvalidCellError("Polyhedron has a zero-length edge")
        self.conormals = conormals / norms[:, None]

        self.volume, self.centroid = _polyhedron_volume_centroid(self.vertices, self.faces)
        if not self.volume > 0.0:
            raise InvalidCellError(
                f"Polyhedron volume {self.volume:.3e} is not positive (inverted connectivity?)"
            )

    @property
    def n_faces(self) -> int:
        return len(self.faces)

    @property
    def surface_area(self) -> float:
        return float(self.face_areas.sum())

    def face_vertex_counts(self, mask: np.ndarray) -> np.ndarray:
        """Count, per face, the vertices selected by a boolean vertex mask."""
        return np.bincount(
            self.edge_face, weights=mask[self.edge_start].astype(float), minlength=self.n_faces
        )

    @classmethod
    def box(cls, lower: Sequence[float] = (0.0, 0.0, 0.0),
            upper: Sequence[float] = (1.0, 1.0, 1.0)) -> "Polyhedron":
        """Axis-aligned box as a hexahedron in VTK vertex order."""
        lo = np.asarray(lower, dtype=float)
        hi = np.asarray(upper, dtype=float)
        corners = np.array([
            [lo[0], lo[1], lo[2]], [hi[0], lo[1], lo[2]],
            [hi[0], hi[1], lo[2]], [lo[0], hi[1], lo[2]],
            [lo[0], lo[1], hi[2]], [hi[0], lo[1], hi[2]],
            [hi[0], hi[1], hi[2]], [lo[0], hi[1], hi[2]],
        ])
        return cls(corners, HEXAHEDRON_FACES)

    @classmethod
    def tetrahedron(cls, points: Sequence[Sequence[float]]) -> "Polyhedron":
        """Tetrahedron from four points, reordered to positive orientation if needed."""
        pts = np.asarray(points, dtype=float)
        if signed_tet_volume(*pts) < 0.0:
            pts = pts[[0, 2, 1, 3]]
        return cls(pts, TETRA_FACES)


def polygon_area_vector(points: np.ndarray) -> np.ndarray:
    """Area vector 1/2 sum (x_i x x_{i+1}) of a planar polygon, via a fan from its first vertex."""
    rel = points - points[0]
    return 0.5 * np.cross(rel[1:-1], rel[2:]).sum(axis=0)


def polygon_geometry(points: np.ndarray) -> Tuple[np.ndarray, float, np.ndarray]:
    """
    Compute the unit normal, area and centroid of a planar polygon.

    Args:
        points: Polygon vertices in order, shape (k, 3)

    Returns:
        Tuple of (unit normal, area, centroid)

    Raises:
        InvalidCellError: If the polygon has zero area
    """
    rel = points - points[0]
    tri = 0.5 * np.cross(rel[1:-1], rel[2:])
    area_vector = tri.sum(axis=0)
    area = float(np.linalg.norm(area_vector))
    if area <= 0.0:
        raise InvalidCellError("Face has zero area")
    normal = area_vector / area
    weights = tri @ normal
    tri_centroids = (rel[1:-1] + rel[2:]) / 3.0
    centroid = points[0] + weights @ tri_centroids / weights.sum()
    return normal, area, centroid


def signed_tet_volume(a: np.ndarray, b: np.ndarray, c: np.ndarray, d: np.ndarray) -> float:
    return float(np.dot(b - a, np.cross(c - a, d - a)) / 6.0)


def _polyhedron_volume_centroid(vertices: np.ndarray,
                                faces: Sequence[np.ndarray]) -> Tuple[float, np.ndarray]:
    ref = vertices.mean(axis=0)
    volume = 0.0
    moment = np.zeros(3)
    for face in faces:
        p = vertices[face] - ref
        for j in range(1, len(face) - 1):
            v = np.dot(p[0], np.cross(p[j], p[j + 1])) / 6.0
            volume += v
            moment += v * (p[0] + p[j] + p[j + 1]) / 4.0
    if volume == 0.0:
        return 0.0, ref
    return float(volume), ref + moment / volume


class Mesh:
    """
    Unstructured polyhedral mesh with shared, oriented planar faces.

    The mesh is immutable after construction; all queries are read-only.
    Geometry is stored in arrays (``face_normals``, ``cell_volumes``, ...);
    the :class:`Face` and :class:`Cell` records of the data model are built
    on demand.

    Args:
        vertices: Vertex coordinates, shape (nv, 3)
        face_vertices: Vertex index tuple of every face, ordered
            counter-clockwise w.r.t. the outward normal of the owner cell
        cell_faces: Face references (face index, orientation flag) of every cell

    Raises:
        MeshError: If a face index is invalid or a face is used by more than two cells
        InvalidCellError: If a face is not planar, a cell boundary is not closed
            or a cell volume is not positive
    """

    def __init__(self, vertices: np.ndarray, face_vertices: Sequence[Sequence[int]],
                 cell_faces: Sequence[Sequence[Tuple[int, int]]]):
        self.vertices = np.asarray(vertices, dtype=float)
        if self.vertices.ndim != 2 or self.vertices.shape[1] != 3:
            raise MeshError(f"Vertices must have shape (n, 3), got {self.vertices.shape}")
        self.face_vertices = [tuple(int(v) for v in fv) for fv in face_vertices]
        self.cell_faces = [tuple((int(f), int(w)) for f, w in refs) for refs in cell_faces]
        self._polyhedra: Dict[int, Polyhedron] = {}

        n_vertices = len(self.vertices)
        for f, fv in enumerate(self.face_vertices):
            if len(fv) < 3 or min(fv) < 0 or max(fv) >= n_vertices:
                raise MeshError(f"Face {f} has invalid vertex indices {fv}")

        self._build_face_cells()
        self._compute_face_geometry()
        self._compute_cell_geometry()
        logger.debug(
            "Built mesh with %d vertices, %d faces, %d cells",
            n_vertices, self.n_faces, self.n_cells,
        )

    @classmethod
    def from_cell_faces(cls, vertices: np.ndarray,
                        cell_faces: Sequence[Sequence[Sequence[int]]]) -> "Mesh":
        """
        Build a mesh from per-cell face vertex lists, merging shared faces.

        Faces are identified by their sorted vertex tuple. The first cell
        referencing a face becomes its owner (flag +1), the second its
        neighbour (flag -1).

        Args:
            vertices: Vertex coordinates, shape (nv, 3)
            cell_faces: For every cell, its faces as vertex index lists
                ordered counter-clockwise seen from outside the cell

        Returns:
            Mesh with deduplicated shared faces

        Raises:
            MeshError: If a face is referenced by more than two cells
        """
        face_index: Dict[Tuple[int, ...], int] = {}
        face_vertices: List[Tuple[int, ...]] = []
        owners: List[int] = []
        used = []
        refs_per_cell = []
        for k, faces in enumerate(cell_faces):
            refs = []
            for fv in faces:
                fv = tuple(int(v) for v in fv)
                key = tuple(sorted(fv))
                f = face_index.get(key)
                if f is None:
                    f = len(face_vertices)
                    face_index[key] = f
                    face_vertices.append(fv)
                    owners.append(k)
                    used.append(1)
                    refs.append((f, 1))
                else:
                    if used[f] >= 2 or owners[f] == k:
                        raise MeshError(f"Face {key} is referenced by more than two cells")
                    used[f] += 1
                    refs.append((f, -1))
            refs_per_cell.append(refs)
        return cls(vertices, face_vertices, refs_per_cell)

    def _build_face_cells(self):
        n_faces = len(self.face_vertices)
        self.face_owner = np.full(n_faces, -1, dtype=np.intp)
        self.face_neighbour = np.full(n_faces, -1, dtype=np.intp)
        for k, refs in enumerate(self.cell_faces):
            for f, w in refs:
                if not 0 <= f < n_faces:
                    raise MeshError(f"Cell {k} references invalid face {f}")
                if w == 1:
                    if self.face_owner[f] != -1:
                        raise MeshError(f"Face {f} has two owners")
                    self.face_owner[f] = k
                elif w == -1:
                    if self.face_neighbour[f] != -1:
                        raise MeshError(f"Face {f} is referenced by more than two cells")
                    self.face_neighbour[f] = k
                else:
                    raise MeshError(f"Orientation flag must be +1 or -1, got {w}")
        if np.any(self.face_owner < 0):
            raise MeshError("Every face needs an owner cell")

    def _compute_face_geometry(self):
        n_faces = len(self.face_vertices)
        self.face_area_vectors = np.zeros((n_faces, 3))
        self.face_centroids = np.zeros((n_faces, 3))
        sizes = np.array([len(fv) for fv in self.face_vertices])
        for size in np.unique(sizes):
            ids = np.flatnonzero(sizes == size)
            idx = np.array([self.face_vertices[f] for f in ids], dtype=np.intp)
            pts = self.vertices[idx]
            rel = pts - pts[:, :1, :]
            tri = 0.5 * np.cross(rel[:, 1:-1], rel[:, 2:])
            area_vec = tri.sum(axis=1)
            area = np.linalg.norm(area_vec, axis=1)
            if np.any(area <= 0.0):
                bad = ids[np.argmax(area <= 0.0)]
                raise InvalidCellError(f"Face {bad} has zero area")
            normal = area_vec / area[:, None]
            weights = np.einsum("ftk,fk->ft", tri, normal)
            tri_centroids = (rel[:, 1:-1] + rel[:, 2:]) / 3.0
            centroid = pts[:, 0] + np.einsum("ft,ftk->fk", weights, tri_centroids) / area[:, None]

            offsets = np.abs(np.einsum("fvk,fk->fv", pts - centroid[:, None, :], normal)).max(axis=1)
            diameter = np.linalg.norm(pts[:, :, None, :] - pts[:, None, :, :], axis=-1).max(axis=(1, 2))
            if np.any(offsets > PLANARITY_TOLERANCE * diameter):
                bad = ids[np.argmax(offsets > PLANARITY_TOLERANCE * diameter)]
                raise InvalidCellError(f"Face {bad} is not planar")

            self.face_area_vectors[ids] = area_vec
            self.face_centroids[ids] = centroid
        self.face_areas = np.linalg.norm(self.face_area_vectors, axis=1)
        self.face_normals = self.face_area_vectors / self.face_areas[:, None]

    def _compute_cell_geometry(self):
        n_cells = len(self.cell_faces)
        self.cell_vertices = [
            tuple(sorted({v for f, _ in refs for v in self.face_vertices[f]}))
            for refs in self.cell_faces
        ]
        ref_points = np.array([self.vertices[list(vs)].mean(axis=0) for vs in self.cell_vertices])

        # fan triangles of every (cell, face) reference, outward oriented
        tri_cell, tri_a, tri_b, tri_c = [], [], [], []
        for k, refs in enumerate(self.cell_faces):
            for f, w in refs:
                fv = self.face_vertices[f] if w == 1 else self.face_vertices[f][::-1]
                for j in range(1, len(fv) - 1):
                    tri_cell.append(k)
                    tri_a.append(fv[0])
                    tri_b.append(fv[j])
                    tri_c.append(fv[j + 1])
        tri_cell = np.array(tri_cell, dtype=np.intp)
        r = ref_points[tri_cell]
        a = self.vertices[tri_a] - r
        b = self.vertices[tri_b] - r
        c = self.vertices[tri_c] - r
        tet_volume = np.einsum("ij,ij->i", a, np.cross(b, c)) / 6.0
        tet_moment = tet_volume[:, None] * (a + b + c) / 4.0

        self.cell_volumes = np.bincount(tri_cell, weights=tet_volume, minlength=n_cells)
        if np.any(self.cell_volumes <= 0.0):
            bad = int(np.argmax(self.cell_volumes <= 0.0))
            raise InvalidCellError(
                f"Cell {bad} has non-positive volume {self.cell_volumes[bad]:.3e} "
                "(inverted connectivity?)"
            )
        moment = np.stack(
            [np.bincount(tri_cell, weights=tet_moment[:, i], minlength=n_cells) for i in range(3)],
            axis=1,
        )
        self.cell_centroids = ref_points + moment / self.cell_volumes[:, None]

        closure = np.zeros((n_cells, 3))
        surface = np.zeros(n_cells)
        for k, refs in enumerate(self.cell_faces):
            for f, w in refs:
                closure[k] += w * self.face_area_vectors[f]
                surface[k] += self.face_areas[f]
        residual = np.linalg.norm(closure, axis=1)
        if np.any(residual > CLOSURE_TOLERANCE * surface):
            bad = int(np.argmax(residual > CLOSURE_TOLERANCE * surface))
            raise InvalidCellError(f"Boundary of cell {bad} is not closed")

    @property
    def n_vertices(self) -> int:
        return len(self.vertices)

    @property
    def n_faces(self) -> int:
        return len(self.face_vertices)

    @property
    def n_cells(self) -> int:
        return len(self.cell_faces)

    @property
    def domain_bounds(self) -> Tuple[np.ndarray, np.ndarray]:
        return self.vertices.min(axis=0), self.vertices.max(axis=0)

    @property
    def domain_volume(self) -> float:
        """Volume enclosed by the boundary faces (divergence theorem)."""
        boundary = self.face_neighbour < 0
        return float(np.einsum(
            "ij,ij->", self.face_centroids[boundary], self.face_area_vectors[boundary]
        ) / 3.0)

    def face(self, f: int) -> Face:
        return Face(
            vertex_indices=self.face_vertices[f],
            unit_normal=self.face_normals[f],
            area=float(self.face_areas[f]),
            centroid=self.face_centroids[f],
        )

    def cell(self, k: int) -> Cell:
        return Cell(
            face_refs=self.cell_faces[k],
            volume=float(self.cell_volumes[k]),
            centroid=self.cell_centroids[k],
            vertex_indices=self.cell_vertices[k],
        )

    @property
    def faces(self) -> List[Face]:
        return [self.face(f) for f in range(self.n_faces)]

    @property
    def cells(self) -> List[Cell]:
        return [self.cell(k) for k in range(self.n_cells)]

    @cached_property
    def vertex_cells(self) -> List[Tuple[int, ...]]:
        """Cells containing each vertex, in ascending order."""
        incidence: List[List[int]] = [[] for _ in range(self.n_vertices)]
        for k, vs in enumerate(self.cell_vertices):
            for v in vs:
                incidence[v].append(k)
        return [tuple(cells) for cells in incidence]

    @property
    def face_cells(self) -> np.ndarray:
        """Owner/neighbour table of shape (n_faces, 2); boundary faces have neighbour -1."""
        return np.stack([self.face_owner, self.face_neighbour], axis=1)

    def polyhedron(self, k: int) -> Polyhedron:
        """
        Outward-oriented geometric view of cell ``k`` (cached).

        Args:
            k: Cell index

        Returns:
            Polyhedron with the cell's faces ordered counter-clockwise
            seen from outside the cell
        """
        poly = self._polyhedra.get(k)
        if poly is None:
            global_ids = self.cell_vertices[k]
            local = {v: i for i, v in enumerate(global_ids)}
            faces = []
            for f, w in self.cell_faces[k]:
                fv = self.face_vertices[f] if w == 1 else self.face_vertices[f][::-1]
                faces.append([local[v] for v in fv])
            poly = Polyhedron(self.vertices[list(global_ids)], faces, vertex_ids=global_ids)
            self._polyhedra[k] = poly
        return poly

    def to_dict(self) -> dict:
        """Debug dump with vertices, faces and cells as plain index lists."""
        return {
            "vertices": self.vertices.tolist(),
            "faces": [list(fv) for fv in self.face_vertices],
            "cells": [[[f, w] for f, w in refs] for refs in self.cell_faces],
        }

    def to_json(self, path: Union[str, Path]) -> None:
        with open(path, "w", encoding="utf-8") as f:
            json.dump(self.to_dict(), f)

    @classmethod
    def from_dict(cls, data: dict) -> "Mesh":
        return cls(np.asarray(data["vertices"], dtype=float), data["faces"], data["cells"])


def _structured_grid(n: int, domain: Tuple[Sequence[float], Sequence[float]]) -> Tuple[np.ndarray, np.ndarray]:
    if int(n) != n or n < 1:
        raise ValueError(f"Resolution must be a positive integer, got {n}")
    n = int(n)
    lower = np.asarray(domain[0], dtype=float)
    upper = np.asarray(domain[1], dtype=float)
    if lower.shape != (3,) or upper.shape != (3,) or np.any(upper <= lower):
        raise ValueError(f"Degenerate domain {lower.tolist()} - {upper.tolist()}")

    axes = [np.linspace(lower[d], upper[d], n + 1) for d in range(3)]
    xs, ys, zs = np.meshgrid(*axes, indexing="ij")
    vertices = np.stack([xs.ravel(), ys.ravel(), zs.ravel()], axis=1)

    def vid(i, j, k):
        return (i * (n + 1) + j) * (n + 1) + k

    i, j, k = np.meshgrid(np.arange(n), np.arange(n), np.arange(n), indexing="ij")
    i, j, k = i.ravel(), j.ravel(), k.ravel()
    hexes = np.stack([
        vid(i, j, k), vid(i + 1, j, k), vid(i + 1, j + 1, k), vid(i, j + 1, k),
        vid(i, j, k + 1), vid(i + 1, j, k + 1), vid(i + 1, j + 1, k + 1), vid(i, j + 1, k + 1),
    ], axis=1)
    return vertices, hexes


def generate_cuboid_mesh(n: int, domain: Tuple[Sequence[float], Sequence[float]] = (
        (-1.0, -1.0, -1.0), (1.0, 1.0, 1.0))) -> Mesh:
    """
    Generate an equidistant structured hexahedral mesh on an axis-aligned box.

    Args:
        n: Number of cells per coordinate direction (resolution parameter)
        domain: Lower and upper corner of the box

    Returns:
        Mesh with n**3 cells and 3 n**2 (n + 1) faces

    Raises:
        ValueError: If n < 1 or the box is degenerate
    """
    vertices, hexes = _structured_grid(n, domain)
    cell_faces = [[tuple(int(v) for v in h[list(face)]) for face in HEXAHEDRON_FACES] for h in hexes]
    logger.info("Generating cuboid mesh with %d cells", len(hexes))
    return Mesh.from_cell_faces(vertices, cell_faces)


# Kuhn triangulation of a hexahedron: the six paths from corner 0 to corner 6
# along the cube edges, in VTK hexahedron numbering
KUHN_TETRAHEDRA = ((0, 1, 2, 6), (0, 2, 3, 6), (0, 3, 7, 6), (0, 7, 4, 6), (0, 4, 5, 6), (0, 5, 1, 6))


def kuhn_tetrahedra(n: int, domain: Tuple[Sequence[float], Sequence[float]] = (
        (-1.0, -1.0, -1.0), (1.0, 1.0, 1.0))) -> Tuple[np.ndarray, np.ndarray]:
    """
    Conforming tetrahedral connectivity from splitting every cube of a
    structured grid into six tetrahedra around its main diagonal.

    Returns:
        (vertices, tetrahedra) with positively oriented node quadruples,
        ready for :func:`write_vtk`
    """
    vertices, hexes = _structured_grid(n, domain)
    tets = hexes[:, np.array(KUHN_TETRAHEDRA)].reshape(-1, 4)
    p = vertices[tets]
    volume = np.einsum("ij,ij->i", p[:, 1] - p[:, 0], np.cross(p[:, 2] - p[:, 0], p[:, 3] - p[:, 0]))
    flip = volume < 0.0
    tets[flip, 1], tets[flip, 2] = tets[flip, 2], tets[flip, 1].copy()
    return vertices, tets


def generate_tetrahedral_mesh(n: int, domain: Tuple[Sequence[float], Sequence[float]] = (
        (-1.0, -1.0, -1.0), (1.0, 1.0, 1.0))) -> Mesh:
    """Kuhn-split structured tetrahedral mesh with 6 n**3 cells (see :func:`kuhn_tetrahedra`)."""
    vertices, tets = kuhn_tetrahedra(n, domain)
    cell_faces = [[tuple(int(v) for v in t[list(face)]) for face in TETRA_FACES] for t in tets]
    logger.info("Generating tetrahedral mesh with %d cells", len(tets))
    return Mesh.from_cell_faces(vertices, cell_faces)


def _read_numbers(tokens: List[str], start: int, count: int, kind, section: str):
    end = start + count
    if end > len(tokens):
        raise VTKParseError(f"Section {section} is truncated: expected {count} values")
    try:
        return [kind(t) for t in tokens[start:end]], end
    except ValueError as e:
        raise VTKParseError(f"Section {section} contains a non-numeric value: {e}") from e


def load_vtk(path: Union[str, Path], skip_lower_dimensional: bool = False) -> Mesh:
    """
    Load a legacy ASCII VTK unstructured grid.

    Only the POINTS, CELLS and CELL_TYPES sections are read; data sections
    that follow them are ignored. Cell types must be tetrahedra (10) or
    hexahedra (12).

    Args:
        path: Path to the .vtk file
        skip_lower_dimensional: Ignore vertex, line, triangle and quad cells
            (the boundary elements gmsh writes next to the volume cells)
            instead of rejecting the file

    Returns:
        Mesh with deduplicated shared faces

    Raises:
        FileNotFoundError: If the file does not exist
        VTKParseError: If a section is missing or malformed
        UnsupportedCellTypeError: For cell types other than tetrahedra and hexahedra
        InvalidCellError: If a cell has non-positive volume
    """
    path = Path(path)
    if not path.exists():
        raise FileNotFoundError(f"VTK file not found: {path}")
    with open(path, "r", encoding="utf-8") as f:
        lines = f.read().splitlines()

    if len(lines) < 4 or not lines[0].lower().startswith("# vtk datafile"):
        raise VTKParseError(f"{path} is not a legacy VTK file")
    if lines[2].strip().upper() != "ASCII":
        raise VTKParseError(f"{path}: only ASCII legacy VTK files are supported")

    tokens = " ".join(lines[3:]).split()
    if len(tokens) < 2 or tokens[0].upper() != "DATASET" or tokens[1].upper() != "UNSTRUCTURED_GRID":
        raise VTKParseError(f"{path}: expected DATASET UNSTRUCTURED_GRID")

    points = connectivity = cell_types = None
    pos = 2
    while pos < len(tokens):
        keyword = tokens[pos].upper()
        if keyword == "POINTS":
            try:
                count = int(tokens[pos + 1])
            except (IndexError, ValueError) as e:
                raise VTKParseError("Malformed POINTS header") from e
            values, pos = _read_numbers(tokens, pos + 3, 3 * count, float, "POINTS")
            points = np.array(values, dtype=float).reshape(count, 3)
        elif keyword == "CELLS":
            try:
                connectivity_count = int(tokens[pos + 1])
                size = int(tokens[pos + 2])
            except (IndexError, ValueError) as e:
                raise VTKParseError("Malformed CELLS header") from e
            if pos + 3 < len(tokens) and tokens[pos + 3].upper() == "OFFSETS":
                raise VTKParseError("VTK 5 OFFSETS/CONNECTIVITY layout is not supported")
            connectivity, pos = _read_numbers(tokens, pos + 3, size, int, "CELLS")
        elif keyword == "CELL_TYPES":
            try:
                count = int(tokens[pos + 1])
            except (IndexError, ValueError) as e:
                raise VTKParseError("Malformed CELL_TYPES header") from e
            cell_types, pos = _read_numbers(tokens, pos + 2, count, int, "CELL_TYPES")
        elif keyword in ("CELL_DATA", "POINT_DATA"):
            break
        else:
            pos += 1

    if points is None or connectivity is None or cell_types is None:
        raise VTKParseError(f"{path}: POINTS, CELLS and CELL_TYPES sections are required")
    if len(cell_types) != connectivity_count:
        raise VTKParseError(
            f"CELLS lists {connectivity_count} cells but CELL_TYPES lists {len(cell_types)}"
        )

    cell_faces = []
    skipped = 0
    pos = 0
    for cell_type in cell_types:
        if pos >= len(connectivity):
            raise VTKParseError("CELLS section ends before all cells are read")
        size = connectivity[pos]
        nodes = connectivity[pos + 1:pos + 1 + size]
        pos += 1 + size
        if len(nodes) != size:
            raise VTKParseError("CELLS section ends inside a cell")
        if cell_type in CELL_FACES:
            if size != CELL_SIZES[cell_type]:
                raise VTKParseError(f"Cell of type {cell_type} has {size} nodes")
            if min(nodes) < 0 or max(nodes) >= len(points):
                raise VTKParseError(f"Cell references a missing point: {nodes}")
            cell_faces.append([[nodes[i] for i in face] for face in CELL_FACES[cell_type]])
        elif skip_lower_dimensional and cell_type in LOWER_DIMENSIONAL_TYPES:
            skipped += 1
        else:
            raise UnsupportedCellTypeError(
                f"Unsupported VTK cell type {cell_type}; only tetrahedra (10) "
                "and hexahedra (12) are supported"
            )
    if pos != len(connectivity):
        raise VTKParseError("CELLS section size does not match its cells")
    if not cell_faces:
        raise VTKParseError(f"{path} contains no volume cells")

    mesh = Mesh.from_cell_faces(points, cell_faces)
    logger.info(
        "Loaded %s: %d cells, %d faces (%d lower-dimensional cells skipped)",
        path.name, mesh.n_cells, mesh.n_faces, skipped,
    )
    return mesh


def write_vtk(mesh_vertices: np.ndarray, cells: Sequence[Sequence[int]], cell_types: Sequence[int],
              path: Union[str, Path], title: str = "fbnr mesh") -> None:
    """
    Write a legacy ASCII VTK unstructured grid from raw cell connectivity.

    Args:
        mesh_vertices: Point coordinates, shape (nv, 3)
        cells: Node lists of the cells
        cell_types: VTK type of every cell
        path: Output path
        title: Header title line
    """
    size = sum(len(c) + 1 for c in cells)
    with open(path, "w", encoding="utf-8") as f:
        f.write("# vtk DataFile Version 2.0\n")
        f.write(f"{title}\nASCII\nDATASET UNSTRUCTURED_GRID\n")
        f.write(f"POINTS {len(mesh_vertices)} double\n")
        for p in mesh_vertices:
            f.write(f"{p[0]:.17g} {p[1]:.17g} {p[2]:.17g}\n")
        f.write(f"\nCELLS {len(cells)} {size}\n")
        for c in cells:
            f.write(f"{len(c)} " + " ".join(str(int(v)) for v in c) + "\n")
        f.write(f"\nCELL_TYPES {len(cell_types)}\n")
        for t in cell_types:
            f.write(f"{int(t)}\n")


def build_neighborhood(mesh: Mesh, center: int, kind: str) -> Stencil:
    """
    Build the face, edge or vertex neighbourhood of a cell.

    - face: cells sharing a full face with the center
    - edge: cells having a face that shares at least two vertices with a
      face of the center
    - vertex: cells sharing at least one vertex with the center

    Args:
        mesh: The mesh
        center: Center cell index
        kind: One of "face", "edge", "vertex"

    Returns:
        Stencil with the center first and the other members in ascending order

    Raises:
        ValueError: If the kind is unknown or the center index is invalid
    """
    if kind not in STENCIL_KINDS:
        raise ValueError(f"Unknown stencil kind '{kind}'. Supported kinds: {', '.join(STENCIL_KINDS)}")
    if not 0 <= center < mesh.n_cells:
        raise ValueError(f"Cell index {center} out of range [0, {mesh.n_cells})")

    if kind == "face":
        members = set()
        for f, w in mesh.cell_faces[center]:
            other = mesh.face_neighbour[f] if w == 1 else mesh.face_owner[f]
            if other >= 0:
                members.add(int(other))
    else:
        members = {c for v in mesh.cell_vertices[center] for c in mesh.vertex_cells[v]}
        members.discard(center)
        if kind == "edge":
            center_faces = [set(mesh.face_vertices[f]) for f, _ in mesh.cell_faces[center]]
            members = {
                c for c in members
                if any(
                    len(cf.intersection(mesh.face_vertices[g])) >= 2
                    for g, _ in mesh.cell_faces[c] for cf in center_faces
                )
            }
    return Stencil(center, (center,) + tuple(sorted(members)), kind)


def classify_levels(levels: np.ndarray, tolerance: float = ZERO_TOLERANCE) -> np.ndarray:
    """Vertex statuses (-1, 0, +1) of level-set values with a tubular tolerance."""
    levels = np.asarray(levels, dtype=float)
    status = np.asarray(np.sign(levels), dtype=np.int8)
    status[np.abs(levels) < tolerance] = 0
    return status


def classify_point(plane, x: Sequence[float]) -> int:
    """
    Classify a point against a plane.

    Args:
        plane: Plane providing ``level(x)`` = <x - x_base, n> - s
        x: Point coordinates

    Returns:
        0 if |level| < 1e-14, otherwise the sign of the level value
    """
    return int(classify_levels(plane.level(np.asarray(x, dtype=float)))[()])


def classify_edge(status_a: int, status_b: int) -> int:
    """
    Edge status from the statuses of its vertices.

    Returns 1 (exterior), -1 (interior), 0 (intersected), 2 (touching from
    outside), -2 (touching from inside) or 3 (contained in the plane).

    Raises:
        ValueError: If a status is not in {-1, 0, 1}
    """
    if status_a not in (-1, 0, 1) or status_b not in (-1, 0, 1):
        raise ValueError(f"Vertex statuses must be -1, 0 or 1, got ({status_a}, {status_b})")
    return int(EDGE_STATUS_TABLE[3 * (status_a + 1) + (status_b + 1)])


def classify_edges(status_a: np.ndarray, status_b: np.ndarray) -> np.ndarray:
    """Vectorized :func:`classify_edge`."""
    index = 3 * (np.asarray(status_a, dtype=np.intp) + 1) + (np.asarray(status_b, dtype=np.intp) + 1)
    return EDGE_STATUS_TABLE[index]
