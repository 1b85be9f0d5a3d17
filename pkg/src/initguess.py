#!/usr/bin/env python3
"""
Volume fraction gradient estimators and the initial plane orientation.

The PLIC normal is approximated by n = -grad(alpha)/|grad(alpha)|, with the
cell-averaged gradient estimated from the stencil data by

- LSE:  weighted least squares over centroid differences, all members
- LSE*: the same with data-wise bulk members removed
- GG:   Gauss-Green sum of face averages, built from node averages

These serve as baseline reconstructions and as the initial iterate of the
Gauss-Newton minimization. Nearly singular least-squares systems and wrongly
oriented estimates are corrected with the direction between the stencil
cells holding the smallest and largest volume fraction.
"""

import logging
from dataclasses import dataclass
from typing import Tuple

import numpy as np
from scipy.linalg import lstsq, solve

from .config import LSE_SINGULAR_TOLERANCE
from .errors import UnreconstructableStencilError
from .mesh import Mesh, Stencil
from .surfaces import VolumeFractionField
from .truncation import normal_to_angles

logger = logging.getLogger(__name__)

GRADIENT_METHODS = ("lse", "lse-star", "gg")


@dataclass(frozen=True, eq=False)
class GradientEstimate:
    """
    Estimated cell-averaged volume fraction gradient.

    Attributes:
        gradient: Gradient vector (volume fraction per length)
        method: "lse", "lse-star" or "gg"
        singular: True if the least-squares matrix was (nearly) singular
        det_A: Determinant of the least-squares matrix (NaN for GG)
        covered: False if some node of the center cell had stencil-external
            or boundary neighbourhoods (GG only)
    """

    gradient: np.ndarray
    method: str
    singular: bool = False
    det_A: float = float("nan")
    covered: bool = True


@dataclass(frozen=True)
class InitialOrientation:
    """Initial angles with the estimate they came from."""

    phi: float
    theta: float
    normal: np.ndarray
    estimate: GradientEstimate
    fallback: bool


def _bulk_mask(alpha: np.ndarray, eps_alpha: float) -> np.ndarray:
    return (alpha < eps_alpha) | (alpha > 1.0 - eps_alpha)


def lse_gradient(mesh: Mesh, stencil: Stencil, field: VolumeFractionField,
                 use_bulk: bool = False) -> GradientEstimate:
    """
    Least-squares gradient over the stencil.

    Solves A y = b with A = sum psi_k dx_k dx_k^T and b = sum psi_k da_k dx_k,
    where dx_k and da_k are centroid and volume fraction differences to the
    center. With ``use_bulk`` (LSE) every member has psi_k = 1; otherwise
    (LSE*) data-wise bulk members get psi_k = 0.

    Args:
        mesh: The mesh
        stencil: Center cell and neighbours
        field: Volume fraction data
        use_bulk: Include bulk members

    Returns:
        GradientEstimate; ``singular`` is set when |det A| < 1e-16 ||A||^3,
        in which case the minimum-norm least-squares solution is returned
    """
    members = np.asarray(stencil.neighbours, dtype=np.intp)
    center = stencil.center_index
    method = "lse" if use_bulk else "lse-star"
    if len(members) == 0:
        return GradientEstimate(np.zeros(3), method, True, 0.0)
    dx = mesh.cell_centroids[members] - mesh.cell_centroids[center]
    da = field.alpha[members] - field.alpha[center]
    if use_bulk:
        psi = np.ones(len(members))
    else:
        psi = (~_bulk_mask(field.alpha[members], field.eps_alpha)).astype(float)

    A = (dx * psi[:, None]).T @ dx
    b = dx.T @ (psi * da)
    det = float(np.linalg.det(A))
    scale = float(np.linalg.norm(A))
    singular = np.count_nonzero(psi) < 3 or abs(det) < LSE_SINGULAR_TOLERANCE * scale ** 3
    if singular:
        logger.debug("Singular least-squares matrix in cell %d (det=%.3e)", center, det)
        gradient = lstsq(A, b)[0] if scale > 0.0 else np.zeros(3)
    else:
        gradient = solve(A, b, assume_a="sym")
    return GradientEstimate(np.asarray(gradient, dtype=float), method, bool(singular), det)


def gauss_green_gradient(mesh: Mesh, stencil: Stencil, field: VolumeFractionField) -> GradientEstimate:
    """
    Gauss-Green gradient from node-averaged face values.

    grad = |cell|^-1 sum_f A_f n_f <alpha>_f with outward normals; the face
    average is the mean of its node averages, and every stencil member
    containing a node contributes equally to that node's average.

    Returns:
        GradientEstimate; ``covered`` is False when a node of the center
        touches cells outside the stencil or the domain boundary
    """
    center = stencil.center_index
    members = set(stencil.member_indices)
    boundary_faces = np.flatnonzero(mesh.face_neighbour < 0)
    boundary_nodes = {v for f in boundary_faces for v in mesh.face_vertices[f]}

    node_average = {}
    covered = True
    for v in mesh.cell_vertices[center]:
        incident = mesh.vertex_cells[v]
        available = [c for c in incident if c in members]
        if len(available) < len(incident) or v in boundary_nodes:
            covered = False
        node_average[v] = float(np.mean(field.alpha[available]))

    gradient = np.zeros(3)
    for f, w in mesh.cell_faces[center]:
        face_average = np.mean([node_average[v] for v in mesh.face_vertices[f]])
        gradient += w * mesh.face_area_vectors[f] * face_average
    gradient /= mesh.cell_volumes[center]
    if not covered:
        logger.debug("Gauss-Green node coverage incomplete in cell %d", center)
    return GradientEstimate(gradient, "gg", covered=covered)


def extreme_cells(stencil: Stencil, field: VolumeFractionField) -> Tuple[int, int]:
    """
    Stencil members with the smallest and the largest volume fraction.

    Ties are broken by the lowest cell label.
    """
    ids = np.asarray(stencil.member_indices, dtype=np.intp)
    values = field.alpha[ids]
    lowest = ids[np.lexsort((ids, values))[0]]
    highest = ids[np.lexsort((ids, -values))[0]]
    return int(lowest), int(highest)


def orientation_fix(gradient: np.ndarray, mesh: Mesh, stencil: Stencil,
                    field: VolumeFractionField) -> Tuple[np.ndarray, bool]:
    """
    Orient a gradient estimate towards increasing volume fraction.

    The estimate is inverted when <g, x_max - x_min> < 0, where x_min and
    x_max are the centroids of the members with the smallest and the largest
    volume fraction.

    Args:
        gradient: Gradient estimate (need not be normalized)
        mesh: The mesh
        stencil: The stencil
        field: Volume fraction data

    Returns:
        (oriented vector, uniform) where ``uniform`` flags constant stencil
        data; the vector is then returned unchanged
    """
    g = np.asarray(gradient, dtype=float)
    lowest, highest = extreme_cells(stencil, field)
    if field.alpha[lowest] == field.alpha[highest]:
        return g, True
    direction = mesh.cell_centroids[highest] - mesh.cell_centroids[lowest]
    if g @ direction < 0.0:
        return -g, False
    return g, False


def normal_from_gradient(gradient: np.ndarray) -> np.ndarray:
    """PLIC normal n = -g/|g|."""
    g = np.asarray(gradient, dtype=float)
    norm = np.linalg.norm(g)
    if not norm > 0.0 or not np.isfinite(norm):
        raise ValueError(f"Cannot derive a normal from the gradient {g.tolist()}")
    return -g / norm


def orientation_from_gradient(gradient: np.ndarray) -> Tuple[float, float]:
    """Spherical angles (phi, theta) of the normal -g/|g|."""
    return normal_to_angles(normal_from_gradient(gradient))


def estimate_gradient(mesh: Mesh, stencil: Stencil, field: VolumeFractionField,
                      scheme: str = "lse-star") -> GradientEstimate:
    """Dispatch to the estimator named by ``scheme`` ("fbnr" uses LSE*)."""
    if scheme in ("lse-star", "fbnr"):
        return lse_gradient(mesh, stencil, field, use_bulk=False)
    if scheme == "lse":
        return lse_gradient(mesh, stencil, field, use_bulk=True)
    if scheme == "gg":
        return gauss_green_gradient(mesh, stencil, field)
    raise ValueError(f"Unknown gradient scheme '{scheme}'. Supported schemes: lse, lse-star, gg, fbnr")


def initial_orientation(mesh: Mesh, stencil: Stencil, field: VolumeFractionField,
                        scheme: str = "lse-star") -> InitialOrientation:
    """
    Initial plane orientation p0 = (phi, theta) of the stencil center.

    Args:
        mesh: The mesh
        stencil: The stencil
        field: Volume fraction data
        scheme: Gradient estimator ("lse", "lse-star", "gg"; "fbnr" uses LSE*)

    Returns:
        InitialOrientation; ``fallback`` is set when a singular or vanishing
        estimate was replaced by the direction from the fullest to the
        emptiest member

    Raises:
        UnreconstructableStencilError: If all stencil volume fractions are equal
    """
    estimate = estimate_gradient(mesh, stencil, field, scheme)
    gradient, uniform = orientation_fix(estimate.gradient, mesh, stencil, field)
    if uniform:
        raise UnreconstructableStencilError(
            f"Stencil of cell {stencil.center_index} carries uniform volume fractions"
        )
    fallback = estimate.singular or not np.linalg.norm(gradient) > 0.0
    if fallback:
        lowest, highest = extreme_cells(stencil, field)
        gradient = mesh.cell_centroids[highest] - mesh.cell_centroids[lowest]
        logger.debug("Cell %d: initial orientation from the extreme-cell direction", stencil.center_index)
    normal = normal_from_gradient(gradient)
    phi, theta = normal_to_angles(normal)
    return InitialOrientation(phi, theta, normal, estimate, bool(fallback))

