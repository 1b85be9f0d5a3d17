#!/usr/bin/env python3
"""
Reconstruction quality measures.

- Normal alignment: dn_k = |1 - <n_rec, n_ref>|, averaged with the plane
  patch areas |P_k| = d alpha/ds |cell| as weights.
- Symmetric volume difference: the cell volume on which the reconstructed
  plane and the reference plane (reference normal positioned to the same
  volume fraction) disagree, summed over the interface and normalized by
  the enclosed volume.
- Convergence order: least-squares slope of log(error) against
  log(resolution), with order 2 meaning error ~ resolution^-2.
"""

import logging
from dataclasses import dataclass
from typing import Mapping, Optional, Sequence, Tuple

import numpy as np

from .mesh import Mesh
from .positioning import position_plane
from .reconstruct import ReconstructionResult
from .surfaces import Hypersurface, VolumeFractionField, interface_cells
from .truncation import Plane, normal_to_angles, symmetric_volume_difference

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class AveragedMetric:
    """
    A mesh-averaged error measure.

    Attributes:
        value: The averaged measure (NaN if no cell contributed)
        cells: Number of contributing cells
        missing: Interface cells without a usable result or reference normal
        degenerate: Contributing cells whose reconstruction ended degenerate
    """

    value: float
    cells: int
    missing: int = 0
    degenerate: int = 0


@dataclass(frozen=True)
class ConvergenceSeries:
    """Error values over increasing resolutions with the fitted order."""

    points: Tuple[Tuple[float, float], ...]
    fitted_order: float

    @classmethod
    def from_points(cls, resolutions: Sequence[float], errors: Sequence[float]) -> "ConvergenceSeries":
        order = convergence_order(resolutions, errors)
        return cls(tuple(zip(map(float, resolutions), map(float, errors))), order)


def _usable(result: Optional[ReconstructionResult]) -> bool:
    return result is not None and not result.failed


def patch_area(mesh: Mesh, result: ReconstructionResult) -> float:
    """Area of the reconstructed plane inside its cell."""
    return float(result.dalpha_ds * mesh.polyhedron(result.cell).volume)


def normal_alignment(mesh: Mesh, results: Mapping[int, ReconstructionResult],
                     field: VolumeFractionField) -> AveragedMetric:
    """
    Area-weighted normal alignment <dn> over the interface cells.

    Returns:
        AveragedMetric in [0, 2]
    """
    weights, deviations = [], []
    missing = degenerate = 0
    for k in interface_cells(field):
        result = results.get(k)
        if not _usable(result) or not field.has_normal(k):
            missing += 1
            continue
        degenerate += result.status == "degenerate"
        weights.append(patch_area(mesh, result))
        deviations.append(abs(1.0 - float(result.normal @ field.normals[k])))
    if missing:
        logger.warning("Normal alignment excludes %d interface cells without result", missing)
    total = float(np.sum(weights))
    value = float(np.dot(weights, deviations) / total) if total > 0.0 else float("nan")
    return AveragedMetric(value, len(weights), missing, degenerate)


def reference_plane(mesh: Mesh, k: int, field: VolumeFractionField) -> Plane:
    """Reference normal of cell k positioned to its volume fraction (base point: centroid)."""
    poly = mesh.polyhedron(k)
    phi, theta = normal_to_angles(field.normals[k])
    s = position_plane(poly, phi, theta, float(field.alpha[k]), poly.centroid)
    return Plane(phi, theta, s, poly.centroid)


def symmetric_volume_error(mesh: Mesh, results: Mapping[int, ReconstructionResult],
                           field: VolumeFractionField, surface: Optional[Hypersurface] = None,
                           reference_volume: Optional[float] = None) -> AveragedMetric:
    """
    Normalized symmetric volume difference <dV> = sum_k dV_k / V.

    Args:
        mesh: The mesh
        results: Reconstructions keyed by cell
        field: Volume fraction data with reference normals
        surface: Surface providing the enclosed volume V
        reference_volume: Explicit V; for unbounded surfaces the volume
            sum_k alpha_k |cell_k| is used when neither is given

    Returns:
        AveragedMetric (non-negative)
    """
    if reference_volume is None:
        try:
            reference_volume = surface.enclosed_volume() if surface is not None else None
        except ValueError:
            reference_volume = None
        if reference_volume is None:
            reference_volume = float(np.dot(field.alpha, mesh.cell_volumes))
    if not reference_volume > 0.0:
        raise ValueError(f"Reference volume must be positive, got {reference_volume!r}")

    total = 0.0
    cells = missing = degenerate = 0
    for k in interface_cells(field):
        result = results.get(k)
        if not _usable(result) or not field.has_normal(k):
            missing += 1
            continue
        degenerate += result.status == "degenerate"
        total += symmetric_volume_difference(mesh.polyhedron(k), result.plane, reference_plane(mesh, k, field))
        cells += 1
    return AveragedMetric(total / reference_volume, cells, missing, degenerate)


def convergence_order(resolutions: Sequence[float], errors: Sequence[float]) -> float:
    """
    Fitted convergence order of errors over increasing resolutions.

    Raises:
        ValueError: With fewer than two points, non-positive values or
            resolutions that do not increase strictly
    """
    res = np.asarray(resolutions, dtype=float)
    err = np.asarray(errors, dtype=float)
    if len(res) != len(err) or len(res) < 2:
        raise ValueError("Convergence order needs at least two (resolution, error) pairs")
    if np.any(err <= 0.0) or np.any(res <= 0.0):
        raise ValueError("Resolutions and errors must be positive")
    if np.any(np.diff(res) <= 0.0):
        raise ValueError("Resolutions must increase strictly")
    slope = np.polyfit(np.log(res), np.log(err), 1)[0]
    return float(-slope)
