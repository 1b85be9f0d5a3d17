"""
FBNR-PLIC - face-based normal reconstruction for geometric VOF

This package reconstructs piecewise linear interfaces (PLIC) from volume
fractions on unstructured polyhedral meshes by minimizing a volume-fraction
error functional over the normal orientation, and benchmarks the result
against least-squares and Gauss-Green gradient estimates.
"""

from .config import VERSION as __version__
from .config import APP_NAME, SCHEMES, STENCIL_KINDS

__author__ = "FBNR-PLIC developers"

# Re-export VERSION for convenience
VERSION = __version__

from .mesh import (
    Mesh,
    Polyhedron,
    Stencil,
    build_neighborhood,
    generate_cuboid_mesh,
    generate_tetrahedral_mesh,
    load_vtk,
)
from .truncation import Plane, truncate, truncate_with_gradient
from .positioning import position_plane
from .surfaces import (
    Ellipsoid,
    Halfspace,
    Sphere,
    VolumeFractionField,
    init_volume_fractions,
    perturbed_sphere,
    surface_from_mapping,
)
from .initguess import initial_orientation
from .reconstruct import ReconConfig, ReconstructionResult, reconstruct_cell, reconstruct_field

__all__ = [
    "Mesh",
    "Polyhedron",
    "Stencil",
    "build_neighborhood",
    "generate_cuboid_mesh",
    "generate_tetrahedral_mesh",
    "load_vtk",
    "Plane",
    "truncate",
    "truncate_with_gradient",
    "position_plane",
    "Halfspace",
    "Sphere",
    "Ellipsoid",
    "perturbed_sphere",
    "VolumeFractionField",
    "init_volume_fractions",
    "surface_from_mapping",
    "initial_orientation",
    "ReconConfig",
    "ReconstructionResult",
    "reconstruct_cell",
    "reconstruct_field",
    "VERSION",
    "APP_NAME",
    "SCHEMES",
    "STENCIL_KINDS",
]
