#!/usr/bin/env python3
"""
Exception types raised by the FBNR-PLIC toolkit.

All exceptions derive from built-in types, so callers may keep catching
``ValueError`` or ``RuntimeError`` where the distinction does not matter.
Recoverable degeneracies (singular matrices, tangent planes, stencils
without bulk cells) are reported as flags on result objects instead.
"""


class MeshError(ValueError):
    """Raised when a mesh cannot be built or violates its invariants."""


class VTKParseError(MeshError):
    """Raised when a legacy VTK file has a malformed section."""


class UnsupportedCellTypeError(MeshError):
    """Raised for VTK cell types other than tetrahedra and hexahedra."""


class InvalidCellError(MeshError):
    """Raised for cells with non-positive volume, open boundary or non-planar faces."""


class DegenerateGeometryError(ValueError):
    """Raised for zero-volume cells or geometric results out of their valid range."""


class PositioningError(RuntimeError):
    """Raised when the plane positioning cannot reach the target volume fraction."""


class UnreconstructableStencilError(ValueError):
    """Raised when the stencil data defines no usable interface direction."""


class ExperimentError(ValueError):
    """Raised for invalid experiment specifications."""
