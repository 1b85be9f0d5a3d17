"""
Shared fixtures for the FBNR-PLIC test suite.
"""

import sys
from pathlib import Path

import numpy as np
import pytest

PROJECT_ROOT = Path(__file__).parent.parent
sys.path.insert(0, str(PROJECT_ROOT))

from src.mesh import (  # noqa: E402
    VTK_TETRA,
    Polyhedron,
    generate_cuboid_mesh,
    generate_tetrahedral_mesh,
    kuhn_tetrahedra,
    write_vtk,
)
from src.surfaces import Halfspace, init_volume_fractions  # noqa: E402


@pytest.fixture
def unit_cube():
    """The unit cube [0, 1]^3 as a hexahedron."""
    return Polyhedron.box()


@pytest.fixture
def unit_tet():
    """The reference tetrahedron with volume 1/6."""
    return Polyhedron.tetrahedron([[0, 0, 0], [1, 0, 0], [0, 1, 0], [0, 0, 1]])


@pytest.fixture(scope="session")
def cube_mesh_3():
    return generate_cuboid_mesh(3)


@pytest.fixture(scope="session")
def cube_mesh_5():
    return generate_cuboid_mesh(5)


@pytest.fixture(scope="session")
def tet_mesh_2():
    return generate_tetrahedral_mesh(2)


@pytest.fixture
def kuhn_vtk(tmp_path):
    """Kuhn-split 2x2x2 tetrahedral mesh written as legacy VTK."""
    vertices, tets = kuhn_tetrahedra(2)
    path = tmp_path / "kuhn2.vtk"
    write_vtk(vertices, tets.tolist(), [VTK_TETRA] * len(tets), path)
    return path


@pytest.fixture(scope="session")
def halfspace():
    return Halfspace()


@pytest.fixture(scope="session")
def halfspace_field_5(cube_mesh_5, halfspace):
    """Exact halfspace volume fractions on the 5^3 cube mesh."""
    return init_volume_fractions(cube_mesh_5, halfspace)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)
