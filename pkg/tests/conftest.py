import numpy as np
import pytest

from core.geometry import GradingSpec, PolygonDomain, named_domain
from core.mesh import TriMesh
from meshing.refinement import refine
from meshing.triangulation import triangulate_initial

# U-shaped domain whose two re-entrant corners (vertices 4 and 5) share an edge
U_SHAPE = [[0.0, 0.0], [3.0, 0.0], [3.0, 2.0], [2.0, 2.0], [2.0, 1.0], [1.0, 1.0], [1.0, 2.0], [0.0, 2.0]]


@pytest.fixture
def square():
    return named_domain("square")


@pytest.fixture
def lshape():
    return named_domain("lshape")


@pytest.fixture
def octagon():
    return named_domain("octagon")


@pytest.fixture
def u_shape():
    return PolygonDomain(U_SHAPE, name="u_shape")


@pytest.fixture
def square_mesh(square):
    return triangulate_initial(square)


@pytest.fixture
def square_level1(square_mesh):
    return refine(square_mesh)


@pytest.fixture
def lshape_mesh(lshape):
    return triangulate_initial(lshape)


@pytest.fixture
def graded_lshape(lshape, lshape_mesh):
    """L-shape refined twice with kappa = 0.2 at the re-entrant corner"""
    grading = GradingSpec.from_kappa(lshape, 0.2)
    return refine(refine(lshape_mesh, grading), grading)


@pytest.fixture
def reference_triangle():
    return TriMesh([[0.0, 0.0], [1.0, 0.0], [0.0, 1.0]], [[0, 1, 2]], [True, True, True])


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)
