import numpy as np
import pytest

from core.errors import AssemblyError, MeshError
from core.expression import Expression
from core.mesh import TriMesh
from meshing.refinement import refine_times
from meshing.triangulation import triangulate_initial
from solvers.assembly import (FeFunction, SparseSpd, assemble_full_stiffness, assemble_load, assemble_stiffness,
                              interpolate, local_stiffness)


class TestLocalStiffness:
    def test_reference_triangle(self):
        K = local_stiffness([0.0, 0.0], [1.0, 0.0], [0.0, 1.0])
        assert K == pytest.approx(np.array([[1.0, -0.5, -0.5], [-0.5, 0.5, 0.0], [-0.5, 0.0, 0.5]]))

    def test_matches_affine_map_gradients(self, rng):
        for _ in range(20):
            p = rng.uniform(-3.0, 3.0, size=(3, 2))
            J = np.array([p[1] - p[0], p[2] - p[0]]).T
            if np.linalg.det(J) < 0.0:
                p = p[[0, 2, 1]]
                J = np.array([p[1] - p[0], p[2] - p[0]]).T
            area = 0.5 * np.linalg.det(J)
            reference = np.array([[-1.0, -1.0], [1.0, 0.0], [0.0, 1.0]])
            grads = reference @ np.linalg.inv(J)
            assert local_stiffness(*p) == pytest.approx(area * grads @ grads.T, rel=1e-10, abs=1e-10)

    def test_rows_sum_to_zero(self):
        K = local_stiffness([0.0, 0.0], [2.0, 0.3], [0.4, 1.7])
        assert K.sum(axis=1) == pytest.approx([0.0] * 3, abs=1e-14)

    def test_clockwise_rejected(self):
        with pytest.raises(AssemblyError):
            local_stiffness([0.0, 0.0], [0.0, 1.0], [1.0, 0.0])


class TestStiffness:
    def test_square_center_node(self, square_level1):
        S = assemble_stiffness(square_level1)
        assert S.dimension == 1
        assert S.to_dense() == pytest.approx([[4.0]])
        assert S.interior.tolist() == [7]

    def test_symmetric_positive_definite(self, graded_lshape):
        S = assemble_stiffness(graded_lshape)
        assert S.asymmetry() == 0.0
        assert np.linalg.eigvalsh(S.to_dense()).min() > 0.0

    def test_full_matrix_annihilates_constants(self, graded_lshape):
        full = assemble_full_stiffness(graded_lshape)
        assert full @ np.ones(graded_lshape.num_nodes) == pytest.approx(0.0, abs=1e-12)

    def test_energy_of_linear_function(self, lshape_mesh):
        mesh = refine_times(lshape_mesh, None, 2)[-1]
        u = interpolate(mesh, Expression("2*x - y")).values
        full = assemble_full_stiffness(mesh)
        # |grad u|^2 = 5 over an area of 3
        assert u @ (full @ u) == pytest.approx(15.0)

    def test_no_interior_nodes(self, square_mesh):
        with pytest.raises(AssemblyError):
            assemble_stiffness(square_mesh)

    def test_reports_bad_element(self):
        mesh = TriMesh([[0.0, 0.0], [1.0, 0.0], [0.0, 1.0], [1.0, 1.0]], [[0, 1, 2], [1, 2, 3]],
                       [True, True, True, True])
        with pytest.raises(AssemblyError) as info:
            assemble_full_stiffness(mesh)
        assert info.value.element == 1

    def test_from_dense(self):
        S = SparseSpd.from_dense([[2.0, -1.0], [-1.0, 2.0]])
        assert S.nnz == 4
        assert S.matvec(np.array([1.0, 1.0])).tolist() == [1.0, 1.0]


class TestLoad:
    @pytest.mark.parametrize("order", [1, 2, 3])
    def test_constant_on_reference_triangle(self, reference_triangle, order):
        load = assemble_load(reference_triangle, Expression("2"), order, full=True)
        assert load == pytest.approx([1.0 / 3.0] * 3)

    def test_zero(self, graded_lshape):
        assert not assemble_load(graded_lshape, 0.0).any()

    def test_partition_of_unity(self, octagon):
        mesh = refine_times(triangulate_initial(octagon), None, 2)[-1]
        assert assemble_load(mesh, Expression("2"), full=True).sum() == pytest.approx(2.0 * octagon.area(), abs=1e-12)

    def test_quadratic_load_exact_with_order_3(self, reference_triangle):
        # integral of x * phi_0 over the reference triangle is 1/24
        load = assemble_load(reference_triangle, Expression("x"), 3, full=True)
        assert load == pytest.approx([1.0 / 24.0, 1.0 / 12.0, 1.0 / 24.0])

    def test_interior_restriction(self, square_level1):
        assert assemble_load(square_level1, 1.0) == pytest.approx([0.25])

    def test_domain_error_names_element(self, square_level1):
        with pytest.raises(AssemblyError) as info:
            assemble_load(square_level1, Expression("log(x)"), 3)
        assert info.value.element is not None
        assert (square_level1.nodes[square_level1.triangles[info.value.element]][:, 0] == 0.0).any()

    def test_callable_field(self, square_level1):
        assert assemble_load(square_level1, lambda x, y: 1.0 + 0.0 * x) == pytest.approx([0.25])


class TestFeFunction:
    def test_gradients_of_interpolant(self, graded_lshape):
        u = interpolate(graded_lshape, Expression("3*x + 2*y - 1"))
        assert u.gradients() == pytest.approx(np.tile([3.0, 2.0], (graded_lshape.num_triangles, 1)))

    def test_length_checked(self, square_mesh):
        with pytest.raises(MeshError):
            FeFunction(square_mesh, [0.0, 1.0])

    def test_dirichlet(self, square_level1):
        v = FeFunction.from_interior(square_level1, np.array([7]), np.array([2.5]))
        assert v.satisfies_dirichlet()
        assert v.values[7] == 2.5
        assert not interpolate(square_level1, 1.0).satisfies_dirichlet()
