import numpy as np
import pytest
import scipy.sparse as sp

from core.errors import (ConfigurationError, ConvergenceError, NotPositiveDefiniteError,
                         PreconditionerError, SolverError)
from core.expression import Expression
from meshing.refinement import refine_times
from meshing.triangulation import triangulate_initial
from solvers.assembly import SparseSpd
from solvers.cg import SolverConfig, cg_solve, default_max_iter, solve_poisson, solve_poisson_system


def ill_conditioned(rng, n=60, decades=8.0):
    """Dense SPD matrix with eigenvalues 1 .. 10^decades in a random basis"""
    Q, _ = np.linalg.qr(rng.standard_normal((n, n)))
    A = Q @ np.diag(np.logspace(0.0, decades, n)) @ Q.T
    return 0.5 * (A + A.T)


class TestCgSolve:
    def test_diagonal_system_in_one_step(self):
        x, iterations, residual = cg_solve(np.diag([2.0, 2.0]), [2.0, 4.0])
        assert x.tolist() == [1.0, 2.0]
        assert iterations == 1
        assert residual == 0.0

    def test_random_spd(self, rng):
        M = rng.standard_normal((30, 30))
        A = M @ M.T + 30.0 * np.eye(30)
        b = rng.standard_normal(30)
        result = cg_solve(A, b)
        assert result.converged
        assert result.x == pytest.approx(np.linalg.solve(A, b), rel=1e-9, abs=1e-12)
        assert result.relative_residual <= 1e-11

    def test_energy_non_increasing(self, rng):
        M = rng.standard_normal((40, 40))
        A = M @ M.T + np.eye(40)
        result = cg_solve(sp.csr_matrix(A), rng.standard_normal(40))
        energy = np.array(result.energy_history)
        scale = abs(energy).max()
        assert (np.diff(energy) <= 1e-10 * scale).all()

    def test_indefinite(self):
        with pytest.raises(NotPositiveDefiniteError) as info:
            cg_solve(np.array([[1.0, 2.0], [2.0, 1.0]]), [1.0, -1.0])
        assert info.value.iteration == 0
        assert info.value.curvature == pytest.approx(-2.0)

    def test_zero_diagonal(self):
        with pytest.raises(PreconditionerError) as info:
            cg_solve(np.array([[0.0, 1.0], [1.0, 0.0]]), [1.0, 1.0])
        assert info.value.row == 0

    def test_zero_rhs(self):
        result = cg_solve(np.eye(3), np.zeros(3))
        assert result.iterations == 0 and not result.x.any()

    def test_iteration_cap(self, rng):
        M = rng.standard_normal((50, 50))
        result = cg_solve(M @ M.T + 0.1 * np.eye(50), rng.standard_normal(50), max_iter=2)
        assert not result.converged
        assert result.iterations == 2

    def test_dimension_mismatch(self):
        with pytest.raises(SolverError):
            cg_solve(np.eye(2), [1.0, 2.0, 3.0])

    def test_default_iteration_budget(self):
        assert default_max_iter(10000) == 3000

    def test_indefinite_matrix_solved_along_positive_mode(self):
        # b lies in the eigenvalue-3 eigenspace, so no negative curvature is met
        result = cg_solve(np.array([[1.0, 2.0], [2.0, 1.0]]), [1.0, 1.0])
        assert result.converged
        assert result.iterations == 1
        assert result.x == pytest.approx([1.0 / 3.0, 1.0 / 3.0])

    @pytest.mark.parametrize("rel_tol", [1e-6, 1e-10, 1e-13])
    def test_converged_means_true_residual_met(self, rng, rel_tol):
        A = ill_conditioned(rng)
        for _ in range(5):
            b = rng.standard_normal(60)
            result = cg_solve(A, b, rel_tol=rel_tol, max_iter=2000)
            true_residual = np.linalg.norm(b - A @ result.x)
            if result.converged:
                assert true_residual <= rel_tol * np.linalg.norm(b) * (1.0 + 1e-6)
            else:
                assert result.iterations == 2000

    def test_unreachable_tolerance_is_not_converged(self, rng):
        A = ill_conditioned(rng)
        result = cg_solve(A, rng.standard_normal(60), rel_tol=1e-15, max_iter=500)
        assert not result.converged
        assert result.iterations == 500
        assert result.relative_residual > 1e-15


class TestSolverConfig:
    def test_defaults(self):
        config = SolverConfig()
        assert config.rel_tol == 1e-12
        assert config.max_iter_for(400) == 1400

    @pytest.mark.parametrize("data, path", [
        ({"rel_tol": 2.0}, "$.solver.rel_tol"),
        ({"rel_tol": 0.0}, "$.solver.rel_tol"),
        ({"max_iter": 0}, "$.solver.max_iter"),
        ({"max_iter": 1.5}, "$.solver.max_iter"),
        ({"tolerance": 1e-8}, "$.solver"),
    ])
    def test_rejected(self, data, path):
        with pytest.raises(ConfigurationError) as info:
            SolverConfig.from_dict(data)
        assert info.value.path == path


class TestPoissonSolve:
    def test_square_center_value(self, square_level1):
        u = solve_poisson(square_level1, Expression("1"))
        assert u.values[7] == pytest.approx(1.0 / 16.0)
        assert u.satisfies_dirichlet()

    def test_zero_load(self, graded_lshape):
        assert not solve_poisson(graded_lshape, Expression("0")).values.any()

    def test_galerkin_orthogonality(self, graded_lshape):
        result = solve_poisson_system(graded_lshape, Expression("1/2"))
        assert result.cg.converged
        assert result.cg.relative_residual <= 1e-11
        assert result.galerkin_residual <= 1e-9 * result.load_norm

    def test_maximum_principle_on_octagon(self, octagon):
        mesh = refine_times(triangulate_initial(octagon), None, 3)[-1]
        u = solve_poisson(mesh, Expression("2"))
        peak = int(np.argmax(u.values))
        assert u.values[peak] > 0.0
        assert not mesh.boundary[peak]

    def test_sparse_input(self):
        A = SparseSpd(sp.csr_matrix(np.diag([4.0, 1.0])))
        assert cg_solve(A, [4.0, 1.0]).x == pytest.approx([1.0, 1.0])

    def test_renumbering_invariance(self, graded_lshape, rng):
        f = Expression("1 + x*y")
        u = solve_poisson(graded_lshape, f)
        perm = rng.permutation(graded_lshape.num_nodes)
        v = solve_poisson(graded_lshape.renumbered(perm), f)
        # node i of the original mesh is node perm[i] of the renumbered one
        assert v.values[perm] == pytest.approx(u.values, abs=1e-10)

    def test_iteration_cap_raises(self, graded_lshape):
        with pytest.raises(ConvergenceError) as info:
            solve_poisson_system(graded_lshape, Expression("1/2"), SolverConfig(max_iter=1))
        assert isinstance(info.value, SolverError)
        assert info.value.iterations == 1
        assert info.value.relative_residual > 1e-12
