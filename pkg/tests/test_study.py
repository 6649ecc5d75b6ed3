import json

import pytest

from controllers.study_config import StudyConfig
from controllers.study_controller import StudyController, run_study
from core.errors import AssemblyError, ConvergenceError, StudyError
from visualization.mesh_export import read_vtk


def square_config(**overrides):
    data = {"polygon": "square", "f": "1", "levels": 3}
    data.update(overrides)
    return StudyConfig.from_dict(data)


class TestStudyController:
    def test_rows_and_rates(self):
        report = run_study(square_config(), write_artifacts=False)
        assert [row.level for row in report.rows] == [0, 1, 2, 3]
        assert [row.triangles for row in report.rows] == [2, 8, 32, 128]
        assert report.final().nodes == 81
        assert report.final().unknowns == 49
        assert report.rows[0].h1_error is None
        assert report.rows[1].h1_error > 0.0 and report.rows[1].h1_rate is None
        assert all(row.h1_rate is not None for row in report.rows[2:])
        assert (report.expected_h1, report.expected_l2) == pytest.approx((1.0, 2.0))

    def test_residuals_recorded(self):
        report = run_study(square_config(), write_artifacts=False)
        for row in report.rows[1:]:
            assert row.iterations > 0
            assert row.relative_residual <= 1e-11
            assert row.galerkin_residual <= 1e-9

    def test_level_without_interior_nodes_is_zero(self):
        report = run_study(square_config(levels=1), write_artifacts=False)
        assert report.rows[0].unknowns == 0 and report.rows[0].iterations == 0

    def test_exact_errors(self):
        config = square_config(f="2", exact={"u": "x*(1 - x)", "du_dx": "1 - 2*x", "du_dy": "0"})
        report = run_study(config, write_artifacts=False)
        assert all(row.exact_h1_error is not None for row in report.rows)
        assert report.rows[-1].exact_l2_rate is not None

    def test_level_differences_bounded_by_exact_errors(self):
        exact = {"u": "sin(pi*x)*sin(pi*y)", "du_dx": "pi*cos(pi*x)*sin(pi*y)", "du_dy": "pi*sin(pi*x)*cos(pi*y)"}
        config = square_config(f="2*pi^2*sin(pi*x)*sin(pi*y)", levels=4, exact=exact,
                               quad_order=3, exact_quad_order=5)
        rows = run_study(config, write_artifacts=False).rows
        for coarse, fine in zip(rows[1:], rows[2:]):
            low = abs(coarse.exact_h1_error - fine.exact_h1_error)
            assert low * (1.0 - 1e-6) <= fine.h1_error <= (coarse.exact_h1_error + fine.exact_h1_error) * (1.0 + 1e-6)
            assert fine.l2_error <= (coarse.exact_l2_error + fine.exact_l2_error) * (1.0 + 1e-6)

    def test_weighted_norm(self):
        report = run_study(square_config(polygon="lshape", kappa=0.2, weighted={"a": 0.5}, levels=2),
                           write_artifacts=False)
        assert report.rows[0].weighted_norm is None
        assert report.rows[2].weighted_norm > 0.0

    def test_progress_callback(self):
        seen = []
        StudyController(square_config(), progress=seen.append, write_artifacts=False).run()
        assert [record.level for record in seen] == [0, 1, 2, 3]

    def test_failure_names_level(self):
        with pytest.raises(StudyError) as info:
            run_study(square_config(f="sqrt(x - 0.5)"), write_artifacts=False)
        assert info.value.level == 1
        assert isinstance(info.value.cause, AssemblyError)

    def test_unconverged_solve_fails_the_level(self):
        with pytest.raises(StudyError) as info:
            run_study(square_config(solver={"max_iter": 1}), write_artifacts=False)
        assert info.value.level in (2, 3)
        assert isinstance(info.value.cause, ConvergenceError)
        assert info.value.cause.relative_residual > 1e-12

    def test_repeated_runs_are_identical(self, tmp_path):
        config = square_config(polygon="lshape", kappa=0.3, outputs={"csv": "rates.csv", "json": "rates.json"})
        for name in ("first", "second"):
            run_study(config, output_dir=tmp_path / name)
        for artifact in ("rates.csv", "rates.json"):
            assert (tmp_path / "first" / artifact).read_bytes() == (tmp_path / "second" / artifact).read_bytes()


class TestArtifacts:
    def test_configured_outputs(self, tmp_path):
        config = square_config(outputs={"csv": "square.csv", "json": "square.json",
                                        "svg_levels": [0, 2], "vtk_level": 2})
        controller = StudyController(config, output_dir=tmp_path)
        report = controller.run()
        names = sorted(path.name for path in controller.artifacts)
        assert names == ["mesh_level_0.svg", "mesh_level_2.svg", "solution_level_2.vtk",
                         "square.csv", "square.json"]

        lines = (tmp_path / "square.csv").read_text().splitlines()
        assert lines[0] == "j,nodes,triangles,H1_err,H1_rate,L2_err,L2_rate"
        assert len(lines) == 5

        data = json.loads((tmp_path / "square.json").read_text())
        assert len(data["rows"]) == 4
        assert data["rows"][3]["H1_rate"] == pytest.approx(report.final().h1_rate)

        points, cells, scalars = read_vtk(tmp_path / "solution_level_2.vtk")
        assert points.shape == (25, 3) and cells.shape == (32, 3)
        assert scalars.max() > 0.0

    def test_disabled(self, tmp_path):
        config = square_config(outputs={"csv": "square.csv"})
        controller = StudyController(config, output_dir=tmp_path, write_artifacts=False)
        controller.run()
        assert controller.artifacts == []
        assert not (tmp_path / "square.csv").exists()

    def test_plot(self, tmp_path):
        controller = StudyController(square_config(outputs={"plot": "rates.png"}), output_dir=tmp_path)
        controller.run()
        assert (tmp_path / "rates.png").stat().st_size > 0

    def test_solution_plot_at_final_level(self, tmp_path):
        config = square_config(outputs={"solution_plot": "{name}_u_{level}.png"})
        controller = StudyController(config, output_dir=tmp_path)
        controller.run()
        assert [path.name for path in controller.artifacts] == ["square_u_3.png"]
        assert (tmp_path / "square_u_3.png").stat().st_size > 0
