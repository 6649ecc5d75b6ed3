"""
Convergence study controller.

Builds the initial mesh, refines level by level, solves on every level and
measures successive-difference errors (plus errors against an exact
solution when one is configured). Artifacts are written as the study goes.
"""

import logging
import time
from pathlib import Path
from typing import Callable, Optional, Union

from core.errors import FemError, StudyError
from core.mesh import TriMesh, validate
from meshing.refinement import refine
from meshing.triangulation import triangulate_initial
from solvers.assembly import FeFunction
from solvers.cg import solve_poisson_system
from solvers.norms import (LevelRecord, StudyReport, error_between_levels, error_vs_exact,
                           expected_rates, prolongate, weighted_k1_norm)
from controllers.study_config import StudyConfig
from visualization.mesh_export import export_svg, export_vtk, write_csv, write_json

logger = logging.getLogger(__name__)

ProgressCallback = Callable[[LevelRecord], None]


class StudyController:
    """Runs one study configuration"""

    def __init__(self, config: StudyConfig, output_dir: Union[str, Path, None] = None,
                 progress: Optional[ProgressCallback] = None, write_artifacts: bool = True):
        self.config = config
        self.output_dir = Path(output_dir) if output_dir is not None else Path.cwd()
        self.progress = progress
        self.write_artifacts = write_artifacts
        self.artifacts = []

    def _solve_level(self, mesh: TriMesh, record: LevelRecord) -> FeFunction:
        if not len(mesh.interior_nodes()):
            # nothing to solve: the only discrete function is zero
            logger.info("level %d has no interior nodes; solution is zero", mesh.level)
            return FeFunction.zeros(mesh)
        result = solve_poisson_system(mesh, self.config.f, self.config.solver, self.config.quad_order)
        record.unknowns = result.stiffness.dimension
        record.iterations = result.cg.iterations
        record.relative_residual = result.cg.relative_residual
        record.galerkin_residual = (result.galerkin_residual / result.load_norm
                                    if result.load_norm > 0.0 else 0.0)
        return result.solution

    def _measure(self, record: LevelRecord, solution: FeFunction, previous: Optional[FeFunction]):
        config = self.config
        if previous is not None:
            record.h1_error, record.l2_error = error_between_levels(solution, previous)
            if config.weighted_a is not None:
                difference = solution - prolongate(previous, solution.mesh)
                record.weighted_norm = weighted_k1_norm(difference, config.weighted_a)
        if config.exact is not None:
            record.exact_h1_error, record.exact_l2_error = error_vs_exact(
                solution, config.exact.u, config.exact.du_dx, config.exact.du_dy,
                config.exact_quad_order)

    def _level_artifacts(self, mesh: TriMesh, solution: FeFunction):
        outputs = self.config.outputs
        if not self.write_artifacts:
            return
        if mesh.level in outputs.svg_levels:
            path = outputs.resolve(outputs.svg_pattern.format(level=mesh.level, name=self.config.name),
                                   self.output_dir)
            export_svg(mesh, path)
            self.artifacts.append(path)
        if outputs.vtk_level == mesh.level:
            path = outputs.resolve(outputs.vtk_path.format(level=mesh.level, name=self.config.name),
                                   self.output_dir)
            export_vtk(mesh, solution, path)
            self.artifacts.append(path)
        if outputs.solution_plot and mesh.level == self.config.levels:
            from visualization.mesh_plotter import plot_solution
            path = outputs.resolve(outputs.solution_plot.format(level=mesh.level, name=self.config.name),
                                   self.output_dir)
            plot_solution(solution, path, title=f"{self.config.name}, level {mesh.level}")
            self.artifacts.append(path)

    def _report_artifacts(self, report: StudyReport):
        outputs = self.config.outputs
        if not self.write_artifacts:
            return
        if outputs.csv:
            path = outputs.resolve(outputs.csv, self.output_dir)
            write_csv(report, path)
            self.artifacts.append(path)
        if outputs.json:
            path = outputs.resolve(outputs.json, self.output_dir)
            write_json(report, path)
            self.artifacts.append(path)
        if outputs.plot:
            from visualization.mesh_plotter import plot_convergence
            path = outputs.resolve(outputs.plot, self.output_dir)
            plot_convergence(report, path)
            self.artifacts.append(path)

    def run(self) -> StudyReport:
        config = self.config
        theta_prime, expected_h1, expected_l2 = expected_rates(config.polygon, config.grading)
        report = StudyReport(config.name, theta_prime, expected_h1, expected_l2,
                             has_exact=config.exact is not None,
                             kappa=config.grading.singular_kappa())
        logger.info("study '%s': %s, %s, %d levels, expected rates H1 %.4f / L2 %.4f",
                    config.name, config.polygon, config.grading, config.levels,
                    expected_h1, expected_l2)

        mesh: Optional[TriMesh] = None
        previous: Optional[FeFunction] = None
        for level in range(config.levels + 1):
            start = time.time()
            try:
                if mesh is None:
                    mesh = triangulate_initial(config.polygon)
                    check = validate(mesh, config.polygon)
                    if not check.is_valid:
                        raise StudyError(level, FemError(f"initial mesh invalid:\n{check}"))
                else:
                    mesh = refine(mesh, config.grading, check=False)
                record = LevelRecord(level, mesh.num_nodes, mesh.num_triangles)
                solution = self._solve_level(mesh, record)
                self._measure(record, solution, previous)
                self._level_artifacts(mesh, solution)
            except StudyError:
                raise
            except FemError as e:
                raise StudyError(level, e) from e

            report.add(record)
            previous = solution
            logger.info("level %d: %d nodes, %d triangles (%.2fs)",
                        level, mesh.num_nodes, mesh.num_triangles, time.time() - start)
            if self.progress is not None:
                self.progress(record)

        try:
            self._report_artifacts(report)
        except FemError as e:
            raise StudyError(config.levels, e) from e
        logger.info("study '%s' finished", config.name)
        return report


def run_study(config: StudyConfig, output_dir: Union[str, Path, None] = None,
              progress: Optional[ProgressCallback] = None, write_artifacts: bool = True) -> StudyReport:
    """Run a study and write its configured artifacts"""
    return StudyController(config, output_dir, progress, write_artifacts).run()
