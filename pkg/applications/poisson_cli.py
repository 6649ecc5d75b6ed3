#!/usr/bin/env python3
"""
Command-line driver.

    poisson_cli.py study configs/lshape_graded.yaml --output-dir out/
    poisson_cli.py mesh --domain lshape --refine 3 --kappa 0.1 --svg out.svg
    poisson_cli.py validate mesh.txt --domain lshape
"""


# Add project root to Python path for imports
import os
import sys
project_root = os.path.dirname(os.path.dirname(os.path.abspath(__file__)))
if project_root not in sys.path:
    sys.path.insert(0, project_root)

import argparse
import json
import logging
import time

from controllers.study_config import load_study_config
from controllers.study_controller import run_study
from core.errors import ConfigurationError, FemError
from core.geometry import GradingSpec, grading_from_dict, load_polygon
from core.mesh import validate
from meshing.mesh_format import read_mesh_file, write_mesh_file
from meshing.refinement import compute_layers, refine_times
from meshing.triangulation import triangulate_initial
from solvers.norms import LevelRecord
from visualization.mesh_export import export_svg, export_vtk

logger = logging.getLogger(__name__)


def _fmt(value) -> str:
    return "-" if value is None else f"{value:.4e}"


def _rate(value) -> str:
    return "-" if value is None else f"{value:.4f}"


def cmd_study(args) -> int:
    config = load_study_config(args.config)
    print(f"🔺 Study '{config.name}': {config.polygon}, {config.grading}, levels 0..{config.levels}")

    def progress(record: LevelRecord):
        if not args.quiet:
            print(f"🧮 j={record.level:2d}  nodes={record.nodes:8d}  H1={_fmt(record.h1_error)} "
                  f"({_rate(record.h1_rate)})  L2={_fmt(record.l2_error)} ({_rate(record.l2_rate)})  "
                  f"cg={record.iterations}")

    start = time.time()
    report = run_study(config, output_dir=args.output_dir, progress=progress,
                       write_artifacts=not args.no_artifacts)
    final = report.final()
    print(f"📈 Final rates: H1 {_rate(final.h1_rate)} (expected {report.expected_h1:.4f}), "
          f"L2 {_rate(final.l2_rate)} (expected {report.expected_l2:.4f})")
    print(f"✅ Study finished in {time.time() - start:.1f}s")
    return 0


def cmd_mesh(args) -> int:
    if args.polygon:
        try:
            with open(args.polygon) as f:
                data = json.load(f)
        except (OSError, ValueError) as e:
            raise ConfigurationError(f"cannot read polygon file {args.polygon}: {e}", path="$")
        polygon, grading = load_polygon(data)
    else:
        polygon, grading = load_polygon(args.domain)

    if args.kappa is not None or args.theta is not None:
        if args.kappa is not None:
            grading = GradingSpec.from_kappa(polygon, args.kappa)
        else:
            grading = grading_from_dict(polygon, {"theta": args.theta, "a": args.a})
    grading = grading or GradingSpec.uniform(polygon)

    print(f"🔺 Meshing {polygon} with {grading}")
    meshes = refine_times(triangulate_initial(polygon), grading, args.refine)
    mesh = meshes[-1]
    quality = mesh.quality()
    print(f"   level {mesh.level}: {mesh.num_nodes} nodes, {mesh.num_triangles} triangles, "
          f"angles {quality['min_angle_deg']:.2f}..{quality['max_angle_deg']:.2f} deg")

    if args.layers:
        for corner in sorted(mesh.singular_corners):
            for stats in compute_layers(mesh, corner).statistics(mesh):
                print(f"   corner {corner} layer {stats.layer}: {stats.triangle_count} triangles, "
                      f"area {stats.area:.4e}, r in [{stats.min_distance:.4e}, {stats.max_distance:.4e}]")

    if args.svg:
        export_svg(mesh, args.svg)
        print(f"📄 SVG written to {args.svg}")
    if args.vtk:
        export_vtk(mesh, None, args.vtk)
        print(f"📄 VTK written to {args.vtk}")
    if args.save:
        write_mesh_file(mesh, args.save)
        print(f"📄 Mesh written to {args.save}")
    if args.plot:
        from visualization.mesh_plotter import plot_mesh
        plot_mesh(mesh, args.plot)
        print(f"📊 Plot written to {args.plot}")
    print("✅ Done")
    return 0


def cmd_validate(args) -> int:
    mesh = read_mesh_file(args.mesh)
    polygon = load_polygon(args.domain)[0] if args.domain else None
    report = validate(mesh, polygon)
    if report.is_valid:
        print(f"✅ {args.mesh}: valid ({mesh.num_nodes} nodes, {mesh.num_triangles} triangles)")
        return 0
    print(f"❌ {args.mesh}: {len(report.violations)} violation(s)")
    for violation in report.violations:
        print(f"   {violation}")
    return 1


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(description="Graded-mesh P1 Poisson toolkit")
    parser.add_argument("--verbose", action="store_true", help="Debug logging")
    parser.add_argument("--quiet", action="store_true", help="Suppress per-level progress lines")
    commands = parser.add_subparsers(dest="command", required=True)

    study = commands.add_parser("study", help="Run a convergence study from a JSON/YAML config")
    study.add_argument("config", help="Study config file")
    study.add_argument("--output-dir", default=".", help="Directory for relative output paths")
    study.add_argument("--no-artifacts", action="store_true", help="Do not write CSV/JSON/SVG/VTK files")
    study.set_defaults(handler=cmd_study)

    mesh = commands.add_parser("mesh", help="Build, refine and export a mesh")
    source = mesh.add_mutually_exclusive_group()
    source.add_argument("--domain", default="lshape", help="Built-in domain name")
    source.add_argument("--polygon", help="Polygon JSON file")
    mesh.add_argument("--refine", type=int, default=0, help="Number of refinements")
    mesh.add_argument("--kappa", type=float, help="Grading parameter at every singular corner")
    mesh.add_argument("--theta", type=float, help="Target order (with --a)")
    mesh.add_argument("--a", type=float, help="Weight exponent for every singular corner (with --theta)")
    mesh.add_argument("--svg", help="SVG output path")
    mesh.add_argument("--vtk", help="VTK output path")
    mesh.add_argument("--save", help="Mesh text output path")
    mesh.add_argument("--plot", help="PNG mesh plot path")
    mesh.add_argument("--layers", action="store_true", help="Print layer statistics")
    mesh.set_defaults(handler=cmd_mesh)

    check = commands.add_parser("validate", help="Validate a mesh text file")
    check.add_argument("mesh", help="Mesh file")
    check.add_argument("--domain", help="Built-in domain to check boundary placement against")
    check.set_defaults(handler=cmd_validate)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    if args.command == "mesh":
        if args.refine < 0:
            parser.error("--refine must be >= 0")
        if args.kappa is not None and args.theta is not None:
            parser.error("give either --kappa or --theta/--a")
        if (args.theta is None) != (args.a is None):
            parser.error("--theta and --a go together")

    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING,
                        format="%(asctime)s %(levelname)s %(name)s: %(message)s")
    try:
        return args.handler(args)
    except FemError as e:
        print(f"❌ {e}", file=sys.stderr)
        return 1
    except KeyboardInterrupt:
        print("\n🛑 Interrupted")
        return 1


if __name__ == "__main__":
    sys.exit(main())
