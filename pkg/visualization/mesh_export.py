"""
File exports: SVG mesh drawings, legacy VTK meshes with the solution, and
the study tables as CSV and JSON.
"""

import csv
import io
import json
import logging
from pathlib import Path
from typing import Optional, Tuple, Union

import numpy as np

from core.errors import ExportError
from core.mesh import TriMesh
from solvers.assembly import FeFunction
from solvers.norms import StudyReport

logger = logging.getLogger(__name__)

PathLike = Union[str, Path]

SVG_SIZE = 800.0
SVG_MARGIN = 20.0


def _target(path: PathLike) -> Path:
    if path is None or not str(path):
        raise ExportError("output path is empty")
    target = Path(path)
    if target.parent and not target.parent.exists():
        try:
            target.parent.mkdir(parents=True, exist_ok=True)
        except OSError as e:
            raise ExportError(f"cannot create directory {target.parent}: {e}")
    return target


def _write_text(path: PathLike, text: str):
    target = _target(path)
    try:
        with open(target, "w", newline="") as f:
            f.write(text)
    except OSError as e:
        raise ExportError(f"cannot write {target}: {e}")
    logger.debug("wrote %s (%d bytes)", target, len(text))


def svg_text(mesh: TriMesh, stroke: str = "#1f3b73") -> str:
    """SVG drawing with one line per mesh edge and a dot on every singular corner"""
    lo = mesh.nodes.min(axis=0)
    hi = mesh.nodes.max(axis=0)
    extent = float(max(hi[0] - lo[0], hi[1] - lo[1])) or 1.0
    scale = (SVG_SIZE - 2.0 * SVG_MARGIN) / extent
    width = (hi[0] - lo[0]) * scale + 2.0 * SVG_MARGIN
    height = (hi[1] - lo[1]) * scale + 2.0 * SVG_MARGIN

    def to_svg(point) -> Tuple[float, float]:
        # y axis points down in SVG
        return (point[0] - lo[0]) * scale + SVG_MARGIN, (hi[1] - point[1]) * scale + SVG_MARGIN

    lines = [
        '<?xml version="1.0" encoding="UTF-8"?>',
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{width:.1f}" height="{height:.1f}" '
        f'viewBox="0 0 {width:.1f} {height:.1f}">',
        f'<rect width="100%" height="100%" fill="white"/>',
        f'<g stroke="{stroke}" stroke-width="0.5" stroke-linecap="round">',
    ]
    for a, b in mesh.edge_table().edges:
        x1, y1 = to_svg(mesh.nodes[a])
        x2, y2 = to_svg(mesh.nodes[b])
        lines.append(f'<line x1="{x1:.4f}" y1="{y1:.4f}" x2="{x2:.4f}" y2="{y2:.4f}"/>')
    lines.append("</g>")
    for node in sorted(mesh.singular_nodes()):
        cx, cy = to_svg(mesh.nodes[node])
        lines.append(f'<circle cx="{cx:.4f}" cy="{cy:.4f}" r="4" fill="#d62728"/>')
    lines.append("</svg>")
    return "\n".join(lines) + "\n"


def export_svg(mesh: TriMesh, path: PathLike):
    _write_text(path, svg_text(mesh))
    logger.info("exported mesh level %d to %s", mesh.level, path)


def vtk_text(mesh: TriMesh, solution: Optional[FeFunction] = None, title: str = "P1 solution") -> str:
    """Legacy ASCII VTK unstructured grid; the solution becomes point scalar 'u'"""
    n, m = mesh.num_nodes, mesh.num_triangles
    out = [
        "# vtk DataFile Version 3.0",
        title,
        "ASCII",
        "DATASET UNSTRUCTURED_GRID",
        f"POINTS {n} double",
    ]
    out.extend(f"{x!r} {y!r} 0.0" for x, y in mesh.nodes.tolist())
    out.append(f"CELLS {m} {4 * m}")
    out.extend(f"3 {i} {j} {k}" for i, j, k in mesh.triangles.tolist())
    out.append(f"CELL_TYPES {m}")
    out.extend("5" for _ in range(m))
    if solution is not None:
        if solution.mesh.num_nodes != n:
            raise ExportError(f"solution has {solution.mesh.num_nodes} nodes, mesh has {n}")
        out.append(f"POINT_DATA {n}")
        out.append("SCALARS u double 1")
        out.append("LOOKUP_TABLE default")
        out.extend(repr(v) for v in solution.values.tolist())
    return "\n".join(out) + "\n"


def export_vtk(mesh: TriMesh, solution: Optional[FeFunction], path: PathLike):
    _write_text(path, vtk_text(mesh, solution))
    logger.info("exported VTK for level %d to %s", mesh.level, path)


def read_vtk(path: PathLike) -> Tuple[np.ndarray, np.ndarray, Optional[np.ndarray]]:
    """Points (N, 3), triangles (M, 3) and point scalars of a file written by export_vtk"""
    if not str(path):
        raise ExportError("input path is empty")
    try:
        tokens = Path(path).read_text().split("\n")
    except OSError as e:
        raise ExportError(f"cannot read {path}: {e}")

    points = cells = scalars = None
    i = 0
    try:
        while i < len(tokens):
            line = tokens[i].split()
            if line and line[0] == "POINTS":
                count = int(line[1])
                points = np.array([[float(v) for v in tokens[i + 1 + r].split()] for r in range(count)])
                i += count
            elif line and line[0] == "CELLS":
                count = int(line[1])
                cells = np.array([[int(v) for v in tokens[i + 1 + r].split()[1:]] for r in range(count)],
                                 dtype=np.int64)
                i += count
            elif line and line[0] == "LOOKUP_TABLE" and points is not None:
                scalars = np.array([float(tokens[i + 1 + r]) for r in range(len(points))])
                i += len(points)
            i += 1
    except (ValueError, IndexError) as e:
        raise ExportError(f"{path} is not a readable VTK file: {e}")
    if points is None or cells is None:
        raise ExportError(f"{path} has no POINTS/CELLS sections")
    return points, cells.reshape(-1, 3), scalars


def _err(value: Optional[float]) -> str:
    return "-" if value is None else f"{value:.4e}"


def _rate(value: Optional[float]) -> str:
    return "-" if value is None else f"{value:.4f}"


def report_csv(report: StudyReport) -> str:
    """Study table: one row per level, errors in scientific notation, rates to 4 decimals"""
    header = ["j", "nodes", "triangles", "H1_err", "H1_rate", "L2_err", "L2_rate"]
    if report.has_exact:
        header += ["exact_H1_err", "exact_H1_rate", "exact_L2_err", "exact_L2_rate"]
    weighted = any(row.weighted_norm is not None for row in report.rows)
    if weighted:
        header.append("weighted_norm")

    buffer = io.StringIO()
    writer = csv.writer(buffer, lineterminator="\n")
    writer.writerow(header)
    for row in report.rows:
        cells = [row.level, row.nodes, row.triangles,
                 _err(row.h1_error), _rate(row.h1_rate), _err(row.l2_error), _rate(row.l2_rate)]
        if report.has_exact:
            cells += [_err(row.exact_h1_error), _rate(row.exact_h1_rate),
                      _err(row.exact_l2_error), _rate(row.exact_l2_rate)]
        if weighted:
            cells.append(_err(row.weighted_norm))
        writer.writerow(cells)
    return buffer.getvalue()


def write_csv(report: StudyReport, path: PathLike):
    _write_text(path, report_csv(report))
    logger.info("wrote study table to %s", path)


def write_json(report: StudyReport, path: PathLike):
    _write_text(path, json.dumps(report.to_dict(), indent=2, sort_keys=True) + "\n")
    logger.info("wrote study report to %s", path)
