"""
Matplotlib figures: meshes, solution surfaces and convergence histories.
"""

import logging
from pathlib import Path
from typing import Optional, Union

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402
import matplotlib.tri as mtri  # noqa: E402
import numpy as np  # noqa: E402

from core.errors import ExportError  # noqa: E402
from core.mesh import TriMesh  # noqa: E402
from solvers.assembly import FeFunction  # noqa: E402
from solvers.norms import StudyReport  # noqa: E402

logger = logging.getLogger(__name__)

PathLike = Union[str, Path]


def _save(fig, path: PathLike):
    if not str(path):
        plt.close(fig)
        raise ExportError("plot path is empty")
    try:
        Path(path).parent.mkdir(parents=True, exist_ok=True)
        fig.savefig(path, dpi=150)
    except OSError as e:
        raise ExportError(f"cannot write plot {path}: {e}")
    finally:
        plt.close(fig)
    logger.info("saved plot %s", path)


def _triangulation(mesh: TriMesh) -> mtri.Triangulation:
    return mtri.Triangulation(mesh.nodes[:, 0], mesh.nodes[:, 1], mesh.triangles)


def plot_mesh(mesh: TriMesh, path: PathLike, title: Optional[str] = None):
    """Mesh edges with singular corners marked"""
    fig, ax = plt.subplots(figsize=(7, 7))
    ax.triplot(_triangulation(mesh), color="#1f3b73", linewidth=0.4)
    singular = sorted(mesh.singular_nodes())
    if singular:
        points = mesh.nodes[singular]
        ax.scatter(points[:, 0], points[:, 1], c="red", s=30, zorder=3, label="singular corner")
        ax.legend(loc="upper right")
    ax.set_aspect("equal")
    ax.set_title(title or f"Mesh level {mesh.level} ({mesh.num_triangles} triangles)")
    _save(fig, path)


def plot_solution(solution: FeFunction, path: PathLike, title: Optional[str] = None):
    """Surface of a P1 function over its mesh"""
    mesh = solution.mesh
    fig = plt.figure(figsize=(9, 7))
    ax = fig.add_subplot(111, projection="3d")
    ax.plot_trisurf(_triangulation(mesh), solution.values, cmap="viridis", linewidth=0.0)
    ax.set_xlabel("x")
    ax.set_ylabel("y")
    ax.set_zlabel("u")
    ax.set_title(title or f"Solution on level {mesh.level}")
    _save(fig, path)


def plot_convergence(report: StudyReport, path: PathLike):
    """Log-log errors against h = 2^-j with reference slopes at the expected rates"""
    fig, ax = plt.subplots(figsize=(8, 6))
    series = [("h1_error", "|u_j - u_(j-1)|_H1", "o-"), ("l2_error", "||u_j - u_(j-1)||_L2", "s-")]
    if report.has_exact:
        series += [("exact_h1_error", "H1 error vs exact", "o--"), ("exact_l2_error", "L2 error vs exact", "s--")]

    for attribute, label, style in series:
        pairs = [(row.h, getattr(row, attribute)) for row in report.rows
                 if getattr(row, attribute) is not None and getattr(row, attribute) > 0.0]
        if len(pairs) < 2:
            continue
        h, err = np.array(pairs).T
        ax.loglog(h, err, style, label=label)

    rows = [row for row in report.rows if row.h1_error]
    if rows:
        h = np.array([row.h for row in rows])
        for rate, name in ((report.expected_h1, "H1"), (report.expected_l2, "L2")):
            anchor = rows[0].h1_error if name == "H1" else rows[0].l2_error
            ax.loglog(h, anchor * (h / h[0]) ** rate, ":", color="gray", linewidth=0.8,
                      label=f"slope {rate:.3f} ({name})")

    ax.invert_xaxis()
    ax.set_xlabel("h = 2^-j")
    ax.set_ylabel("error")
    ax.set_title(f"Convergence: {report.name}")
    ax.grid(True, which="both", alpha=0.3)
    ax.legend(fontsize=8)
    fig.tight_layout()
    _save(fig, path)
