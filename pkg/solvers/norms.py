"""
Error measurement for P1 functions on nested meshes.

Norms of P1 functions are computed exactly: constant gradients for the H1
seminorm, the element mass matrix for L2. Errors against an exact solution
and the corner-weighted norm use element quadrature.
"""

import logging
import math
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np

from core.errors import ConfigurationError, MeshError
from core.geometry import GradingSpec, PolygonDomain
from core.mesh import TriMesh
from solvers.assembly import FeFunction, Field, element_gradients, evaluate_field
from solvers.quadrature import get_rule

logger = logging.getLogger(__name__)


def _check_nested(coarse: TriMesh, fine: TriMesh):
    depth = len(coarse.steps)
    if len(fine.steps) < depth or any(a is not b for a, b in zip(coarse.steps, fine.steps)):
        raise MeshError("meshes are not nested: refinement histories differ")
    if len(fine.steps) > depth and fine.steps[depth].parent_node_count != coarse.num_nodes:
        raise MeshError("meshes are not nested: node counts do not match the refinement history")
    if fine.num_nodes < coarse.num_nodes or not np.array_equal(fine.nodes[:coarse.num_nodes], coarse.nodes):
        raise MeshError("meshes are not nested: coarse nodes are not fine nodes")


def prolongate(coarse: FeFunction, fine_mesh: TriMesh) -> FeFunction:
    """
    Exact representation of a coarse P1 function on a refinement of its mesh.
    A node placed at D = (1 - s) A + s B gets (1 - s) v(A) + s v(B).
    """
    _check_nested(coarse.mesh, fine_mesh)
    values = coarse.values
    for step in fine_mesh.steps[len(coarse.mesh.steps):]:
        a, b = step.edges[:, 0], step.edges[:, 1]
        values = np.concatenate([values, (1.0 - step.fractions) * values[a] + step.fractions * values[b]])
    return FeFunction(fine_mesh, values)


def h1_seminorm(v: FeFunction) -> float:
    """|v|_H1, exact for P1"""
    area, _, _ = element_gradients(v.mesh)
    grads = v.gradients()
    return math.sqrt(float(np.sum(area * (grads ** 2).sum(axis=1))))


def l2_norm(v: FeFunction) -> float:
    """||v||_L2, exact via the element mass matrix area/12 * (sum v^2 + (sum v)^2)"""
    area, _, _ = element_gradients(v.mesh)
    local = v.values[v.mesh.triangles]
    return math.sqrt(float(np.sum(area / 12.0 * ((local ** 2).sum(axis=1) + local.sum(axis=1) ** 2))))


def error_between_levels(u_fine: FeFunction, u_coarse: FeFunction) -> Tuple[float, float]:
    """(H1 seminorm, L2 norm) of u_fine - u_coarse, measured on the fine mesh"""
    difference = u_fine - prolongate(u_coarse, u_fine.mesh)
    return h1_seminorm(difference), l2_norm(difference)


def error_vs_exact(u_h: FeFunction, u: Field, du_dx: Field, du_dy: Field,
                   quad_order: int = 3) -> Tuple[float, float]:
    """(H1 seminorm, L2 norm) of u - u_h by element quadrature"""
    mesh = u_h.mesh
    rule = get_rule(quad_order)
    area, _, _ = element_gradients(mesh)
    points = rule.points(mesh.nodes[mesh.triangles])
    x, y = points[:, :, 0], points[:, :, 1]

    value_error = evaluate_field(u, x, y) - u_h.at_barycentric(rule.barycentric)
    grads = u_h.gradients()
    dx_error = evaluate_field(du_dx, x, y) - grads[:, 0:1]
    dy_error = evaluate_field(du_dy, x, y) - grads[:, 1:2]

    weights = area[:, None] * rule.weights[None, :]
    l2 = math.sqrt(float(np.sum(weights * value_error ** 2)))
    h1 = math.sqrt(float(np.sum(weights * (dx_error ** 2 + dy_error ** 2))))
    return h1, l2


def convergence_rate(errors: Sequence[float]) -> List[float]:
    """Rate indicator log2(e_j / e_{j+1}) for consecutive errors"""
    if len(errors) < 2:
        raise ConfigurationError(f"need at least 2 errors, got {len(errors)}", path="errors")
    for i, e in enumerate(errors):
        if not e > 0.0:
            raise ConfigurationError(f"errors must be positive, got {e!r}", path=f"errors[{i}]")
    return [math.log2(errors[j] / errors[j + 1]) for j in range(len(errors) - 1)]


def rate_or_none(previous: Optional[float], current: Optional[float]) -> Optional[float]:
    if previous is None or current is None or not previous > 0.0 or not current > 0.0:
        return None
    return math.log2(previous / current)


def rho(x, corners: Sequence[Sequence[float]]):
    """Product of distances from x to the corners; 1 without corners"""
    points = np.asarray(x, dtype=float)
    result = np.ones(points.shape[:-1])
    for corner in corners:
        result = result * np.linalg.norm(points - np.asarray(corner, dtype=float), axis=-1)
    return float(result) if result.ndim == 0 else result


def singular_corner_points(mesh: TriMesh) -> List[Tuple[float, float]]:
    return [tuple(mesh.nodes[node]) for node in sorted(mesh.singular_nodes())]


def weighted_k1_norm(v: FeFunction, a: float, corners: Optional[Sequence[Sequence[float]]] = None,
                     quad_order: int = 5) -> float:
    """
    Corner-weighted norm (rho^-2a |v|^2 + rho^(2-2a) |grad v|^2 integrated)^(1/2),
    with rho over the singular corners of the mesh unless corners are given.
    """
    rule = get_rule(quad_order)
    if not rule.interior():
        raise ConfigurationError(f"quadrature order {quad_order} has points on element boundaries; "
                                 "the weight is singular at corners", path="$.weighted.quad_order")
    mesh = v.mesh
    corners = singular_corner_points(mesh) if corners is None else corners
    area, _, _ = element_gradients(mesh)
    points = rule.points(mesh.nodes[mesh.triangles])
    weight = rho(points, corners)
    values = v.at_barycentric(rule.barycentric)
    grad2 = (v.gradients() ** 2).sum(axis=1)[:, None]
    integrand = weight ** (-2.0 * a) * values ** 2 + weight ** (2.0 - 2.0 * a) * grad2
    return math.sqrt(float(np.sum(area[:, None] * rule.weights[None, :] * integrand)))


def expected_rates(polygon: PolygonDomain, grading: GradingSpec) -> Tuple[float, float, float]:
    """(theta', H1 rate theta', L2 rate min(2 theta', theta' + 1))"""
    theta_prime = grading.effective_theta(polygon)
    return theta_prime, theta_prime, min(2.0 * theta_prime, theta_prime + 1.0)


class LevelRecord:
    """One row of a convergence study"""

    def __init__(self, level: int, nodes: int, triangles: int):
        self.level = level
        self.nodes = nodes
        self.triangles = triangles
        self.h = 2.0 ** -level
        self.h1_error: Optional[float] = None
        self.l2_error: Optional[float] = None
        self.h1_rate: Optional[float] = None
        self.l2_rate: Optional[float] = None
        self.exact_h1_error: Optional[float] = None
        self.exact_l2_error: Optional[float] = None
        self.exact_h1_rate: Optional[float] = None
        self.exact_l2_rate: Optional[float] = None
        self.weighted_norm: Optional[float] = None
        self.iterations = 0
        self.relative_residual = 0.0
        self.galerkin_residual = 0.0
        self.unknowns = 0

    def to_dict(self) -> Dict:
        return {
            "j": self.level,
            "nodes": self.nodes,
            "triangles": self.triangles,
            "h": self.h,
            "unknowns": self.unknowns,
            "H1_err": self.h1_error,
            "H1_rate": self.h1_rate,
            "L2_err": self.l2_error,
            "L2_rate": self.l2_rate,
            "exact_H1_err": self.exact_h1_error,
            "exact_H1_rate": self.exact_h1_rate,
            "exact_L2_err": self.exact_l2_error,
            "exact_L2_rate": self.exact_l2_rate,
            "weighted_norm": self.weighted_norm,
            "cg_iterations": self.iterations,
            "relative_residual": self.relative_residual,
            "galerkin_residual": self.galerkin_residual,
        }


class StudyReport:
    """
    Per-level errors and rates of a study. Row j >= 1 holds |u_j - u_{j-1}|;
    its rate compares it with row j-1, so successive-difference rates start
    at j = 2.
    """

    def __init__(self, name: str, theta_prime: float, expected_h1: float, expected_l2: float,
                 has_exact: bool = False, kappa: Optional[Dict[int, float]] = None):
        self.name = name
        self.theta_prime = theta_prime
        self.expected_h1 = expected_h1
        self.expected_l2 = expected_l2
        self.has_exact = has_exact
        self.kappa = dict(kappa or {})
        self.rows: List[LevelRecord] = []

    def add(self, record: LevelRecord):
        if self.rows:
            previous = self.rows[-1]
            record.h1_rate = rate_or_none(previous.h1_error, record.h1_error)
            record.l2_rate = rate_or_none(previous.l2_error, record.l2_error)
            record.exact_h1_rate = rate_or_none(previous.exact_h1_error, record.exact_h1_error)
            record.exact_l2_rate = rate_or_none(previous.exact_l2_error, record.exact_l2_error)
        self.rows.append(record)

    def final(self) -> LevelRecord:
        if not self.rows:
            raise IndexError("study report has no rows")
        return self.rows[-1]

    def column(self, name: str) -> List[Optional[float]]:
        return [getattr(row, name) for row in self.rows]

    def to_dict(self) -> Dict:
        return {
            "name": self.name,
            "theta_prime": self.theta_prime,
            "expected_H1_rate": self.expected_h1,
            "expected_L2_rate": self.expected_l2,
            "kappa": {str(k): v for k, v in sorted(self.kappa.items())},
            "rows": [row.to_dict() for row in self.rows],
        }
