"""
P1 finite element assembly.

Stiffness and load are assembled over interior nodes only; homogeneous
Dirichlet data is imposed by eliminating boundary rows and columns.
Element loops are vectorised with numpy and accumulated in element order,
so results are bitwise reproducible.
"""

import logging
from typing import Callable, Optional, Union

import numpy as np
import scipy.sparse as sp

from core.errors import AssemblyError, ExpressionDomainError, MeshError
from core.expression import Expression, Node, evaluate
from core.mesh import TriMesh
from solvers.quadrature import get_rule

logger = logging.getLogger(__name__)

Field = Union[Expression, Node, Callable, float, int]


def evaluate_field(func: Field, x: np.ndarray, y: np.ndarray) -> np.ndarray:
    """Evaluate an expression, AST, callable or constant at points"""
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    if isinstance(func, (int, float)):
        return np.full(np.broadcast(x, y).shape, float(func))
    if isinstance(func, Expression):
        return func(x, y)
    if callable(func):
        return np.broadcast_to(np.asarray(func(x, y), dtype=float), np.broadcast(x, y).shape)
    return evaluate(func, x, y)


def element_gradients(mesh: TriMesh):
    """
    Signed areas and the unnormalised P1 gradient components per element:
    grad(phi_k) = (b_k, c_k) / (2 * area).
    """
    p = mesh.nodes[mesh.triangles]
    x, y = p[:, :, 0], p[:, :, 1]
    b = np.stack([y[:, 1] - y[:, 2], y[:, 2] - y[:, 0], y[:, 0] - y[:, 1]], axis=1)
    c = np.stack([x[:, 2] - x[:, 1], x[:, 0] - x[:, 2], x[:, 1] - x[:, 0]], axis=1)
    area = 0.5 * (b[:, 1] * c[:, 2] - b[:, 2] * c[:, 1])
    return area, b, c


def _check_areas(area: np.ndarray):
    bad = np.flatnonzero(area <= 0.0)
    if len(bad):
        raise AssemblyError(f"non-positive area {area[bad[0]]:.3e}", element=int(bad[0]))


def local_stiffness(p0, p1, p2) -> np.ndarray:
    """Element stiffness K_ij = area * grad(phi_i) . grad(phi_j)"""
    pts = np.array([p0, p1, p2], dtype=float)
    x, y = pts[:, 0], pts[:, 1]
    b = np.array([y[1] - y[2], y[2] - y[0], y[0] - y[1]])
    c = np.array([x[2] - x[1], x[0] - x[2], x[1] - x[0]])
    area = 0.5 * (b[1] * c[2] - b[2] * c[1])
    if area <= 0.0:
        raise AssemblyError(f"triangle {pts.tolist()} has non-positive area {area:.3e}")
    return (np.outer(b, b) + np.outer(c, c)) / (4.0 * area)


def _element_stiffness(mesh: TriMesh) -> np.ndarray:
    area, b, c = element_gradients(mesh)
    _check_areas(area)
    return (b[:, :, None] * b[:, None, :] + c[:, :, None] * c[:, None, :]) / (4.0 * area[:, None, None])


class SparseSpd:
    """
    Symmetric positive-definite matrix over the interior nodes of a mesh,
    stored in CSR form. interior[i] is the mesh node of unknown i.
    """

    def __init__(self, matrix: sp.csr_matrix, interior: Optional[np.ndarray] = None,
                 node_count: Optional[int] = None):
        if matrix.shape[0] != matrix.shape[1]:
            raise AssemblyError(f"matrix is not square: {matrix.shape}")
        self.matrix = sp.csr_matrix(matrix)
        n = self.matrix.shape[0]
        self.interior = np.arange(n) if interior is None else np.asarray(interior, dtype=np.int64)
        self.node_count = n if node_count is None else int(node_count)

    @classmethod
    def from_dense(cls, array) -> "SparseSpd":
        return cls(sp.csr_matrix(np.asarray(array, dtype=float)))

    @property
    def dimension(self) -> int:
        return self.matrix.shape[0]

    @property
    def nnz(self) -> int:
        return self.matrix.nnz

    def diagonal(self) -> np.ndarray:
        return self.matrix.diagonal()

    def matvec(self, x: np.ndarray) -> np.ndarray:
        return self.matrix @ x

    def to_dense(self) -> np.ndarray:
        return self.matrix.toarray()

    def asymmetry(self) -> float:
        """max |S - S^T|"""
        diff = self.matrix - self.matrix.T
        return float(abs(diff).max()) if diff.nnz else 0.0

    def __repr__(self) -> str:
        return f"SparseSpd(dimension={self.dimension}, nnz={self.nnz})"


def interior_index(mesh: TriMesh) -> np.ndarray:
    """Mesh node -> unknown number, -1 for boundary nodes"""
    index = np.full(mesh.num_nodes, -1, dtype=np.int64)
    interior = mesh.interior_nodes()
    index[interior] = np.arange(len(interior))
    return index


def assemble_full_stiffness(mesh: TriMesh) -> sp.csr_matrix:
    """Stiffness over all nodes, before boundary elimination"""
    local = _element_stiffness(mesh)
    rows = np.repeat(mesh.triangles, 3, axis=1).ravel()
    cols = np.tile(mesh.triangles, (1, 3)).ravel()
    n = mesh.num_nodes
    return sp.coo_matrix((local.ravel(), (rows, cols)), shape=(n, n)).tocsr()


def assemble_stiffness(mesh: TriMesh) -> SparseSpd:
    """Stiffness over interior nodes (Dirichlet elimination)"""
    interior = mesh.interior_nodes()
    if not len(interior):
        raise AssemblyError(f"mesh at level {mesh.level} has no interior nodes; refine it first")

    local = _element_stiffness(mesh)
    index = interior_index(mesh)
    rows = np.repeat(index[mesh.triangles], 3, axis=1).ravel()
    cols = np.tile(index[mesh.triangles], (1, 3)).ravel()
    keep = (rows >= 0) & (cols >= 0)
    n = len(interior)
    matrix = sp.coo_matrix((local.ravel()[keep], (rows[keep], cols[keep])), shape=(n, n)).tocsr()
    matrix = (0.5 * (matrix + matrix.T)).tocsr()
    matrix.sort_indices()
    logger.debug("assembled stiffness: %d unknowns, %d non-zeros", n, matrix.nnz)
    return SparseSpd(matrix, interior, mesh.num_nodes)


def quadrature_values(mesh: TriMesh, func: Field, quad_order: int):
    """Rule, physical points (M, Q, 2) and func at them (M, Q)"""
    rule = get_rule(quad_order)
    points = rule.points(mesh.nodes[mesh.triangles])
    try:
        values = evaluate_field(func, points[:, :, 0], points[:, :, 1])
    except ExpressionDomainError as e:
        element = None if e.point_index is None else e.point_index // rule.point_count
        raise AssemblyError(f"{e}", element=element) from e
    return rule, points, values


def assemble_load(mesh: TriMesh, f: Field, quad_order: int = 2, full: bool = False) -> np.ndarray:
    """
    b_i = integral of f * phi_i by element quadrature. Returns the vector over
    interior nodes, or over all nodes when full is set.
    """
    area, _, _ = element_gradients(mesh)
    _check_areas(area)
    rule, _, values = quadrature_values(mesh, f, quad_order)
    local = area[:, None] * ((values * rule.weights[None, :]) @ rule.barycentric)
    vector = np.bincount(mesh.triangles.ravel(), weights=local.ravel(), minlength=mesh.num_nodes)
    if full:
        return vector
    return vector[mesh.interior_nodes()]


class FeFunction:
    """P1 function: one value per mesh node"""

    def __init__(self, mesh: TriMesh, values):
        values = np.asarray(values, dtype=float).reshape(-1)
        if len(values) != mesh.num_nodes:
            raise MeshError(f"{len(values)} values for a mesh with {mesh.num_nodes} nodes")
        self.mesh = mesh
        self.values = values

    @classmethod
    def zeros(cls, mesh: TriMesh) -> "FeFunction":
        return cls(mesh, np.zeros(mesh.num_nodes))

    @classmethod
    def from_interior(cls, mesh: TriMesh, interior: np.ndarray, xi: np.ndarray) -> "FeFunction":
        values = np.zeros(mesh.num_nodes)
        values[interior] = xi
        return cls(mesh, values)

    def gradients(self) -> np.ndarray:
        """(M, 2) constant gradient per element"""
        area, b, c = element_gradients(self.mesh)
        v = self.values[self.mesh.triangles]
        return np.stack([(b * v).sum(axis=1), (c * v).sum(axis=1)], axis=1) / (2.0 * area[:, None])

    def at_barycentric(self, barycentric: np.ndarray) -> np.ndarray:
        """(M, Q) values at barycentric points of every element"""
        return self.values[self.mesh.triangles] @ np.asarray(barycentric).T

    def satisfies_dirichlet(self) -> bool:
        return bool(np.all(self.values[self.mesh.boundary] == 0.0))

    def __sub__(self, other: "FeFunction") -> "FeFunction":
        if other.mesh is not self.mesh and other.mesh.num_nodes != self.mesh.num_nodes:
            raise MeshError("P1 functions live on different meshes")
        return FeFunction(self.mesh, self.values - other.values)

    def __repr__(self) -> str:
        return f"FeFunction({self.mesh}, max={self.values.max() if len(self.values) else 0.0:.6g})"


def interpolate(mesh: TriMesh, func: Field) -> FeFunction:
    """Nodal interpolant of func"""
    return FeFunction(mesh, evaluate_field(func, mesh.nodes[:, 0], mesh.nodes[:, 1]))
