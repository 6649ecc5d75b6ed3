"""
Conforming triangle meshes with refinement ancestry.

TriMesh stores node coordinates, boundary flags and CCW connectivity, plus
the per-triangle history graded refinement needs: generation, the initial
triangle each element descends from, the singular corner that initial
triangle is attached to, and the mesh-layer index around that corner.
Edges are derived on demand from the connectivity, never stored.
"""

import logging
from enum import Enum
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np

from core.errors import MeshError
from core.geometry import PolygonDomain

logger = logging.getLogger(__name__)

BOUNDARY_DISTANCE_TOLERANCE = 1e-12
NO_CORNER = -1
NO_LAYER = -1


def _frozen(array: np.ndarray) -> np.ndarray:
    array.setflags(write=False)
    return array


class RefinementStep:
    """
    Record of one refinement: every node created by it sits on the parent
    edge (a, b) at D = (1 - s) A + s B and gets index parent_node_count + e.
    """

    def __init__(self, parent_node_count: int, parent_triangle_count: int,
                 edges: np.ndarray, fractions: np.ndarray):
        self.parent_node_count = int(parent_node_count)
        self.parent_triangle_count = int(parent_triangle_count)
        self.edges = _frozen(np.asarray(edges, dtype=np.int64).reshape(-1, 2))
        self.fractions = _frozen(np.asarray(fractions, dtype=float))

    @property
    def new_node_count(self) -> int:
        return len(self.edges)


class EdgeTable:
    """Unique undirected edges of a mesh with their triangle counts"""

    def __init__(self, triangles: np.ndarray, node_count: int):
        local = triangles[:, [0, 1, 1, 2, 2, 0]].reshape(-1, 2)
        low = np.minimum(local[:, 0], local[:, 1])
        high = np.maximum(local[:, 0], local[:, 1])
        keys = low * np.int64(max(node_count, 1)) + high
        unique_keys, inverse, counts = np.unique(keys, return_inverse=True, return_counts=True)
        self.edges = np.stack([unique_keys // max(node_count, 1), unique_keys % max(node_count, 1)],
                              axis=1).astype(np.int64)
        # triangle t, local edge k (k=0: v0v1, 1: v1v2, 2: v2v0) -> edge index
        self.triangle_edges = inverse.reshape(-1, 3)
        self.counts = counts

    def __len__(self) -> int:
        return len(self.edges)

    def boundary_mask(self) -> np.ndarray:
        return self.counts == 1


class TriMesh:
    """
    Immutable conforming triangulation with ancestry metadata.

    The node index of polygon vertex i is corner_nodes[i] (empty when the
    mesh was loaded without corner information); singular_corners lists the
    polygon vertices that are re-entrant corners.
    """

    def __init__(self, nodes, triangles, boundary,
                 generation=None, root=None, attached_corner=None, layer=None,
                 level: int = 0, initial_triangle_count: Optional[int] = None,
                 corner_nodes: Optional[Sequence[int]] = None,
                 singular_corners: Sequence[int] = (),
                 steps: Tuple[RefinementStep, ...] = (),
                 polygon: Optional[PolygonDomain] = None):
        self.nodes = _frozen(np.array(nodes, dtype=float).reshape(-1, 2))
        self.triangles = _frozen(np.array(triangles, dtype=np.int64).reshape(-1, 3))
        self.boundary = _frozen(np.array(boundary, dtype=bool).reshape(-1))
        m = len(self.triangles)

        if len(self.boundary) != len(self.nodes):
            raise MeshError(f"{len(self.boundary)} boundary flags for {len(self.nodes)} nodes")

        self.generation = _frozen(np.zeros(m, dtype=np.int64) if generation is None
                                  else np.array(generation, dtype=np.int64))
        self.root = _frozen(np.arange(m, dtype=np.int64) if root is None
                            else np.array(root, dtype=np.int64))
        self.attached_corner = _frozen(np.full(m, NO_CORNER, dtype=np.int64) if attached_corner is None
                                       else np.array(attached_corner, dtype=np.int64))
        self.layer = _frozen(np.full(m, NO_LAYER, dtype=np.int64) if layer is None
                             else np.array(layer, dtype=np.int64))
        for name in ("generation", "root", "attached_corner", "layer"):
            if len(getattr(self, name)) != m:
                raise MeshError(f"ancestry array '{name}' has wrong length")

        self.level = int(level)
        self.initial_triangle_count = m if initial_triangle_count is None else int(initial_triangle_count)
        self.corner_nodes = _frozen(np.array([] if corner_nodes is None else corner_nodes,
                                             dtype=np.int64))
        self.singular_corners = frozenset(int(c) for c in singular_corners)
        self.steps = tuple(steps)
        self.polygon = polygon
        self._edge_table: Optional[EdgeTable] = None

    @property
    def num_nodes(self) -> int:
        return len(self.nodes)

    @property
    def num_triangles(self) -> int:
        return len(self.triangles)

    def edge_table(self) -> EdgeTable:
        """Derived edge structure (cached; the mesh is immutable)"""
        if self._edge_table is None:
            self._edge_table = EdgeTable(self.triangles, self.num_nodes)
        return self._edge_table

    def num_edges(self) -> int:
        return len(self.edge_table())

    def interior_nodes(self) -> np.ndarray:
        return np.flatnonzero(~self.boundary)

    def singular_nodes(self) -> Dict[int, int]:
        """Node index -> corner id for every singular corner"""
        return {int(self.corner_nodes[c]): c for c in sorted(self.singular_corners)
                if c < len(self.corner_nodes)}

    def corner_node(self, corner: int) -> int:
        if not 0 <= corner < len(self.corner_nodes):
            raise MeshError(f"mesh has no polygon vertex {corner}")
        return int(self.corner_nodes[corner])

    def signed_areas(self) -> np.ndarray:
        p = self.nodes[self.triangles]
        e1 = p[:, 1] - p[:, 0]
        e2 = p[:, 2] - p[:, 0]
        return 0.5 * (e1[:, 0] * e2[:, 1] - e1[:, 1] * e2[:, 0])

    def areas(self) -> np.ndarray:
        return np.abs(self.signed_areas())

    def edge_lengths(self) -> np.ndarray:
        """(M, 3) lengths of v0v1, v1v2, v2v0"""
        p = self.nodes[self.triangles]
        return np.stack([np.linalg.norm(p[:, 1] - p[:, 0], axis=1),
                         np.linalg.norm(p[:, 2] - p[:, 1], axis=1),
                         np.linalg.norm(p[:, 0] - p[:, 2], axis=1)], axis=1)

    def diameters(self) -> np.ndarray:
        return self.edge_lengths().max(axis=1)

    def angles(self) -> np.ndarray:
        """(M, 3) interior angles at v0, v1, v2 in radians"""
        lengths = self.edge_lengths()
        a, b, c = lengths[:, 1], lengths[:, 2], lengths[:, 0]  # opposite v0, v1, v2
        with np.errstate(invalid="ignore", divide="ignore"):
            cos0 = (b ** 2 + c ** 2 - a ** 2) / (2.0 * b * c)
            cos1 = (a ** 2 + c ** 2 - b ** 2) / (2.0 * a * c)
        ang0 = np.arccos(np.clip(cos0, -1.0, 1.0))
        ang1 = np.arccos(np.clip(cos1, -1.0, 1.0))
        return np.stack([ang0, ang1, np.pi - ang0 - ang1], axis=1)

    def quality(self) -> Dict[str, float]:
        """Angle and size statistics"""
        if self.num_triangles == 0:
            return {"min_angle_deg": 0.0, "max_angle_deg": 0.0, "min_diameter": 0.0, "max_diameter": 0.0}
        angles = np.degrees(self.angles())
        diameters = self.diameters()
        return {
            "min_angle_deg": float(angles.min()),
            "max_angle_deg": float(angles.max()),
            "min_diameter": float(diameters.min()),
            "max_diameter": float(diameters.max()),
        }

    def has_ancestry(self) -> bool:
        """True when triangles carry refinement history from a polygon triangulation"""
        return len(self.corner_nodes) > 0

    def renumbered(self, permutation: Sequence[int]) -> "TriMesh":
        """
        Same mesh with node i moved to index permutation[i]. Refinement steps
        are dropped because their node numbering no longer applies.
        """
        perm = np.asarray(permutation, dtype=np.int64)
        if sorted(perm.tolist()) != list(range(self.num_nodes)):
            raise MeshError("renumbering must be a permutation of the node indices")
        nodes = np.empty_like(self.nodes)
        nodes[perm] = self.nodes
        boundary = np.empty_like(self.boundary)
        boundary[perm] = self.boundary
        return TriMesh(nodes, perm[self.triangles], boundary,
                       generation=self.generation, root=self.root,
                       attached_corner=self.attached_corner, layer=self.layer,
                       level=self.level, initial_triangle_count=self.initial_triangle_count,
                       corner_nodes=perm[self.corner_nodes] if len(self.corner_nodes) else None,
                       singular_corners=self.singular_corners, polygon=self.polygon)

    def summary(self) -> Dict:
        return {
            "level": self.level,
            "nodes": self.num_nodes,
            "triangles": self.num_triangles,
            "interior_nodes": int((~self.boundary).sum()),
            "singular_corners": sorted(self.singular_corners),
        }

    def __str__(self) -> str:
        return f"TriMesh(level={self.level}, nodes={self.num_nodes}, triangles={self.num_triangles})"


class ViolationKind(Enum):
    """Categories of mesh invariant violations"""
    INDEX_RANGE = "index_range"
    ORIENTATION = "orientation"
    CONFORMITY = "conformity"
    BOUNDARY_FLAG = "boundary_flag"
    BOUNDARY_LOCATION = "boundary_location"
    TRIANGLE_COUNT = "triangle_count"
    SINGULAR_SEPARATION = "singular_separation"


class Violation:
    def __init__(self, kind: ViolationKind, message: str, indices: Tuple[int, ...] = ()):
        self.kind = kind
        self.message = message
        self.indices = tuple(int(i) for i in indices)

    def to_dict(self) -> Dict:
        return {"kind": self.kind.value, "message": self.message, "indices": list(self.indices)}

    def __str__(self) -> str:
        return f"[{self.kind.value}] {self.message}"


class ValidationReport:
    """Every invariant violation found in a mesh"""

    def __init__(self, violations: Optional[List[Violation]] = None):
        self.violations = violations or []

    @property
    def is_valid(self) -> bool:
        return not self.violations

    def of_kind(self, kind: ViolationKind) -> List[Violation]:
        return [v for v in self.violations if v.kind == kind]

    def to_dict(self) -> Dict:
        return {"valid": self.is_valid, "violations": [v.to_dict() for v in self.violations]}

    def __str__(self) -> str:
        if self.is_valid:
            return "mesh valid"
        return "\n".join(str(v) for v in self.violations)


def _collinear_between(a: np.ndarray, b: np.ndarray, p: np.ndarray, tol: float) -> bool:
    ab = b - a
    ap = p - a
    length2 = float(ab @ ab)
    if length2 == 0.0:
        return False
    cross = ab[0] * ap[1] - ab[1] * ap[0]
    t = float(ap @ ab) / length2
    return abs(cross) <= tol * length2 and 0.0 < t < 1.0


def validate(mesh: TriMesh, polygon: Optional[PolygonDomain] = None) -> ValidationReport:
    """
    Check orientation, conformity, boundary flags, boundary placement,
    triangle count against the refinement level, and singular separation.
    """
    violations: List[Violation] = []
    tris = mesh.triangles
    n = mesh.num_nodes

    if len(tris) and (tris.min() < 0 or tris.max() >= n):
        for t in np.flatnonzero((tris < 0).any(axis=1) | (tris >= n).any(axis=1)):
            violations.append(Violation(ViolationKind.INDEX_RANGE,
                                        f"triangle {t} references a node outside 0..{n - 1}", (t,)))
        return ValidationReport(violations)

    repeated = (tris[:, 0] == tris[:, 1]) | (tris[:, 1] == tris[:, 2]) | (tris[:, 0] == tris[:, 2])
    for t in np.flatnonzero(repeated):
        violations.append(Violation(ViolationKind.ORIENTATION, f"triangle {t} repeats a node", (t,)))

    areas = mesh.signed_areas()
    for t in np.flatnonzero((areas <= 0.0) & ~repeated):
        violations.append(Violation(ViolationKind.ORIENTATION,
                                    f"triangle {t} has non-positive signed area {areas[t]:.3e}", (t,)))

    table = mesh.edge_table()
    for e in np.flatnonzero(table.counts > 2):
        a, b = table.edges[e]
        violations.append(Violation(ViolationKind.CONFORMITY,
                                    f"edge ({a}, {b}) shared by {table.counts[e]} triangles", (a, b)))

    boundary_edges = table.edges[table.boundary_mask()]
    on_boundary_edge = np.zeros(n, dtype=bool)
    on_boundary_edge[boundary_edges.ravel()] = True

    # hanging nodes: a boundary-count edge (a, b) split by a node m with (a, m), (m, b) also single-sided
    neighbours: Dict[int, List[int]] = {}
    for a, b in boundary_edges:
        neighbours.setdefault(int(a), []).append(int(b))
        neighbours.setdefault(int(b), []).append(int(a))
    single = {(int(min(a, b)), int(max(a, b))) for a, b in boundary_edges}
    for a, b in boundary_edges:
        for m in neighbours.get(int(a), []):
            if m == b or (min(m, int(b)), max(m, int(b))) not in single:
                continue
            if _collinear_between(mesh.nodes[a], mesh.nodes[b], mesh.nodes[m], 1e-12):
                violations.append(Violation(
                    ViolationKind.CONFORMITY,
                    f"edge ({a}, {b}) is nonconforming: node {m} hangs on it", (a, b)))
                break

    for node in np.flatnonzero(on_boundary_edge & ~mesh.boundary):
        violations.append(Violation(ViolationKind.BOUNDARY_FLAG,
                                    f"node {node} lies on a boundary edge but is flagged interior", (node,)))
    for node in np.flatnonzero(mesh.boundary & ~on_boundary_edge):
        violations.append(Violation(ViolationKind.BOUNDARY_FLAG,
                                    f"node {node} is flagged boundary but on no boundary edge", (node,)))

    polygon = polygon if polygon is not None else mesh.polygon
    if polygon is not None:
        flagged = np.flatnonzero(mesh.boundary)
        if len(flagged):
            distance = polygon.distance_to_boundary(mesh.nodes[flagged])
            tolerance = BOUNDARY_DISTANCE_TOLERANCE * polygon.diameter()
            for node, dist in zip(flagged[distance > tolerance], distance[distance > tolerance]):
                violations.append(Violation(ViolationKind.BOUNDARY_LOCATION,
                                            f"boundary node {node} is {dist:.3e} away from the polygon boundary",
                                            (node,)))

    expected = mesh.initial_triangle_count * 4 ** mesh.level
    if mesh.num_triangles != expected:
        violations.append(Violation(ViolationKind.TRIANGLE_COUNT,
                                    f"{mesh.num_triangles} triangles at level {mesh.level}, "
                                    f"expected {mesh.initial_triangle_count}*4^{mesh.level} = {expected}"))

    singular = mesh.singular_nodes()
    if singular:
        is_singular = np.zeros(n, dtype=bool)
        is_singular[list(singular)] = True
        per_triangle = is_singular[tris].sum(axis=1)
        for t in np.flatnonzero(per_triangle > 1):
            violations.append(Violation(ViolationKind.SINGULAR_SEPARATION,
                                        f"triangle {t} contains {per_triangle[t]} singular vertices", (t,)))

    if violations:
        logger.debug("mesh validation found %d violations", len(violations))
    return ValidationReport(violations)
