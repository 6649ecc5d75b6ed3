"""
Graded refinement and mesh-layer bookkeeping.

Every edge AB receives one new node D = (1 - s) A + s B, where s = 1/2 unless
one endpoint is a singular corner Q, in which case |QD| = kappa_Q |AB|. Each
triangle is then split into four: three corner children and the central
triangle of the edge nodes. With kappa = 1/2 this is midpoint refinement.
"""

import logging
from enum import Enum
from typing import Dict, List, Optional

import numpy as np

from core.errors import ConfigurationError, MeshError
from core.geometry import GradingSpec
from core.mesh import NO_CORNER, RefinementStep, TriMesh, validate

logger = logging.getLogger(__name__)


class SingularEnd(Enum):
    """Which endpoint of an edge is a singular corner"""
    NONE = "none"
    A = "a"
    B = "b"
    BOTH = "both"


def mesh_size_param(n: int) -> float:
    """Nominal mesh size h = 2^-n after n refinements"""
    if n < 0:
        raise ConfigurationError(f"refinement count must be >= 0, got {n}", path="n")
    return 2.0 ** -n


def _check_kappa(kappa: float):
    if not 0.0 < kappa <= 0.5:
        raise ConfigurationError(f"kappa must lie in (0, 1/2], got {kappa!r}", path="kappa")


def edge_fraction(singular_at: SingularEnd, kappa: float) -> float:
    """Position s of the new node on AB, D = (1 - s) A + s B"""
    singular_at = SingularEnd(singular_at)
    if singular_at == SingularEnd.BOTH:
        raise MeshError("edge joins two singular vertices; no placement rule applies")
    if singular_at == SingularEnd.NONE:
        return 0.5
    _check_kappa(kappa)
    return kappa if singular_at == SingularEnd.A else 1.0 - kappa


def place_edge_node(A, B, singular_at: SingularEnd = SingularEnd.NONE, kappa: float = 0.5) -> np.ndarray:
    """New node on segment AB: the midpoint, or kappa|AB| away from the singular end"""
    A = np.asarray(A, dtype=float)
    B = np.asarray(B, dtype=float)
    if np.array_equal(A, B):
        raise MeshError(f"edge endpoints coincide at {A.tolist()}")
    s = edge_fraction(singular_at, kappa)
    return (1.0 - s) * A + s * B


def _node_grading(mesh: TriMesh, grading: Optional[GradingSpec]):
    """Per-node kappa and singular mask"""
    kappa = np.full(mesh.num_nodes, 0.5)
    singular = np.zeros(mesh.num_nodes, dtype=bool)
    if grading is None:
        return kappa, singular

    if len(mesh.corner_nodes) == 0:
        if not grading.is_uniform():
            raise MeshError("graded refinement needs a mesh that knows its polygon corners")
        return kappa, singular

    if len(grading.kappa) != len(mesh.corner_nodes):
        raise ConfigurationError(f"grading has {len(grading.kappa)} vertices, "
                                 f"mesh polygon has {len(mesh.corner_nodes)}", path="kappa")
    for corner, k in enumerate(grading.kappa):
        if k != 0.5 and corner not in mesh.singular_corners:
            raise ConfigurationError(f"kappa={k!r} at vertex {corner}, which is not singular",
                                     path=f"kappa[{corner}]")
    for corner in mesh.singular_corners:
        node = mesh.corner_node(corner)
        singular[node] = True
        kappa[node] = grading.kappa_for(corner)
    return kappa, singular


def refine(mesh: TriMesh, grading: Optional[GradingSpec] = None, check: bool = True) -> TriMesh:
    """
    One global refinement step. New nodes are numbered after the existing ones
    in sorted edge order; the children of triangle p are 4p .. 4p+3.
    """
    if check:
        report = validate(mesh)
        if not report.is_valid:
            raise MeshError(f"cannot refine an invalid mesh:\n{report}")

    kappa, singular = _node_grading(mesh, grading)
    table = mesh.edge_table()
    a, b = table.edges[:, 0], table.edges[:, 1]

    both = singular[a] & singular[b]
    if np.any(both):
        e = int(np.flatnonzero(both)[0])
        raise MeshError(f"edge ({a[e]}, {b[e]}) joins two singular vertices")

    s = np.full(len(table), 0.5)
    s[singular[a]] = kappa[a[singular[a]]]
    s[singular[b]] = 1.0 - kappa[b[singular[b]]]
    new_points = (1.0 - s)[:, None] * mesh.nodes[a] + s[:, None] * mesh.nodes[b]
    new_boundary = table.boundary_mask() & mesh.boundary[a] & mesh.boundary[b]

    n = mesh.num_nodes
    v0, v1, v2 = mesh.triangles[:, 0], mesh.triangles[:, 1], mesh.triangles[:, 2]
    m01, m12, m20 = (n + table.triangle_edges[:, k] for k in range(3))
    children = np.stack([
        np.stack([v0, m01, m20], axis=1),
        np.stack([m01, v1, m12], axis=1),
        np.stack([m20, m12, v2], axis=1),
        np.stack([m01, m12, m20], axis=1),
    ], axis=1).reshape(-1, 3)

    generation = np.repeat(mesh.generation + 1, 4)
    root = np.repeat(mesh.root, 4)
    attached = np.repeat(mesh.attached_corner, 4)

    # a corner child opens a new layer when its parent is the innermost one
    child_layer = np.repeat(mesh.layer, 4).reshape(-1, 4)
    innermost = (mesh.attached_corner != NO_CORNER) & (mesh.layer == mesh.generation)
    if np.any(innermost) and len(mesh.corner_nodes):
        corner_node = np.full(mesh.num_triangles, -1, dtype=np.int64)
        corner_node[innermost] = mesh.corner_nodes[mesh.attached_corner[innermost]]
        holds_corner = mesh.triangles == corner_node[:, None]
        for k in range(3):
            child_layer[holds_corner[:, k], k] = mesh.generation[holds_corner[:, k]] + 1

    step = RefinementStep(n, mesh.num_triangles, table.edges, s)
    refined = TriMesh(
        np.vstack([mesh.nodes, new_points]),
        children,
        np.concatenate([mesh.boundary, new_boundary]),
        generation=generation, root=root, attached_corner=attached,
        layer=child_layer.reshape(-1),
        level=mesh.level + 1,
        initial_triangle_count=mesh.initial_triangle_count,
        corner_nodes=mesh.corner_nodes if len(mesh.corner_nodes) else None,
        singular_corners=mesh.singular_corners,
        steps=mesh.steps + (step,),
        polygon=mesh.polygon,
    )
    logger.debug("refined level %d -> %d: %d nodes, %d triangles",
                 mesh.level, refined.level, refined.num_nodes, refined.num_triangles)
    return refined


def refine_times(mesh: TriMesh, grading: Optional[GradingSpec], count: int) -> List[TriMesh]:
    """The mesh and its first `count` refinements"""
    meshes = [mesh]
    for _ in range(count):
        meshes.append(refine(meshes[-1], grading, check=False))
    return meshes


class LayerStats:
    """Size statistics of one mesh layer"""

    def __init__(self, layer: int, triangle_count: int, area: float, max_diameter: float,
                 min_distance: float, max_distance: float):
        self.layer = layer
        self.triangle_count = triangle_count
        self.area = area
        self.max_diameter = max_diameter
        self.min_distance = min_distance
        self.max_distance = max_distance

    def to_dict(self) -> Dict:
        return {
            "layer": self.layer,
            "triangles": self.triangle_count,
            "area": self.area,
            "max_diameter": self.max_diameter,
            "min_distance": self.min_distance,
            "max_distance": self.max_distance,
        }


class LayerMap:
    """
    Layer index of every triangle descended from an initial triangle attached
    to one singular corner. Layer t holds the triangles of generation-t
    corner ancestry that are not in generation t+1 corner ancestry; layer n
    is the triangle at the corner itself.
    """

    def __init__(self, corner: int, corner_node: int, level: int,
                 triangles: np.ndarray, layers: np.ndarray):
        self.corner = corner
        self.corner_node = corner_node
        self.level = level
        self.triangles = triangles
        self.layers = layers

    def layer_of(self, triangle: int) -> int:
        hits = np.flatnonzero(self.triangles == triangle)
        if not len(hits):
            raise KeyError(f"triangle {triangle} is not attached to corner {self.corner}")
        return int(self.layers[hits[0]])

    def triangles_in(self, layer: int) -> np.ndarray:
        return self.triangles[self.layers == layer]

    def counts(self) -> List[int]:
        return [int((self.layers == t).sum()) for t in range(self.level + 1)]

    def statistics(self, mesh: TriMesh) -> List[LayerStats]:
        """Per-layer area, diameter and node distances to the corner"""
        corner_point = mesh.nodes[self.corner_node]
        areas = mesh.areas()
        diameters = mesh.diameters()
        stats = []
        for t in range(self.level + 1):
            members = self.triangles_in(t)
            if not len(members):
                stats.append(LayerStats(t, 0, 0.0, 0.0, 0.0, 0.0))
                continue
            nodes = np.unique(mesh.triangles[members])
            nodes = nodes[nodes != self.corner_node]
            distances = np.linalg.norm(mesh.nodes[nodes] - corner_point, axis=1)
            stats.append(LayerStats(t, len(members), float(areas[members].sum()),
                                    float(diameters[members].max()),
                                    float(distances.min()), float(distances.max())))
        return stats


def compute_layers(mesh: TriMesh, corner: int) -> LayerMap:
    """Layer decomposition of the triangles attached to a singular corner"""
    if corner not in mesh.singular_corners:
        raise MeshError(f"vertex {corner} is not a singular corner of this mesh")
    attached = np.flatnonzero(mesh.attached_corner == corner)
    if len(mesh.corner_nodes) == 0 or not len(attached):
        raise MeshError(f"mesh carries no refinement ancestry for corner {corner}")
    layers = mesh.layer[attached]
    if np.any(layers < 0) or np.any(layers > mesh.level):
        raise MeshError(f"layer indices for corner {corner} are outside 0..{mesh.level}")
    return LayerMap(corner, mesh.corner_node(corner), mesh.level, attached, layers.copy())
