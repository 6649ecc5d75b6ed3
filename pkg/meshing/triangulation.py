"""
Initial triangulation of a polygonal domain.

Pipeline: ear clipping (best ear first) -> Lawson edge flips -> separation of
singular vertices -> bounded quality repair. Polygon vertex i always becomes
mesh node i; nodes created by the later passes are appended.
"""

import logging
import math
from typing import Dict, List, Sequence, Set, Tuple

import numpy as np

from core.errors import MeshError
from core.geometry import PolygonDomain
from core.mesh import NO_CORNER, NO_LAYER, TriMesh

logger = logging.getLogger(__name__)

MIN_ANGLE_DEG = 15.0
MAX_REPAIR_STEPS = 64
MAX_FLIPS = 10000
FLIP_GAIN = 1e-10

Point = Tuple[float, float]


def _orient(a: Point, b: Point, c: Point) -> float:
    return (b[0] - a[0]) * (c[1] - a[1]) - (b[1] - a[1]) * (c[0] - a[0])


def _min_angle(a: Point, b: Point, c: Point) -> float:
    """Smallest interior angle of triangle abc in radians (0 if degenerate)"""
    lab = math.dist(a, b)
    lbc = math.dist(b, c)
    lca = math.dist(c, a)
    if min(lab, lbc, lca) == 0.0:
        return 0.0
    angles = []
    for opposite, s1, s2 in ((lbc, lab, lca), (lca, lab, lbc), (lab, lbc, lca)):
        cosine = (s1 * s1 + s2 * s2 - opposite * opposite) / (2.0 * s1 * s2)
        angles.append(math.acos(max(-1.0, min(1.0, cosine))))
    return min(angles)


def _in_closed_triangle(p: Point, a: Point, b: Point, c: Point, eps: float) -> bool:
    return _orient(a, b, p) >= -eps and _orient(b, c, p) >= -eps and _orient(c, a, p) >= -eps


def ear_clip(polygon: PolygonDomain) -> List[Tuple[int, int, int]]:
    """
    Triangulate the polygon using only its vertices. At every step the ear
    whose triangle has the largest minimum angle is clipped (ties go to the
    lowest vertex index). An ear must be strictly convex and its closed
    triangle must hold no other remaining vertex.
    """
    points = [tuple(p) for p in polygon.vertices.tolist()]
    scale = polygon.diameter() ** 2
    eps = 1e-12 * scale
    remaining = list(range(len(points)))
    triangles: List[Tuple[int, int, int]] = []

    while len(remaining) > 3:
        best = None
        count = len(remaining)
        for position, vertex in enumerate(remaining):
            prev_vertex = remaining[position - 1]
            next_vertex = remaining[(position + 1) % count]
            a, b, c = points[prev_vertex], points[vertex], points[next_vertex]
            if _orient(a, b, c) <= eps:
                continue
            if any(_in_closed_triangle(points[other], a, b, c, eps)
                   for other in remaining if other not in (prev_vertex, vertex, next_vertex)):
                continue
            quality = _min_angle(a, b, c)
            if best is None or quality > best[0] or (quality == best[0] and vertex < best[2]):
                best = (quality, position, vertex, prev_vertex, next_vertex)
        if best is None:
            raise MeshError(f"ear clipping found no ear among {len(remaining)} remaining vertices")
        _, position, vertex, prev_vertex, next_vertex = best
        triangles.append((prev_vertex, vertex, next_vertex))
        logger.debug("clipped ear at vertex %d (min angle %.2f deg)", vertex, math.degrees(best[0]))
        remaining.pop(position)

    a, b, c = (points[i] for i in remaining)
    if _orient(a, b, c) <= eps:
        raise MeshError(f"last ear {tuple(remaining)} is degenerate")
    triangles.append(tuple(remaining))
    return triangles


class _MeshBuilder:
    """Mutable triangle soup used while the initial mesh is being improved"""

    def __init__(self, polygon: PolygonDomain, triangles: Sequence[Tuple[int, int, int]]):
        self.nodes: List[Point] = [tuple(p) for p in polygon.vertices.tolist()]
        self.boundary: List[bool] = [True] * len(self.nodes)
        self.triangles: List[List[int]] = [list(t) for t in triangles]
        self.singular: Set[int] = set(polygon.singular_indices())
        self.area_eps = 1e-12 * polygon.diameter() ** 2

    def min_angle(self, t: int) -> float:
        a, b, c = (self.nodes[i] for i in self.triangles[t])
        return _min_angle(a, b, c)

    def edge_owners(self) -> Dict[Tuple[int, int], List[int]]:
        owners: Dict[Tuple[int, int], List[int]] = {}
        for t, tri in enumerate(self.triangles):
            for k in range(3):
                a, b = tri[k], tri[(k + 1) % 3]
                owners.setdefault((min(a, b), max(a, b)), []).append(t)
        return owners

    def _oriented(self, t: int, a: int, b: int) -> Tuple[int, int, int]:
        """Triangle t rotated so that its first two vertices are the edge {a, b}"""
        tri = self.triangles[t]
        for k in range(3):
            if {tri[k], tri[(k + 1) % 3]} == {a, b}:
                return tri[k], tri[(k + 1) % 3], tri[(k + 2) % 3]
        raise MeshError(f"triangle {t} does not contain edge ({a}, {b})")

    def try_flip(self, edge: Tuple[int, int], owners: List[int]) -> bool:
        """Flip the diagonal of the quad around edge if that raises the min angle"""
        t1, t2 = owners
        a, b, c = self._oriented(t1, *edge)
        _, _, d = self._oriented(t2, *edge)
        if c in self.singular and d in self.singular:
            return False
        pa, pb, pc, pd = (self.nodes[i] for i in (a, b, c, d))
        # the quad a-d-b-c must be strictly convex
        if _orient(pa, pd, pc) <= self.area_eps or _orient(pd, pb, pc) <= self.area_eps:
            return False
        before = min(_min_angle(pa, pb, pc), _min_angle(pb, pa, pd))
        after = min(_min_angle(pa, pd, pc), _min_angle(pd, pb, pc))
        if after <= before + FLIP_GAIN:
            return False
        self.triangles[t1] = [a, d, c]
        self.triangles[t2] = [d, b, c]
        return True

    def lawson_flips(self) -> int:
        flips = 0
        while flips < MAX_FLIPS:
            owners = self.edge_owners()
            for edge in sorted(owners):
                if len(owners[edge]) == 2 and self.try_flip(edge, owners[edge]):
                    flips += 1
                    break
            else:
                return flips
        raise MeshError(f"edge flipping did not settle after {MAX_FLIPS} flips")

    def bisect(self, a: int, b: int) -> int:
        """Split edge (a, b) at its midpoint in every triangle that holds it"""
        owners = self.edge_owners().get((min(a, b), max(a, b)), [])
        if not owners:
            raise MeshError(f"no triangle holds edge ({a}, {b})")
        pa, pb = self.nodes[a], self.nodes[b]
        m = len(self.nodes)
        self.nodes.append((0.5 * (pa[0] + pb[0]), 0.5 * (pa[1] + pb[1])))
        self.boundary.append(len(owners) == 1)
        for t in owners:
            t0, t1, t2 = self._oriented(t, a, b)
            self.triangles[t] = [t0, m, t2]
            self.triangles.append([m, t1, t2])
        return m

    def separate_singular(self) -> int:
        """Bisect every edge that joins two singular vertices"""
        splits = 0
        while True:
            joined = [edge for edge in sorted(self.edge_owners())
                      if edge[0] in self.singular and edge[1] in self.singular]
            if not joined:
                return splits
            self.bisect(*joined[0])
            splits += 1

    def worst_triangle(self) -> Tuple[int, float]:
        angles = [self.min_angle(t) for t in range(len(self.triangles))]
        worst = int(np.argmin(angles))
        return worst, angles[worst]

    def bisect_longest_edge(self, t: int) -> int:
        tri = self.triangles[t]
        lengths = [math.dist(self.nodes[tri[k]], self.nodes[tri[(k + 1) % 3]]) for k in range(3)]
        k = int(np.argmax(lengths))
        return self.bisect(tri[k], tri[(k + 1) % 3])


def triangulate_initial(polygon: PolygonDomain, min_angle_deg: float = MIN_ANGLE_DEG) -> TriMesh:
    """
    Conforming, shape-regular initial mesh of the polygon in which no triangle
    holds more than one singular vertex.
    """
    builder = _MeshBuilder(polygon, ear_clip(polygon))
    flips = builder.lawson_flips()
    splits = builder.separate_singular()
    if splits:
        flips += builder.lawson_flips()

    threshold = math.radians(min_angle_deg)
    repairs = 0
    worst, angle = builder.worst_triangle()
    while angle < threshold and repairs < MAX_REPAIR_STEPS:
        builder.bisect_longest_edge(worst)
        builder.separate_singular()
        flips += builder.lawson_flips()
        repairs += 1
        worst, angle = builder.worst_triangle()
    if angle < threshold:
        raise MeshError(f"initial mesh of {polygon} still has a {math.degrees(angle):.2f} deg angle "
                        f"(triangle {worst}) after {repairs} repair steps; "
                        f"minimum is {min_angle_deg:g} deg")

    triangles = np.array(builder.triangles, dtype=np.int64)
    singular = sorted(builder.singular)
    attached = np.full(len(triangles), NO_CORNER, dtype=np.int64)
    for corner in singular:
        attached[(triangles == corner).any(axis=1)] = corner
    layer = np.where(attached != NO_CORNER, 0, NO_LAYER)

    mesh = TriMesh(builder.nodes, triangles, builder.boundary,
                   attached_corner=attached, layer=layer, level=0,
                   corner_nodes=range(polygon.vertex_count),
                   singular_corners=singular, polygon=polygon)
    logger.info("initial mesh of %s: %d nodes, %d triangles (%d flips, %d splits, %d repairs), "
                "min angle %.2f deg", polygon, mesh.num_nodes, mesh.num_triangles,
                flips, splits, repairs, math.degrees(angle))
    return mesh
