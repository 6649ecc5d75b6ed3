"""
Polygonal domains and grading parameters.

A PolygonDomain is a simple, counter-clockwise polygon whose vertices carry
their interior angle, a singular flag (re-entrant corner) and the regularity
threshold pi/alpha. A GradingSpec holds the per-vertex grading parameter kappa
used by graded refinement, derived either directly or from (theta, a).
"""

import logging
import math
from enum import Enum
from typing import Dict, List, Optional, Sequence, Tuple, Union

import numpy as np
import shapely
from shapely.geometry import LinearRing, LineString, Polygon

from core.errors import ConfigurationError, GeometryError

logger = logging.getLogger(__name__)

SINGULAR_TOLERANCE = 1e-12
ANGLE_SUM_TOLERANCE = 1e-10
CRACK_TOLERANCE = 1e-9
ZERO_ANGLE_TOLERANCE = 1e-12


class CornerType(Enum):
    """Classification of a polygon vertex by its interior angle"""
    CONVEX = "convex"
    STRAIGHT = "straight"
    REENTRANT = "reentrant"


class VertexRecord:
    """
    Per-vertex metadata of a polygon: position, interior angle, and the
    regularity threshold beta_0 = pi / alpha that bounds the grading.
    """

    def __init__(self, index: int, point: Tuple[float, float], interior_angle: float):
        self.index = index
        self.point = point
        self.interior_angle = interior_angle
        self.is_singular = interior_angle > math.pi + SINGULAR_TOLERANCE
        self.beta_threshold = math.pi / interior_angle

    @property
    def corner_type(self) -> CornerType:
        if self.is_singular:
            return CornerType.REENTRANT
        if abs(self.interior_angle - math.pi) <= SINGULAR_TOLERANCE:
            return CornerType.STRAIGHT
        return CornerType.CONVEX

    def to_dict(self) -> Dict:
        return {
            "index": self.index,
            "point": list(self.point),
            "interior_angle": self.interior_angle,
            "is_singular": self.is_singular,
            "beta_threshold": self.beta_threshold,
            "corner_type": self.corner_type.value,
        }

    def __str__(self) -> str:
        return f"Vertex({self.index}, {self.point}, {math.degrees(self.interior_angle):.2f} deg)"


def interior_angles(polygon: Union["PolygonDomain", Sequence[Sequence[float]]]) -> List[float]:
    """
    Interior angle at every vertex of a counter-clockwise polygon, in (0, 2*pi).

    The angle at vertex i is measured counter-clockwise from the edge towards
    the next vertex to the edge towards the previous vertex.
    """
    if isinstance(polygon, PolygonDomain):
        return [record.interior_angle for record in polygon.records]

    points = np.asarray(polygon, dtype=float)
    n = len(points)
    if n < 3:
        raise GeometryError(f"polygon needs at least 3 vertices, got {n}")

    angles = []
    for i in range(n):
        prev_point = points[i - 1]
        next_point = points[(i + 1) % n]
        to_prev = prev_point - points[i]
        to_next = next_point - points[i]
        if not np.any(to_prev) or not np.any(to_next):
            raise GeometryError("repeated vertex", vertex_index=i)
        cross = to_next[0] * to_prev[1] - to_next[1] * to_prev[0]
        dot = to_next[0] * to_prev[0] + to_next[1] * to_prev[1]
        angle = math.atan2(cross, dot)
        if angle < 0.0:
            angle += 2.0 * math.pi
        if angle <= ZERO_ANGLE_TOLERANCE:
            raise GeometryError("degenerate vertex with zero interior angle", vertex_index=i)
        angles.append(angle)
    return angles


class PolygonDomain:
    """
    Simple counter-clockwise polygon with per-vertex angle metadata.
    Construction validates the polygon and rejects anything the mesher
    cannot handle (self-intersections, clockwise order, repeated vertices,
    zero angles and slits).
    """

    def __init__(self, vertices: Sequence[Sequence[float]], name: Optional[str] = None):
        points = np.asarray(vertices, dtype=float)
        if points.ndim != 2 or points.shape[1] != 2:
            raise GeometryError("vertices must be a list of [x, y] pairs")
        if len(points) < 3:
            raise GeometryError(f"polygon needs at least 3 vertices, got {len(points)}")
        if not np.all(np.isfinite(points)):
            bad = int(np.argwhere(~np.isfinite(points))[0][0])
            raise GeometryError("non-finite coordinate", vertex_index=bad)

        self.name = name
        self.vertices = points
        self.vertices.setflags(write=False)

        self._check_repeated()
        ring = LinearRing(points)
        if not ring.is_simple:
            self._raise_crossing()
        if not ring.is_ccw:
            raise GeometryError("polygon must be oriented counter-clockwise")
        self.outline = Polygon(ring)

        angles = interior_angles(points)
        for i, angle in enumerate(angles):
            if angle >= 2.0 * math.pi - CRACK_TOLERANCE:
                raise GeometryError("slit/crack vertices (interior angle 2*pi) are not supported",
                                    vertex_index=i)
        exterior_sum = sum(math.pi - angle for angle in angles)
        if abs(exterior_sum - 2.0 * math.pi) > ANGLE_SUM_TOLERANCE:
            raise GeometryError(f"exterior angles sum to {exterior_sum!r}, expected 2*pi")

        self.records = [VertexRecord(i, (float(p[0]), float(p[1])), angles[i])
                        for i, p in enumerate(points)]

    def _check_repeated(self):
        seen: Dict[Tuple[float, float], int] = {}
        for i, p in enumerate(self.vertices):
            key = (float(p[0]), float(p[1]))
            if key in seen:
                raise GeometryError(f"repeats vertex {seen[key]}", vertex_index=i)
            seen[key] = i

    def _raise_crossing(self):
        n = len(self.vertices)
        edges = [LineString([self.vertices[i], self.vertices[(i + 1) % n]]) for i in range(n)]
        first, second = shapely.STRtree(edges).query(edges, predicate="intersects")
        for i, j in sorted(zip(first.tolist(), second.tolist())):
            if i < j and (j - i) % n not in (1, n - 1):
                raise GeometryError(f"edge {i} intersects edge {j}; polygon is not simple",
                                    vertex_index=i)
        raise GeometryError("adjacent edges overlap; polygon is not simple")

    @property
    def vertex_count(self) -> int:
        return len(self.vertices)

    @property
    def angles(self) -> List[float]:
        return [record.interior_angle for record in self.records]

    def singular_indices(self) -> List[int]:
        """Indices of re-entrant corners"""
        return [record.index for record in self.records if record.is_singular]

    def is_convex(self) -> bool:
        return not self.singular_indices()

    def area(self) -> float:
        return float(self.outline.area)

    def diameter(self) -> float:
        diffs = self.vertices[:, None, :] - self.vertices[None, :, :]
        return float(np.sqrt((diffs ** 2).sum(axis=2)).max())

    def distance_to_boundary(self, points: np.ndarray) -> np.ndarray:
        """Euclidean distance from each point to the polygon boundary"""
        points = np.atleast_2d(np.asarray(points, dtype=float))
        return shapely.distance(self.outline.exterior, shapely.points(points))

    def to_dict(self) -> Dict:
        data = {"vertices": self.vertices.tolist()}
        if self.name:
            data["name"] = self.name
        return data

    @classmethod
    def from_dict(cls, data: Dict) -> "PolygonDomain":
        if "vertices" not in data:
            raise GeometryError("polygon object needs a 'vertices' list")
        return cls(data["vertices"], name=data.get("name"))

    def __str__(self) -> str:
        label = self.name or "polygon"
        return f"{label}({self.vertex_count} vertices, {len(self.singular_indices())} re-entrant)"


def regularity_index(polygon: PolygonDomain) -> Tuple[float, List[float]]:
    """Regularity index beta = min_i(pi/alpha_i, 1) and the per-vertex pi/alpha_i"""
    thresholds = [record.beta_threshold for record in polygon.records]
    return min(min(thresholds), 1.0), thresholds


class GradingSpec:
    """
    Per-vertex grading parameters for graded refinement.

    kappa is canonical; theta and a are kept when the grading was derived
    from them. Convex and straight vertices always carry kappa = 1/2.
    """

    def __init__(self, kappa: Sequence[float], singular: Sequence[bool],
                 theta: Optional[float] = None, a: Optional[Dict[int, float]] = None):
        if len(kappa) != len(singular):
            raise ConfigurationError("kappa and singular flags differ in length")
        self.kappa = tuple(float(k) for k in kappa)
        self.singular = tuple(bool(s) for s in singular)
        self.theta = theta
        self.a = dict(a) if a is not None else None
        for i, k in enumerate(self.kappa):
            if not 0.0 < k <= 0.5:
                raise ConfigurationError(f"kappa must lie in (0, 1/2], got {k!r}", path=f"kappa[{i}]")

    def kappa_for(self, vertex: int) -> float:
        return self.kappa[vertex]

    def singular_kappa(self) -> Dict[int, float]:
        """kappa of every singular vertex"""
        return {i: k for i, k in enumerate(self.kappa) if self.singular[i]}

    def is_uniform(self) -> bool:
        return all(k == 0.5 for k in self.kappa)

    def effective_theta(self, polygon: PolygonDomain) -> float:
        """
        theta' = min(max(theta, beta), 1) for linear elements.

        Without an explicit theta, each singular vertex contributes
        beta_0^i * log2(1/kappa_i), the supremum over admissible a_i.
        """
        beta, thresholds = regularity_index(polygon)
        if self.theta is not None:
            theta = self.theta
        else:
            per_corner = [thresholds[i] * math.log2(1.0 / k)
                          for i, k in self.singular_kappa().items()]
            theta = min(per_corner) if per_corner else 1.0
        return min(max(theta, beta), 1.0)

    def to_dict(self) -> Dict:
        data: Dict = {"kappa": {str(i): k for i, k in enumerate(self.kappa)}}
        if self.theta is not None:
            data["theta"] = self.theta
            data["a"] = {str(i): v for i, v in (self.a or {}).items()}
        return data

    def __str__(self) -> str:
        graded = ", ".join(f"{i}:{k:g}" for i, k in self.singular_kappa().items())
        return f"GradingSpec(kappa={{{graded}}})" if graded else "GradingSpec(uniform)"

    @classmethod
    def uniform(cls, polygon: PolygonDomain) -> "GradingSpec":
        """Midpoint refinement everywhere"""
        return cls([0.5] * polygon.vertex_count,
                   [r.is_singular for r in polygon.records])

    @classmethod
    def from_kappa(cls, polygon: PolygonDomain,
                   kappa: Union[float, Dict[int, float]]) -> "GradingSpec":
        """Grading given by kappa directly (a number applies to every singular vertex)"""
        values = [0.5] * polygon.vertex_count
        if isinstance(kappa, dict):
            requested = {_vertex_key(k, polygon, "kappa"): float(v) for k, v in kappa.items()}
        else:
            requested = {i: float(kappa) for i in polygon.singular_indices()}
        for i, k in requested.items():
            if not 0.0 < k <= 0.5:
                raise ConfigurationError(f"kappa must lie in (0, 1/2], got {k!r}", path=f"kappa[{i}]")
            if polygon.records[i].is_singular:
                values[i] = k
            elif k != 0.5:
                logger.warning("kappa=%g given for convex vertex %d ignored (midpoint rule)", k, i)
        return cls(values, [r.is_singular for r in polygon.records])


def _vertex_key(key, polygon: PolygonDomain, field: str) -> int:
    try:
        index = int(key)
    except (TypeError, ValueError):
        raise ConfigurationError(f"vertex index must be an integer, got {key!r}", path=field)
    if not 0 <= index < polygon.vertex_count:
        raise ConfigurationError(f"vertex index {index} out of range 0..{polygon.vertex_count - 1}",
                                 path=f"{field}[{key}]")
    return index


def make_grading(polygon: PolygonDomain, theta: float,
                 a: Union[float, Dict[int, float]]) -> GradingSpec:
    """
    Grading from target order theta and per-singular-vertex a_i:
    kappa_i = 2^(-theta/a_i) with 0 < a_i < pi/alpha_i and a_i <= theta <= 1.
    """
    theta = float(theta)
    if not 0.0 < theta <= 1.0:
        raise ConfigurationError(f"constraint 0 < theta <= 1 violated (theta={theta!r})", path="theta")
    if isinstance(a, dict):
        a_values = {_vertex_key(k, polygon, "a"): float(v) for k, v in a.items()}
    else:
        a_values = {i: float(a) for i in polygon.singular_indices()}

    kappa = [0.5] * polygon.vertex_count
    kept: Dict[int, float] = {}
    for i in polygon.singular_indices():
        if i not in a_values:
            raise ConfigurationError(f"no a given for singular vertex {i}", path=f"a[{i}]")
        a_i = a_values[i]
        beta_i = polygon.records[i].beta_threshold
        if a_i <= 0.0:
            raise ConfigurationError(f"constraint a_i > 0 violated (a={a_i!r})", path=f"a[{i}]")
        if a_i >= beta_i:
            raise ConfigurationError(
                f"constraint a_i < pi/alpha_i = {beta_i:.6g} violated (a={a_i!r})", path=f"a[{i}]")
        if not a_i <= theta <= 1.0:
            raise ConfigurationError(
                f"constraint a_i <= theta <= 1 violated (theta={theta!r}, a={a_i!r})", path="theta")
        kappa[i] = 2.0 ** (-theta / a_i)
        kept[i] = a_i

    for i in a_values:
        if i not in kept:
            logger.warning("a given for convex vertex %d ignored (midpoint rule)", i)

    return GradingSpec(kappa, [r.is_singular for r in polygon.records], theta=theta, a=kept)


def _regular_polygon(count: int, radius: float = 1.0) -> List[List[float]]:
    return [[radius * math.cos(2.0 * math.pi * k / count),
             radius * math.sin(2.0 * math.pi * k / count)] for k in range(count)]


NAMED_DOMAINS: Dict[str, List[List[float]]] = {
    "square": [[0.0, 0.0], [1.0, 0.0], [1.0, 1.0], [0.0, 1.0]],
    "triangle": [[0.0, 0.0], [1.0, 0.0], [0.0, 1.0]],
    # re-entrant corner at the origin (vertex 2)
    "lshape": [[-1.0, -1.0], [0.0, -1.0], [0.0, 0.0], [1.0, 0.0], [1.0, 1.0], [-1.0, 1.0]],
    "octagon": _regular_polygon(8),
    # plus-shaped domain with four re-entrant corners (vertices 2, 5, 8, 11)
    "cross": [[-1.0, -3.0], [1.0, -3.0], [1.0, -1.0], [3.0, -1.0], [3.0, 1.0], [1.0, 1.0],
              [1.0, 3.0], [-1.0, 3.0], [-1.0, 1.0], [-3.0, 1.0], [-3.0, -1.0], [-1.0, -1.0]],
}


def named_domain(name: str) -> PolygonDomain:
    """Built-in domain by name"""
    if name not in NAMED_DOMAINS:
        raise ConfigurationError(
            f"unknown domain '{name}', choose from {', '.join(sorted(NAMED_DOMAINS))}", path="polygon")
    return PolygonDomain(NAMED_DOMAINS[name], name=name)


def load_polygon(data: Union[str, Dict]) -> Tuple[PolygonDomain, Optional[GradingSpec]]:
    """
    Polygon (and optional grading) from its JSON form:
    {"vertices": [[x, y], ...], "grading": {"kappa": {...}} | {"theta": t, "a": {...}}}
    or the name of a built-in domain.
    """
    if isinstance(data, str):
        return named_domain(data), None
    if not isinstance(data, dict):
        raise ConfigurationError("polygon must be a domain name or an object", path="polygon")

    polygon = PolygonDomain.from_dict(data)
    grading_data = data.get("grading")
    if grading_data is None:
        return polygon, None
    return polygon, grading_from_dict(polygon, grading_data, path="polygon.grading")


def grading_from_dict(polygon: PolygonDomain, data: Dict, path: str = "grading") -> GradingSpec:
    """GradingSpec from {"kappa": ...} or {"theta": t, "a": ...}"""
    if not isinstance(data, dict):
        raise ConfigurationError("grading must be an object", path=path)
    has_kappa = "kappa" in data
    has_theta = "theta" in data or "a" in data
    if has_kappa and has_theta:
        raise ConfigurationError("give either kappa or theta/a, not both", path=path)
    if has_kappa:
        return GradingSpec.from_kappa(polygon, data["kappa"])
    if has_theta:
        if "theta" not in data or "a" not in data:
            raise ConfigurationError("theta and a must be given together", path=path)
        return make_grading(polygon, data["theta"], data["a"])
    return GradingSpec.uniform(polygon)
