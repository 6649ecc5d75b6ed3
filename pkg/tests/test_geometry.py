import math

import numpy as np
import pytest

from core.errors import ConfigurationError, GeometryError
from core.geometry import (CornerType, GradingSpec, PolygonDomain, grading_from_dict, interior_angles,
                           load_polygon, make_grading, named_domain, regularity_index)


class TestInteriorAngles:
    def test_square(self, square):
        assert interior_angles(square) == pytest.approx([math.pi / 2] * 4, abs=1e-12)

    def test_lshape_has_one_reentrant_corner(self, lshape):
        angles = interior_angles(lshape)
        assert angles[2] == pytest.approx(1.5 * math.pi, abs=1e-12)
        assert [a for i, a in enumerate(angles) if i != 2] == pytest.approx([math.pi / 2] * 5, abs=1e-12)
        assert lshape.singular_indices() == [2]
        assert lshape.records[2].corner_type == CornerType.REENTRANT

    def test_right_isoceles_triangle(self):
        angles = interior_angles([[0.0, 0.0], [1.0, 0.0], [0.0, 1.0]])
        assert angles == pytest.approx([math.pi / 2, math.pi / 4, math.pi / 4], abs=1e-12)

    @pytest.mark.parametrize("name", ["square", "triangle", "lshape", "octagon", "cross"])
    def test_exterior_angles_sum_to_two_pi(self, name):
        angles = named_domain(name).angles
        assert sum(math.pi - a for a in angles) == pytest.approx(2.0 * math.pi, abs=1e-10)

    def test_cross_has_four_reentrant_corners(self):
        assert named_domain("cross").singular_indices() == [2, 5, 8, 11]


class TestPolygonRejection:
    def test_clockwise(self):
        with pytest.raises(GeometryError):
            PolygonDomain([[0.0, 0.0], [0.0, 1.0], [1.0, 1.0], [1.0, 0.0]])

    def test_repeated_vertex_names_index(self):
        with pytest.raises(GeometryError) as info:
            PolygonDomain([[0.0, 0.0], [1.0, 0.0], [1.0, 1.0], [1.0, 0.0], [0.0, 1.0]])
        assert info.value.vertex_index == 3

    def test_self_intersecting(self):
        with pytest.raises(GeometryError):
            PolygonDomain([[0.0, 0.0], [2.0, 0.0], [0.0, 2.0], [2.0, 2.0], [1.0, -1.0]])

    def test_crossing_edges_name_first_edge(self):
        with pytest.raises(GeometryError) as info:
            PolygonDomain([[0.0, 0.0], [4.0, 0.0], [4.0, 4.0], [2.0, -1.0], [0.0, 4.0]])
        assert "not simple" in str(info.value)
        assert info.value.vertex_index == 0

    def test_vertex_touching_edge(self):
        with pytest.raises(GeometryError):
            PolygonDomain([[0.0, 0.0], [2.0, 0.0], [2.0, 2.0], [1.0, 0.0], [0.0, 2.0]])

    def test_too_few_vertices(self):
        with pytest.raises(GeometryError):
            PolygonDomain([[0.0, 0.0], [1.0, 0.0]])


def segment_distances(points, polygon):
    """Point-to-boundary distances by projecting onto every edge"""
    start = polygon.vertices
    edge = np.roll(start, -1, axis=0) - start
    rel = points[:, None, :] - start[None, :, :]
    t = np.clip((rel * edge).sum(axis=2) / (edge ** 2).sum(axis=1), 0.0, 1.0)
    closest = start + t[:, :, None] * edge
    return np.linalg.norm(points[:, None, :] - closest, axis=2).min(axis=1)


class TestPolygonMeasures:
    @pytest.mark.parametrize("name", ["square", "lshape", "octagon", "cross"])
    def test_distance_to_boundary(self, name, rng):
        polygon = named_domain(name)
        points = rng.uniform(-2.0, 2.0, size=(200, 2))
        distances = polygon.distance_to_boundary(points)
        assert distances.shape == (200,)
        assert distances == pytest.approx(segment_distances(points, polygon), abs=1e-12)

    def test_vertices_lie_on_boundary(self, lshape):
        assert lshape.distance_to_boundary(lshape.vertices) == pytest.approx(np.zeros(6), abs=1e-15)

    def test_area(self, lshape, octagon):
        assert lshape.area() == pytest.approx(3.0 * lshape.diameter() ** 2 / 8.0)
        assert octagon.area() == pytest.approx(2.0 * math.sqrt(2.0))



class TestRegularityIndex:
    def test_square_is_regular(self, square):
        beta, thresholds = regularity_index(square)
        assert beta == 1.0
        assert thresholds == pytest.approx([2.0] * 4)

    def test_lshape(self, lshape):
        beta, thresholds = regularity_index(lshape)
        assert beta == pytest.approx(2.0 / 3.0)
        assert thresholds[2] == pytest.approx(2.0 / 3.0)

    def test_octagon_is_regular(self, octagon):
        beta, thresholds = regularity_index(octagon)
        assert beta == 1.0
        assert thresholds == pytest.approx([4.0 / 3.0] * 8)
        assert octagon.is_convex()

    def test_invariant_under_rotation_and_scaling(self, lshape, rng):
        beta, _ = regularity_index(lshape)
        for _ in range(10):
            phi = rng.uniform(0.0, 2.0 * math.pi)
            scale = rng.uniform(0.1, 10.0)
            rotation = np.array([[math.cos(phi), -math.sin(phi)], [math.sin(phi), math.cos(phi)]])
            moved = PolygonDomain(scale * lshape.vertices @ rotation.T + rng.uniform(-5, 5, size=2))
            assert regularity_index(moved)[0] == pytest.approx(beta, abs=1e-12)
            assert moved.singular_indices() == [2]


class TestGrading:
    def test_theta_equal_a_gives_midpoint(self, lshape):
        grading = make_grading(lshape, 0.5, 0.5)
        assert grading.kappa_for(2) == 0.5

    def test_quarter(self, lshape):
        assert make_grading(lshape, 1.0, 0.5).kappa_for(2) == pytest.approx(0.25)

    def test_kappa_one_tenth(self, lshape):
        assert make_grading(lshape, 1.0, 0.3010299957).kappa_for(2) == pytest.approx(0.1, rel=1e-9)

    def test_convex_vertices_keep_midpoint(self, lshape):
        grading = make_grading(lshape, 1.0, 0.5)
        assert [grading.kappa_for(i) for i in (0, 1, 3, 4, 5)] == [0.5] * 5

    def test_monotone_in_a(self, lshape):
        kappas = [make_grading(lshape, 1.0, a).kappa_for(2) for a in (0.2, 0.3, 0.4, 0.5, 0.6)]
        assert kappas == sorted(kappas)

    @pytest.mark.parametrize("theta, a", [(1.0, 0.0), (1.0, 0.7), (1.2, 0.5), (0.4, 0.5)])
    def test_constraints(self, lshape, theta, a):
        with pytest.raises(ConfigurationError):
            make_grading(lshape, theta, a)

    def test_violation_names_vertex(self, lshape):
        with pytest.raises(ConfigurationError) as info:
            make_grading(lshape, 1.0, {2: 0.9})
        assert info.value.path == "a[2]"

    def test_from_kappa_rejects_out_of_range(self, lshape):
        with pytest.raises(ConfigurationError):
            GradingSpec.from_kappa(lshape, 0.6)

    def test_effective_theta_from_kappa(self, lshape):
        assert GradingSpec.uniform(lshape).effective_theta(lshape) == pytest.approx(2.0 / 3.0)
        assert GradingSpec.from_kappa(lshape, 0.2).effective_theta(lshape) == 1.0

    @pytest.mark.parametrize("theta", [5.0, 0.0, -0.5, float("nan")])
    def test_theta_range_checked_without_singular_vertices(self, square, theta):
        with pytest.raises(ConfigurationError) as info:
            make_grading(square, theta, 0.5)
        assert info.value.path == "theta"

    def test_convex_polygon_keeps_valid_theta(self, square):
        grading = make_grading(square, 1.0, 0.5)
        assert [grading.kappa_for(i) for i in range(4)] == [0.5] * 4


class TestPolygonInput:
    def test_named(self):
        polygon, grading = load_polygon("octagon")
        assert polygon.vertex_count == 8
        assert grading is None

    def test_object_with_grading(self):
        polygon, grading = load_polygon({
            "vertices": [[-1, -1], [0, -1], [0, 0], [1, 0], [1, 1], [-1, 1]],
            "grading": {"kappa": {"2": 0.2}},
        })
        assert grading.singular_kappa() == {2: 0.2}

    def test_unknown_name(self):
        with pytest.raises(ConfigurationError):
            load_polygon("dodecahedron")

    def test_kappa_and_theta_are_exclusive(self, lshape):
        with pytest.raises(ConfigurationError):
            grading_from_dict(lshape, {"kappa": 0.2, "theta": 1.0, "a": 0.5})

    def test_round_trip(self, lshape):
        again = PolygonDomain.from_dict(lshape.to_dict())
        assert np.array_equal(again.vertices, lshape.vertices)
