import numpy as np
import pytest

from core.errors import MeshError
from core.geometry import PolygonDomain
from core.mesh import EdgeTable, TriMesh, ViolationKind, validate

UNIT_SQUARE = [[0.0, 0.0], [1.0, 0.0], [1.0, 1.0], [0.0, 1.0]]


def two_triangle_square(**kwargs):
    return TriMesh(UNIT_SQUARE, [[3, 0, 1], [1, 2, 3]], [True] * 4, **kwargs)


class TestTriMesh:
    def test_arrays_are_read_only(self):
        mesh = two_triangle_square()
        with pytest.raises(ValueError):
            mesh.nodes[0, 0] = 5.0
        with pytest.raises(ValueError):
            mesh.triangles[0, 0] = 2

    def test_edge_table(self):
        table = EdgeTable(np.array([[3, 0, 1], [1, 2, 3]]), 4)
        assert table.edges.tolist() == [[0, 1], [0, 3], [1, 2], [1, 3], [2, 3]]
        assert table.counts.tolist() == [1, 1, 1, 2, 1]
        assert table.boundary_mask().sum() == 4
        # triangle 0 = (3, 0, 1): local edges 30, 01, 13
        assert table.triangle_edges[0].tolist() == [1, 0, 3]

    def test_geometry(self):
        mesh = two_triangle_square()
        assert mesh.areas() == pytest.approx([0.5, 0.5])
        assert mesh.diameters() == pytest.approx([np.sqrt(2.0)] * 2)
        assert np.degrees(mesh.angles()).sum(axis=1) == pytest.approx([180.0, 180.0])
        quality = mesh.quality()
        assert quality["min_angle_deg"] == pytest.approx(45.0)
        assert quality["max_angle_deg"] == pytest.approx(90.0)

    def test_boundary_flag_length_checked(self):
        with pytest.raises(MeshError):
            TriMesh(UNIT_SQUARE, [[3, 0, 1]], [True] * 3)

    def test_renumbered_keeps_geometry(self, lshape_mesh):
        perm = np.arange(lshape_mesh.num_nodes)[::-1]
        moved = lshape_mesh.renumbered(perm)
        assert validate(moved).is_valid
        assert moved.areas() == pytest.approx(lshape_mesh.areas())
        assert moved.singular_nodes() == {int(perm[2]): 2}
        with pytest.raises(MeshError):
            lshape_mesh.renumbered([0] * lshape_mesh.num_nodes)


class TestValidate:
    def test_valid_square(self):
        report = validate(two_triangle_square(), PolygonDomain(UNIT_SQUARE))
        assert report.is_valid, str(report)

    def test_orientation(self):
        mesh = TriMesh(UNIT_SQUARE, [[3, 1, 0], [1, 2, 3]], [True] * 4)
        report = validate(mesh)
        assert [v.indices for v in report.of_kind(ViolationKind.ORIENTATION)] == [(0,)]

    def test_index_range(self):
        mesh = TriMesh(UNIT_SQUARE, [[3, 0, 7], [1, 2, 3]], [True] * 4)
        assert validate(mesh).of_kind(ViolationKind.INDEX_RANGE)

    def test_hanging_node(self):
        nodes = UNIT_SQUARE + [[0.5, 0.5]]
        mesh = TriMesh(nodes, [[0, 1, 2], [0, 4, 3], [4, 2, 3]], [True] * 5)
        report = validate(mesh)
        assert report.of_kind(ViolationKind.CONFORMITY)
        assert not report.is_valid

    def test_boundary_flags(self):
        mesh = TriMesh(UNIT_SQUARE, [[3, 0, 1], [1, 2, 3]], [True, False, True, True])
        violations = validate(mesh).of_kind(ViolationKind.BOUNDARY_FLAG)
        assert [v.indices for v in violations] == [(1,)]

    def test_boundary_location(self):
        larger = PolygonDomain([[-1.0, -1.0], [2.0, -1.0], [2.0, 2.0], [-1.0, 2.0]])
        violations = validate(two_triangle_square(), larger).of_kind(ViolationKind.BOUNDARY_LOCATION)
        assert {v.indices[0] for v in violations} == {0, 1, 2, 3}

    def test_triangle_count(self):
        mesh = two_triangle_square(level=1, initial_triangle_count=2)
        assert validate(mesh).of_kind(ViolationKind.TRIANGLE_COUNT)

    def test_singular_separation(self):
        mesh = TriMesh([[0.0, 0.0], [1.0, 0.0], [0.0, 1.0]], [[0, 1, 2]], [True] * 3,
                       corner_nodes=[0, 1, 2], singular_corners=[0, 1])
        violations = validate(mesh).of_kind(ViolationKind.SINGULAR_SEPARATION)
        assert [v.indices for v in violations] == [(0,)]

    def test_report_serialises(self):
        mesh = TriMesh(UNIT_SQUARE, [[3, 1, 0], [1, 2, 3]], [True] * 4)
        data = validate(mesh).to_dict()
        assert data["valid"] is False
        assert data["violations"][0]["kind"] == "orientation"
