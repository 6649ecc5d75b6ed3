import pytest

from applications.poisson_cli import main


def test_mesh_then_validate(tmp_path, capsys):
    svg = tmp_path / "lshape.svg"
    saved = tmp_path / "lshape.mesh"
    assert main(["mesh", "--domain", "lshape", "--refine", "2", "--kappa", "0.2", "--layers",
                 "--svg", str(svg), "--save", str(saved)]) == 0
    out = capsys.readouterr().out
    assert "corner 2 layer 2" in out
    assert svg.exists() and saved.exists()

    assert main(["validate", str(saved), "--domain", "lshape"]) == 0
    assert "valid" in capsys.readouterr().out


def test_mesh_from_polygon_file(tmp_path):
    polygon = tmp_path / "triangle.json"
    polygon.write_text('{"vertices": [[0, 0], [2, 0], [0, 2]], "grading": {"kappa": 0.5}}')
    assert main(["mesh", "--polygon", str(polygon), "--refine", "1", "--vtk", str(tmp_path / "t.vtk")]) == 0
    assert (tmp_path / "t.vtk").exists()


@pytest.mark.parametrize("argv", [
    ["mesh", "--refine", "-1"],
    ["mesh", "--kappa", "0.2", "--theta", "1", "--a", "0.5"],
    ["mesh", "--theta", "1"],
])
def test_bad_arguments_exit(argv):
    with pytest.raises(SystemExit) as info:
        main(argv)
    assert info.value.code == 2


def test_bad_config(tmp_path, capsys):
    config = tmp_path / "bad.yaml"
    config.write_text("polygon: lshape\nf: '1 +'\nlevels: 3\n")
    assert main(["study", str(config)]) == 1
    assert "❌" in capsys.readouterr().err


def test_study(tmp_path, capsys):
    config = tmp_path / "square.yaml"
    config.write_text("polygon: square\nf: '1'\nlevels: 3\noutputs:\n  csv: square.csv\n")
    assert main(["study", str(config), "--output-dir", str(tmp_path)]) == 0
    assert "Final rates" in capsys.readouterr().out
    assert len((tmp_path / "square.csv").read_text().splitlines()) == 5


def test_validate_rejects_bad_mesh(tmp_path, capsys):
    clockwise = tmp_path / "cw.mesh"
    clockwise.write_text("nodes 3\n0 0 1\n1 0 1\n0 1 1\ntriangles 1\n0 2 1\n")
    assert main(["validate", str(clockwise)]) == 1
    assert "violation" in capsys.readouterr().out

    garbled = tmp_path / "garbled.mesh"
    garbled.write_text("nodes two\n")
    assert main(["validate", str(garbled)]) == 1
