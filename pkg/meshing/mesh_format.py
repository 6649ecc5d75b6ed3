"""
Plain-text mesh format.

    nodes N
    x y flag            N lines, flag 1 = boundary, 0 = interior
    triangles M
    i j k               M lines, 0-based node indices, CCW
    corners K           optional
    node singular       K lines, polygon vertex order

Coordinates are written with repr() so a save/load round trip is exact.
Blank lines and lines starting with '#' are ignored on input.
"""

import logging
import math
from pathlib import Path
from typing import Iterator, List, Tuple, Union

import numpy as np

from core.errors import ExportError, MeshFormatError
from core.mesh import NO_CORNER, NO_LAYER, TriMesh

logger = logging.getLogger(__name__)


def _fmt(value: float) -> str:
    return repr(float(value))


def save_mesh(mesh: TriMesh) -> str:
    """Canonical text form of a mesh"""
    lines = [f"nodes {mesh.num_nodes}"]
    for (x, y), flag in zip(mesh.nodes.tolist(), mesh.boundary.tolist()):
        lines.append(f"{_fmt(x)} {_fmt(y)} {int(flag)}")
    lines.append(f"triangles {mesh.num_triangles}")
    for i, j, k in mesh.triangles.tolist():
        lines.append(f"{i} {j} {k}")
    if len(mesh.corner_nodes):
        lines.append(f"corners {len(mesh.corner_nodes)}")
        for corner, node in enumerate(mesh.corner_nodes.tolist()):
            lines.append(f"{node} {int(corner in mesh.singular_corners)}")
    return "\n".join(lines) + "\n"


class _LineReader:
    def __init__(self, text: str):
        self._lines = text.splitlines()
        self._index = 0
        self.line_number = 0

    def _content(self) -> Iterator[Tuple[int, str]]:
        while self._index < len(self._lines):
            self._index += 1
            stripped = self._lines[self._index - 1].strip()
            if stripped and not stripped.startswith("#"):
                yield self._index, stripped

    def next(self, what: str) -> List[str]:
        for number, line in self._content():
            self.line_number = number
            return line.split()
        raise MeshFormatError(f"unexpected end of input, expected {what}", self.line_number + 1)

    def at_end(self) -> bool:
        for number, _ in self._content():
            self._index = number - 1
            return False
        return True


def _header(reader: _LineReader, keyword: str) -> int:
    fields = reader.next(f"'{keyword} <count>'")
    if len(fields) != 2 or fields[0] != keyword:
        raise MeshFormatError(f"expected '{keyword} <count>', found {' '.join(fields)!r}",
                              reader.line_number)
    try:
        count = int(fields[1])
    except ValueError:
        raise MeshFormatError(f"{keyword} count {fields[1]!r} is not an integer", reader.line_number)
    if count < 0:
        raise MeshFormatError(f"{keyword} count must be non-negative, got {count}", reader.line_number)
    return count


def _int_fields(reader: _LineReader, fields: List[str], expected: int, what: str) -> List[int]:
    if len(fields) != expected:
        raise MeshFormatError(f"{what} line needs {expected} fields, got {len(fields)}", reader.line_number)
    try:
        return [int(f) for f in fields]
    except ValueError:
        raise MeshFormatError(f"{what} line has a non-integer field: {' '.join(fields)!r}",
                              reader.line_number)


def load_mesh(text: str) -> TriMesh:
    """Parse mesh text; errors carry the offending line number"""
    reader = _LineReader(text)

    node_count = _header(reader, "nodes")
    nodes = np.empty((node_count, 2))
    boundary = np.empty(node_count, dtype=bool)
    for i in range(node_count):
        fields = reader.next(f"node {i}")
        if len(fields) != 3:
            raise MeshFormatError(f"node line needs 'x y flag', got {len(fields)} fields", reader.line_number)
        try:
            x, y = float(fields[0]), float(fields[1])
        except ValueError:
            raise MeshFormatError(f"node coordinates {fields[0]!r} {fields[1]!r} are not numbers",
                                  reader.line_number)
        if not (math.isfinite(x) and math.isfinite(y)):
            raise MeshFormatError(f"node {i} has a non-finite coordinate", reader.line_number)
        if fields[2] not in ("0", "1"):
            raise MeshFormatError(f"boundary flag must be 0 or 1, got {fields[2]!r}", reader.line_number)
        nodes[i] = (x, y)
        boundary[i] = fields[2] == "1"

    triangle_count = _header(reader, "triangles")
    triangles = np.empty((triangle_count, 3), dtype=np.int64)
    for t in range(triangle_count):
        indices = _int_fields(reader, reader.next(f"triangle {t}"), 3, "triangle")
        for index in indices:
            if not 0 <= index < node_count:
                raise MeshFormatError(f"triangle {t} references node {index} of {node_count}",
                                      reader.line_number)
        triangles[t] = indices

    corner_nodes: List[int] = []
    singular: List[int] = []
    if not reader.at_end():
        corner_count = _header(reader, "corners")
        for c in range(corner_count):
            node, flag = _int_fields(reader, reader.next(f"corner {c}"), 2, "corner")
            if not 0 <= node < node_count:
                raise MeshFormatError(f"corner {c} references node {node} of {node_count}",
                                      reader.line_number)
            if flag not in (0, 1):
                raise MeshFormatError(f"singular flag must be 0 or 1, got {flag}", reader.line_number)
            corner_nodes.append(node)
            if flag:
                singular.append(c)
        if not reader.at_end():
            reader.next("end of input")
            raise MeshFormatError("unexpected content after the corners section", reader.line_number)

    attached = np.full(triangle_count, NO_CORNER, dtype=np.int64)
    for corner in singular:
        attached[(triangles == corner_nodes[corner]).any(axis=1)] = corner
    layer = np.where(attached != NO_CORNER, 0, NO_LAYER)

    mesh = TriMesh(nodes, triangles, boundary, attached_corner=attached, layer=layer,
                   corner_nodes=corner_nodes or None, singular_corners=singular)
    logger.debug("loaded mesh: %d nodes, %d triangles, %d corners",
                 mesh.num_nodes, mesh.num_triangles, len(corner_nodes))
    return mesh


def read_mesh_file(path: Union[str, Path]) -> TriMesh:
    try:
        text = Path(path).read_text()
    except OSError as e:
        raise ExportError(f"cannot read mesh file {path}: {e}")
    return load_mesh(text)


def write_mesh_file(mesh: TriMesh, path: Union[str, Path]):
    if not str(path):
        raise ExportError("mesh output path is empty")
    try:
        Path(path).write_text(save_mesh(mesh))
    except OSError as e:
        raise ExportError(f"cannot write mesh file {path}: {e}")
