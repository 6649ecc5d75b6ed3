"""
Exception hierarchy shared by every package of the toolkit.

Each error names the thing that went wrong (vertex index, JSON path, line
number, byte offset, element id, iteration) so callers can report it without
parsing the message.
"""

from typing import Optional


class FemError(Exception):
    """Base class for all toolkit errors"""


class GeometryError(FemError):
    """Invalid polygon input"""

    def __init__(self, message: str, vertex_index: Optional[int] = None):
        if vertex_index is not None:
            message = f"vertex {vertex_index}: {message}"
        super().__init__(message)
        self.vertex_index = vertex_index


class ConfigurationError(FemError):
    """A configuration value violates a constraint"""

    def __init__(self, message: str, path: Optional[str] = None):
        if path:
            message = f"{path}: {message}"
        super().__init__(message)
        self.path = path


class MeshError(FemError):
    """Triangulation, refinement or mesh-consistency failure"""


class MeshFormatError(MeshError):
    """Malformed mesh text"""

    def __init__(self, message: str, line_number: int):
        super().__init__(f"line {line_number}: {message}")
        self.line_number = line_number


class ExpressionSyntaxError(FemError):
    """Expression source could not be parsed"""

    def __init__(self, message: str, offset: int, source: str = ""):
        text = f"{message} at offset {offset}"
        if source:
            text += f"\n  {source}\n  {' ' * offset}^"
        super().__init__(text)
        self.offset = offset
        self.source = source


class ExpressionDomainError(FemError):
    """Expression evaluated outside its mathematical domain"""

    def __init__(self, message: str, node: str = "", point_index: Optional[int] = None):
        text = message if not node else f"{message} in '{node}'"
        super().__init__(text)
        self.node = node
        self.point_index = point_index


class AssemblyError(FemError):
    """Stiffness or load assembly failure"""

    def __init__(self, message: str, element: Optional[int] = None):
        if element is not None:
            message = f"element {element}: {message}"
        super().__init__(message)
        self.element = element


class SolverError(FemError):
    """Linear solver failure"""


class NotPositiveDefiniteError(SolverError):
    """CG met a direction with non-positive curvature"""

    def __init__(self, iteration: int, curvature: float):
        super().__init__(
            f"matrix not positive definite: p^T A p = {curvature:.6e} at iteration {iteration}"
        )
        self.iteration = iteration
        self.curvature = curvature


class ConvergenceError(SolverError):
    """CG reached its iteration cap above the residual tolerance"""

    def __init__(self, iterations: int, relative_residual: float, rel_tol: float):
        super().__init__(
            f"CG did not converge in {iterations} iterations: "
            f"relative residual {relative_residual:.3e} > {rel_tol:.1e}"
        )
        self.iterations = iterations
        self.relative_residual = relative_residual
        self.rel_tol = rel_tol


class PreconditionerError(SolverError):
    """Jacobi preconditioner is not defined"""

    def __init__(self, row: int, value: float):
        super().__init__(f"Jacobi preconditioner undefined: diagonal[{row}] = {value!r}")
        self.row = row
        self.value = value


class ExportError(FemError):
    """Writing or reading an export file failed"""


class StudyError(FemError):
    """A study level failed; wraps the underlying toolkit error"""

    def __init__(self, level: int, cause: Exception):
        super().__init__(f"level {level}: {cause}")
        self.level = level
        self.cause = cause
