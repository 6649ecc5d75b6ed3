"""
Study configuration: schema, defaults and validation.

Configs are JSON or YAML documents; yaml.safe_load reads both. Every
violation is reported with the JSON path of the offending value.
"""

import logging
from pathlib import Path
from typing import Dict, List, Optional, Union

import yaml

from core.errors import ConfigurationError, ExpressionSyntaxError
from core.expression import Expression
from core.geometry import GradingSpec, PolygonDomain, grading_from_dict, load_polygon
from solvers.cg import SolverConfig

logger = logging.getLogger(__name__)

TOP_LEVEL_KEYS = {"name", "polygon", "kappa", "theta", "a", "f", "levels", "exact",
                  "quad_order", "exact_quad_order", "solver", "weighted", "outputs"}
LOAD_QUAD_ORDERS = (1, 2, 3)
EXACT_QUAD_ORDERS = (1, 2, 3, 5)


def _with_root(error: ConfigurationError, prefix: str = "$") -> ConfigurationError:
    path = error.path or ""
    if path.startswith("$"):
        return error
    message = str(error)
    if path and message.startswith(f"{path}: "):
        message = message[len(path) + 2:]
    full = f"{prefix}.{path}" if path else prefix
    return ConfigurationError(message, path=full)


def _expression(source, path: str) -> Expression:
    if not isinstance(source, (str, int, float)) or isinstance(source, bool):
        raise ConfigurationError(f"expected an expression string, got {source!r}", path=path)
    try:
        return Expression(str(source))
    except ExpressionSyntaxError as e:
        raise ConfigurationError(str(e), path=path) from e


def _integer(value, path: str, minimum: int = 0) -> int:
    if isinstance(value, bool) or not isinstance(value, int) or value < minimum:
        raise ConfigurationError(f"expected an integer >= {minimum}, got {value!r}", path=path)
    return value


class ExactSolution:
    """Exact solution and its user-supplied gradient"""

    def __init__(self, u: Expression, du_dx: Expression, du_dy: Expression):
        self.u = u
        self.du_dx = du_dx
        self.du_dy = du_dy

    def to_dict(self) -> Dict:
        return {"u": self.u.source, "du_dx": self.du_dx.source, "du_dy": self.du_dy.source}

    @classmethod
    def from_dict(cls, data) -> "ExactSolution":
        if not isinstance(data, dict):
            raise ConfigurationError("exact must be an object with u, du_dx, du_dy", path="$.exact")
        missing = [key for key in ("u", "du_dx", "du_dy") if key not in data]
        if missing:
            raise ConfigurationError(f"missing {', '.join(missing)} (gradients are not derived)",
                                     path="$.exact")
        return cls(*(_expression(data[key], f"$.exact.{key}") for key in ("u", "du_dx", "du_dy")))


class OutputConfig:
    """Artifact paths; relative paths are resolved against an output directory"""

    def __init__(self, csv: Optional[str] = None, json: Optional[str] = None,
                 svg_levels: Optional[List[int]] = None, vtk_level: Optional[int] = None,
                 plot: Optional[str] = None, svg_pattern: str = "mesh_level_{level}.svg",
                 vtk_path: str = "solution_level_{level}.vtk", solution_plot: Optional[str] = None):
        self.csv = csv
        self.json = json
        self.svg_levels = list(svg_levels or [])
        self.vtk_level = vtk_level
        self.plot = plot
        self.svg_pattern = svg_pattern
        self.vtk_path = vtk_path
        self.solution_plot = solution_plot

    def resolve(self, name: str, directory: Union[str, Path]) -> Path:
        path = Path(name)
        return path if path.is_absolute() else Path(directory) / path

    def to_dict(self) -> Dict:
        data: Dict = {"svg_levels": self.svg_levels}
        for key in ("csv", "json", "vtk_level", "plot", "solution_plot"):
            if getattr(self, key) is not None:
                data[key] = getattr(self, key)
        return data

    @classmethod
    def from_dict(cls, data, levels: int) -> "OutputConfig":
        data = data or {}
        if not isinstance(data, dict):
            raise ConfigurationError("outputs must be an object", path="$.outputs")
        for key in ("csv", "json", "plot", "solution_plot", "svg_pattern", "vtk_path"):
            if key in data and (not isinstance(data[key], str) or not data[key]):
                raise ConfigurationError(f"expected a non-empty path, got {data[key]!r}", path=f"$.outputs.{key}")
        svg_levels = data.get("svg_levels", [])
        if not isinstance(svg_levels, list):
            raise ConfigurationError("expected a list of levels", path="$.outputs.svg_levels")
        for i, level in enumerate(svg_levels):
            _integer(level, f"$.outputs.svg_levels[{i}]")
            if level > levels:
                raise ConfigurationError(f"level {level} exceeds levels = {levels}",
                                         path=f"$.outputs.svg_levels[{i}]")
        vtk_level = data.get("vtk_level")
        if vtk_level is not None:
            _integer(vtk_level, "$.outputs.vtk_level")
            if vtk_level > levels:
                raise ConfigurationError(f"level {vtk_level} exceeds levels = {levels}",
                                         path="$.outputs.vtk_level")
        return cls(csv=data.get("csv"), json=data.get("json"), svg_levels=svg_levels,
                   vtk_level=vtk_level, plot=data.get("plot"),
                   svg_pattern=data.get("svg_pattern", "mesh_level_{level}.svg"),
                   vtk_path=data.get("vtk_path", "solution_level_{level}.vtk"),
                   solution_plot=data.get("solution_plot"))


class StudyConfig:
    """A validated convergence-study configuration"""

    def __init__(self, name: str, polygon: PolygonDomain, grading: GradingSpec, f: Expression,
                 levels: int, exact: Optional[ExactSolution] = None, quad_order: int = 2,
                 exact_quad_order: int = 3, solver: Optional[SolverConfig] = None,
                 weighted_a: Optional[float] = None, outputs: Optional[OutputConfig] = None,
                 polygon_source: Union[str, Dict, None] = None):
        self.name = name
        self.polygon = polygon
        self.grading = grading
        self.f = f
        self.levels = levels
        self.exact = exact
        self.quad_order = quad_order
        self.exact_quad_order = exact_quad_order
        self.solver = solver or SolverConfig()
        self.weighted_a = weighted_a
        self.outputs = outputs or OutputConfig()
        self.polygon_source = polygon_source

    def with_kappa(self, kappa: float) -> "StudyConfig":
        """Copy of this config graded with kappa at every singular vertex"""
        grading = GradingSpec.from_kappa(self.polygon, kappa)
        return StudyConfig(f"{self.name}_kappa{kappa:g}", self.polygon, grading, self.f, self.levels,
                           self.exact, self.quad_order, self.exact_quad_order, self.solver,
                           self.weighted_a, OutputConfig(), self.polygon_source)

    def to_dict(self) -> Dict:
        data: Dict = {
            "name": self.name,
            "polygon": self.polygon_source if self.polygon_source is not None else self.polygon.to_dict(),
            "f": self.f.source,
            "levels": self.levels,
            "quad_order": self.quad_order,
            "exact_quad_order": self.exact_quad_order,
            "solver": self.solver.to_dict(),
            "outputs": self.outputs.to_dict(),
        }
        grading = self.grading.to_dict()
        if "theta" in grading:
            del grading["kappa"]
        data.update(grading)
        if self.exact is not None:
            data["exact"] = self.exact.to_dict()
        if self.weighted_a is not None:
            data["weighted"] = {"a": self.weighted_a}
        return data

    @classmethod
    def from_dict(cls, data, default_name: str = "study") -> "StudyConfig":
        if not isinstance(data, dict):
            raise ConfigurationError("study config must be an object", path="$")
        for key in sorted(set(data) - TOP_LEVEL_KEYS):
            logger.warning("ignoring unknown config key '%s'", key)

        for key in ("polygon", "f", "levels"):
            if key not in data:
                raise ConfigurationError("required key missing", path=f"$.{key}")

        try:
            polygon, polygon_grading = load_polygon(data["polygon"])
        except ConfigurationError as e:
            raise _with_root(e)

        grading_keys = {key: data[key] for key in ("kappa", "theta", "a") if key in data}
        if grading_keys and polygon_grading is not None:
            raise ConfigurationError("grading given both at top level and inside polygon", path="$")
        try:
            if grading_keys:
                grading = grading_from_dict(polygon, grading_keys, path="$")
            else:
                grading = polygon_grading or GradingSpec.uniform(polygon)
        except ConfigurationError as e:
            raise _with_root(e)

        levels = _integer(data["levels"], "$.levels", minimum=1)
        if levels < 3:
            logger.warning("levels = %d: successive-difference rates need at least 3 levels", levels)

        quad_order = data.get("quad_order", 2)
        if quad_order not in LOAD_QUAD_ORDERS or isinstance(quad_order, bool):
            raise ConfigurationError(f"expected one of {LOAD_QUAD_ORDERS}, got {quad_order!r}",
                                     path="$.quad_order")
        exact_quad_order = data.get("exact_quad_order", 3)
        if exact_quad_order not in EXACT_QUAD_ORDERS or isinstance(exact_quad_order, bool):
            raise ConfigurationError(f"expected one of {EXACT_QUAD_ORDERS}, got {exact_quad_order!r}",
                                     path="$.exact_quad_order")

        exact = ExactSolution.from_dict(data["exact"]) if data.get("exact") is not None else None

        weighted_a = None
        if data.get("weighted") is not None:
            weighted = data["weighted"]
            if not isinstance(weighted, dict) or "a" not in weighted:
                raise ConfigurationError("weighted must be an object with 'a'", path="$.weighted")
            if isinstance(weighted["a"], bool) or not isinstance(weighted["a"], (int, float)):
                raise ConfigurationError(f"expected a number, got {weighted['a']!r}", path="$.weighted.a")
            weighted_a = float(weighted["a"])

        name = data.get("name") or (polygon.name if polygon.name else default_name)
        return cls(
            name=str(name),
            polygon=polygon,
            grading=grading,
            f=_expression(data["f"], "$.f"),
            levels=levels,
            exact=exact,
            quad_order=quad_order,
            exact_quad_order=exact_quad_order,
            solver=SolverConfig.from_dict(data.get("solver")),
            weighted_a=weighted_a,
            outputs=OutputConfig.from_dict(data.get("outputs"), levels),
            polygon_source=data["polygon"],
        )


def load_study_config(path: Union[str, Path]) -> StudyConfig:
    """Read a JSON or YAML study config"""
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as e:
        raise ConfigurationError(f"cannot read {path}: {e}", path="$")
    try:
        data = yaml.safe_load(text)
    except yaml.YAMLError as e:
        raise ConfigurationError(f"{path} is not valid JSON/YAML: {e}", path="$")
    return StudyConfig.from_dict(data, default_name=path.stem)
