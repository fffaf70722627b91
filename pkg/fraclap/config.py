"""
JSON run files for the command line.

A run file is one JSON object. ``domain``, ``boundary`` and ``fractional``
are required; the other sections are read by the commands that need them.
Unknown keys are rejected everywhere and reported with their dotted path,
e.g. ``fractional.sigma``.
"""

import dataclasses
import json
import math
import os
from typing import *

import sentinel

from . import functions
from .errors import *
from .fem import BoundaryCondition
from .fracop import FracConfig, NtAdaptive, NtFormula
from .harness import Domain, Interval, Rectangle
from .mesh import Mesh, generate_convex_polygon, generate_interval, generate_rectangle
from .types import *

__all__ = [
    "Polygon",
    "InputSpec",
    "ConvergenceSpec",
    "PmeSpec",
    "RunConfig",
    "load_config",
    "parse_config",
]


_MISSING = sentinel.create("_MISSING")

PME_INITIAL_AMPLITUDE = math.exp(4.0)


@dataclasses.dataclass(frozen=True)
class Polygon:
    vertices: Tuple[Tuple[float, float], ...]


class _Section:
    """
    Reads the keys of one JSON object and complains about the rest.
    """

    def __init__(self, data: object, path: str):
        if not isinstance(data, dict):
            raise InvalidConfigValue(path or "<root>", data, "expected an object")
        self.data = dict(data)
        self.path = path

    def key(self, name: str) -> str:
        return f"{self.path}.{name}" if self.path else name

    def raw(self, name: str, default: object = _MISSING) -> object:
        if name in self.data:
            return self.data.pop(name)
        if default is _MISSING:
            raise MissingConfigKey(self.key(name))
        return default

    def number(self, name: str, default: object = _MISSING) -> float:
        value = self.raw(name, default)
        if value is default and default is not _MISSING:
            return value
        return _as_number(value, self.key(name))

    def integer(self, name: str, default: object = _MISSING) -> int:
        value = self.raw(name, default)
        if value is default and default is not _MISSING:
            return value
        if isinstance(value, bool) or not isinstance(value, int):
            raise InvalidConfigValue(self.key(name), value, "expected an integer")
        return value

    def string(self, name: str, default: object = _MISSING) -> str:
        value = self.raw(name, default)
        if not isinstance(value, str):
            raise InvalidConfigValue(self.key(name), value, "expected a string")
        return value

    def section(self, name: str) -> "_Section":
        return _Section(self.raw(name), self.key(name))

    def finish(self) -> None:
        for name in self.data:
            raise UnknownConfigKey(self.key(name))


def _as_number(value: object, key: str) -> float:
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise InvalidConfigValue(key, value, "expected a number")
    return float(value)


def _number_list(value: object, key: str) -> Tuple[float, ...]:
    if not isinstance(value, list):
        raise InvalidConfigValue(key, value, "expected a list of numbers")
    return tuple(_as_number(v, f"{key}[{i}]") for i, v in enumerate(value))


def _integer_list(value: object, key: str) -> Tuple[int, ...]:
    if isinstance(value, int) and not isinstance(value, bool):
        return (value,)
    if not isinstance(value, list) or not all(isinstance(v, int) and not isinstance(v, bool) for v in value):
        raise InvalidConfigValue(key, value, "expected an integer or a list of integers")
    return tuple(value)


def _parse_domain(section: _Section) -> Union[Domain, Polygon]:
    kind = section.string("kind")
    if kind == "interval":
        domain = Interval(section.number("a"), section.number("b"))
    elif kind == "unit_square":
        domain = Rectangle()
    elif kind == "rectangle":
        domain = Rectangle(section.number("width"), section.number("height"))
    elif kind == "polygon":
        raw = section.raw("vertices")
        if not isinstance(raw, list):
            raise InvalidConfigValue(section.key("vertices"), raw, "expected a list of [x, y] pairs")
        vertices = []
        for i, vertex in enumerate(raw):
            point = _number_list(vertex, section.key(f"vertices[{i}]"))
            if len(point) != 2:
                raise InvalidConfigValue(section.key(f"vertices[{i}]"), vertex, "expected [x, y]")
            vertices.append(point)
        domain = Polygon(tuple(vertices))
    else:
        raise InvalidConfigValue(section.key("kind"), kind, "one of interval, unit_square, rectangle, polygon")
    section.finish()
    return domain


def _parse_boundary_condition(section: _Section) -> BoundaryCondition:
    kind = section.string("kind")
    if kind == "robin":
        bc = BoundaryCondition.robin(section.number("kappa", 1.0))
    elif kind in ("dirichlet", "neumann"):
        bc = BoundaryCondition(kind)
    else:
        raise InvalidConfigValue(section.key("kind"), kind, "one of dirichlet, neumann, robin")
    section.finish()
    return bc


def _parse_fractional(section: _Section) -> Dict[str, Any]:
    options = {
        "s": section.number("s"),
        "theta": section.number("theta", 1.0),
        "eta": section.number("eta", 1e-3),
        "p": section.number("p", 1.0),
        "scheme": section.string("scheme", "low"),
        "tol_rel": section.number("tol_rel", 1e-12),
    }

    nt = section.string("nt", "adaptive")
    if nt == "adaptive":
        options["nt_mode"] = NtAdaptive(section.number("nt_tol", 1e-8))
    elif nt == "formula":
        lambda_min = section.raw("lambda_min", "auto")
        value = AUTO if lambda_min == "auto" else _as_number(lambda_min, section.key("lambda_min"))
        options["nt_mode"] = NtFormula(value)
    else:
        raise InvalidConfigValue(section.key("nt"), nt, "one of adaptive, formula")

    if "n_t_max" in section.data:
        options["n_t_max"] = section.integer("n_t_max")
    section.finish()
    return options


@dataclasses.dataclass(frozen=True)
class InputSpec:
    """
    A built-in datum: ``eigenfunction`` (``index``), ``bump`` (``r``,
    ``center``, ``amplitude``), ``plateau_bump`` (``r``, ``center``),
    ``constant`` (``value``), ``sine_cosine`` (2D only; ``amplitude``,
    ``kx``, ``ky``) or ``pme_initial``.
    """

    kind: str
    params: Tuple[Tuple[str, Any], ...] = ()

    def build(self, domain: Union[Domain, Polygon], bc: BoundaryCondition) -> ScalarFunction:
        params = dict(self.params)
        if self.kind == "eigenfunction":
            if isinstance(domain, Polygon):
                raise InvalidConfigValue("input.kind", self.kind, "eigenfunctions need an interval or rectangle")
            return domain.eigenpair(bc, params["index"])
        if self.kind == "pme_initial":
            return functions.bump(0.5, (0.0,), PME_INITIAL_AMPLITUDE)
        return getattr(functions, self.kind)(**params)


def _parse_center(section: _Section, dimension: int) -> Tuple[float, ...]:
    center = _number_list(section.raw("center", [0.0] * dimension), section.key("center"))
    if len(center) != dimension:
        raise InvalidConfigValue(section.key("center"), list(center), f"expected {dimension} coordinates")
    return center


def _parse_input(section: _Section, dimension: int) -> InputSpec:
    kind = section.string("kind")
    if kind == "eigenfunction":
        index = _integer_list(section.raw("index", [1] * dimension), section.key("index"))
        if len(index) != dimension:
            raise InvalidConfigValue(section.key("index"), list(index), f"expected {dimension} indices")
        params = {"index": index}
    elif kind == "bump":
        params = {
            "r": section.number("r"),
            "center": _parse_center(section, dimension),
            "amplitude": section.number("amplitude", 1.0),
        }
    elif kind == "plateau_bump":
        params = {
            "r": section.number("r"),
            "center": _parse_center(section, dimension),
        }
    elif kind == "constant":
        params = {"value": section.number("value")}
    elif kind == "sine_cosine":
        if dimension != 2:
            raise InvalidConfigValue(section.key("kind"), kind, "sine_cosine needs a 2D domain")
        params = {
            "amplitude": section.number("amplitude", 0.1),
            "kx": section.number("kx", 2.0),
            "ky": section.number("ky", 1.0),
        }
    elif kind == "pme_initial":
        params = {}
    else:
        raise InvalidConfigValue(
            section.key("kind"),
            kind,
            "one of eigenfunction, bump, plateau_bump, constant, sine_cosine, pme_initial",
        )
    section.finish()
    return InputSpec(kind, tuple(params.items()))


@dataclasses.dataclass(frozen=True)
class ConvergenceSpec:
    h_list: Tuple[float, ...]
    eigen_index: Tuple[int, ...]
    max_workers: int = 1


def _parse_convergence(section: _Section, domain: Union[Domain, Polygon]) -> ConvergenceSpec:
    if isinstance(domain, Polygon):
        raise InvalidConfigValue("domain.kind", "polygon", "convergence studies need an interval or rectangle")

    dimension = len(domain.lengths)
    if "h_list" in section.data:
        h_list = _number_list(section.raw("h_list"), section.key("h_list"))
    elif "refinement_levels" in section.data and isinstance(domain, Rectangle):
        levels = _integer_list(section.raw("refinement_levels"), section.key("refinement_levels"))
        h_list = tuple(domain.h_for(level) for level in levels)
    else:
        raise MissingConfigKey(section.key("h_list"))

    index = _integer_list(section.raw("eigen_index", [1] * dimension), section.key("eigen_index"))
    if len(index) != dimension:
        raise InvalidConfigValue(section.key("eigen_index"), list(index), f"expected {dimension} indices")
    max_workers = section.integer("max_workers", 1)
    section.finish()
    return ConvergenceSpec(h_list, index, max_workers)


@dataclasses.dataclass(frozen=True)
class PmeSpec:
    m: float
    tau_end: float
    snapshots: Tuple[float, ...] = ()


def _parse_pme(section: _Section) -> PmeSpec:
    spec = PmeSpec(
        section.number("m"),
        section.number("tau_end"),
        _number_list(section.raw("snapshots", []), section.key("snapshots")),
    )
    section.finish()
    return spec


@dataclasses.dataclass(frozen=True, eq=False)
class RunConfig:
    """
    A parsed run file. ``fractional`` holds the :class:`FracConfig` keyword
    arguments shared by every boundary condition in ``boundary``.
    """

    domain: Union[Domain, Polygon]
    boundary: Tuple[BoundaryCondition, ...]
    fractional: Dict[str, Any]
    n_cells: Optional[int] = None
    refinements: Optional[int] = None
    input: Optional[InputSpec] = None
    boundary_data: Optional[InputSpec] = None
    convergence: Optional[ConvergenceSpec] = None
    pme: Optional[PmeSpec] = None
    prefix: str = "fraclap"

    @property
    def dimension(self) -> int:
        return 1 if isinstance(self.domain, Interval) else 2

    def frac_config(self, bc: BoundaryCondition, **overrides: Any) -> FracConfig:
        return FracConfig(bc=bc, **{**self.fractional, **overrides})

    def build_mesh(self) -> Mesh:
        """
        :raises MissingConfigKey: If the ``mesh`` section lacks the size key
            for this domain
        """
        if isinstance(self.domain, Interval):
            if self.n_cells is None:
                raise MissingConfigKey("mesh.n_cells")
            return generate_interval(self.domain.a, self.domain.b, self.n_cells)

        if self.refinements is None:
            raise MissingConfigKey("mesh.refinements")
        if isinstance(self.domain, Polygon):
            return generate_convex_polygon(self.domain.vertices, self.refinements)
        return generate_rectangle(self.domain.width, self.domain.height, self.refinements)

    def output_path(self, directory: Union[str, os.PathLike], *parts: str) -> str:
        return os.path.join(directory, "_".join((self.prefix,) + parts) + ".csv")


def parse_config(data: object) -> RunConfig:
    """
    Validates a decoded JSON document.

    :raises ConfigError: On unknown, missing or ill-typed keys
    """
    root = _Section(data, "")

    domain = _parse_domain(root.section("domain"))
    dimension = 1 if isinstance(domain, Interval) else 2

    raw_boundary = root.raw("boundary")
    if isinstance(raw_boundary, list):
        if not raw_boundary:
            raise InvalidConfigValue("boundary", raw_boundary, "expected at least one boundary condition")
        boundary = tuple(
            _parse_boundary_condition(_Section(item, f"boundary[{i}]")) for i, item in enumerate(raw_boundary)
        )
    else:
        boundary = (_parse_boundary_condition(_Section(raw_boundary, "boundary")),)

    fractional = _parse_fractional(root.section("fractional"))
    # Fail on bad combinations now rather than inside a command.
    for bc in boundary:
        FracConfig(bc=bc, **fractional)

    n_cells = refinements = None
    if "mesh" in root.data:
        mesh = root.section("mesh")
        n_cells = mesh.integer("n_cells", None)
        refinements = mesh.integer("refinements", None)
        mesh.finish()

    input_spec = _parse_input(root.section("input"), dimension) if "input" in root.data else None
    boundary_data = (
        _parse_input(root.section("boundary_data"), dimension) if "boundary_data" in root.data else None
    )
    convergence = _parse_convergence(root.section("convergence"), domain) if "convergence" in root.data else None
    pme = _parse_pme(root.section("pme")) if "pme" in root.data else None

    prefix = "fraclap"
    if "output" in root.data:
        output = root.section("output")
        prefix = output.string("prefix", "fraclap")
        output.finish()

    root.finish()
    return RunConfig(
        domain,
        boundary,
        fractional,
        n_cells,
        refinements,
        input_spec,
        boundary_data,
        convergence,
        pme,
        prefix,
    )


def load_config(path: Union[str, os.PathLike]) -> RunConfig:
    """
    Reads and validates a run file.

    :raises ConfigParseError: If the file is not valid JSON
    :raises OSError: If the file cannot be read
    """
    with open(path, encoding="utf-8") as file:
        text = file.read()

    try:
        data = json.loads(text)
    except json.JSONDecodeError as error:
        raise ConfigParseError(os.fspath(path), f"line {error.lineno} column {error.colno}: {error.msg}") from None

    return parse_config(data)
