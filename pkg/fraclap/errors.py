import dataclasses
from typing import *
import typing_extensions


__all__ = [
    "Error",
    "InvalidArgumentError",
    "OutOfRange",
    "InvalidOption",
    "DimensionMismatch",
    "MeshError",
    "DegenerateElement",
    "InvalidPolygon",
    "MeshFormatError",
    "SolverError",
    "NotPositiveDefinite",
    "SolverDidNotConverge",
    "NonPositiveRobinCoefficient",
    "PointOutsideDomain",
    "UnsupportedBoundaryCondition",
    "CflViolation",
    "NtRuleUndefined",
    "NtCapExceeded",
    "TraceMismatch",
    "RootNotBracketed",
    "NodalPowerOverflow",
    "ConfigError",
    "ConfigParseError",
    "UnknownConfigKey",
    "MissingConfigKey",
    "InvalidConfigValue",
    "NonMonotoneErrorsWarning",
    "NegativeUndershootWarning",
]


@typing_extensions.dataclass_transform()
class Error(Exception):
    def __init_subclass__(cls):
        dataclasses.dataclass(eq=False, frozen=True)(cls)


class InvalidArgumentError(Error, ValueError):
    parameter: str
    value: object

    def __str__(self) -> str:
        return f"Invalid value for parameter {self.parameter!r}: {self.value!r}"


class OutOfRange(InvalidArgumentError):
    requirement: str

    def __str__(self) -> str:
        return super().__str__() + f". Required: {self.requirement}"


class InvalidOption(InvalidArgumentError):
    options: Tuple[str, ...]

    def __str__(self) -> str:
        return super().__str__() + f". Valid options are: {', '.join(self.options)}"


class NonPositiveRobinCoefficient(InvalidArgumentError):
    def __str__(self) -> str:
        return f"Robin coefficient must be positive on the boundary, got a sample of {self.value!r}"


class DimensionMismatch(Error, ValueError):
    operation: str
    expected: int
    actual: int

    def __str__(self) -> str:
        return f"{self.operation}: expected dimension {self.expected}, got {self.actual}"


class MeshError(Error):
    pass


class DegenerateElement(MeshError, ValueError):
    element: int
    measure: float

    def __str__(self) -> str:
        return f"Element {self.element} is degenerate (signed measure {self.measure!r})"


class InvalidPolygon(MeshError, ValueError):
    reason: str

    def __str__(self) -> str:
        return f"Invalid polygon: {self.reason}"


class MeshFormatError(MeshError, ValueError):
    line: int
    reason: str

    def __str__(self) -> str:
        return f"Malformed mesh file at line {self.line}: {self.reason}"


class SolverError(Error, ArithmeticError):
    pass


class NotPositiveDefinite(SolverError):
    reason: str

    def __str__(self) -> str:
        return f"Matrix is not symmetric positive definite: {self.reason}"


class SolverDidNotConverge(SolverError):
    iterations: int
    residual: float
    tolerance: float

    def __str__(self) -> str:
        return (
            f"Conjugate gradients stopped after {self.iterations} iterations with"
            f" relative residual {self.residual:.3e} (tolerance {self.tolerance:.3e})"
        )


class PointOutsideDomain(Error, ValueError):
    point: Tuple[float, ...]

    def __str__(self) -> str:
        return f"Point {self.point} lies outside the meshed domain"


class UnsupportedBoundaryCondition(Error, ValueError):
    kind: str
    operation: str

    def __str__(self) -> str:
        return f"{self.operation} does not support {self.kind} boundary conditions"


class CflViolation(Error, ValueError):
    step: float
    limit: float

    def __str__(self) -> str:
        return f"Step size {self.step!r} exceeds the stability limit {self.limit!r}"


class NtRuleUndefined(Error, ValueError):
    dt: float

    def __str__(self) -> str:
        return (
            f"The n_t rule needs dt < 1, got dt={self.dt!r}; pass the number of steps explicitly"
        )


class NtCapExceeded(Error, RuntimeError):
    n_t: int
    cap: int

    def __str__(self) -> str:
        if self.n_t <= self.cap:
            return (
                f"tail tolerance not reached after {self.n_t} time steps"
                f" (cap {self.cap}; set FRACLAP_MAX_NT to raise the cap)"
            )
        return (
            f"{self.n_t} time steps requested but at most {self.cap} are allowed"
            " (set FRACLAP_MAX_NT to raise the cap)"
        )


class TraceMismatch(Error, ValueError):
    node: int
    difference: float
    tolerance: float

    def __str__(self) -> str:
        return (
            f"Datum and boundary data disagree by {self.difference:.3e} at boundary node"
            f" {self.node} (tolerance {self.tolerance:.1e})"
        )


class RootNotBracketed(Error, ArithmeticError):
    kappa: float
    length: float
    index: int

    def __str__(self) -> str:
        return (
            f"No sign change of the Robin equation for kappa={self.kappa!r},"
            f" L={self.length!r}, m={self.index}"
        )


class NodalPowerOverflow(Error, OverflowError):
    exponent: int

    def __str__(self) -> str:
        return f"Nodal values overflow when raised to the power {self.exponent}"


class ConfigError(Error, ValueError):
    pass


class ConfigParseError(ConfigError):
    source: str
    reason: str

    def __str__(self) -> str:
        return f"Cannot parse config {self.source}: {self.reason}"


class UnknownConfigKey(ConfigError):
    key: str

    def __str__(self) -> str:
        return f"Unknown config key {self.key!r}"


class MissingConfigKey(ConfigError):
    key: str

    def __str__(self) -> str:
        return f"Missing required config key {self.key!r}"


class InvalidConfigValue(ConfigError):
    key: str
    value: object
    reason: str

    def __str__(self) -> str:
        return f"Invalid value for config key {self.key!r}: {self.value!r} ({self.reason})"


class NonMonotoneErrorsWarning(UserWarning):
    pass


class NegativeUndershootWarning(RuntimeWarning):
    pass
