"""
Convergence studies: apply the discrete operator to an eigenfunction on a
sequence of meshes, measure the L² error against ``λ^s φ`` and fit the
observed rate.
"""

import concurrent.futures
import dataclasses
import io
import logging
import math
import os
import warnings
from typing import *

import numpy as np

from ._utils import check_finite, check_integer, check_positive
from .errors import *
from .fem import BoundaryCondition, FeFunction, FeSpace, l2_norm_error
from .fracop import FracConfig, FractionalLaplacian, NtFormula, harmonic_extension, shift_datum
from .mesh import Mesh, generate_interval, generate_rectangle
from .spectral_oracle import EigenPair, eig_1d, eig_2d_rectangle, exact_fractional, lambda_min
from .types import *

__all__ = [
    "Interval",
    "Rectangle",
    "Domain",
    "ConvergenceRow",
    "ConvergenceReport",
    "convergence_study",
    "fit_slope",
    "DEFAULT_H_LIST_1D",
    "DEFAULT_LEVELS_2D",
]


logger = logging.getLogger(__name__)

DEFAULT_H_LIST_1D = tuple(2.0**-k for k in range(4, 10))
DEFAULT_LEVELS_2D = (2, 3, 4, 5)

# Relative slack when matching a requested h to a mesh size.
_H_MATCH = 1e-9


@dataclasses.dataclass(frozen=True)
class Interval:
    a: float = 0.0
    b: float = 1.0

    def __post_init__(self):
        check_finite("a", self.a)
        check_finite("b", self.b)
        if self.a >= self.b:
            raise OutOfRange("b", self.b, "b > a")

    @property
    def lengths(self) -> Tuple[float, ...]:
        return (self.b - self.a,)

    def mesh_for(self, h: float) -> Mesh:
        """
        Uniform mesh with cell size ``h``.

        :raises OutOfRange: If ``h`` does not divide the interval
        """
        h = check_positive("h", h)
        length = self.b - self.a
        n_cells = max(round(length / h), 1)
        if not math.isclose(length / n_cells, h, rel_tol=_H_MATCH):
            raise OutOfRange("h", h, f"h must divide the interval length {length!r}")
        return generate_interval(self.a, self.b, n_cells)

    def eigenpair(self, bc: BoundaryCondition, index: Sequence[int]) -> EigenPair:
        (m,) = index
        pair = eig_1d(bc, self.b - self.a, m)
        if self.a == 0.0:
            return pair
        a = self.a
        return dataclasses.replace(pair, phi=lambda x: pair.phi(np.asarray(x, dtype=float) - a))


@dataclasses.dataclass(frozen=True)
class Rectangle:
    """
    ``[0, width] x [0, height]``, meshed by a fan of four triangles followed
    by red refinement. A mesh with size ``h`` therefore exists only when ``h``
    is the fan's size divided by a power of two.
    """

    width: float = 1.0
    height: float = 1.0

    def __post_init__(self):
        check_positive("width", self.width)
        check_positive("height", self.height)

    @property
    def lengths(self) -> Tuple[float, ...]:
        return (self.width, self.height)

    def refinements_for(self, h: float) -> int:
        h = check_positive("h", h)
        coarse = generate_rectangle(self.width, self.height).h_max
        levels = math.log2(coarse / h)
        rounded = round(levels)
        if rounded < 0 or not math.isclose(levels, rounded, abs_tol=1e-9):
            raise OutOfRange("h", h, f"h must be {coarse!r} / 2^k for some k >= 0")
        return rounded

    def h_for(self, refinements: int) -> float:
        refinements = check_integer("refinements", refinements, 0)
        return generate_rectangle(self.width, self.height).h_max / 2**refinements

    def mesh_for(self, h: float) -> Mesh:
        return generate_rectangle(self.width, self.height, self.refinements_for(h))

    def eigenpair(self, bc: BoundaryCondition, index: Sequence[int]) -> EigenPair:
        m, l = index
        return eig_2d_rectangle(bc, m, l, self.width, self.height)


Domain = Union[Interval, Rectangle]


class ConvergenceRow(NamedTuple):
    h: float
    dt: float
    n_t: int
    l2_error: float


@dataclasses.dataclass(frozen=True, eq=False)
class ConvergenceReport:
    """
    One row per mesh size, finest last, and the least-squares slope of
    ``log(error)`` against ``log(h)``.
    """

    rows: Tuple[ConvergenceRow, ...]
    fitted_slope: float
    config: FracConfig
    domain: Domain
    eigen_index: Tuple[int, ...]

    def __post_init__(self):
        hs = [row.h for row in self.rows]
        if any(a <= b for a, b in zip(hs, hs[1:])):
            raise InvalidArgumentError("rows", "h must be strictly decreasing")

    @property
    def errors(self) -> List[float]:
        return [row.l2_error for row in self.rows]

    @property
    def is_monotone(self) -> bool:
        errors = self.errors
        return all(a > b for a, b in zip(errors, errors[1:]))

    def to_csv(self, path: Union[str, os.PathLike, None] = None) -> str:
        """
        ``h,dt,n_t,l2_error`` rows at full precision followed by a
        ``# slope=<value>`` line. Also written to ``path`` if one is given.
        """
        buffer = io.StringIO()
        buffer.write("h,dt,n_t,l2_error\n")
        for row in self.rows:
            buffer.write(f"{row.h!r},{row.dt!r},{row.n_t},{row.l2_error!r}\n")
        buffer.write(f"# slope={self.fitted_slope!r}\n")
        text = buffer.getvalue()

        if path is not None:
            with open(path, "w", encoding="utf-8", newline="") as file:
                file.write(text)
        return text


def fit_slope(points: Iterable[Tuple[float, float]]) -> float:
    """
    Least-squares slope of ``log(err)`` against ``log(h)``.

    :param points: ``(h, err)`` pairs, at least two
    :raises OutOfRange: If any ``h`` or ``err`` is not positive
    """
    data = np.asarray(list(points), dtype=float)
    if data.ndim != 2 or data.shape[1] != 2 or len(data) < 2:
        raise InvalidArgumentError("points", "at least two (h, err) pairs are required")
    if not np.all(np.isfinite(data)) or np.any(data <= 0):
        bad = data[~(np.isfinite(data) & (data > 0)).all(axis=1)][0]
        raise OutOfRange("points", tuple(float(v) for v in bad), "positive finite h and err")

    logs = np.log(data)
    if np.ptp(logs[:, 0]) == 0:
        raise InvalidArgumentError("points", "all h are equal")
    slope, _ = np.polyfit(logs[:, 0], logs[:, 1], 1)
    return float(slope)


def _resolve_lambda_min(cfg: FracConfig, domain: Domain) -> FracConfig:
    mode = cfg.nt_mode
    if isinstance(mode, NtFormula) and mode.lambda_min is AUTO:
        return cfg.replace(nt_mode=NtFormula(lambda_min(cfg.bc, domain.lengths)))
    return cfg


def _run_row(
    domain: Domain,
    pair: EigenPair,
    cfg: FracConfig,
    h: float,
    boundary_data: Optional[ScalarFunction],
) -> ConvergenceRow:
    mesh = domain.mesh_for(h)
    space = FeSpace(mesh, cfg.bc)
    operator = FractionalLaplacian(space, cfg)

    if boundary_data is None:
        datum = pair
    else:
        z = harmonic_extension(space, boundary_data, tol_rel=cfg.tol_rel)
        datum = shift_datum(space, FeFunction(mesh, z) + pair, boundary_data, tol_rel=cfg.tol_rel)

    result = operator.apply(datum)
    error = l2_norm_error(space, result.values, exact_fractional(pair, cfg.s))
    logger.info("convergence row: h=%.6g dt=%.3e n_t=%d error=%.6e", mesh.h_max, result.dt, result.n_t, error)
    return ConvergenceRow(mesh.h_max, result.dt, result.n_t, error)


def convergence_study(
    domain: Domain,
    bc: BoundaryCondition,
    eigen_index: Union[int, Sequence[int]],
    s: float,
    cfg: FracConfig,
    h_list: Sequence[float],
    *,
    boundary_data: Optional[ScalarFunction] = None,
    max_workers: int = 1,
) -> ConvergenceReport:
    """
    Measures ``‖λ^s φ - Θ_h^s φ‖₀`` for the eigenfunction ``eigen_index`` on
    every mesh size in ``h_list``, with ``dt = eta * h^p`` per row.

    With ``boundary_data`` the non-homogeneous pipeline runs on
    ``u = z_h + φ``, where ``z_h`` is the harmonic extension of the data; the
    exact answer is still ``λ^s φ``.

    Rows are independent and run on up to ``max_workers`` threads; the report
    lists them in the order of ``h_list``.

    :param domain: :class:`Interval` or :class:`Rectangle`
    :param bc: Boundary condition; overrides ``cfg.bc``
    :param eigen_index: ``m`` in 1D, ``(m, l)`` in 2D
    :param s: Fractional order; overrides ``cfg.s``
    :param h_list: At least three strictly decreasing mesh sizes
    :raises UnsupportedBoundaryCondition: If ``boundary_data`` is given with a
        non-Dirichlet condition
    """
    index = (eigen_index,) if isinstance(eigen_index, int) else tuple(eigen_index)
    if len(index) != len(domain.lengths):
        raise DimensionMismatch("convergence_study", len(domain.lengths), len(index))

    h_list = [check_positive("h_list", h) for h in h_list]
    if len(h_list) < 3:
        raise InvalidArgumentError("h_list", "at least three mesh sizes are required")
    if any(a <= b for a, b in zip(h_list, h_list[1:])):
        raise InvalidArgumentError("h_list", "mesh sizes must be strictly decreasing")
    max_workers = check_integer("max_workers", max_workers, 1)

    if boundary_data is not None and bc.kind != "dirichlet":
        raise UnsupportedBoundaryCondition(bc.kind, "convergence_study with boundary data")

    cfg = _resolve_lambda_min(cfg.replace(s=s, bc=bc), domain)
    pair = domain.eigenpair(bc, index)

    def run(h: float) -> ConvergenceRow:
        return _run_row(domain, pair, cfg, h, boundary_data)

    if max_workers == 1:
        rows = [run(h) for h in h_list]
    else:
        with concurrent.futures.ThreadPoolExecutor(max_workers) as pool:
            rows = list(pool.map(run, h_list))

    slope = fit_slope((row.h, row.l2_error) for row in rows)
    report = ConvergenceReport(tuple(rows), slope, cfg, domain, index)
    if not report.is_monotone:
        warnings.warn(
            NonMonotoneErrorsWarning(f"errors do not decrease monotonically: {report.errors}"),
            stacklevel=2,
        )
    logger.info("convergence study: %s %s s=%g slope=%.4f", cfg.scheme, bc, s, slope)
    return report
