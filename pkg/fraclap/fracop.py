"""
The discrete fractional Laplacian

    Θ_h^s u = 1/Γ(-s) [ Σ_j β_j (W^(j) - W^(0)) + β_∞ (W_∞ - W^(0)) ]

built from θ-scheme heat snapshots, and its non-homogeneous Dirichlet
variant.
"""

import csv
import dataclasses
import itertools
import logging
import math
import os
from typing import *

import numpy as np

from . import fracquad
from ._utils import call_function, check_finite, check_integer, check_option, check_positive
from .errors import *
from .fem import BoundaryCondition, FeFunction, FeSpace, l2_norm, l2_project
from .heat import HeatRun, HeatSolver, steady_state
from .linalg import cg_solve
from .spectral_oracle import lambda_min as exact_lambda_min
from .types import *

__all__ = [
    "NtFormula",
    "NtAdaptive",
    "FracConfig",
    "FracResult",
    "FractionalLaplacian",
    "apply_fractional",
    "harmonic_extension",
    "shift_datum",
    "apply_fractional_nonhomogeneous",
    "write_result_csv",
    "TRACE_TOLERANCE",
]


logger = logging.getLogger(__name__)

TRACE_TOLERANCE = 1e-8

_S_RANGE = (0.01, 0.99)

_NOISE_FACTOR = 100


@dataclasses.dataclass(frozen=True)
class NtFormula:
    """
    Choose ``n_t`` from the closed-form tail rule. ``lambda_min`` is the first
    nonzero eigenvalue of ``-Δ_B`` (or a lower bound); ``AUTO`` derives it for
    intervals and axis-aligned rectangles.
    """

    lambda_min: Union[float, AutoType] = AUTO

    def __post_init__(self):
        if self.lambda_min is not AUTO:
            object.__setattr__(self, "lambda_min", check_positive("lambda_min", self.lambda_min))


@dataclasses.dataclass(frozen=True)
class NtAdaptive:
    """
    Step until ``‖W^(j) - W_∞‖_M <= tol * ‖W^(0) - W_∞‖_M``.
    """

    tol: float = 1e-8

    def __post_init__(self):
        object.__setattr__(self, "tol", check_positive("tol", self.tol))


NtMode = Union[NtFormula, NtAdaptive]


@dataclasses.dataclass(frozen=True)
class FracConfig:
    """
    Everything that determines one discrete fractional Laplacian.

    The time step follows the mesh as ``dt = eta * h^p``. The admissible
    ``p`` depend on the scheme: the low-order scheme accepts
    ``p ∈ (0, 2]`` for ``theta >= 1/2`` and only ``p = 2`` below; the
    high-order scheme needs Crank-Nicolson (``theta = 1/2``) and
    ``p ∈ (0, 1]``.

    :raises OutOfRange: If a parameter or a combination is not admissible
    """

    s: float
    bc: BoundaryCondition
    theta: float = 1.0
    eta: float = 1e-3
    p: float = 1.0
    scheme: Scheme = "low"
    nt_mode: NtMode = NtAdaptive()
    tol_rel: float = 1e-12
    n_t_max: Union[int, AutoType] = AUTO
    allow_extreme_s: bool = False

    k: ClassVar[int] = 1

    def __post_init__(self):
        s = check_finite("s", self.s)
        low, high = (0.0, 1.0) if self.allow_extreme_s else _S_RANGE
        if not (0.0 < s < 1.0 and low <= s <= high):
            raise OutOfRange("s", s, f"{low} <= s <= {high} and 0 < s < 1")

        theta = check_finite("theta", self.theta)
        if not 0.0 <= theta <= 1.0:
            raise OutOfRange("theta", theta, "0 <= theta <= 1")

        check_positive("eta", self.eta)
        p = check_positive("p", self.p)
        check_option("scheme", self.scheme, get_args(Scheme))
        check_positive("tol_rel", self.tol_rel)

        if not isinstance(self.bc, BoundaryCondition):
            raise InvalidArgumentError("bc", self.bc)
        if not isinstance(self.nt_mode, (NtFormula, NtAdaptive)):
            raise InvalidArgumentError("nt_mode", self.nt_mode)
        if self.n_t_max is not AUTO:
            check_integer("n_t_max", self.n_t_max, 1)

        top = self.k + 1
        if self.scheme == "high":
            if theta != 0.5:
                raise OutOfRange("theta", theta, "theta = 1/2 (Crank-Nicolson) for the high-order scheme")
            if p > top / 2:
                raise OutOfRange("p", p, f"0 < p <= {top / 2} for the high-order scheme")
        elif theta < 0.5:
            if not top >= p >= 2:
                raise OutOfRange("p", p, f"2 <= p <= {top} when theta < 1/2")
        elif p > top:
            raise OutOfRange("p", p, f"0 < p <= {top}")

    def dt_for(self, h: float) -> float:
        return self.eta * check_positive("h", h) ** self.p

    @property
    def max_steps(self) -> int:
        return fracquad.max_nt() if self.n_t_max is AUTO else int(self.n_t_max)

    def replace(self, **changes: Any) -> "FracConfig":
        return dataclasses.replace(self, **changes)


@dataclasses.dataclass(frozen=True, eq=False)
class FracResult:
    """
    Output of one application: ``values`` holds the coefficients of
    ``Θ_h^s u``, ``datum`` those of ``W^(0)``. ``heat_run`` is only set when
    snapshots were requested.
    """

    values: FieldVector
    datum: FieldVector
    n_t: int
    dt: float
    weights: fracquad.QuadWeights
    heat_run: Optional[HeatRun] = None


def _domain_lengths(space: FeSpace) -> Optional[List[float]]:
    mesh = space.mesh
    low, high = mesh.bounds
    lengths = [float(v) for v in high - low]
    if mesh.dim == 2 and not math.isclose(mesh.measure, lengths[0] * lengths[1], rel_tol=1e-12):
        return None
    return lengths


class FractionalLaplacian:
    """
    ``Θ_h^s`` on a fixed space and configuration. The heat solver, the time
    step and (for the formula rule) the weights are set up once and reused
    by every :meth:`apply`.
    """

    def __init__(self, space: FeSpace, cfg: FracConfig):
        if space.bc != cfg.bc:
            raise InvalidArgumentError("cfg", f"boundary condition {cfg.bc} differs from the space's {space.bc}")

        self.space = space
        self.cfg = cfg
        self.dt = cfg.dt_for(space.mesh.h_max)
        self.solver = HeatSolver(space, cfg.theta, self.dt, tol_rel=cfg.tol_rel)

        self.weights: Optional[fracquad.QuadWeights] = None
        if isinstance(cfg.nt_mode, NtFormula):
            n_t = fracquad.choose_nt(cfg.scheme, cfg.s, self.dt, self._lambda_min())
            if n_t > cfg.max_steps:
                raise NtCapExceeded(n_t, cfg.max_steps)
            self.weights = fracquad.quad_weights(cfg.scheme, cfg.s, self.dt, n_t)

    def _lambda_min(self) -> float:
        value = self.cfg.nt_mode.lambda_min
        if value is not AUTO:
            return value

        lengths = _domain_lengths(self.space)
        if lengths is None:
            raise InvalidArgumentError(
                "nt_mode", "lambda_min=AUTO needs an interval or rectangle; use NtAdaptive"
            )
        return exact_lambda_min(self.space.bc, lengths)

    def project(self, u: Union[ScalarFunction, FeFunction, FieldVector, float]) -> FieldVector:
        if isinstance(u, np.ndarray):
            u = np.array(u, dtype=float)
            if u.shape != (self.space.n_dofs,):
                raise DimensionMismatch("FractionalLaplacian.project", self.space.n_dofs, u.size)
            return u
        return l2_project(self.space, u, tol_rel=self.cfg.tol_rel)

    def apply(
        self,
        u: Union[ScalarFunction, FeFunction, FieldVector, float],
        *,
        keep_snapshots: bool = False,
    ) -> FracResult:
        """
        Computes ``Θ_h^s u``. Snapshots are folded into the weighted sum as
        they are produced and discarded unless ``keep_snapshots`` is set.

        :param u: A function (projected onto the space) or DOF coefficients
        :raises NtCapExceeded: If the adaptive rule needs more than
            ``cfg.max_steps`` steps
        """
        cfg = self.cfg
        w0 = self.project(u)
        w_inf = steady_state(self.space, w0)
        total = np.zeros_like(w0)
        snapshots = [w0] if keep_snapshots else None
        last = w0
        n_steps = 0

        def fold(stream: Iterable[FieldVector], betas: Callable[[int], float]) -> Iterator[FieldVector]:
            nonlocal last, n_steps
            for j, w in enumerate(stream, 1):
                total[:] += betas(j) * (w - w0)
                last = w
                n_steps = j
                if snapshots is not None:
                    snapshots.append(w)
                yield w

        iterations_before = self.solver.iterations
        if self.weights is not None:
            weights = self.weights
            for _ in fold(itertools.islice(self.solver.iterate(w0), weights.n_t), lambda j: weights.betas[j - 1]):
                pass
        else:
            stream = fold(
                self.solver.iterate(w0),
                lambda j: fracquad.provisional_beta(cfg.scheme, cfg.s, self.dt, j),
            )
            # Heat solves are only accurate to tol_rel; stop once the tail is below that noise.
            noise = _NOISE_FACTOR * cfg.tol_rel * l2_norm(self.space, w0)
            n_t = fracquad.adaptive_tail_nt(
                stream, w0, w_inf, self.space.mass_matrix, cfg.nt_mode.tol, cfg.max_steps, floor=noise
            )
            while n_t < fracquad.min_steps(cfg.scheme):
                next(stream)
                n_t += 1

            weights = fracquad.quad_weights(cfg.scheme, cfg.s, self.dt, n_t)
            provisional = fracquad.provisional_beta(cfg.scheme, cfg.s, self.dt, n_t)
            total += (weights.betas[-1] - provisional) * (last - w0)

        values = weights.gamma_prefactor * (total + weights.beta_inf * (w_inf - w0))
        logger.info(
            "fractional Laplacian: scheme=%s s=%g theta=%g dt=%.3e n_t=%d cg iterations=%d",
            cfg.scheme,
            cfg.s,
            cfg.theta,
            self.dt,
            weights.n_t,
            self.solver.iterations - iterations_before,
        )

        heat_run = None
        if snapshots is not None:
            heat_run = HeatRun(self.space, cfg.theta, self.dt, tuple(snapshots))
        return FracResult(values, w0, weights.n_t, self.dt, weights, heat_run)

    def __repr__(self) -> str:
        cfg = self.cfg
        return f"<{type(self).__name__} s={cfg.s} scheme={cfg.scheme} dt={self.dt:.3e} on {self.space!r}>"


def apply_fractional(
    space: FeSpace,
    u: Union[ScalarFunction, FeFunction, FieldVector, float],
    cfg: FracConfig,
) -> FieldVector:
    """
    Coefficients of ``Θ_h^s u``; see :class:`FractionalLaplacian`.

    The tail term uses the projected datum ``W^(0)`` in place of ``u``, so
    the whole computation stays inside the finite element space.
    """
    return FractionalLaplacian(space, cfg).apply(u).values


def harmonic_extension(space: FeSpace, g: ScalarFunction, *, tol_rel: float = 1e-12) -> np.ndarray:
    """
    Discrete harmonic function ``z_h`` equal to the interpolant of ``g`` on
    the boundary nodes.

    :param space: A Dirichlet space; its free nodes are the unknowns
    :return: Values of ``z_h`` at every mesh node
    :raises UnsupportedBoundaryCondition: For non-Dirichlet spaces
    """
    if space.bc.kind != "dirichlet":
        raise UnsupportedBoundaryCondition(space.bc.kind, "harmonic_extension")

    mesh = space.mesh
    boundary = np.array(list(mesh.boundary_nodes), dtype=np.int64)

    values = np.zeros(mesh.n_nodes)
    values[boundary] = call_function(g, mesh.nodes[boundary])

    laplace = FeSpace(mesh, BoundaryCondition.neumann()).stiffness_matrix
    coupling = laplace[space.node_of_dof][:, boundary]
    rhs = -(coupling @ values[boundary])
    values[space.node_of_dof] = cg_solve(space.stiffness_matrix, rhs, tol_rel).x
    return values


def _boundary_values(space: FeSpace, u: Union[ScalarFunction, FeFunction], nodes: np.ndarray) -> np.ndarray:
    mesh = space.mesh
    if isinstance(u, FeFunction) and u.mesh is mesh:
        values = u.nodal_values[nodes]
        if u.analytic is not None:
            values = values + call_function(u.analytic, mesh.nodes[nodes])
        return values
    return call_function(u, mesh.nodes[nodes])


def shift_datum(
    space: FeSpace,
    u: Union[ScalarFunction, FeFunction],
    g: ScalarFunction,
    *,
    tol_rel: float = 1e-12,
) -> FeFunction:
    """
    ``u - z_h`` with ``z_h`` the harmonic extension of ``g``: a datum with
    homogeneous Dirichlet trace whose fractional Laplacian is that of ``u``
    under ``u = g`` on the boundary.

    :raises TraceMismatch: If ``u`` and ``g`` differ by more than
        :data:`TRACE_TOLERANCE` at a boundary node
    """
    if space.bc.kind != "dirichlet":
        raise UnsupportedBoundaryCondition(space.bc.kind, "shift_datum")

    z = harmonic_extension(space, g, tol_rel=tol_rel)

    boundary = np.array(list(space.mesh.boundary_nodes), dtype=np.int64)
    gap = np.abs(_boundary_values(space, u, boundary) - z[boundary])
    worst = int(np.argmax(gap))
    if not gap[worst] <= TRACE_TOLERANCE:
        raise TraceMismatch(int(boundary[worst]), float(gap[worst]), TRACE_TOLERANCE)

    return u - FeFunction(space.mesh, z)


def apply_fractional_nonhomogeneous(
    space: FeSpace,
    u: Union[ScalarFunction, FeFunction],
    g: ScalarFunction,
    cfg: FracConfig,
) -> FieldVector:
    """
    Fractional Laplacian of ``u`` under the boundary condition ``u = g``:
    ``Θ_h^s [u - z_h]`` with ``z_h`` the discrete harmonic extension of ``g``.
    With ``g = 0`` this is exactly :func:`apply_fractional`.

    :raises TraceMismatch: If ``u`` and ``g`` differ by more than
        :data:`TRACE_TOLERANCE` at a boundary node
    :raises UnsupportedBoundaryCondition: For non-Dirichlet spaces
    """
    if space.bc.kind != "dirichlet":
        raise UnsupportedBoundaryCondition(space.bc.kind, "apply_fractional_nonhomogeneous")

    shifted = shift_datum(space, u, g, tol_rel=cfg.tol_rel)
    return apply_fractional(space, shifted, cfg)


def write_result_csv(
    path: Union[str, os.PathLike],
    space: FeSpace,
    datum: FieldVector,
    output: FieldVector,
    extra_columns: Mapping[str, FieldVector] = {},
) -> None:
    """
    Writes one row per mesh node: coordinates, input and output values, and
    any extra DOF vectors. Eliminated Dirichlet nodes hold 0.
    """
    mesh = space.mesh
    axes = ["x", "y"][: mesh.dim]
    columns = [space.to_nodal(datum), space.to_nodal(output)]
    columns += [space.to_nodal(values) for values in extra_columns.values()]

    with open(path, "w", encoding="utf-8", newline="") as file:
        writer = csv.writer(file, lineterminator="\n")
        writer.writerow(axes + ["input", "output"] + list(extra_columns))
        for i in range(mesh.n_nodes):
            writer.writerow([repr(float(c)) for c in mesh.nodes[i]] + [repr(float(col[i])) for col in columns])
