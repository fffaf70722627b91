"""
Explicit solver for the fractional porous-medium equation

    ∂_τ u + (-Δ_B)^s (u^m) = 0

with homogeneous Dirichlet conditions, advanced by forward Euler

    u^(n+1) = u^(n) - Δτ Θ_h^s [(u^(n))^m]

under the step restriction ``Δτ <= h^{2s} / m``.

The power is taken node by node (``|u|^(m-1) u``) and the result is used
directly as finite element coefficients. Negative undershoots are reported,
never clipped.
"""

import csv
import dataclasses
import logging
import math
import os
import warnings
from typing import *

import numpy as np

from ._utils import call_function, check_finite, check_positive, freeze
from .errors import *
from .fem import FeSpace
from .fracop import FracConfig, FractionalLaplacian
from .spectral_oracle import eig_1d
from .types import *

__all__ = [
    "PmeState",
    "PmeRun",
    "cfl_dtau",
    "initial_state",
    "pme_step",
    "pme_run",
    "scaled_eigenfunction",
    "boundary_behavior_ratio",
    "write_snapshot_csv",
]


logger = logging.getLogger(__name__)

# Relative slack on the step restriction and on reaching a stop time.
_TAU_SLACK = 1e-12


@dataclasses.dataclass(frozen=True, eq=False)
class PmeState:
    """
    The solution ``u`` (DOF coefficients) at evolution time ``tau``, together
    with the exponent ``m`` and the fractional operator that advances it.
    """

    tau: float
    u: FieldVector
    m: float
    operator: FractionalLaplacian

    def __post_init__(self):
        u = np.array(self.u, dtype=float)
        if u.shape != (self.operator.space.n_dofs,):
            raise DimensionMismatch("PmeState", self.operator.space.n_dofs, u.size)
        if not np.all(np.isfinite(u)):
            raise InvalidArgumentError("u", "non-finite entries")
        object.__setattr__(self, "u", freeze(u))

    @property
    def s(self) -> float:
        return self.operator.cfg.s

    @property
    def space(self) -> FeSpace:
        return self.operator.space

    def nodal(self) -> np.ndarray:
        return self.space.to_nodal(self.u)

    def __repr__(self) -> str:
        return f"<{type(self).__name__} tau={self.tau:.6g} m={self.m} s={self.s} max={np.max(self.u, initial=0.0):.6g}>"


@dataclasses.dataclass(frozen=True, eq=False)
class PmeRun:
    state: PmeState
    snapshots: Dict[float, PmeState]
    min_value: float
    n_steps: int


def _check_m(m: float, allow_linear: bool) -> float:
    m = check_finite("m", m)
    if m > 1 or (allow_linear and m == 1):
        return m
    raise OutOfRange("m", m, "m > 1")


def cfl_dtau(space: FeSpace, m: float, s: float) -> float:
    """
    The largest admissible step ``h^{2s} / m``.
    """
    return space.mesh.h_max ** (2.0 * check_finite("s", s)) / check_positive("m", m)


def initial_state(
    space: FeSpace,
    u0: Union[ScalarFunction, FieldVector],
    m: float,
    cfg: FracConfig,
    *,
    allow_linear: bool = False,
) -> PmeState:
    """
    State at ``tau = 0``. A function ``u0`` is interpolated at the free nodes.

    :raises UnsupportedBoundaryCondition: Unless the space is Dirichlet
    """
    if space.bc.kind != "dirichlet":
        raise UnsupportedBoundaryCondition(space.bc.kind, "porous-medium solver")
    m = _check_m(m, allow_linear)

    if isinstance(u0, np.ndarray):
        u = u0
    else:
        u = call_function(u0, space.dof_coordinates)
    return PmeState(0.0, u, m, FractionalLaplacian(space, cfg))


def _nodal_power(u: np.ndarray, m: float) -> np.ndarray:
    try:
        with np.errstate(over="raise", invalid="raise"):
            power = np.abs(u) ** (m - 1.0) * u
    except FloatingPointError:
        raise NodalPowerOverflow(m) from None
    if not np.all(np.isfinite(power)):
        raise NodalPowerOverflow(m)
    return power


def pme_step(state: PmeState, dtau: float, *, allow_linear: bool = False) -> PmeState:
    """
    One forward Euler step ``u - dtau * Θ_h^s[u^m]``.

    :param allow_linear: Accept ``m = 1``, which reduces the step to the
        linear fractional heat equation
    :raises CflViolation: If ``dtau > h^{2s} / m``
    :raises NodalPowerOverflow: If ``u^m`` overflows
    """
    m = _check_m(state.m, allow_linear)
    dtau = check_positive("dtau", dtau)
    limit = cfl_dtau(state.space, m, state.s)
    if dtau > limit * (1.0 + _TAU_SLACK):
        raise CflViolation(dtau, limit)

    power = _nodal_power(state.u, m)
    update = state.operator.apply(power).values
    return PmeState(state.tau + dtau, state.u - dtau * update, m, state.operator)


def pme_run(
    space: FeSpace,
    u0: Union[ScalarFunction, FieldVector],
    m: float,
    s: float,
    tau_end: float,
    cfg: FracConfig,
    snapshot_taus: Iterable[float] = (),
) -> PmeRun:
    """
    Steps with ``dtau = h^{2s} / m`` from ``tau = 0`` to ``tau_end``. The last
    step before each requested snapshot time is shortened to land on it.

    :param s: Fractional order; overrides ``cfg.s``
    :param snapshot_taus: Times in ``[0, tau_end]`` at which to keep the state
    :return: Final state, the snapshots keyed by time, the smallest nodal
        value seen and the number of steps
    """
    tau_end = check_finite("tau_end", tau_end)
    if tau_end < 0:
        raise OutOfRange("tau_end", tau_end, "tau_end >= 0")
    stops = sorted({check_finite("snapshot_taus", tau) for tau in snapshot_taus} | {tau_end})
    if stops[0] < 0 or stops[-1] > tau_end:
        raise OutOfRange("snapshot_taus", tuple(stops), f"all times in [0, {tau_end!r}]")

    state = initial_state(space, u0, m, cfg.replace(s=s))
    dtau = cfl_dtau(space, state.m, s)
    logger.info("porous medium: m=%g s=%g dtau=%.3e tau_end=%g", state.m, s, dtau, tau_end)

    snapshots = {}
    min_value = float(np.min(state.u, initial=0.0))
    warned = False
    n_steps = 0

    for stop in stops:
        while stop - state.tau > _TAU_SLACK * max(stop, 1.0):
            remaining = stop - state.tau
            if remaining <= dtau:
                state = dataclasses.replace(pme_step(state, remaining), tau=stop)
            else:
                state = pme_step(state, dtau)
            n_steps += 1

            lowest = float(np.min(state.u, initial=0.0))
            min_value = min(min_value, lowest)
            if lowest < 0 and not warned:
                warned = True
                message = f"negative undershoot {lowest:.3e} at tau={state.tau:.6g}"
                logger.warning(message)
                warnings.warn(NegativeUndershootWarning(message), stacklevel=2)
            logger.debug("porous medium step %d: tau=%.6g max=%.6g", n_steps, state.tau, np.max(state.u, initial=0.0))

        snapshots[stop] = state

    return PmeRun(state, snapshots, min_value, n_steps)


def scaled_eigenfunction(space: FeSpace, m: float, tau: float) -> np.ndarray:
    """
    ``φ₁^{1/m} / τ^{1/(m-1)}`` at every mesh node, with ``φ₁`` the first
    normalized Dirichlet eigenfunction of the (1D) domain.
    """
    mesh = space.mesh
    if mesh.dim != 1:
        raise DimensionMismatch("scaled_eigenfunction", 1, mesh.dim)
    m = _check_m(m, False)
    tau = check_finite("tau", tau)
    if tau <= 0:
        raise OutOfRange("tau", tau, "tau > 0")

    (a,), (b,) = mesh.bounds
    phi = eig_1d(space.bc, float(b - a), 1).phi(mesh.nodes[:, 0] - a)
    return np.maximum(phi, 0.0) ** (1.0 / m) / tau ** (1.0 / (m - 1.0))


def boundary_behavior_ratio(state: PmeState, threshold: float = 1e-6) -> Tuple[float, float]:
    """
    Bounds ``(c0, c1)`` of ``u / v`` with ``v = φ₁^{1/m} / τ^{1/(m-1)}``, taken
    over the nodes where ``φ₁ >= threshold``.

    :raises OutOfRange: If ``tau`` is not positive
    """
    space = state.space
    mesh = space.mesh
    if mesh.dim != 1:
        raise DimensionMismatch("boundary_behavior_ratio", 1, mesh.dim)
    if state.tau <= 0:
        raise OutOfRange("tau", state.tau, "tau > 0")
    threshold = check_positive("threshold", threshold)

    (a,), (b,) = mesh.bounds
    phi = eig_1d(space.bc, float(b - a), 1).phi(mesh.nodes[:, 0] - a)
    band = phi >= threshold
    if not np.any(band):
        raise OutOfRange("threshold", threshold, "some node must satisfy phi_1 >= threshold")

    v = scaled_eigenfunction(space, state.m, state.tau)
    ratio = state.nodal()[band] / v[band]
    return float(ratio.min()), float(ratio.max())


def write_snapshot_csv(path: Union[str, os.PathLike], state: PmeState) -> None:
    """
    Writes ``x,u,v_scaled`` per mesh node. ``v_scaled`` is ``nan`` at
    ``tau = 0``, where the scaled eigenfunction is undefined.
    """
    space = state.space
    mesh = space.mesh
    if state.tau > 0:
        v = scaled_eigenfunction(space, state.m, state.tau)
    else:
        v = np.full(mesh.n_nodes, math.nan)
    u = state.nodal()

    with open(path, "w", encoding="utf-8", newline="") as file:
        writer = csv.writer(file, lineterminator="\n")
        writer.writerow(["x", "u", "v_scaled"])
        for x, ui, vi in zip(mesh.nodes[:, 0], u, v):
            writer.writerow([repr(float(x)), repr(float(ui)), repr(float(vi))])
