"""
θ-scheme time stepping for the heat equation with homogeneous boundary
conditions.
"""

import dataclasses
import itertools
import logging
import math
from typing import *

import numpy as np

from ._utils import check_finite, check_integer, check_positive
from .errors import *
from .fem import FeSpace, generalized_eigenvalue_bound
from .linalg import cg_solve
from .types import *

__all__ = [
    "HeatRun",
    "HeatSolver",
    "theta_step",
    "run_heat",
    "steady_state",
    "cfl_limit",
]


logger = logging.getLogger(__name__)


def _check_theta(theta: float) -> float:
    theta = check_finite("theta", theta)
    if not 0.0 <= theta <= 1.0:
        raise OutOfRange("theta", theta, "0 <= theta <= 1")
    return theta


@dataclasses.dataclass(frozen=True, eq=False)
class HeatRun:
    """
    Stored snapshots ``W^(0), ..., W^(n)`` of one θ-scheme run; snapshot ``j``
    belongs to time ``j * dt``.
    """

    space: FeSpace
    theta: float
    dt: float
    snapshots: Tuple[FieldVector, ...]

    @property
    def n_steps(self) -> int:
        return len(self.snapshots) - 1

    @property
    def times(self) -> np.ndarray:
        return self.dt * np.arange(len(self.snapshots))

    def __repr__(self) -> str:
        return f"<{type(self).__name__} theta={self.theta} dt={self.dt} steps={self.n_steps}>"


def cfl_limit(space: FeSpace, theta: float) -> float:
    """
    Largest stable ``dt`` of the θ-scheme on ``space``: ``2 / ((1 - 2θ) mu)``
    with ``mu`` an upper bound of the discrete spectrum. Infinite for θ >= 1/2.
    """
    theta = _check_theta(theta)
    if theta >= 0.5:
        return math.inf
    return 2.0 / ((1.0 - 2.0 * theta) * generalized_eigenvalue_bound(space))


class HeatSolver:
    """
    Advances ``(M + θ dt A) W^(j) = (M + (θ - 1) dt A) W^(j-1)``.

    Both matrices are formed once; every solve is warm-started from the
    previous snapshot.

    :raises CflViolation: If θ < 1/2 and ``dt`` exceeds :func:`cfl_limit`
    """

    def __init__(
        self,
        space: FeSpace,
        theta: float,
        dt: float,
        *,
        tol_rel: float = 1e-12,
        check_cfl: bool = True,
    ):
        self.space = space
        self.theta = _check_theta(theta)
        self.dt = check_positive("dt", dt)
        self.tol_rel = check_positive("tol_rel", tol_rel)

        if check_cfl and self.theta < 0.5:
            limit = cfl_limit(space, self.theta)
            if self.dt > limit:
                raise CflViolation(self.dt, limit)

        M = space.mass_matrix
        A = space.stiffness_matrix
        self.lhs = (M + (self.theta * self.dt) * A).tocsr()
        self.rhs = (M + ((self.theta - 1.0) * self.dt) * A).tocsr()
        self.iterations = 0

    def step(self, w: FieldVector) -> FieldVector:
        result = cg_solve(self.lhs, self.rhs @ w, self.tol_rel, x0=w)
        self.iterations += result.iterations
        return result.x

    def iterate(self, w0: FieldVector) -> Iterator[FieldVector]:
        """
        Yields ``W^(1), W^(2), ...`` indefinitely.
        """
        w = np.asarray(w0, dtype=float)
        if w.shape != (self.space.n_dofs,):
            raise DimensionMismatch("HeatSolver.iterate", self.space.n_dofs, w.size)

        while True:
            w = self.step(w)
            yield w


def theta_step(
    M: CsrMatrix,
    A: CsrMatrix,
    theta: float,
    dt: float,
    w_prev: FieldVector,
    *,
    tol_rel: float = 1e-12,
) -> FieldVector:
    """
    One θ-scheme step from assembled matrices.

    :raises DimensionMismatch: If the shapes disagree
    """
    theta = _check_theta(theta)
    dt = check_positive("dt", dt)
    w_prev = np.asarray(w_prev, dtype=float)
    if M.shape != A.shape or M.shape[0] != len(w_prev):
        raise DimensionMismatch("theta_step", M.shape[0], len(w_prev))

    lhs = (M + (theta * dt) * A).tocsr()
    rhs = (M + ((theta - 1.0) * dt) * A).tocsr()
    return cg_solve(lhs, rhs @ w_prev, tol_rel, x0=w_prev).x


def run_heat(
    space: FeSpace,
    u0: FieldVector,
    theta: float,
    dt: float,
    n_steps: int,
    *,
    tol_rel: float = 1e-12,
) -> HeatRun:
    """
    Runs ``n_steps`` θ-scheme steps from ``u0`` and keeps every snapshot.

    :raises CflViolation: If θ < 1/2 and ``dt`` is too large for the mesh
    """
    n_steps = check_integer("n_steps", n_steps, 0)
    solver = HeatSolver(space, theta, dt, tol_rel=tol_rel)

    u0 = np.array(u0, dtype=float)
    if u0.shape != (space.n_dofs,):
        raise DimensionMismatch("run_heat", space.n_dofs, u0.size)

    snapshots = [u0]
    snapshots.extend(itertools.islice(solver.iterate(u0), n_steps))
    logger.debug(
        "heat run: theta=%g dt=%g steps=%d cg iterations=%d",
        theta,
        dt,
        n_steps,
        solver.iterations,
    )
    return HeatRun(space, solver.theta, solver.dt, tuple(snapshots))


def steady_state(space: FeSpace, u0: FieldVector) -> FieldVector:
    """
    Long-time limit of the heat flow from ``u0``: zero for Dirichlet and Robin
    conditions, the discrete mean ``1ᵀ M u0 / |Ω|`` for Neumann.
    """
    u0 = np.asarray(u0, dtype=float)
    if u0.shape != (space.n_dofs,):
        raise DimensionMismatch("steady_state", space.n_dofs, u0.size)

    if space.bc.kind != "neumann":
        return np.zeros(space.n_dofs)

    mass = float(np.sum(space.mass_matrix @ u0))
    return np.full(space.n_dofs, mass / space.mesh.measure)
