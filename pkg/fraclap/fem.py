"""
P1 finite elements: boundary conditions, spaces, assembly, projection and
evaluation.
"""

import dataclasses
import functools
import logging
import math
from typing import *

import numpy as np
import numpy.typing as npt
import scipy.sparse

from ._utils import call_function, check_option, edge_rule, element_rule, freeze
from .errors import *
from .linalg import as_csr, cg_solve
from .mesh import Mesh
from .types import *

__all__ = [
    "BoundaryCondition",
    "FeSpace",
    "FeFunction",
    "assemble_mass",
    "assemble_stiffness",
    "assemble_load",
    "l2_project",
    "l2_norm",
    "l2_norm_error",
    "evaluate",
    "domain_measure",
    "discrete_laplacian",
    "generalized_eigenvalue_bound",
]


logger = logging.getLogger(__name__)

Datum = Union[ScalarFunction, "FeFunction", float]


@dataclasses.dataclass(frozen=True)
class BoundaryCondition:
    """
    Homogeneous boundary operator ``B``. For Robin conditions
    ``B(u) = kappa * u + du/dn`` with outward normal derivative.

    ``kappa`` is either a positive number or a function of the boundary
    coordinates; it must be positive wherever it is sampled.
    """

    kind: BoundaryKind
    kappa: Union[float, ScalarFunction, None] = None

    def __post_init__(self):
        check_option("kind", self.kind, get_args(BoundaryKind))

        if self.kind == "robin":
            if self.kappa is None:
                raise InvalidArgumentError("kappa", None)
            if not callable(self.kappa):
                kappa = float(self.kappa)
                if not kappa > 0 or not math.isfinite(kappa):
                    raise NonPositiveRobinCoefficient("kappa", kappa)
                object.__setattr__(self, "kappa", kappa)
        elif self.kappa is not None:
            raise InvalidArgumentError("kappa", self.kappa)

    @classmethod
    def dirichlet(cls) -> "BoundaryCondition":
        return cls("dirichlet")

    @classmethod
    def neumann(cls) -> "BoundaryCondition":
        return cls("neumann")

    @classmethod
    def robin(cls, kappa: Union[float, ScalarFunction] = 1.0) -> "BoundaryCondition":
        return cls("robin", kappa)

    def kappa_at(self, points: Coordinates) -> np.ndarray:
        if self.kind != "robin":
            return np.zeros(len(points))

        if callable(self.kappa):
            values = call_function(self.kappa, points)
        else:
            values = np.full(len(points), self.kappa)

        if not np.all(values > 0):
            raise NonPositiveRobinCoefficient("kappa", float(np.nanmin(values)))
        return values

    def __str__(self) -> str:
        if self.kind == "robin":
            kappa = "<function>" if callable(self.kappa) else repr(self.kappa)
            return f"robin(kappa={kappa})"
        return self.kind


class FeSpace:
    """
    Continuous P1 space on a mesh. Dirichlet conditions are imposed by
    eliminating the boundary nodes, so coefficient vectors only hold the free
    nodes; Neumann and Robin spaces keep every node.
    """

    def __init__(self, mesh: Mesh, bc: BoundaryCondition):
        self.mesh = mesh
        self.bc = bc

        if bc.kind == "dirichlet":
            free = [i for i in range(mesh.n_nodes) if i not in mesh.boundary_nodes]
        else:
            free = list(range(mesh.n_nodes))

        self.node_of_dof = freeze(np.array(free, dtype=np.int64))
        dof_of_node = np.full(mesh.n_nodes, -1, dtype=np.int64)
        dof_of_node[self.node_of_dof] = np.arange(len(free))
        self.dof_of_node = freeze(dof_of_node)

    @property
    def n_dofs(self) -> int:
        return len(self.node_of_dof)

    @property
    def dof_coordinates(self) -> np.ndarray:
        return self.mesh.nodes[self.node_of_dof]

    @functools.cached_property
    def mass_matrix(self) -> CsrMatrix:
        return assemble_mass(self)

    @functools.cached_property
    def stiffness_matrix(self) -> CsrMatrix:
        return assemble_stiffness(self)

    @functools.cached_property
    def element_matrices(self) -> Tuple[np.ndarray, np.ndarray]:
        """
        Per-element ``(mass, stiffness)`` stacks, Robin boundary terms included.
        """
        return _element_matrices(self.mesh, self.bc)

    def to_nodal(self, coeffs: FieldVector) -> np.ndarray:
        """
        Expands DOF coefficients to one value per mesh node; eliminated
        Dirichlet nodes get 0.
        """
        coeffs = np.asarray(coeffs, dtype=float)
        if coeffs.shape != (self.n_dofs,):
            raise DimensionMismatch("to_nodal", self.n_dofs, coeffs.size)

        values = np.zeros(self.mesh.n_nodes)
        values[self.node_of_dof] = coeffs
        return values

    def from_nodal(self, values: np.ndarray) -> FieldVector:
        values = np.asarray(values, dtype=float)
        if values.shape != (self.mesh.n_nodes,):
            raise DimensionMismatch("from_nodal", self.mesh.n_nodes, values.size)
        return values[self.node_of_dof]

    def __repr__(self) -> str:
        return f"<{type(self).__name__} {self.bc} n_dofs={self.n_dofs} on {self.mesh!r}>"


@dataclasses.dataclass(frozen=True, eq=False)
class FeFunction:
    """
    A P1 function given by its values at every node of ``mesh``, optionally
    plus an ``analytic`` part evaluated pointwise.

    Instances are callable like any other scalar function. They support ``+``
    and ``-`` with functions, numbers and other FE functions on the same mesh,
    which is how shifted data such as ``u - z_h`` are written.

    .. versionadded:: 0.2
    """

    mesh: Mesh
    nodal_values: np.ndarray
    analytic: Optional[ScalarFunction] = None

    def __post_init__(self):
        values = np.array(self.nodal_values, dtype=float)
        if values.shape != (self.mesh.n_nodes,):
            raise DimensionMismatch("FeFunction", self.mesh.n_nodes, values.size)
        object.__setattr__(self, "nodal_values", freeze(values))

    @classmethod
    def from_coefficients(cls, space: FeSpace, coeffs: FieldVector) -> "FeFunction":
        return cls(space.mesh, space.to_nodal(coeffs))

    def __call__(self, *coords: npt.ArrayLike) -> np.ndarray:
        arrays = np.broadcast_arrays(*(np.asarray(c, dtype=float) for c in coords))
        points = np.column_stack([a.ravel() for a in arrays])
        elements, bary = self.mesh.locate(points)
        values = np.einsum("pi,pi->p", bary, self.nodal_values[self.mesh.elements[elements]])
        if self.analytic is not None:
            values = values + call_function(self.analytic, points)
        return values.reshape(arrays[0].shape)

    def _combine(self, other: Datum, sign: float, flip: bool = False) -> "FeFunction":
        nodal = -self.nodal_values if flip else self.nodal_values
        own = self.analytic
        if own is not None and flip:
            own = _scaled(own, -1.0)

        if isinstance(other, FeFunction) and other.mesh is self.mesh:
            nodal = nodal + sign * other.nodal_values
            extra = None if other.analytic is None else _scaled(other.analytic, sign)
        elif isinstance(other, FeFunction):
            raise InvalidArgumentError("other", "FE function on a different mesh")
        elif callable(other) or isinstance(other, (int, float)):
            extra = _scaled(other, sign)
        else:
            return NotImplemented

        return FeFunction(self.mesh, nodal, _sum(own, extra))

    def __add__(self, other: Datum) -> "FeFunction":
        return self._combine(other, 1.0)

    def __radd__(self, other: Datum) -> "FeFunction":
        return self._combine(other, 1.0)

    def __sub__(self, other: Datum) -> "FeFunction":
        return self._combine(other, -1.0)

    def __rsub__(self, other: Datum) -> "FeFunction":
        return self._combine(other, 1.0, flip=True)

    def __neg__(self) -> "FeFunction":
        analytic = None if self.analytic is None else _scaled(self.analytic, -1.0)
        return FeFunction(self.mesh, -self.nodal_values, analytic)


def _scaled(f: Union[ScalarFunction, float], factor: float) -> ScalarFunction:
    if not callable(f):
        constant = factor * float(f)
        return lambda *x: np.full(np.shape(x[0]), constant)
    if factor == 1.0:
        return f
    return lambda *x: factor * np.asarray(f(*x), dtype=float)


def _sum(f: Optional[ScalarFunction], g: Optional[ScalarFunction]) -> Optional[ScalarFunction]:
    if f is None or g is None:
        return f if g is None else g
    return lambda *x: np.asarray(f(*x), dtype=float) + np.asarray(g(*x), dtype=float)


def _volume_matrices(mesh: Mesh) -> Tuple[np.ndarray, np.ndarray]:
    measures = mesh.element_measures

    if mesh.dim == 1:
        mass_ref = np.array([[2.0, 1.0], [1.0, 2.0]]) / 6.0
        stiff_ref = np.array([[1.0, -1.0], [-1.0, 1.0]])
        mass = measures[:, None, None] * mass_ref
        stiffness = stiff_ref / measures[:, None, None]
        return mass, stiffness

    mass_ref = (np.ones((3, 3)) + np.eye(3)) / 12.0
    mass = measures[:, None, None] * mass_ref

    _, inverses = mesh.inverse_jacobians
    # Rows of the inverse Jacobian are the gradients of barycentric coordinates 1 and 2.
    gradients = np.concatenate([-inverses.sum(axis=1, keepdims=True), inverses], axis=1)
    stiffness = measures[:, None, None] * np.einsum("kid,kjd->kij", gradients, gradients)
    return mass, stiffness


def _robin_terms(mesh: Mesh, bc: BoundaryCondition) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
    """
    Boundary integrals of ``kappa * phi_i * phi_j`` as
    ``(owner element, local indices, local matrices)``.
    """
    if mesh.dim == 1:
        nodes = np.array(list(mesh.boundary_nodes), dtype=np.int64)
        hits = mesh.elements[None, :, :] == nodes[:, None, None]
        owners = hits.any(axis=2).argmax(axis=1)
        local = hits[np.arange(len(nodes)), owners].argmax(axis=1)[:, None]
        kappa = bc.kappa_at(mesh.nodes[nodes])
        return owners, local, kappa[:, None, None]

    edges = mesh.boundary_edges
    owners = mesh.boundary_edge_elements
    owned = mesh.elements[owners]
    local = np.column_stack(
        [np.argmax(owned == edges[:, [0]], axis=1), np.argmax(owned == edges[:, [1]], axis=1)]
    )

    bary, weights = edge_rule()
    start, end = mesh.nodes[edges[:, 0]], mesh.nodes[edges[:, 1]]
    lengths = np.linalg.norm(end - start, axis=1)
    points = bary[None, :, [0]] * start[:, None, :] + bary[None, :, [1]] * end[:, None, :]
    kappa = bc.kappa_at(points.reshape(-1, 2)).reshape(len(edges), len(weights))

    matrices = np.einsum("eq,q,qi,qj->eij", kappa, weights, bary, bary) * lengths[:, None, None]
    return owners, local, matrices


def _element_matrices(mesh: Mesh, bc: BoundaryCondition) -> Tuple[np.ndarray, np.ndarray]:
    mass, stiffness = _volume_matrices(mesh)

    if bc.kind == "robin":
        owners, local, matrices = _robin_terms(mesh, bc)
        for (owner, idx, matrix) in zip(owners, local, matrices):
            stiffness[owner][np.ix_(idx, idx)] += matrix

    return freeze(mass), freeze(stiffness)


def _assemble(space: FeSpace, local: np.ndarray) -> CsrMatrix:
    mesh = space.mesh
    elements = mesh.elements
    n_local = elements.shape[1]

    rows = np.repeat(elements, n_local, axis=1).ravel()
    cols = np.tile(elements, (1, n_local)).ravel()
    full = scipy.sparse.coo_matrix(
        (local.ravel(), (rows, cols)), shape=(mesh.n_nodes, mesh.n_nodes)
    ).tocsr()

    if space.n_dofs != mesh.n_nodes:
        full = full[space.node_of_dof][:, space.node_of_dof]
    return as_csr(full)


def assemble_mass(space: FeSpace) -> CsrMatrix:
    """
    Consistent P1 mass matrix ``M_ij = <phi_i, phi_j>`` on the space's DOFs.
    """
    mass, _ = space.element_matrices
    return _assemble(space, mass)


def assemble_stiffness(space: FeSpace) -> CsrMatrix:
    """
    P1 stiffness matrix ``A_ij = (grad phi_i, grad phi_j)``, plus the boundary
    term ``<kappa phi_i, phi_j>`` for Robin spaces. In 1D the boundary term is
    a point mass ``kappa`` at each endpoint; in 2D it is integrated with
    2-point Gauss per boundary edge.

    :raises NonPositiveRobinCoefficient: If ``kappa`` is not positive at a sample point
    """
    _, stiffness = space.element_matrices
    return _assemble(space, stiffness)


def _quadrature_points(mesh: Mesh) -> np.ndarray:
    bary, _ = element_rule(mesh.dim)
    return np.einsum("qi,kid->kqd", bary, mesh.nodes[mesh.elements])


def _quadrature_values(mesh: Mesh, f: Datum) -> np.ndarray:
    bary, weights = element_rule(mesh.dim)

    if isinstance(f, FeFunction) and f.mesh is mesh:
        values = f.nodal_values[mesh.elements] @ bary.T
        if f.analytic is None:
            return values
        return values + _quadrature_values(mesh, f.analytic)

    if not callable(f):
        return np.full((mesh.n_elements, len(weights)), float(f))

    points = _quadrature_points(mesh)
    return call_function(f, points.reshape(-1, mesh.dim)).reshape(mesh.n_elements, len(weights))


def _interpolate_at_quadrature(space: FeSpace, coeffs: FieldVector) -> np.ndarray:
    bary, _ = element_rule(space.mesh.dim)
    return space.to_nodal(coeffs)[space.mesh.elements] @ bary.T


def assemble_load(space: FeSpace, f: Datum) -> FieldVector:
    """
    Data integrals ``b_i = ∫ f phi_i`` on the space's DOFs, computed with the
    element quadrature rule.

    .. versionadded:: 0.2
    """
    mesh = space.mesh
    bary, weights = element_rule(mesh.dim)
    values = _quadrature_values(mesh, f)
    local = mesh.element_measures[:, None] * ((values * weights) @ bary)
    b = np.bincount(mesh.elements.ravel(), weights=local.ravel(), minlength=mesh.n_nodes)
    return space.from_nodal(b)


def l2_project(space: FeSpace, u: Datum, *, tol_rel: float = 1e-12) -> FieldVector:
    """
    L² projection onto the space: solves ``M c = b`` with ``b_i = ∫ u phi_i``.

    For Dirichlet spaces this projects onto the functions vanishing on the
    boundary.

    :param space: Target space
    :param u: Scalar function, :class:`FeFunction` or constant
    :param tol_rel: Relative tolerance of the mass solve
    :return: Coefficients of the projection
    """
    b = assemble_load(space, u)
    return cg_solve(space.mass_matrix, b, tol_rel).x


def l2_norm(space: FeSpace, coeffs: FieldVector) -> float:
    """
    ``sqrt(c^T M c)``, the L² norm of an FE function.
    """
    coeffs = np.asarray(coeffs, dtype=float)
    return math.sqrt(max(float(coeffs @ (space.mass_matrix @ coeffs)), 0.0))


def l2_norm_error(space: FeSpace, coeffs: FieldVector, u_exact: Datum) -> float:
    """
    ``‖u_exact - u_h‖₀`` by elementwise quadrature with the same rule as
    :func:`l2_project`.
    """
    mesh = space.mesh
    _, weights = element_rule(mesh.dim)
    difference = _quadrature_values(mesh, u_exact) - _interpolate_at_quadrature(space, coeffs)
    per_element = mesh.element_measures * ((difference**2) @ weights)
    return math.sqrt(math.fsum(per_element))


def evaluate(space: FeSpace, coeffs: FieldVector, points: Coordinates) -> np.ndarray:
    """
    Evaluates an FE function at arbitrary points by barycentric
    interpolation.

    :param points: Shape ``(n, dim)``; 1D points may also be a flat list
    :raises PointOutsideDomain: If a point is outside the mesh
    """
    mesh = space.mesh
    points = np.asarray(points, dtype=float).reshape(-1, mesh.dim)
    elements, bary = mesh.locate(points)
    nodal = space.to_nodal(coeffs)
    return np.einsum("pi,pi->p", bary, nodal[mesh.elements[elements]])


def domain_measure(space: FeSpace) -> float:
    return space.mesh.measure


def discrete_laplacian(space: FeSpace, u: Union[Datum, FieldVector]) -> FieldVector:
    """
    The ``s = 1`` reference operator ``M⁻¹ A P_h u``: the Galerkin
    approximation of ``-Δ_B u`` in the space.

    .. versionadded:: 0.2
    """
    if isinstance(u, np.ndarray):
        coeffs = np.asarray(u, dtype=float)
        if coeffs.shape != (space.n_dofs,):
            raise DimensionMismatch("discrete_laplacian", space.n_dofs, coeffs.size)
    else:
        coeffs = l2_project(space, u)
    return cg_solve(space.mass_matrix, space.stiffness_matrix @ coeffs).x


def generalized_eigenvalue_bound(space: FeSpace) -> float:
    """
    Upper bound for the largest eigenvalue ``mu`` of ``A x = mu M x``, taken
    as the largest elementwise generalized eigenvalue of ``(A_K, M_K)``.
    Removing Dirichlet nodes can only lower the true value.
    """
    mass, stiffness = space.element_matrices
    lower = np.linalg.cholesky(mass)
    inverse = np.linalg.inv(lower)
    reduced = inverse @ stiffness @ np.swapaxes(inverse, 1, 2)
    reduced = 0.5 * (reduced + np.swapaxes(reduced, 1, 2))
    return float(np.linalg.eigvalsh(reduced)[:, -1].max())
