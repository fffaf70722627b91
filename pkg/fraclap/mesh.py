"""
P1 meshes of intervals and convex polygons.
"""

import dataclasses
import functools
import math
import os
from typing import *

import numpy as np
from ordered_set import OrderedSet

from ._utils import check_finite, check_integer, freeze
from .errors import *
from .types import *

T = TypeVar("T")

__all__ = [
    "Mesh",
    "QuasiUniformity",
    "UNIT_SQUARE",
    "generate_interval",
    "generate_convex_polygon",
    "generate_rectangle",
    "refine_red",
    "quasi_uniformity_report",
    "is_conforming",
    "polygon_area",
    "format_flm",
    "parse_flm",
    "write_flm",
    "read_flm",
]


UNIT_SQUARE = ((0.0, 0.0), (1.0, 0.0), (1.0, 1.0), (0.0, 1.0))

# Barycentric slack when deciding whether a point lies in an element.
_LOCATE_TOLERANCE = 1e-10


class QuasiUniformity(NamedTuple):
    sigma: float
    tau: float


@dataclasses.dataclass(frozen=True, eq=False)
class Mesh:
    """
    An immutable conforming simplicial mesh.

    In 2D, elements are counterclockwise and every boundary edge is stored with
    the orientation it has in its owning element, so the domain lies to its
    left and the outward normal points to its right.

    Instances are normally created with :meth:`from_elements` or one of the
    ``generate_*`` functions, which derive the boundary.
    """

    nodes: np.ndarray
    elements: np.ndarray
    boundary_nodes: OrderedSet
    boundary_edges: np.ndarray
    boundary_edge_elements: np.ndarray

    def __post_init__(self):
        for array in (self.nodes, self.elements, self.boundary_edges, self.boundary_edge_elements):
            freeze(array)

    @classmethod
    def from_elements(cls, nodes: Sequence, elements: Sequence) -> "Mesh":
        """
        Builds a mesh from node coordinates and element connectivity.

        :param nodes: Node coordinates, shape ``(n_nodes, dim)``
        :param elements: Node indices per element, shape ``(n_elements, dim + 1)``
        :raises DegenerateElement: If an element has non-positive (signed) measure
        :raises InvalidArgumentError: If the arrays are malformed
        """
        nodes = np.array(nodes, dtype=float)
        if nodes.ndim == 1:
            nodes = nodes[:, None]
        elements = np.array(elements, dtype=np.int64)

        if nodes.ndim != 2 or nodes.shape[1] not in (1, 2) or not np.all(np.isfinite(nodes)):
            raise InvalidArgumentError("nodes", nodes.shape)

        dim = nodes.shape[1]
        if elements.ndim != 2 or elements.shape[1] != dim + 1 or len(elements) == 0:
            raise InvalidArgumentError("elements", elements.shape)
        if elements.min() < 0 or elements.max() >= len(nodes):
            raise InvalidArgumentError("elements", "node index out of range")

        measures = _signed_measures(nodes, elements)
        bad = np.flatnonzero(measures <= 0)
        if bad.size:
            raise DegenerateElement(int(bad[0]), float(measures[bad[0]]))

        if dim == 1:
            counts = np.bincount(elements.ravel(), minlength=len(nodes))
            boundary_nodes = OrderedSet(int(i) for i in elements.ravel() if counts[i] == 1)
            boundary_edges = np.empty((0, 2), dtype=np.int64)
            owners = np.empty(0, dtype=np.int64)
        else:
            boundary_edges, owners = _boundary_edges(elements)
            boundary_nodes = OrderedSet(int(i) for i in boundary_edges.ravel())

        return cls(nodes, elements, boundary_nodes, boundary_edges, owners)

    @property
    def dim(self) -> int:
        return self.nodes.shape[1]

    @property
    def n_nodes(self) -> int:
        return len(self.nodes)

    @property
    def n_elements(self) -> int:
        return len(self.elements)

    @functools.cached_property
    def element_measures(self) -> np.ndarray:
        return freeze(_signed_measures(self.nodes, self.elements))

    @functools.cached_property
    def element_diameters(self) -> np.ndarray:
        if self.dim == 1:
            return self.element_measures

        points = self.nodes[self.elements]
        lengths = np.linalg.norm(points - np.roll(points, -1, axis=1), axis=2)
        return freeze(lengths.max(axis=1))

    @functools.cached_property
    def element_inner_diameters(self) -> np.ndarray:
        """
        Diameter of the largest ball inside each element.
        """
        if self.dim == 1:
            return self.element_measures

        points = self.nodes[self.elements]
        perimeters = np.linalg.norm(points - np.roll(points, -1, axis=1), axis=2).sum(axis=1)
        return freeze(4.0 * self.element_measures / perimeters)

    @property
    def h_max(self) -> float:
        return float(self.element_diameters.max())

    @property
    def measure(self) -> float:
        return float(math.fsum(self.element_measures))

    @property
    def bounds(self) -> Tuple[np.ndarray, np.ndarray]:
        return self.nodes.min(axis=0), self.nodes.max(axis=0)

    @functools.cached_property
    def inverse_jacobians(self) -> Tuple[np.ndarray, np.ndarray]:
        """
        First node and inverse of the affine map from the reference simplex,
        per element.
        """
        origins = self.nodes[self.elements[:, 0]]
        jacobians = np.stack(
            [self.nodes[self.elements[:, i]] - origins for i in range(1, self.dim + 1)], axis=2
        )
        return origins, np.linalg.inv(jacobians)

    def locate(self, points: Coordinates) -> Tuple[np.ndarray, np.ndarray]:
        """
        Finds the element containing each point.

        :param points: Array of shape ``(n, dim)``
        :return: Element indices of shape ``(n,)`` and barycentric coordinates
            of shape ``(n, dim + 1)``
        :raises PointOutsideDomain: If a point is not inside any element
        """
        points = np.asarray(points, dtype=float).reshape(-1, self.dim)
        origins, inverses = self.inverse_jacobians

        found = np.empty(len(points), dtype=np.int64)
        bary = np.empty((len(points), self.dim + 1))

        chunk = max(1, 2**20 // self.n_elements)
        for start in range(0, len(points), chunk):
            block = points[start : start + chunk]
            xi = np.einsum("kij,pkj->pki", inverses, block[:, None, :] - origins[None, :, :])
            lam = np.concatenate([1.0 - xi.sum(axis=2, keepdims=True), xi], axis=2)
            score = lam.min(axis=2)
            best = score.argmax(axis=1)
            rows = np.arange(len(block))

            outside = np.flatnonzero(score[rows, best] < -_LOCATE_TOLERANCE)
            if outside.size:
                raise PointOutsideDomain(tuple(float(c) for c in block[outside[0]]))

            found[start : start + chunk] = best
            bary[start : start + chunk] = lam[rows, best]

        return found, bary

    def __repr__(self) -> str:
        return (
            f"<{type(self).__name__} dim={self.dim} nodes={self.n_nodes}"
            f" elements={self.n_elements} h_max={self.h_max:.4g}>"
        )


def _signed_measures(nodes: np.ndarray, elements: np.ndarray) -> np.ndarray:
    if nodes.shape[1] == 1:
        return nodes[elements[:, 1], 0] - nodes[elements[:, 0], 0]

    p0, p1, p2 = (nodes[elements[:, i]] for i in range(3))
    e1 = p1 - p0
    e2 = p2 - p0
    return 0.5 * (e1[:, 0] * e2[:, 1] - e1[:, 1] * e2[:, 0])


def _element_edges(elements: np.ndarray) -> np.ndarray:
    # Edge e of element k sits at row e * n_elements + k.
    return np.concatenate([elements[:, [0, 1]], elements[:, [1, 2]], elements[:, [2, 0]]])


def _boundary_edges(elements: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
    edges = _element_edges(elements)
    keys = np.sort(edges, axis=1)
    _, inverse, counts = np.unique(keys, axis=0, return_inverse=True, return_counts=True)
    inverse = inverse.reshape(-1)

    rows = np.flatnonzero(counts[inverse] == 1)
    # Element order first, then local edge order.
    n_elements = len(elements)
    owners = rows % n_elements
    order = np.lexsort((rows // n_elements, owners))
    rows = rows[order]
    return edges[rows], owners[order]


def generate_interval(a: float, b: float, n_cells: int) -> Mesh:
    """
    Uniform mesh of ``[a, b]`` with ``n_cells`` elements and ascending nodes.

    :raises OutOfRange: If a bound is not finite or ``a >= b``
    """
    a = check_finite("a", a)
    b = check_finite("b", b)
    n_cells = check_integer("n_cells", n_cells, 1)
    if a >= b:
        raise OutOfRange("b", b, "b > a")

    nodes = np.linspace(a, b, n_cells + 1)
    elements = np.column_stack([np.arange(n_cells), np.arange(1, n_cells + 1)])
    return Mesh.from_elements(nodes[:, None], elements)


def polygon_area(vertices: Sequence[Sequence[float]]) -> float:
    """
    Signed shoelace area, positive for counterclockwise vertices.
    """
    v = np.asarray(vertices, dtype=float)
    x, y = v[:, 0], v[:, 1]
    return 0.5 * float(np.dot(x, np.roll(y, -1)) - np.dot(np.roll(x, -1), y))


def _validate_convex_polygon(vertices: np.ndarray) -> None:
    if vertices.ndim != 2 or vertices.shape[1] != 2 or len(vertices) < 3:
        raise InvalidPolygon("at least three 2D vertices are required")
    if not np.all(np.isfinite(vertices)):
        raise InvalidPolygon("vertex coordinates must be finite")

    edges = np.roll(vertices, -1, axis=0) - vertices
    following = np.roll(edges, -1, axis=0)
    cross = edges[:, 0] * following[:, 1] - edges[:, 1] * following[:, 0]
    scale = np.max(np.abs(vertices)) ** 2 or 1.0
    if np.any(cross <= 1e-14 * scale):
        raise InvalidPolygon("vertices must form a strictly convex counterclockwise polygon")

    turning = np.arctan2(cross, np.einsum("ij,ij->i", edges, following)).sum()
    if not math.isclose(turning, 2 * math.pi, rel_tol=1e-9):
        raise InvalidPolygon("polygon boundary intersects itself")


def refine_red(mesh: Mesh) -> Mesh:
    """
    Splits every triangle into four congruent children through its edge
    midpoints. Midpoint nodes are appended after the existing nodes.
    """
    if mesh.dim != 2:
        raise InvalidArgumentError("mesh", mesh)

    triangles = mesh.elements
    n_elements = len(triangles)
    keys = np.sort(_element_edges(triangles), axis=1)
    unique, inverse = np.unique(keys, axis=0, return_inverse=True)
    mid = mesh.n_nodes + inverse.reshape(3, n_elements)

    midpoints = 0.5 * (mesh.nodes[unique[:, 0]] + mesh.nodes[unique[:, 1]])
    nodes = np.concatenate([mesh.nodes, midpoints])

    a, b, c = triangles.T
    mab, mbc, mca = mid
    children = np.stack(
        [
            np.column_stack([a, mab, mca]),
            np.column_stack([mab, b, mbc]),
            np.column_stack([mca, mbc, c]),
            np.column_stack([mab, mbc, mca]),
        ],
        axis=1,
    ).reshape(-1, 3)

    return Mesh.from_elements(nodes, children)


def generate_convex_polygon(vertices: Sequence[Sequence[float]], refinements: int = 0) -> Mesh:
    """
    Triangulates a strictly convex polygon by a fan around the vertex mean,
    followed by ``refinements`` rounds of red refinement.

    :param vertices: Polygon corners in counterclockwise order
    :param refinements: Number of red refinement rounds; each halves ``h_max``
    :raises InvalidPolygon: If the polygon is not strictly convex and counterclockwise
    """
    vertices = np.array(vertices, dtype=float)
    _validate_convex_polygon(vertices)
    refinements = check_integer("refinements", refinements, 0)

    n = len(vertices)
    nodes = np.concatenate([vertices, vertices.mean(axis=0, keepdims=True)])
    elements = np.column_stack([np.arange(n), (np.arange(n) + 1) % n, np.full(n, n)])
    mesh = Mesh.from_elements(nodes, elements)

    for _ in range(refinements):
        mesh = refine_red(mesh)
    return mesh


def generate_rectangle(width: float = 1.0, height: float = 1.0, refinements: int = 0) -> Mesh:
    """
    Mesh of ``[0, width] x [0, height]``.

    .. versionadded:: 0.2
    """
    width = check_finite("width", width)
    height = check_finite("height", height)
    if width <= 0 or height <= 0:
        raise InvalidPolygon("rectangle sides must be positive")
    corners = ((0.0, 0.0), (width, 0.0), (width, height), (0.0, height))
    return generate_convex_polygon(corners, refinements)


def quasi_uniformity_report(mesh: Mesh) -> QuasiUniformity:
    """
    Measured shape constants of a mesh.

    :return: ``sigma = max_K h_K / rho_K`` and ``tau = min_K h_K / h_max``
    """
    diameters = mesh.element_diameters
    sigma = float(np.max(diameters / mesh.element_inner_diameters))
    tau = float(diameters.min() / diameters.max())
    return QuasiUniformity(sigma, tau)


def is_conforming(mesh: Mesh) -> bool:
    """
    Checks the shared-face rule: interior faces belong to exactly two elements
    (with opposite orientation in 2D), boundary faces to one, and the boundary
    is a single closed curve.
    """
    if mesh.dim == 1:
        counts = np.bincount(mesh.elements.ravel(), minlength=mesh.n_nodes)
        if np.any(counts == 0) or np.any(counts > 2) or len(mesh.boundary_nodes) != 2:
            return False
        span = mesh.nodes.max() - mesh.nodes.min()
        return math.isclose(mesh.measure, span, rel_tol=1e-12)

    edges = _element_edges(mesh.elements)
    oriented = {tuple(e) for e in edges.tolist()}
    if len(oriented) != len(edges):
        return False

    keys = np.sort(edges, axis=1)
    _, counts = np.unique(keys, axis=0, return_counts=True)
    if np.any(counts > 2):
        return False
    if np.any(np.bincount(mesh.elements.ravel(), minlength=mesh.n_nodes) == 0):
        return False

    successor = dict(mesh.boundary_edges.tolist())
    if len(successor) != len(mesh.boundary_edges):
        return False
    start = int(mesh.boundary_edges[0, 0])
    node, steps = successor.get(start), 1
    while node is not None and node != start and steps <= len(successor):
        node, steps = successor.get(node), steps + 1
    return node == start and steps == len(successor)


def format_flm(mesh: Mesh) -> str:
    """
    Serializes a mesh in the ``.flm`` text format. Coordinates are written with
    ``repr`` so :func:`parse_flm` restores them exactly.
    """
    lines = [f"flm {mesh.dim} {mesh.n_nodes} {mesh.n_elements}"]
    lines += [" ".join(repr(float(c)) for c in node) for node in mesh.nodes]
    lines += [" ".join(str(int(i)) for i in element) for element in mesh.elements]
    lines.append("boundary")
    if mesh.dim == 1:
        lines += [str(i) for i in mesh.boundary_nodes]
    else:
        lines += [f"{i} {j}" for i, j in mesh.boundary_edges.tolist()]
    return "\n".join(lines) + "\n"


def parse_flm(text: str) -> Mesh:
    """
    Parses the ``.flm`` text format.

    :raises MeshFormatError: If the text is malformed or its boundary section
        disagrees with the connectivity
    """
    lines = text.splitlines()
    if not lines:
        raise MeshFormatError(1, "empty input")

    header = lines[0].split()
    if len(header) != 4 or header[0] != "flm":
        raise MeshFormatError(1, "expected 'flm <dim> <n_nodes> <n_elems>'")
    try:
        dim, n_nodes, n_elements = (int(v) for v in header[1:])
    except ValueError:
        raise MeshFormatError(1, "header counts must be integers") from None
    if dim not in (1, 2) or n_nodes < 2 or n_elements < 1:
        raise MeshFormatError(1, "unsupported dimension or counts")

    def rows(start: int, count: int, width: int, kind: Callable[[str], T]) -> List[List[T]]:
        result = []
        for offset in range(count):
            number = start + offset + 1
            if start + offset >= len(lines):
                raise MeshFormatError(number, "unexpected end of input")
            fields = lines[start + offset].split()
            if len(fields) != width:
                raise MeshFormatError(number, f"expected {width} values")
            try:
                result.append([kind(f) for f in fields])
            except ValueError:
                raise MeshFormatError(number, "malformed number") from None
        return result

    nodes = rows(1, n_nodes, dim, float)
    elements = rows(1 + n_nodes, n_elements, dim + 1, int)

    marker = 1 + n_nodes + n_elements
    if marker >= len(lines) or lines[marker].strip() != "boundary":
        raise MeshFormatError(marker + 1, "expected 'boundary'")
    tail = [line for line in lines[marker + 1 :] if line.strip()]
    try:
        boundary = [[int(f) for f in line.split()] for line in tail]
    except ValueError:
        raise MeshFormatError(marker + 2, "malformed boundary entry") from None

    try:
        mesh = Mesh.from_elements(nodes, elements)
    except (MeshError, InvalidArgumentError) as error:
        raise MeshFormatError(2, str(error)) from None

    if dim == 1:
        declared = {tuple(entry) for entry in boundary}
        derived = {(i,) for i in mesh.boundary_nodes}
    else:
        declared = {tuple(entry) for entry in boundary}
        derived = {tuple(edge) for edge in mesh.boundary_edges.tolist()}
    if declared != derived or len(boundary) != len(derived):
        raise MeshFormatError(marker + 2, "boundary section does not match the elements")

    return mesh


def write_flm(mesh: Mesh, path: Union[str, os.PathLike]) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as file:
        file.write(format_flm(mesh))


def read_flm(path: Union[str, os.PathLike]) -> Mesh:
    with open(path, encoding="utf-8") as file:
        return parse_flm(file.read())
