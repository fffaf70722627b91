import pytest

import math

import numpy as np

from fraclap import errors
from fraclap import (
    UNIT_SQUARE,
    Mesh,
    format_flm,
    generate_convex_polygon,
    generate_interval,
    generate_rectangle,
    is_conforming,
    parse_flm,
    polygon_area,
    quasi_uniformity_report,
    read_flm,
    refine_red,
    write_flm,
)


PENTAGON = [(0.0, 0.0), (1.0, 0.0), (1.3, 0.7), (0.5, 1.2), (-0.3, 0.7)]


def test_generate_interval():
    mesh = generate_interval(0, 1, 4)

    assert mesh.dim == 1
    assert mesh.n_elements == 4
    np.testing.assert_allclose(mesh.nodes[:, 0], [0, 0.25, 0.5, 0.75, 1])
    assert list(mesh.boundary_nodes) == [0, 4]
    assert mesh.h_max == pytest.approx(0.25, rel=1e-15)


def test_generate_interval_minimal():
    mesh = generate_interval(0, 1, 1)

    assert mesh.n_nodes == 2
    assert mesh.n_elements == 1


def test_generate_interval_pme_resolution():
    mesh = generate_interval(-1, 1, 1000)

    assert mesh.n_nodes == 1001
    assert mesh.h_max == pytest.approx(0.002, rel=1e-12)
    assert mesh.measure == pytest.approx(2.0, rel=1e-12)


@pytest.mark.parametrize('a, b, n_cells', [
    (1, 0, 4),
    (0, 0, 4),
    (0, math.inf, 4),
    (0, 1, 0),
])
def test_generate_interval_invalid(a, b, n_cells):
    with pytest.raises(errors.InvalidArgumentError):
        generate_interval(a, b, n_cells)


def test_fan_of_unit_square():
    mesh = generate_convex_polygon(UNIT_SQUARE)

    assert mesh.n_elements == 4
    assert mesh.n_nodes == 5
    np.testing.assert_allclose(mesh.nodes[-1], [0.5, 0.5])
    assert mesh.h_max == pytest.approx(1.0)
    assert len(mesh.boundary_edges) == 4
    assert set(mesh.boundary_nodes) == {0, 1, 2, 3}


def test_refinements_halve_h():
    coarse = generate_convex_polygon(UNIT_SQUARE)
    fine = generate_convex_polygon(UNIT_SQUARE, 3)

    assert fine.n_elements == 256
    assert fine.h_max == pytest.approx(coarse.h_max / 8, rel=1e-14)
    assert fine.measure == pytest.approx(1.0, rel=1e-12)


def test_red_refinement_quadruples():
    mesh = generate_rectangle(2.0, 1.0, 1)
    refined = refine_red(mesh)

    assert refined.n_elements == 4 * mesh.n_elements
    assert refined.h_max == pytest.approx(mesh.h_max / 2, rel=1e-14)
    assert len(refined.boundary_edges) == 2 * len(mesh.boundary_edges)


def test_refine_red_rejects_1d():
    with pytest.raises(errors.InvalidArgumentError):
        refine_red(generate_interval(0, 1, 2))


@pytest.mark.parametrize('vertices', [
    UNIT_SQUARE,
    PENTAGON,
    [(0, 0), (1, 0), (0, 1)],
])
def test_area_matches_shoelace(vertices):
    mesh = generate_convex_polygon(vertices, 2)

    assert mesh.measure == pytest.approx(polygon_area(vertices), rel=1e-12)
    assert np.all(mesh.element_measures > 0)


def test_boundary_edges_are_oriented_counterclockwise():
    mesh = generate_convex_polygon(UNIT_SQUARE, 2)
    start = mesh.nodes[mesh.boundary_edges[:, 0]]
    end = mesh.nodes[mesh.boundary_edges[:, 1]]
    # The domain lies to the left of each edge, i.e. towards the center.
    direction = end - start
    to_center = np.array([0.5, 0.5]) - start
    cross = direction[:, 0] * to_center[:, 1] - direction[:, 1] * to_center[:, 0]

    assert np.all(cross > 0)
    assert len(mesh.boundary_edges) == 16


@pytest.mark.parametrize('vertices', [
    [(0, 0), (2, 0), (1, 1), (2, 2), (0, 2)],
    [(0, 0), (0, 1), (1, 1), (1, 0)],
    [(0, 0), (1, 0), (2, 0)],
    [(0, 0), (1, 0)],
])
def test_invalid_polygon(vertices):
    with pytest.raises(errors.InvalidPolygon):
        generate_convex_polygon(vertices)


def test_degenerate_element():
    with pytest.raises(errors.DegenerateElement(0, -0.5)):
        Mesh.from_elements([(0, 0), (1, 0), (0, 1)], [[0, 2, 1]])


def test_quasi_uniformity_1d():
    sigma, tau = quasi_uniformity_report(generate_interval(0, 1, 7))

    assert sigma == pytest.approx(1.0)
    assert tau == pytest.approx(1.0)


def test_quasi_uniformity_of_square_fan():
    sigma, tau = quasi_uniformity_report(generate_convex_polygon(UNIT_SQUARE))

    assert sigma == pytest.approx(1 + math.sqrt(2), rel=1e-12)
    assert tau == pytest.approx(1.0)


@pytest.mark.parametrize('vertices', [UNIT_SQUARE, PENTAGON])
def test_refinement_preserves_shape_regularity(vertices):
    fan = quasi_uniformity_report(generate_convex_polygon(vertices))
    refined = quasi_uniformity_report(generate_convex_polygon(vertices, 3))

    assert refined.sigma == pytest.approx(fan.sigma, rel=1e-9)
    assert refined.sigma <= 2 * fan.sigma


@pytest.mark.parametrize('mesh', [
    generate_interval(0, 1, 5),
    generate_convex_polygon(UNIT_SQUARE),
    generate_convex_polygon(PENTAGON, 2),
    generate_rectangle(3.0, 0.5, 2),
])
def test_generated_meshes_conform(mesh):
    assert is_conforming(mesh)


def test_duplicate_element_does_not_conform():
    mesh = Mesh.from_elements([(0, 0), (1, 0), (0, 1)], [[0, 1, 2], [0, 1, 2]])

    assert not is_conforming(mesh)


def test_hanging_node_does_not_conform():
    nodes = [(0, 0), (2, 0), (0, 2), (2, 2), (1, 1)]
    elements = [[0, 1, 2], [1, 3, 4], [4, 3, 2]]
    mesh = Mesh.from_elements(nodes, elements)

    assert not is_conforming(mesh)


def test_locate():
    mesh = generate_convex_polygon(UNIT_SQUARE, 1)
    points = np.array([[0.5, 0.1], [0.9, 0.9], [0.0, 0.0]])

    elements, bary = mesh.locate(points)
    corners = mesh.nodes[mesh.elements[elements]]
    rebuilt = np.einsum('pi,pid->pd', bary, corners)

    np.testing.assert_allclose(rebuilt, points, atol=1e-14)
    np.testing.assert_allclose(bary.sum(axis=1), 1.0)
    assert np.all(bary >= -1e-10)


def test_locate_outside():
    mesh = generate_convex_polygon(UNIT_SQUARE)

    with pytest.raises(errors.PointOutsideDomain((2.0, 2.0))):
        mesh.locate([[0.5, 0.5], [2.0, 2.0]])


def test_mesh_is_read_only():
    mesh = generate_interval(0, 1, 2)

    with pytest.raises(ValueError):
        mesh.nodes[0, 0] = 5.0


@pytest.mark.parametrize('mesh', [
    generate_interval(-1, 1, 3),
    generate_convex_polygon(PENTAGON, 1),
])
def test_flm_round_trip(mesh):
    text = format_flm(mesh)
    parsed = parse_flm(text)

    np.testing.assert_array_equal(parsed.nodes, mesh.nodes)
    np.testing.assert_array_equal(parsed.elements, mesh.elements)
    np.testing.assert_array_equal(parsed.boundary_edges, mesh.boundary_edges)
    assert list(parsed.boundary_nodes) == list(mesh.boundary_nodes)
    assert format_flm(parsed) == text


def test_flm_format():
    text = format_flm(generate_interval(0, 1, 2))

    assert text == 'flm 1 3 2\n0.0\n0.5\n1.0\n0 1\n1 2\nboundary\n0\n2\n'


def test_flm_file(tmp_path):
    mesh = generate_rectangle(1.0, 2.0, 1)
    path = tmp_path / 'rect.flm'

    write_flm(mesh, path)

    assert format_flm(read_flm(path)) == format_flm(mesh)


@pytest.mark.parametrize('text, line', [
    ('', 1),
    ('flm 1 3\n', 1),
    ('flm 1 x 2\n', 1),
    ('flm 1 3 2\n0.0\n0.5\n', 4),
    ('flm 1 3 2\n0.0\nabc\n1.0\n0 1\n1 2\nboundary\n0\n2\n', 3),
    ('flm 1 3 2\n0.0\n0.5\n1.0\n0 1\n1 2\n0\n2\n', 7),
    ('flm 1 3 2\n0.0\n0.5\n1.0\n0 1\n1 2\nboundary\n0\n1\n', 8),
])
def test_flm_errors(text, line):
    with pytest.raises(errors.MeshFormatError) as info:
        parse_flm(text)

    assert info.value.line == line
