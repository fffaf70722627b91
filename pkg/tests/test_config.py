import pytest

import json
import math
import os

import numpy as np

from fraclap import errors
from fraclap import (
    AUTO,
    BoundaryCondition,
    ConvergenceSpec,
    Interval,
    NtAdaptive,
    NtFormula,
    PmeSpec,
    Polygon,
    Rectangle,
    load_config,
    parse_config,
)


def minimal(**sections):
    data = {
        'domain': {'kind': 'interval', 'a': 0, 'b': 1},
        'boundary': {'kind': 'dirichlet'},
        'fractional': {'s': 0.5},
    }
    data.update(sections)
    return data


def test_minimal_config():
    config = parse_config(minimal())

    assert config.domain == Interval(0.0, 1.0)
    assert config.boundary == (BoundaryCondition.dirichlet(),)
    assert config.dimension == 1
    assert config.input is None
    assert config.convergence is None
    assert config.pme is None
    assert config.prefix == 'fraclap'


def test_fractional_defaults(dirichlet):
    cfg = parse_config(minimal()).frac_config(dirichlet)

    assert cfg.s == 0.5
    assert cfg.theta == 1.0
    assert cfg.eta == 1e-3
    assert cfg.p == 1.0
    assert cfg.scheme == 'low'
    assert cfg.nt_mode == NtAdaptive(1e-8)
    assert cfg.tol_rel == 1e-12
    assert cfg.n_t_max is AUTO


def test_fractional_options(neumann):
    fractional = {
        's': 0.25,
        'theta': 0.5,
        'eta': 0.01,
        'p': 1,
        'scheme': 'high',
        'nt': 'formula',
        'lambda_min': 2.5,
        'n_t_max': 500,
    }
    config = parse_config(minimal(fractional=fractional))

    cfg = config.frac_config(neumann, eta=0.1)

    assert cfg.scheme == 'high'
    assert cfg.nt_mode == NtFormula(2.5)
    assert cfg.n_t_max == 500
    assert cfg.eta == 0.1
    assert cfg.bc == neumann


def test_formula_with_automatic_lambda():
    config = parse_config(minimal(fractional={'s': 0.5, 'nt': 'formula'}))

    assert config.fractional['nt_mode'] == NtFormula(AUTO)


def test_boundary_list():
    boundary = [{'kind': 'dirichlet'}, {'kind': 'neumann'}, {'kind': 'robin'}, {'kind': 'robin', 'kappa': 2.5}]
    config = parse_config(minimal(boundary=boundary))

    assert config.boundary == (
        BoundaryCondition.dirichlet(),
        BoundaryCondition.neumann(),
        BoundaryCondition.robin(1.0),
        BoundaryCondition.robin(2.5),
    )


@pytest.mark.parametrize('data, error', [
    (minimal(extra=1), errors.UnknownConfigKey('extra')),
    (minimal(fractional={'s': 0.5, 'sigma': 1}), errors.UnknownConfigKey('fractional.sigma')),
    (minimal(boundary=[{'kind': 'dirichlet'}, {'kind': 'robin', 'k': 1}]), errors.UnknownConfigKey('boundary[1].k')),
    (minimal(mesh={'cells': 4}), errors.UnknownConfigKey('mesh.cells')),
    (minimal(output={'prefix': 'a', 'dir': 'b'}), errors.UnknownConfigKey('output.dir')),
])
def test_unknown_keys(data, error):
    with pytest.raises(error):
        parse_config(data)


def test_missing_keys():
    data = minimal()
    del data['domain']

    with pytest.raises(errors.MissingConfigKey('domain')):
        parse_config(data)
    with pytest.raises(errors.MissingConfigKey('fractional.s')):
        parse_config(minimal(fractional={}))
    with pytest.raises(errors.MissingConfigKey('domain.b')):
        parse_config(minimal(domain={'kind': 'interval', 'a': 0}))


@pytest.mark.parametrize('data, error', [
    ([], errors.InvalidConfigValue('<root>', [], 'expected an object')),
    (minimal(fractional={'s': '0.5'}), errors.InvalidConfigValue('fractional.s', '0.5', 'expected a number')),
    (minimal(fractional={'s': True}), errors.InvalidConfigValue('fractional.s', True, 'expected a number')),
    (minimal(fractional={'s': 0.5, 'n_t_max': 2.5}), errors.InvalidConfigValue('fractional.n_t_max', 2.5, 'expected an integer')),
    (minimal(fractional={'s': 0.5, 'scheme': 3}), errors.InvalidConfigValue('fractional.scheme', 3, 'expected a string')),
    (minimal(fractional={'s': 0.5, 'nt': 'guess'}), errors.InvalidConfigValue('fractional.nt', 'guess', 'one of adaptive, formula')),
    (minimal(boundary={'kind': 'periodic'}), errors.InvalidConfigValue('boundary.kind', 'periodic', 'one of dirichlet, neumann, robin')),
    (minimal(boundary=[]), errors.InvalidConfigValue('boundary', [], 'expected at least one boundary condition')),
    (minimal(domain={'kind': 'disk'}), errors.InvalidConfigValue('domain.kind', 'disk', 'one of interval, unit_square, rectangle, polygon')),
    (minimal(domain={'kind': 'polygon', 'vertices': [[0, 0], [1, 0, 2]]}), errors.InvalidConfigValue('domain.vertices[1]', [1, 0, 2], 'expected [x, y]')),
    (minimal(input={'kind': 'sine_cosine'}), errors.InvalidConfigValue('input.kind', 'sine_cosine', 'sine_cosine needs a 2D domain')),
    (minimal(input={'kind': 'bump', 'r': 0.25, 'center': [0.5, 0.9]}), errors.InvalidConfigValue('input.center', [0.5, 0.9], 'expected 1 coordinates')),
    (minimal(boundary_data={'kind': 'plateau_bump', 'r': 0.25, 'center': []}), errors.InvalidConfigValue('boundary_data.center', [], 'expected 1 coordinates')),
])
def test_invalid_values(data, error):
    with pytest.raises(error):
        parse_config(data)


def test_invalid_combination_fails_early():
    with pytest.raises(errors.OutOfRange):
        parse_config(minimal(fractional={'s': 0.5, 'scheme': 'high'}))
    with pytest.raises(errors.OutOfRange):
        parse_config(minimal(fractional={'s': 1.5}))
    with pytest.raises(errors.NonPositiveRobinCoefficient):
        parse_config(minimal(boundary={'kind': 'robin', 'kappa': 0}))


def test_interval_mesh():
    config = parse_config(minimal(domain={'kind': 'interval', 'a': -1, 'b': 1}, mesh={'n_cells': 8}))

    mesh = config.build_mesh()

    assert mesh.n_elements == 8
    assert mesh.h_max == 0.25


def test_mesh_needs_size():
    with pytest.raises(errors.MissingConfigKey('mesh.n_cells')):
        parse_config(minimal()).build_mesh()
    with pytest.raises(errors.MissingConfigKey('mesh.refinements')):
        parse_config(minimal(domain={'kind': 'unit_square'}, mesh={'n_cells': 4})).build_mesh()


@pytest.mark.parametrize('domain', [
    {'kind': 'unit_square'},
    {'kind': 'rectangle', 'width': 1, 'height': 1},
    {'kind': 'polygon', 'vertices': [[0, 0], [1, 0], [1, 1], [0, 1]]},
])
def test_square_meshes(domain):
    config = parse_config(minimal(domain=domain, mesh={'refinements': 1}))

    mesh = config.build_mesh()

    assert config.dimension == 2
    assert mesh.n_elements == 16
    assert mesh.measure == pytest.approx(1.0)


def test_polygon_domain():
    config = parse_config(minimal(domain={'kind': 'polygon', 'vertices': [[0, 0], [2, 0], [0, 1]]}))

    assert config.domain == Polygon(((0.0, 0.0), (2.0, 0.0), (0.0, 1.0)))


def test_eigenfunction_input(dirichlet):
    config = parse_config(minimal(input={'kind': 'eigenfunction', 'index': 2}))

    pair = config.input.build(config.domain, dirichlet)

    assert pair.lam == pytest.approx(4 * math.pi**2)


def test_eigenfunction_input_needs_matching_index():
    with pytest.raises(errors.InvalidConfigValue('input.index', [1], 'expected 2 indices')):
        parse_config(minimal(domain={'kind': 'unit_square'}, input={'kind': 'eigenfunction', 'index': [1]}))


def test_eigenfunction_input_needs_known_domain(dirichlet):
    domain = {'kind': 'polygon', 'vertices': [[0, 0], [1, 0], [0, 1]]}
    config = parse_config(minimal(domain=domain, input={'kind': 'eigenfunction', 'index': [1, 1]}))

    with pytest.raises(errors.InvalidConfigValue):
        config.input.build(config.domain, dirichlet)


def test_function_inputs(dirichlet):
    config = parse_config(minimal(
        input={'kind': 'bump', 'r': 0.25, 'center': [0.5], 'amplitude': 2},
        boundary_data={'kind': 'constant', 'value': 3},
    ))

    f = config.input.build(config.domain, dirichlet)
    g = config.boundary_data.build(config.domain, dirichlet)

    assert f(np.array([0.5]))[0] == pytest.approx(2 * math.exp(-16))
    assert g(np.array([0.1, 0.9])) == pytest.approx([3.0, 3.0])


def test_porous_medium_input(dirichlet):
    config = parse_config(minimal(input={'kind': 'pme_initial'}))

    f = config.input.build(config.domain, dirichlet)

    assert f(np.array([0.0]))[0] == pytest.approx(1.0)


def test_unknown_input_kind():
    with pytest.raises(errors.InvalidConfigValue):
        parse_config(minimal(input={'kind': 'noise'}))


def test_convergence_section():
    config = parse_config(minimal(convergence={'h_list': [0.25, 0.125], 'max_workers': 2}))

    assert config.convergence == ConvergenceSpec((0.25, 0.125), (1,), 2)


def test_convergence_levels():
    config = parse_config(minimal(
        domain={'kind': 'unit_square'},
        convergence={'refinement_levels': [2, 3], 'eigen_index': [1, 2]},
    ))

    assert config.domain == Rectangle()
    assert config.convergence == ConvergenceSpec((0.25, 0.125), (1, 2))


def test_convergence_needs_sizes():
    with pytest.raises(errors.MissingConfigKey('convergence.h_list')):
        parse_config(minimal(convergence={}))
    with pytest.raises(errors.InvalidConfigValue('domain.kind', 'polygon', 'convergence studies need an interval or rectangle')):
        parse_config(minimal(domain={'kind': 'polygon', 'vertices': [[0, 0], [1, 0], [0, 1]]}, convergence={'h_list': [0.5]}))


def test_pme_section():
    config = parse_config(minimal(pme={'m': 2, 'tau_end': 1.5, 'snapshots': [0.5, 1]}))

    assert config.pme == PmeSpec(2.0, 1.5, (0.5, 1.0))


def test_output_path():
    config = parse_config(minimal(output={'prefix': 'run'}))

    assert config.output_path('out', 'apply', 'dirichlet') == os.path.join('out', 'run_apply_dirichlet.csv')


def test_load_config(tmp_path):
    path = tmp_path / 'run.json'
    path.write_text(json.dumps(minimal(mesh={'n_cells': 4})))

    config = load_config(path)

    assert config.n_cells == 4


def test_load_config_reports_bad_json(tmp_path):
    path = tmp_path / 'run.json'
    path.write_text('{"domain": ')

    with pytest.raises(errors.ConfigParseError) as info:
        load_config(path)

    assert info.value.source == str(path)
    assert info.value.reason.startswith('line 1 column')
