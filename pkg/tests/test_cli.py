import pytest

import csv
import json

import fraclap
from fraclap.cli import main


def write_config(tmp_path, **sections):
    data = {
        'domain': {'kind': 'interval', 'a': 0, 'b': 1},
        'boundary': {'kind': 'dirichlet'},
        'fractional': {'s': 0.5, 'eta': 0.1, 'nt': 'formula'},
        'mesh': {'n_cells': 8},
    }
    data.update(sections)
    path = tmp_path / 'run.json'
    path.write_text(json.dumps(data))
    return str(path)


def read_rows(path):
    with open(path, newline='') as file:
        return list(csv.reader(file))


def test_apply_writes_one_file_per_condition(tmp_path, capsys):
    config = write_config(
        tmp_path,
        boundary=[{'kind': 'dirichlet'}, {'kind': 'neumann'}],
        input={'kind': 'eigenfunction', 'index': 1},
    )
    out = tmp_path / 'out'

    assert main(['apply', '--config', config, '--out', str(out)]) == 0

    printed = capsys.readouterr().out.split()
    assert printed == [str(out / 'fraclap_apply_dirichlet.csv'), str(out / 'fraclap_apply_neumann.csv')]
    rows = read_rows(printed[0])
    assert rows[0] == ['x', 'input', 'output']
    assert len(rows) == 10


def test_apply_with_boundary_data(tmp_path, capsys):
    config = write_config(
        tmp_path,
        input={'kind': 'constant', 'value': 2},
        boundary_data={'kind': 'constant', 'value': 2},
        output={'prefix': 'lifted'},
    )

    assert main(['apply', '--config', config, '--out', str(tmp_path)]) == 0

    rows = read_rows(tmp_path / 'lifted_apply_dirichlet.csv')
    assert [float(row[2]) for row in rows[1:]] == pytest.approx([0.0] * 9, abs=1e-8)


def test_apply_rejects_mismatched_trace(tmp_path, capsys):
    config = write_config(
        tmp_path,
        input={'kind': 'eigenfunction'},
        boundary_data={'kind': 'constant', 'value': 2},
    )

    assert main(['apply', '--config', config, '--out', str(tmp_path)]) == 1

    assert capsys.readouterr().err.startswith('error: ')


def test_apply_needs_input(tmp_path, capsys):
    config = write_config(tmp_path)

    assert main(['apply', '--config', config, '--out', str(tmp_path)]) == 1

    assert capsys.readouterr().err == "error: Missing required config key 'input'\n"


def test_scheme_override_is_validated(tmp_path, capsys):
    config = write_config(tmp_path, input={'kind': 'eigenfunction'})

    assert main(['apply', '--config', config, '--out', str(tmp_path), '--scheme', 'high']) == 1

    err = capsys.readouterr().err
    assert err.startswith("error: Invalid value for parameter 'theta'")
    assert err.count('\n') == 1


def test_convergence_prints_slope(tmp_path, capsys):
    config = write_config(tmp_path, convergence={'h_list': [0.25, 0.125, 0.0625]})

    assert main(['convergence', '--config', config, '--out', str(tmp_path)]) == 0

    path, slope = capsys.readouterr().out.split()
    assert path == str(tmp_path / 'fraclap_convergence_dirichlet.csv')
    assert slope.startswith('slope=')
    rows = read_rows(path)
    assert rows[0] == ['h', 'dt', 'n_t', 'l2_error']
    assert len(rows) == 5


def test_pme_writes_snapshots(tmp_path, capsys):
    config = write_config(
        tmp_path,
        domain={'kind': 'interval', 'a': -1, 'b': 1},
        fractional={'s': 0.5, 'eta': 1, 'nt': 'formula'},
        mesh={'n_cells': 16},
        pme={'m': 2, 'tau_end': 0.25, 'snapshots': [0, 0.125]},
    )

    assert main(['pme', '--config', config, '--out', str(tmp_path)]) == 0

    lines = capsys.readouterr().out.splitlines()
    assert lines[:3] == [str(tmp_path / f'fraclap_pme_tau={tau}.csv') for tau in ('0.0', '0.125', '0.25')]
    assert lines[3].startswith('c0=')
    assert read_rows(lines[0])[0] == ['x', 'u', 'v_scaled']


def test_pme_needs_one_condition(tmp_path, capsys):
    config = write_config(
        tmp_path,
        boundary=[{'kind': 'dirichlet'}, {'kind': 'dirichlet'}],
        pme={'m': 2, 'tau_end': 0.1},
    )

    assert main(['pme', '--config', config]) == 1

    assert capsys.readouterr().err.startswith("error: Invalid value for config key 'boundary'")


def test_pme_needs_dirichlet(tmp_path, capsys):
    config = write_config(tmp_path, boundary={'kind': 'neumann'}, pme={'m': 2, 'tau_end': 0.1})

    assert main(['pme', '--config', config, '--out', str(tmp_path)]) == 1

    assert capsys.readouterr().err == 'error: porous-medium solver does not support neumann boundary conditions\n'


def test_mesh_info(tmp_path, capsys):
    config = write_config(tmp_path, domain={'kind': 'unit_square'}, mesh={'refinements': 2})

    assert main(['mesh-info', '--config', config, '--out', str(tmp_path)]) == 0

    lines = capsys.readouterr().out.splitlines()
    assert lines[:4] == ['dim=2', 'nodes=41', 'elements=64', 'h_max=0.25']
    assert 'conforming=True' in lines
    assert lines[-1] == str(tmp_path / 'fraclap.flm')
    assert fraclap.read_flm(lines[-1]).n_elements == 64


def test_unknown_key_is_reported(tmp_path, capsys):
    config = write_config(tmp_path, fractional={'s': 0.5, 'sigma': 1})

    assert main(['mesh-info', '--config', config]) == 1

    assert capsys.readouterr().err == "error: Unknown config key 'fractional.sigma'\n"


def test_two_dimensional_input_on_interval(tmp_path, capsys):
    config = write_config(tmp_path, input={'kind': 'sine_cosine'})

    assert main(['apply', '--config', config, '--out', str(tmp_path)]) == 1

    err = capsys.readouterr().err
    assert err == "error: Invalid value for config key 'input.kind': 'sine_cosine' (sine_cosine needs a 2D domain)\n"


def test_malformed_json(tmp_path, capsys):
    path = tmp_path / 'run.json'
    path.write_text('{"domain": ')

    assert main(['mesh-info', '--config', str(path)]) == 1

    err = capsys.readouterr().err
    assert err.startswith('error: Cannot parse config ')
    assert err.count('\n') == 1


def test_missing_file(tmp_path, capsys):
    assert main(['mesh-info', '--config', str(tmp_path / 'nope.json')]) == 1

    assert capsys.readouterr().err.startswith('error: ')


@pytest.mark.parametrize('argv', [[], ['apply'], ['solve', '--config', 'x.json']])
def test_usage_errors(argv):
    with pytest.raises(SystemExit) as info:
        main(argv)

    assert info.value.code == 2


def test_version(capsys):
    with pytest.raises(SystemExit) as info:
        main(['--version'])

    assert info.value.code == 0
    assert capsys.readouterr().out == f'fraclap {fraclap.__version__}\n'
