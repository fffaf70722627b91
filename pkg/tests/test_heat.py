import pytest

import math

import numpy as np

from fraclap import errors
from fraclap import FeSpace, HeatSolver, cfl_limit, l2_norm, run_heat, steady_state, theta_step


def discrete_sine_eigenvalue(h):
    return 12 / h**2 * (1 - math.cos(math.pi * h)) / (2 + math.cos(math.pi * h))


@pytest.mark.parametrize('theta', [0.0, 0.5, 1.0])
def test_eigenvector_decays_by_amplification_factor(theta, interval_16, dirichlet):
    space = FeSpace(interval_16, dirichlet)
    w0 = np.sin(np.pi * space.dof_coordinates[:, 0])
    mu = discrete_sine_eigenvalue(1 / 16)
    dt = 1e-4
    factor = (1 - (1 - theta) * dt * mu) / (1 + theta * dt * mu)

    run = run_heat(space, w0, theta, dt, 3)

    for j, w in enumerate(run.snapshots):
        np.testing.assert_allclose(w, factor**j * w0, atol=1e-10)


def test_run_metadata(interval_16, dirichlet):
    space = FeSpace(interval_16, dirichlet)

    run = run_heat(space, np.ones(15), 1.0, 0.01, 4)

    assert run.n_steps == 4
    np.testing.assert_allclose(run.times, [0.0, 0.01, 0.02, 0.03, 0.04])
    assert run.theta == 1.0
    assert run.dt == 0.01


def test_zero_steps(interval_16, dirichlet):
    space = FeSpace(interval_16, dirichlet)

    run = run_heat(space, np.ones(15), 1.0, 0.01, 0)

    assert run.n_steps == 0
    assert run.snapshots[0].tolist() == [1.0] * 15


def test_neumann_conserves_mass(interval_16, neumann):
    space = FeSpace(interval_16, neumann)
    u0 = np.exp(space.dof_coordinates[:, 0])
    ones = np.ones(space.n_dofs)
    mass = ones @ space.mass_matrix @ u0

    run = run_heat(space, u0, 0.5, 0.01, 20)

    for w in run.snapshots:
        assert ones @ space.mass_matrix @ w == pytest.approx(mass, rel=1e-10)


@pytest.mark.parametrize('bc', ['dirichlet', 'robin'])
def test_norm_decreases(bc, interval_16, request):
    space = FeSpace(interval_16, request.getfixturevalue(bc))
    u0 = 1.0 + space.dof_coordinates[:, 0]

    run = run_heat(space, u0, 1.0, 0.005, 10)
    norms = [l2_norm(space, w) for w in run.snapshots]

    assert all(later < earlier for earlier, later in zip(norms, norms[1:]))


def test_neumann_tends_to_mean(interval_16, neumann):
    space = FeSpace(interval_16, neumann)
    u0 = space.dof_coordinates[:, 0] ** 2

    run = run_heat(space, u0, 1.0, 0.1, 200)

    np.testing.assert_allclose(run.snapshots[-1], steady_state(space, u0), atol=1e-8)
    assert steady_state(space, u0)[0] == pytest.approx(1 / 3, rel=0.01)


def test_steady_state_is_zero_for_dirichlet(interval_16, dirichlet):
    space = FeSpace(interval_16, dirichlet)

    assert steady_state(space, np.ones(15)).tolist() == [0.0] * 15


def test_cfl_limit(interval_16, neumann):
    space = FeSpace(interval_16, neumann)

    assert cfl_limit(space, 0.0) == pytest.approx(2 / (12 * 16**2), rel=1e-12)
    assert cfl_limit(space, 0.25) == pytest.approx(4 / (12 * 16**2), rel=1e-12)
    assert cfl_limit(space, 0.5) == math.inf
    assert cfl_limit(space, 1.0) == math.inf


def test_explicit_step_above_cfl(interval_16, neumann):
    space = FeSpace(interval_16, neumann)
    limit = cfl_limit(space, 0.0)

    with pytest.raises(errors.CflViolation(2 * limit, limit)):
        HeatSolver(space, 0.0, 2 * limit)


def test_unchecked_explicit_step(interval_16, neumann):
    space = FeSpace(interval_16, neumann)

    solver = HeatSolver(space, 0.0, 1.0, check_cfl=False)

    assert solver.dt == 1.0


@pytest.mark.parametrize('theta', [-0.1, 1.5, math.nan])
def test_invalid_theta(theta, interval_16, neumann):
    with pytest.raises(errors.OutOfRange):
        HeatSolver(FeSpace(interval_16, neumann), theta, 0.01)


@pytest.mark.parametrize('dt', [0.0, -1e-3])
def test_invalid_dt(dt, interval_16, neumann):
    with pytest.raises(errors.OutOfRange):
        HeatSolver(FeSpace(interval_16, neumann), 1.0, dt)


def test_theta_step_matches_solver(interval_16, robin):
    space = FeSpace(interval_16, robin)
    w0 = np.cos(space.dof_coordinates[:, 0])
    solver = HeatSolver(space, 0.5, 0.02)

    stepped = theta_step(space.mass_matrix, space.stiffness_matrix, 0.5, 0.02, w0)

    np.testing.assert_allclose(stepped, solver.step(w0), atol=1e-12)
    assert solver.iterations > 0


def test_theta_step_dimensions(interval_16, neumann):
    space = FeSpace(interval_16, neumann)

    with pytest.raises(errors.DimensionMismatch):
        theta_step(space.mass_matrix, space.stiffness_matrix, 1.0, 0.01, np.zeros(3))


def test_iterate_dimensions(interval_16, neumann):
    solver = HeatSolver(FeSpace(interval_16, neumann), 1.0, 0.01)

    with pytest.raises(errors.DimensionMismatch('HeatSolver.iterate', 17, 4)):
        next(solver.iterate(np.zeros(4)))


@pytest.mark.parametrize('theta', [0.5, 1.0])
def test_run_is_linear(theta, interval_16, robin):
    space = FeSpace(interval_16, robin)
    rng = np.random.default_rng(7)
    u, v = rng.standard_normal((2, space.n_dofs))

    combined = run_heat(space, 2.0 * u - 3.0 * v, theta, 0.01, 5)
    run_u = run_heat(space, u, theta, 0.01, 5)
    run_v = run_heat(space, v, theta, 0.01, 5)

    for w, wu, wv in zip(combined.snapshots, run_u.snapshots, run_v.snapshots):
        np.testing.assert_allclose(w, 2.0 * wu - 3.0 * wv, atol=1e-9)
