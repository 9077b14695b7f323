import numpy as np
import pytest
from scipy.optimize import brentq

from psmdyn.errors import ConfigurationError
from psmdyn.model_io import default_sinusoid, generate_sinusoid_trajectory
from psmdyn.simulate import (
    SimulationConfig,
    check_base_wrench,
    check_fd_forms,
    check_force_equivalence,
    check_mass_matrix,
    round_trip_errors,
    run_forward_dynamics,
    run_inverse_dynamics,
    simulate,
    validate,
)
from psmdyn.solver import ActuatorState, inverse_dynamics


def equilibrium(model):
    lo, hi = model.modules[0].reachable_range()
    g = lambda x: inverse_dynamics(model, ActuatorState([x], [0.0]), [0.0])[0]  # noqa: E731
    return brentq(g, lo + 0.05 * (hi - lo), hi - 0.05 * (hi - lo), xtol=1e-15)


def test_equilibrium_is_stationary(demo1):
    xe = equilibrium(demo1)
    res = simulate(demo1, [xe], [0.0], SimulationConfig("rk4", 1e-3, 0.5))
    assert np.max(np.abs(res.x - xe)) < 1e-9
    assert res.energy_drift() < 1e-9


def test_pendulum_swing_conserves_energy(demo1):
    xe = equilibrium(demo1)
    rk = simulate(demo1, [xe + 0.1], [0.0], SimulationConfig("rk4", 1e-3, 1.0))
    se = simulate(demo1, [xe + 0.1], [0.0], SimulationConfig("semieuler", 1e-3, 1.0))
    assert rk.relative_drift() < 1e-8
    # the symplectic first-order scheme keeps energy bounded but far looser
    assert rk.relative_drift() < se.relative_drift() < 1e-2
    # the swing crosses the equilibrium
    assert rk.x.min() < xe < rk.x.max()


def test_decimation_and_time_grid(demo1):
    res = simulate(demo1, [0.4], [0.0], SimulationConfig("rk4", 1e-3, 0.1, decimation=10))
    assert len(res.t) == 11
    np.testing.assert_allclose(np.diff(res.t), 0.01, rtol=1e-9)


def test_force_schedule(demo1):
    xe = equilibrium(demo1)
    const = simulate(demo1, [xe], [0.0], SimulationConfig("rk4", 1e-3, 0.05), forces=[500.0])
    func = simulate(demo1, [xe], [0.0], SimulationConfig("rk4", 1e-3, 0.05), forces=lambda t: [500.0])
    np.testing.assert_array_equal(const.x, func.x)
    assert const.x[-1, 0] > xe


def test_rk4_fourth_order_in_position(demo1):
    # global position error against a fine reference shrinks by ~16 per halving
    x0, v0 = [0.5], [0.0]
    ref = simulate(demo1, x0, v0, SimulationConfig("rk4", 1.25e-3, 0.4), energy=False).x[-1, 0]
    e1 = abs(simulate(demo1, x0, v0, SimulationConfig("rk4", 0.04, 0.4), energy=False).x[-1, 0] - ref)
    e2 = abs(simulate(demo1, x0, v0, SimulationConfig("rk4", 0.02, 0.4), energy=False).x[-1, 0] - ref)
    assert 12.0 < e1 / e2 < 20.0


def test_singular_mid_trajectory_reports_sample(demo1):
    # a large push drives the loop into its stretched singularity
    with pytest.raises(ConfigurationError) as info:
        simulate(demo1, [0.8], [0.0], SimulationConfig("rk4", 1e-3, 2.0), forces=[1e6])
    assert info.value.sample is not None and info.value.sample > 0
    assert info.value.module == 0
    assert "sample" in str(info.value)


def test_config_validation():
    with pytest.raises(ValueError):
        SimulationConfig("euler", 1e-3, 1.0)
    with pytest.raises(ValueError):
        SimulationConfig("rk4", -1e-3, 1.0)
    with pytest.raises(ValueError):
        SimulationConfig("rk4", 1e-3, 1.0, decimation=0)


def test_batch_round_trip(demo4):
    traj = generate_sinusoid_trajectory(demo4, default_sinusoid(demo4, duration=0.2))
    forces = run_inverse_dynamics(demo4, traj)
    assert forces.kind == "f"
    back = run_forward_dynamics(demo4, forces)
    np.testing.assert_allclose(back.xddot, traj.xddot, atol=1e-10)
    err, scale = round_trip_errors(demo4, traj)
    assert err.max() < 1e-9 and scale.min() >= 0


def test_batch_error_carries_sample(demo1):
    traj = generate_sinusoid_trajectory(demo1, default_sinusoid(demo1, duration=0.01))
    traj.x[5, 0] = -0.5
    with pytest.raises(ConfigurationError) as info:
        run_inverse_dynamics(demo1, traj)
    assert info.value.sample == 5


def test_individual_checks(demo4):
    rng = np.random.default_rng(3)
    assert check_force_equivalence(demo4, rng, 50).passed
    assert check_fd_forms(demo4, rng, 50).passed
    assert check_base_wrench(demo4, rng, 50).passed
    assert all(c.passed for c in check_mass_matrix(demo4, rng, 5))


def test_validate_report(demo1):
    rep = validate(demo1, name="demo_1dof", seed=1, samples=30, duration=0.5)
    assert rep.passed, rep.to_text()
    recs = rep.to_records()
    assert {r["name"] for r in recs} >= {"fd_id_round_trip", "cramer_vs_kmatrix", "fd_form_equivalence", "assembled_base_wrench"}
    assert all(r["passed"] for r in recs)
    assert "fd_id_round_trip" in rep.to_text()


def test_validate_is_seeded(demo1):
    a = validate(demo1, seed=7, samples=20, duration=0.1).to_records()
    b = validate(demo1, seed=7, samples=20, duration=0.1).to_records()
    assert a == b
