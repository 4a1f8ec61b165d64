import logging
import math

import numpy as np
import pytest
from pydantic import ValidationError

from errors import ConfigInvalid, DriftExceeded, StepTooLarge
from extfield import RampSchedule, UniformStaticField, ZeroField
from history import SAMPLE_TOLERANCE, TrajectoryHistory
from integrator import IntegratorConfig, RunSummary, _finish_summary, integrate, rhs
from minkowski import dot, from_spatial_velocity
from particle import ParticleState, ShellParticle
from worldlines import CircularWorldline, sampled_history

ALWAYS_ON = RampSchedule(s0=-1.0)


def _summary(**fields):
    base = dict(
        scenario="t",
        steps=0,
        s_start=0.0,
        s_end=1.0,
        final_s=0.0,
        final_r=[0.0] * 4,
        final_u=[1.0, 0.0, 0.0, 0.0],
        lorentzian=False,
        coupling=1.0,
        ramp_hard_step=False,
    )
    base.update(fields)
    return RunSummary(**base)


@pytest.mark.parametrize(
    "fields",
    [
        {"step": 0.0, "s_end": 1.0},
        {"step": -0.1, "s_end": 1.0},
        {"step": math.inf, "s_end": 1.0},
        {"step": 0.01, "s_end": math.nan},
        {"step": 0.01, "s_end": 1.0, "kappa": 1.5},
        {"step": 0.01, "s_end": 1.0, "quad_order": 1},
        {"step": 0.01, "s_end": 1.0, "order": 4},
    ],
)
def test_integrator_config_rejects(fields):
    with pytest.raises(ValidationError):
        IntegratorConfig(**fields)


def test_integrator_config_step_bound():
    config = IntegratorConfig(step=0.01, s_end=1.0, kappa=4.0)
    assert config.max_step(0.2) == pytest.approx(0.05)
    assert IntegratorConfig(step=0.01, s_end=1.0).kappa == 2.0


def test_rhs_vanishes_for_free_inertial_motion():
    particle = ShellParticle(rest_mass=1.0, charge=1.0, sigma=0.1)
    u = np.array([1.25, 0.0, 0.75, 0.0])
    history = TrajectoryHistory.inertial(0.0, np.zeros(4), u, 2.0, 0.05)
    dr, du = rhs(ParticleState(1.0, u, u), history, particle, ZeroField(), ALWAYS_ON)
    assert np.array_equal(dr, u)
    assert not np.any(du)


def test_rhs_reproduces_lorentz_force():
    particle = ShellParticle(rest_mass=1.0, charge=1e-4, sigma=0.05)
    u = from_spatial_velocity([0.5, 0.0, 0.0])
    history = TrajectoryHistory.inertial(0.0, np.zeros(4), u, 2.0, 0.01)
    field = UniformStaticField(magnetic=(0.0, 0.0, 1e4))
    _, du = rhs(ParticleState(1.0, u, u), history, particle, field, ALWAYS_ON)
    assert np.allclose(du, [0.0, 0.0, -0.5, 0.0], atol=1e-14)


def test_rhs_is_orthogonal_to_u():
    particle = ShellParticle(rest_mass=1.0, charge=0.5, sigma=0.05)
    history = sampled_history(CircularWorldline(0.5, 1.0), 3.0, 0.005)
    field = UniformStaticField(electric=(0.2, 0.0, 0.1), magnetic=(0.0, 1.0, 3.0))
    for s in (1.0, 2.2, 2.9):
        r, u, _ = history.eval(s)
        _, du = rhs(ParticleState(s, r, u), history, particle, field, ALWAYS_ON)
        assert abs(dot(u, du)) <= 1e-12 * np.max(np.abs(du)) * u[0]


def test_ramp_zero_switches_off_the_external_force():
    particle = ShellParticle(rest_mass=1.0, charge=1e-4, sigma=0.05)
    u = from_spatial_velocity([0.5, 0.0, 0.0])
    history = TrajectoryHistory.inertial(0.0, np.zeros(4), u, 2.0, 0.01)
    field = UniformStaticField(magnetic=(0.0, 0.0, 1e4))
    _, du = rhs(ParticleState(1.0, u, u), history, particle, field, RampSchedule(s0=5.0))
    assert not np.any(du)


def test_free_particle_at_rest_moves_along_ct(make_scenario):
    result = integrate(make_scenario(integrator={"s_end": 10.0}))
    summary = result.summary
    assert summary.steps == 1000
    assert summary.final_s == 10.0
    assert np.allclose(summary.final_r, [10.0, 0.0, 0.0, 0.0], atol=1e-10)
    assert summary.final_u == [1.0, 0.0, 0.0, 0.0]
    assert summary.max_accel_norm == 0.0


def test_moving_free_particle_keeps_exact_velocity(make_scenario):
    scenario = make_scenario(initial_state={"four_velocity": [1.25, 0.75, 0.0, 0.0]}, integrator={"step": 0.05, "s_end": 5.0})
    summary = integrate(scenario).summary
    assert summary.max_accel_norm == 0.0
    assert summary.max_u_norm_residual == 0.0
    assert summary.final_u == [1.25, 0.75, 0.0, 0.0]
    assert summary.final_r[1] == pytest.approx(3.75)
    assert summary.min_s_ret == pytest.approx(0.1)


def test_weak_coupling_gyration_matches_lorentz_orbit(make_scenario, caplog):
    with caplog.at_level(logging.WARNING, logger="integrator"):
        result = integrate(make_scenario("gyration", integrator={"s_end": 2.0 * math.pi}))
    assert "hard step" in caplog.text
    summary = result.summary
    s = summary.final_s
    w = 0.5
    assert summary.ramp_hard_step
    assert summary.coupling == pytest.approx(2e-7)
    assert np.allclose(summary.final_u, [math.sqrt(1.25), w * math.cos(s), -w * math.sin(s), 0.0], atol=1e-5)
    assert np.allclose(summary.final_r[1:], [w * math.sin(s), w * (math.cos(s) - 1.0), 0.0], atol=1e-5)
    assert summary.max_u_norm_residual <= 1e-8


def test_rk4_converges_at_fourth_order(make_scenario):
    finals = []
    for h in (0.05, 0.025, 0.0125):
        scenario = make_scenario(
            "gyration", particle={"sigma": 0.2}, ramp={"width": 1.0}, integrator={"step": h, "s_end": 2.0}
        )
        finals.append(np.array(integrate(scenario).summary.final_u))
    order = math.log2(np.linalg.norm(finals[0] - finals[1]) / np.linalg.norm(finals[1] - finals[2]))
    assert 3.5 <= order <= 4.3


def test_drift_exceeded_carries_partial_result(make_scenario):
    scenario = make_scenario("gyration", integrator={"drift_tolerance": 1e-18})
    with pytest.raises(DriftExceeded) as excinfo:
        integrate(scenario)
    result = excinfo.value.result
    assert result is not None
    assert result.summary.steps == 0
    assert len(result.history) == 1


def test_drift_tolerance_is_bounded_by_the_history_gate():
    assert IntegratorConfig(step=0.01, s_end=1.0, drift_tolerance=SAMPLE_TOLERANCE).drift_tolerance == SAMPLE_TOLERANCE
    with pytest.raises(ValidationError):
        IntegratorConfig(step=0.01, s_end=1.0, drift_tolerance=1e-2)


def test_strong_field_drift_at_the_loosest_tolerance_is_drift_exceeded(make_scenario):
    # omega h = 1: the first RK4 step leaves |u.u - 1| near 3e-3
    scenario = make_scenario(
        "gyration",
        field={"magnetic": [0.0, 0.0, 4e5]},
        integrator={"step": 0.025, "drift_tolerance": SAMPLE_TOLERANCE},
    )
    with pytest.raises(DriftExceeded) as excinfo:
        integrate(scenario)
    assert excinfo.value.result.summary.steps == 0


def test_inadmissible_initial_state_is_a_config_error(make_scenario):
    scenario = make_scenario()
    unchecked = scenario.model_copy(
        update={"initial_state": scenario.initial_state.model_copy(update={"four_velocity": (1.0, 0.5, 0.0, 0.0)})}
    )
    with pytest.raises(ConfigInvalid, match="not admissible"):
        integrate(unchecked)


def test_renormalized_velocity_stays_on_the_mass_shell(make_scenario):
    summary = integrate(make_scenario("gyration", integrator={"renormalize_u": True})).summary
    assert summary.renormalized_steps == summary.steps == 100
    assert summary.max_u_norm_residual <= 1e-14


def test_step_above_bound_is_refused(make_scenario):
    scenario = make_scenario()
    # model_copy skips validation, so the engine check is what fires
    unchecked = scenario.model_copy(update={"integrator": scenario.integrator.model_copy(update={"step": 0.2})})
    with pytest.raises(StepTooLarge):
        integrate(unchecked)


def test_on_step_sees_every_accepted_step(make_scenario):
    seen = []
    result = integrate(make_scenario("gyration"), on_step=seen.append)
    assert len(seen) == len(result.diagnostics) == result.summary.steps == 100
    assert [d.s for d in seen] == pytest.approx([0.01 * (n + 1) for n in range(100)])
    assert result.history.s_last == pytest.approx(1.0)
    assert all(d.ramp == 1.0 for d in seen)


def test_history_stores_the_accepted_acceleration(make_scenario):
    result = integrate(make_scenario("gyration"))
    sample = result.history.sample(50)
    assert sample.s == pytest.approx(0.5)
    assert abs(dot(sample.u, sample.a)) <= 1e-12
    assert np.linalg.norm(sample.a) == pytest.approx(0.5, rel=1e-4)


def test_acceleration_relaxes_after_the_field_turns_off(make_scenario):
    scenario = make_scenario(
        "gyration",
        particle={"charge": 0.01},
        field={"magnetic": [0.0, 0.0, 100.0]},
        ramp={"s0": 0.0, "width": 0.5, "s_off": 2.0},
        integrator={"s_end": 4.0},
    )
    result = integrate(scenario)
    driven = max(d.accel_norm for d in result.diagnostics if d.ramp == 1.0)
    quiet = [d.accel_norm for d in result.diagnostics if d.s >= 2.5 + 20 * 0.05]
    assert quiet
    assert max(quiet) <= 1e-3 * driven
    assert not result.summary.runaway_suspected
    assert result.summary.gamma_end < result.summary.gamma_max_driven


def test_runaway_flag_for_late_growth(caplog):
    summary = _summary(steps=100)
    with caplog.at_level(logging.WARNING, logger="integrator"):
        _finish_summary(summary, [1.0] * 90 + [100.0] * 10)
    assert summary.accel_growth_ratio == pytest.approx(100.0)
    assert summary.runaway_suspected
    assert "grew" in caplog.text


def test_no_runaway_flag_for_steady_motion():
    summary = _summary(steps=100)
    _finish_summary(summary, [1.0] * 100)
    assert summary.accel_growth_ratio == 1.0
    assert not summary.runaway_suspected


def test_short_runs_skip_the_growth_check():
    summary = _summary()
    _finish_summary(summary, [])
    assert summary.min_s_ret == 0.0
    assert summary.accel_growth_ratio == 0.0
