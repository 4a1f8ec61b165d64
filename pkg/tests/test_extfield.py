import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from pydantic import TypeAdapter, ValidationError

from extfield import (
    ExternalFieldModel,
    PlaneWaveField,
    RampSchedule,
    SuperposedField,
    UniformStaticField,
    ZeroField,
    faraday,
    potential,
    ramp,
    shell_quadrature,
    surface_average_faraday,
    surface_average_potential,
)
from minkowski import lower
from particle import ParticleState

WAVE = PlaneWaveField(amplitude=0.7, wavevector=(0.0, 0.6, 0.8), polarization=(1.0, 0.0, 0.0))
STATIC = UniformStaticField(electric=(0.3, -1.0, 2.0), magnetic=(1.5, 0.2, -0.7))
MOVING_STATE = ParticleState(0.4, [0.4, 0.2, -0.1, 0.3], [1.25, 0.0, 0.75, 0.0])


def _tensor_from_potential(model, r, step=1e-5):
    """F_{mu nu} = d_mu A_nu - d_nu A_mu by central differences of the covariant potential."""
    grad = np.empty((4, 4))
    for mu in range(4):
        shift = np.zeros(4)
        shift[mu] = step
        grad[mu] = (lower(potential(model, r + shift)) - lower(potential(model, r - shift))) / (2.0 * step)
    return grad - grad.T


@pytest.mark.parametrize("model", [STATIC, WAVE, SuperposedField(components=[STATIC, WAVE])])
def test_tensor_is_the_curl_of_the_potential(model):
    r = np.array([0.3, 0.5, -1.2, 0.7])
    assert np.allclose(faraday(model, r).matrix, _tensor_from_potential(model, r), atol=1e-8)


def test_zero_field():
    r = np.array([1.0, 2.0, 3.0, 4.0])
    assert faraday(ZeroField(), r).is_zero()
    assert not np.any(potential(ZeroField(), r))


def test_uniform_field_potential_gauge():
    r = np.array([0.0, 1.0, 0.0, 0.0])
    model = UniformStaticField(electric=(2.0, 0.0, 0.0), magnetic=(0.0, 0.0, 4.0))
    assert np.allclose(potential(model, r), [-2.0, 0.0, 2.0, 0.0])


def test_superposition_is_linear():
    r = np.array([0.9, -0.4, 0.2, 1.1])
    combined = SuperposedField(components=[STATIC, WAVE])
    assert np.allclose(faraday(combined, r).matrix, faraday(STATIC, r).matrix + faraday(WAVE, r).matrix)
    assert np.allclose(potential(combined, r), potential(STATIC, r) + potential(WAVE, r))
    assert not combined.is_uniform
    assert SuperposedField(components=[STATIC, ZeroField()]).is_uniform


def test_scaled_fields():
    assert WAVE.scaled(2.0).amplitude == pytest.approx(1.4)
    assert STATIC.scaled(-1.0).magnetic == (-1.5, -0.2, 0.7)
    r = np.array([0.3, 0.1, 0.2, 0.3])
    combined = SuperposedField(components=[STATIC, WAVE])
    assert np.allclose(faraday(combined.scaled(3.0), r).matrix, 3.0 * faraday(combined, r).matrix)


@pytest.mark.parametrize(
    "fields",
    [
        {"amplitude": 1.0, "wavevector": (0.0, 0.0, 1.0), "polarization": (0.0, 0.0, 1.0)},
        {"amplitude": 1.0, "wavevector": (0.0, 0.0, 1.0), "polarization": (0.5, 0.0, 0.0)},
        {"amplitude": 1.0, "wavevector": (0.0, 0.0, 0.0), "polarization": (1.0, 0.0, 0.0)},
    ],
)
def test_invalid_plane_waves_are_rejected(fields):
    with pytest.raises(ValidationError):
        PlaneWaveField(**fields)


def test_field_models_parse_by_kind():
    adapter = TypeAdapter(ExternalFieldModel)
    model = adapter.validate_python(
        {"kind": "superposed", "components": [{"kind": "uniform_static", "magnetic": [0, 0, 1]}, {"kind": "zero"}]}
    )
    assert isinstance(model, SuperposedField)
    with pytest.raises(ValidationError):
        adapter.validate_python({"kind": "dipole"})
    with pytest.raises(ValidationError):
        adapter.validate_python({"kind": "zero", "strength": 1.0})


@pytest.mark.parametrize("order", [4, 8, 12])
def test_quadrature_integrates_low_moments(order):
    directions, weights = shell_quadrature(order)
    assert weights.sum() == pytest.approx(1.0, abs=1e-14)
    assert np.allclose(weights @ directions, 0.0, atol=1e-14)
    assert weights @ directions[:, 2] ** 2 == pytest.approx(1.0 / 3.0, abs=1e-14)
    assert weights @ (directions[:, 0] ** 2 * directions[:, 1] ** 2) == pytest.approx(1.0 / 15.0, abs=1e-14)
    assert np.allclose(np.linalg.norm(directions, axis=1), 1.0)


def test_quadrature_is_cached_and_read_only():
    directions, weights = shell_quadrature(8)
    assert shell_quadrature(8)[0] is directions
    with pytest.raises(ValueError):
        weights[0] = 1.0
    with pytest.raises(ValueError):
        shell_quadrature(1)


def test_uniform_field_average_is_the_local_field():
    averaged = surface_average_faraday(STATIC, MOVING_STATE, 0.5)
    assert np.max(np.abs(averaged.matrix - STATIC.faraday(MOVING_STATE.r).matrix)) <= 1e-13


def test_uniform_field_quadrature_average_is_exact():
    # the same average through the quadrature path, not the uniform short-cut
    combined = SuperposedField(components=[STATIC, PlaneWaveField(amplitude=0.0, wavevector=(0, 0, 1), polarization=(1, 0, 0))])
    averaged = surface_average_faraday(combined, MOVING_STATE, 0.5)
    assert np.max(np.abs(averaged.matrix - STATIC.faraday(MOVING_STATE.r).matrix)) <= 1e-13


@pytest.mark.parametrize("k_sigma", [0.1, 0.5, 2.0])
def test_plane_wave_rest_frame_average_is_sinc(k_sigma):
    sigma = 0.5
    k = k_sigma / sigma
    wave = PlaneWaveField(amplitude=1.0, wavevector=(0.0, 0.0, k), polarization=(0.0, 1.0, 0.0))
    state = ParticleState(0.3, [0.3, 0.0, 0.0, 0.0], [1.0, 0.0, 0.0, 0.0])
    sinc = math.sin(k_sigma) / k_sigma
    assert np.allclose(surface_average_potential(wave, state, sigma), sinc * wave.potential(state.r), atol=1e-8)
    assert np.allclose(surface_average_faraday(wave, state, sigma).matrix, sinc * wave.faraday(state.r).matrix, atol=1e-8)


def test_averaging_commutes_with_differentiation():
    step = 1e-5
    grad = np.empty((4, 4))
    for mu in range(4):
        shift = np.zeros(4)
        shift[mu] = step
        plus = ParticleState(MOVING_STATE.s, MOVING_STATE.r + shift, MOVING_STATE.u)
        minus = ParticleState(MOVING_STATE.s, MOVING_STATE.r - shift, MOVING_STATE.u)
        grad[mu] = (lower(surface_average_potential(WAVE, plus, 0.3)) - lower(surface_average_potential(WAVE, minus, 0.3))) / (
            2.0 * step
        )
    averaged = surface_average_faraday(WAVE, MOVING_STATE, 0.3)
    assert np.max(np.abs(averaged.matrix - (grad - grad.T))) <= 1e-7


def test_average_tolerates_slightly_non_unit_stage_velocity():
    u = np.array([1.25, 0.0, 0.75, 0.0]) * (1.0 + 1e-7)
    state = ParticleState(0.4, MOVING_STATE.r, u)
    averaged = surface_average_faraday(WAVE, state, 0.3)
    assert np.allclose(averaged.matrix, surface_average_faraday(WAVE, MOVING_STATE, 0.3).matrix, atol=1e-9)


def test_ramp_hard_step():
    schedule = RampSchedule(s0=1.0)
    assert schedule.is_hard_step
    assert ramp(schedule, 0.999) == 0.0
    assert ramp(schedule, 1.0) == 1.0


def test_ramp_smooth_profile():
    schedule = RampSchedule(s0=0.0, width=2.0)
    assert ramp(schedule, 0.0) == 0.0
    assert ramp(schedule, 1.0) == pytest.approx(0.5)
    assert ramp(schedule, 2.0) == 1.0
    assert ramp(schedule, 5.0) == 1.0


def test_ramp_turn_off_mirrors_turn_on():
    schedule = RampSchedule(s0=0.0, width=1.0, s_off=4.0)
    assert ramp(schedule, 3.0) == 1.0
    assert ramp(schedule, 4.5) == pytest.approx(1.0 - ramp(schedule, 0.5))
    assert ramp(schedule, 5.0) == 0.0
    with pytest.raises(ValidationError):
        RampSchedule(s0=0.0, width=1.0, s_off=0.5)


@given(st.floats(-10.0, 10.0), st.floats(-5.0, 5.0), st.floats(0.0, 3.0))
def test_ramp_stays_in_unit_interval(s, s0, width):
    assert 0.0 <= ramp(RampSchedule(s0=s0, width=width), s) <= 1.0


@given(st.floats(-1.0, 3.0), st.floats(1e-6, 1.0))
def test_ramp_is_monotone(s, ds):
    schedule = RampSchedule(s0=0.0, width=2.0)
    assert ramp(schedule, s + ds) >= ramp(schedule, s)
