import copy

import numpy as np
import pytest

from particle import ShellParticle
from scenario import parse_scenario

FREE_PARTICLE = {
    "name": "free",
    "particle": {"rest_mass": 1.0, "charge": 1.0, "sigma": 0.1},
    "initial_state": {"four_velocity": [1.0, 0.0, 0.0, 0.0]},
    "field": {"kind": "zero"},
    "integrator": {"step": 0.01, "s_end": 1.0},
}

# q B / m0 = 1: proper gyrofrequency 1, coupling q^2 / (m0 sigma) = 2e-7
WEAK_GYRATION = {
    "name": "weak-gyration",
    "particle": {"rest_mass": 1.0, "charge": 1e-4, "sigma": 0.05},
    "initial_state": {"momentum_per_mass": [0.5, 0.0, 0.0]},
    "field": {"kind": "uniform_static", "magnetic": [0.0, 0.0, 1e4]},
    "ramp": {"s0": 0.0, "width": 0.0},
    "integrator": {"step": 0.01, "s_end": 1.0},
}


def _merge(base: dict, overrides: dict) -> dict:
    out = copy.deepcopy(base)
    for key, value in overrides.items():
        if isinstance(value, dict) and isinstance(out.get(key), dict):
            out[key] = _merge(out[key], value)
        else:
            out[key] = value
    return out


@pytest.fixture
def free_scenario_data():
    def build(**overrides):
        return _merge(FREE_PARTICLE, overrides)

    return build


@pytest.fixture
def gyration_scenario_data():
    def build(**overrides):
        return _merge(WEAK_GYRATION, overrides)

    return build


@pytest.fixture
def make_scenario():
    def build(base: str = "free", **overrides):
        data = FREE_PARTICLE if base == "free" else WEAK_GYRATION
        return parse_scenario(_merge(data, overrides))

    return build


@pytest.fixture
def unit_shell():
    return ShellParticle(rest_mass=1.0, charge=1.0, sigma=0.5)


@pytest.fixture
def rest_velocity():
    return np.array([1.0, 0.0, 0.0, 0.0])
