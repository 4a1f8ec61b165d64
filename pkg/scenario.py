"""
Scenario configuration: everything a run needs, loaded from YAML and validated
with pydantic. Unknown keys are rejected at every level.
"""

from __future__ import annotations

import logging
import math
from pathlib import Path
from typing import Any, Optional, Union

import yaml
from pydantic import BaseModel, ConfigDict, Field, ValidationError, field_validator, model_validator

from errors import ConfigInvalid
from extfield import ExternalFieldModel, RampSchedule, ZeroField
from integrator import IntegratorConfig
from minkowski import from_spatial_velocity
from particle import ParticleState, ShellParticle, validate_state

logger = logging.getLogger(__name__)

INITIAL_STATE_TOLERANCE = 1e-10
SWEEP_PARAMETERS = ("sigma", "h", "amplitude")

FourTuple = tuple[float, float, float, float]


class InitialStateConfig(BaseModel):
    """COS state at s0. Give either the unit four_velocity or its spatial part."""

    model_config = ConfigDict(frozen=True, extra="forbid")

    s0: float = 0.0
    position: FourTuple = (0.0, 0.0, 0.0, 0.0)
    four_velocity: Optional[FourTuple] = None
    momentum_per_mass: Optional[tuple[float, float, float]] = None

    @model_validator(mode="after")
    def _one_velocity(self) -> "InitialStateConfig":
        if (self.four_velocity is None) == (self.momentum_per_mass is None):
            raise ValueError("give exactly one of four_velocity or momentum_per_mass")
        values = [self.s0, *self.position, *(self.four_velocity or ()), *(self.momentum_per_mass or ())]
        if not all(math.isfinite(v) for v in values):
            raise ValueError("initial state must be finite")
        return self

    def to_state(self) -> ParticleState:
        if self.four_velocity is not None:
            u = self.four_velocity
        else:
            u = from_spatial_velocity(self.momentum_per_mass)
        return ParticleState(self.s0, self.position, u)


class OutputSettings(BaseModel):
    model_config = ConfigDict(frozen=True, extra="forbid")

    directory: Optional[str] = None
    trajectory: bool = True
    diagnostics: bool = True
    comparison: bool = False
    comparison_samples: int = Field(default=20, ge=1)
    # grid "ct,x0:x1:n,y,z" sampled after the run
    field_map: Optional[str] = None


class Scenario(BaseModel):
    model_config = ConfigDict(frozen=True, extra="forbid")

    name: str = Field(default="scenario", pattern=r"^[A-Za-z0-9_.-]+$")
    particle: ShellParticle
    initial_state: InitialStateConfig
    field: ExternalFieldModel = Field(default_factory=ZeroField)
    ramp: Optional[RampSchedule] = None
    integrator: IntegratorConfig
    outputs: OutputSettings = Field(default_factory=OutputSettings)

    @model_validator(mode="after")
    def _consistent(self) -> "Scenario":
        report = validate_state(self.initial_state.to_state(), INITIAL_STATE_TOLERANCE)
        if not report:
            raise ValueError(f"initial_state: {report.reason}")
        bound = self.integrator.max_step(self.particle.sigma)
        if self.integrator.step > bound:
            raise ValueError(
                f"integrator.step = {self.integrator.step} exceeds the step bound "
                f"sigma/kappa = {self.particle.sigma}/{self.integrator.kappa} = {bound}"
            )
        if self.integrator.s_end <= self.initial_state.s0:
            raise ValueError(f"integrator.s_end = {self.integrator.s_end} must follow initial_state.s0")
        if self.ramp is not None and self.ramp.s0 < self.initial_state.s0:
            raise ValueError(f"ramp.s0 = {self.ramp.s0} precedes initial_state.s0 = {self.initial_state.s0}")
        return self

    def initial_particle_state(self) -> ParticleState:
        return self.initial_state.to_state()

    def resolved_ramp(self) -> RampSchedule:
        """The configured ramp, or a smooth turn-on of width sigma starting at s0."""
        if self.ramp is not None:
            return self.ramp
        return RampSchedule(s0=self.initial_state.s0, width=self.particle.sigma)

    def output_directory(self, base: Union[str, Path]) -> Path:
        if self.outputs.directory is not None:
            return Path(self.outputs.directory)
        return Path(base) / self.name


def _describe(error: ValidationError) -> str:
    parts = []
    for item in error.errors():
        location = ".".join(str(p) for p in item["loc"]) or "scenario"
        parts.append(f"{location}: {item['msg']}")
    return "; ".join(parts)


def parse_scenario(data: Any) -> Scenario:
    if not isinstance(data, dict):
        raise ConfigInvalid(f"a scenario must be a mapping, got {type(data).__name__}")
    try:
        return Scenario.model_validate(data)
    except ValidationError as e:
        raise ConfigInvalid(_describe(e)) from e


def load_scenario(path: Union[str, Path]) -> Scenario:
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as e:
        raise ConfigInvalid(f"cannot read scenario file {path}: {e}") from e
    try:
        data = yaml.safe_load(text)
    except yaml.YAMLError as e:
        raise ConfigInvalid(f"{path} is not valid YAML: {e}") from e
    scenario = parse_scenario(data)
    logger.info(f"loaded scenario {scenario.name} from {path}")
    return scenario


def dump_scenario(scenario: Scenario) -> str:
    return yaml.safe_dump(scenario.model_dump(mode="json"), sort_keys=False)


def with_parameter(scenario: Scenario, parameter: str, value: float) -> Scenario:
    """
    Copy of `scenario` with one sweep parameter replaced: sigma (charge radius,
    and the mass radius unless the particle is Lorentzian), h (step) or
    amplitude (multiplier of the configured external field).
    """
    data = scenario.model_dump()
    if parameter == "sigma":
        data["particle"]["sigma"] = value
        if not scenario.particle.is_lorentzian:
            data["particle"]["mass_radius"] = value
    elif parameter == "h":
        data["integrator"]["step"] = value
    elif parameter == "amplitude":
        data["field"] = scenario.field.scaled(value).model_dump()
    else:
        raise ConfigInvalid(f"unknown sweep parameter {parameter!r}, expected one of {', '.join(SWEEP_PARAMETERS)}")
    data["name"] = f"{scenario.name}-{parameter}-{value!r}"
    return parse_scenario(data)
