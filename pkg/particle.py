"""
The spherical-shell particle model and the instantaneous state of its
center of symmetry (COS).
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, field_validator, model_validator

from minkowski import FourVector, as_four_vector, dot

DEFAULT_STATE_TOLERANCE = 1e-8


class ShellParticle(BaseModel):
    """
    Charge q spread on a rest-frame sphere of radius sigma around the COS.

    mass_radius is either sigma (mass and charge share the same support) or 0
    (Lorentzian particle: point mass, finite charge). Both obey the same
    equation of motion; the flag is kept for reporting. sigma = 0 is rejected:
    the point-charge limit does not exist.
    """

    model_config = ConfigDict(frozen=True, extra="forbid")

    rest_mass: float = Field(gt=0)
    charge: float
    sigma: float = Field(gt=0)
    mass_radius: Optional[float] = None

    @field_validator("rest_mass", "charge", "sigma")
    @classmethod
    def _finite(cls, value: float) -> float:
        if not math.isfinite(value):
            raise ValueError("must be finite")
        return value

    @field_validator("charge")
    @classmethod
    def _charged(cls, value: float) -> float:
        if value == 0.0:
            raise ValueError("charge must be non-zero")
        return value

    @model_validator(mode="before")
    @classmethod
    def _default_mass_radius(cls, data):
        if isinstance(data, dict) and data.get("mass_radius") is None:
            data = {**data, "mass_radius": data.get("sigma")}
        return data

    @model_validator(mode="after")
    def _mass_support(self) -> "ShellParticle":
        if self.mass_radius not in (0.0, self.sigma):
            raise ValueError(
                f"mass_radius must equal sigma ({self.sigma}) or 0 (Lorentzian), got {self.mass_radius}"
            )
        return self

    @property
    def is_lorentzian(self) -> bool:
        return self.mass_radius == 0.0

    @property
    def coupling(self) -> float:
        """q^2 / (m0 sigma): EM mass over rest mass."""
        return self.charge**2 / (self.rest_mass * self.sigma)


@dataclass(frozen=True)
class ParticleState:
    s: float
    r: FourVector
    u: FourVector

    def __post_init__(self):
        object.__setattr__(self, "s", float(self.s))
        object.__setattr__(self, "r", as_four_vector(self.r))
        object.__setattr__(self, "u", as_four_vector(self.u))

    @property
    def gamma(self) -> float:
        return float(self.u[0])


@dataclass(frozen=True)
class StateReport:
    valid: bool
    residual: float
    reason: Optional[str] = None

    def __bool__(self) -> bool:
        return self.valid


def validate_state(state: ParticleState, tol: float = DEFAULT_STATE_TOLERANCE) -> StateReport:
    """Check u.u = 1 within tol and u0 >= 1; the report carries |u.u - 1|."""
    residual = abs(dot(state.u, state.u) - 1.0)
    if not np.isfinite(residual):
        return StateReport(False, residual, "non-finite 4-velocity")
    if residual > tol:
        return StateReport(False, residual, f"|u.u - 1| = {residual:.3e} exceeds {tol:.1e}")
    if state.u[0] < 1.0 - tol:
        return StateReport(False, residual, f"u0 = {state.u[0]} is below 1")
    return StateReport(True, residual)
