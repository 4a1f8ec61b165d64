"""
Prescribed external fields, the rest-frame shell average and the turn-on ramp.

Potentials are returned contravariant, A^mu = (Phi, A); tensors covariant with
F_{0i} = E_i and F_{ij} = -eps_ijk B_k.
"""

from __future__ import annotations

import functools
import logging
import math
from typing import Annotated, Literal, Optional, Union

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, field_validator, model_validator

from minkowski import FaradayTensor, FourVector, boost_from_velocity, dot, faraday_matrices
from particle import ParticleState

logger = logging.getLogger(__name__)

DEFAULT_QUAD_ORDER = 8

Vector3 = tuple[float, float, float]


class _FieldBase(BaseModel):
    model_config = ConfigDict(frozen=True, extra="forbid")

    @property
    def is_uniform(self) -> bool:
        return False

    def potential_many(self, points: np.ndarray) -> np.ndarray:
        raise NotImplementedError

    def faraday_many(self, points: np.ndarray) -> np.ndarray:
        raise NotImplementedError

    def scaled(self, factor: float) -> "_FieldBase":
        raise NotImplementedError

    def potential(self, r: FourVector) -> FourVector:
        return self.potential_many(np.atleast_2d(r))[0]

    def faraday(self, r: FourVector) -> FaradayTensor:
        return FaradayTensor(self.faraday_many(np.atleast_2d(r))[0])


class ZeroField(_FieldBase):
    kind: Literal["zero"] = "zero"

    @property
    def is_uniform(self) -> bool:
        return True

    def potential_many(self, points: np.ndarray) -> np.ndarray:
        return np.zeros((len(points), 4))

    def faraday_many(self, points: np.ndarray) -> np.ndarray:
        return np.zeros((len(points), 4, 4))

    def scaled(self, factor: float) -> "ZeroField":
        return self


class UniformStaticField(_FieldBase):
    """Constant E and B; symmetric gauge Phi = -E.x, A = B x x / 2."""

    kind: Literal["uniform_static"] = "uniform_static"
    electric: Vector3 = (0.0, 0.0, 0.0)
    magnetic: Vector3 = (0.0, 0.0, 0.0)

    @property
    def is_uniform(self) -> bool:
        return True

    def potential_many(self, points: np.ndarray) -> np.ndarray:
        x = points[:, 1:]
        out = np.empty((len(points), 4))
        out[:, 0] = -(x @ np.asarray(self.electric))
        out[:, 1:] = 0.5 * np.cross(np.asarray(self.magnetic), x)
        return out

    def faraday_many(self, points: np.ndarray) -> np.ndarray:
        n = len(points)
        return faraday_matrices(np.tile(self.electric, (n, 1)), np.tile(self.magnetic, (n, 1)))

    def scaled(self, factor: float) -> "UniformStaticField":
        return UniformStaticField(
            electric=tuple(factor * c for c in self.electric),
            magnetic=tuple(factor * c for c in self.magnetic),
        )


class PlaneWaveField(_FieldBase):
    """Transverse wave A = amplitude * polarization * cos(k.x - |k| ct), Phi = 0."""

    kind: Literal["plane_wave"] = "plane_wave"
    amplitude: float
    wavevector: Vector3
    polarization: Vector3

    @model_validator(mode="after")
    def _transverse_unit(self) -> "PlaneWaveField":
        k = np.asarray(self.wavevector)
        e = np.asarray(self.polarization)
        if not np.linalg.norm(k) > 0.0:
            raise ValueError("wavevector must be non-zero")
        if abs(np.linalg.norm(e) - 1.0) > 1e-12:
            raise ValueError(f"polarization must be a unit vector, |e| = {np.linalg.norm(e)}")
        if abs(k @ e) > 1e-12 * np.linalg.norm(k):
            raise ValueError("polarization must be perpendicular to the wavevector")
        return self

    @property
    def frequency(self) -> float:
        return float(np.linalg.norm(self.wavevector))

    def _phase(self, points: np.ndarray) -> np.ndarray:
        return points[:, 1:] @ np.asarray(self.wavevector) - self.frequency * points[:, 0]

    def potential_many(self, points: np.ndarray) -> np.ndarray:
        out = np.zeros((len(points), 4))
        out[:, 1:] = self.amplitude * np.outer(np.cos(self._phase(points)), self.polarization)
        return out

    def faraday_many(self, points: np.ndarray) -> np.ndarray:
        # E = -dA/dt, B = curl A
        sin_phase = np.sin(self._phase(points))
        e_dir = np.asarray(self.polarization)
        b_dir = np.cross(np.asarray(self.wavevector), e_dir)
        electric = -self.amplitude * self.frequency * np.outer(sin_phase, e_dir)
        magnetic = -self.amplitude * np.outer(sin_phase, b_dir)
        return faraday_matrices(electric, magnetic)

    def scaled(self, factor: float) -> "PlaneWaveField":
        return self.model_copy(update={"amplitude": factor * self.amplitude})


BasicField = Annotated[Union[ZeroField, UniformStaticField, PlaneWaveField], Field(discriminator="kind")]


class SuperposedField(_FieldBase):
    """Sum of basic fields."""

    kind: Literal["superposed"] = "superposed"
    components: list[BasicField] = Field(min_length=1)

    @property
    def is_uniform(self) -> bool:
        return all(c.is_uniform for c in self.components)

    def potential_many(self, points: np.ndarray) -> np.ndarray:
        return sum(c.potential_many(points) for c in self.components)

    def faraday_many(self, points: np.ndarray) -> np.ndarray:
        return sum(c.faraday_many(points) for c in self.components)

    def scaled(self, factor: float) -> "SuperposedField":
        return SuperposedField(components=[c.scaled(factor) for c in self.components])


ExternalFieldModel = Annotated[
    Union[ZeroField, UniformStaticField, PlaneWaveField, SuperposedField],
    Field(discriminator="kind"),
]


def potential(model: _FieldBase, r: FourVector) -> FourVector:
    return model.potential(r)


def faraday(model: _FieldBase, r: FourVector) -> FaradayTensor:
    return model.faraday(r)


@functools.lru_cache(maxsize=None)
def shell_quadrature(quad_order: int = DEFAULT_QUAD_ORDER) -> tuple[np.ndarray, np.ndarray]:
    """
    Unit directions and weights (summing to 1) on the sphere: Gauss-Legendre in
    cos(theta) times the trapezoid rule in phi, 2*quad_order nodes each.
    """
    if quad_order < 2:
        raise ValueError(f"quad_order must be at least 2, got {quad_order}")
    n = 2 * quad_order
    mu, w_mu = np.polynomial.legendre.leggauss(n)
    phi = 2.0 * np.pi * np.arange(n) / n
    sin_theta = np.sqrt(1.0 - mu**2)
    directions = np.stack(
        [
            np.outer(sin_theta, np.cos(phi)).ravel(),
            np.outer(sin_theta, np.sin(phi)).ravel(),
            np.repeat(mu, n),
        ],
        axis=1,
    )
    weights = np.repeat(0.5 * w_mu, n) / n
    directions.setflags(write=False)
    weights.setflags(write=False)
    return directions, weights


def shell_points(state: ParticleState, sigma: float, quad_order: int = DEFAULT_QUAD_ORDER) -> tuple[np.ndarray, np.ndarray]:
    """Lab-frame 4-positions of the rest-frame shell nodes around the COS, and their weights."""
    directions, weights = shell_quadrature(quad_order)
    offsets = np.zeros((len(directions), 4))
    offsets[:, 1:] = sigma * directions
    # RK stage velocities are unit only to O(h^2); the kernel needs the direction
    u_hat = state.u / np.sqrt(dot(state.u, state.u))
    to_lab = boost_from_velocity(u_hat).inverse().matrix
    return state.r + offsets @ to_lab.T, weights


def surface_average_faraday(
    model: _FieldBase,
    state: ParticleState,
    sigma: float,
    quad_order: int = DEFAULT_QUAD_ORDER,
) -> FaradayTensor:
    """Average of the lab-frame Faraday tensor over the shell in the instantaneous rest frame."""
    if model.is_uniform:
        # the average of a constant integrand is the integrand
        return model.faraday(state.r)
    points, weights = shell_points(state, sigma, quad_order)
    return FaradayTensor(np.tensordot(weights, model.faraday_many(points), axes=1))


def surface_average_potential(
    model: _FieldBase,
    state: ParticleState,
    sigma: float,
    quad_order: int = DEFAULT_QUAD_ORDER,
) -> FourVector:
    points, weights = shell_points(state, sigma, quad_order)
    return weights @ model.potential_many(points)


class RampSchedule(BaseModel):
    """
    Turn-on of the external field: 0 up to s0, quintic smoothstep over width,
    then 1. An optional s_off removes the field again with the mirrored profile.
    """

    model_config = ConfigDict(frozen=True, extra="forbid")

    s0: float = 0.0
    width: float = Field(default=0.0, ge=0.0)
    s_off: Optional[float] = None

    @field_validator("s0", "width")
    @classmethod
    def _finite(cls, value: float) -> float:
        if not math.isfinite(value):
            raise ValueError("must be finite")
        return value

    @model_validator(mode="after")
    def _off_after_on(self) -> "RampSchedule":
        if self.s_off is not None and self.s_off < self.s0 + self.width:
            raise ValueError(f"s_off={self.s_off} must not precede the end of the turn-on ({self.s0 + self.width})")
        return self

    @property
    def is_hard_step(self) -> bool:
        return self.width == 0.0


def _smoothstep(schedule: RampSchedule, s: float, start: float) -> float:
    if schedule.is_hard_step:
        return 1.0 if s >= start else 0.0
    t = (s - start) / schedule.width
    if t <= 0.0:
        return 0.0
    if t >= 1.0:
        return 1.0
    return t * t * t * (10.0 + t * (-15.0 + 6.0 * t))


def ramp(schedule: RampSchedule, s: float) -> float:
    value = _smoothstep(schedule, s, schedule.s0)
    if schedule.s_off is not None and value > 0.0:
        value *= 1.0 - _smoothstep(schedule, s, schedule.s_off)
    return value
