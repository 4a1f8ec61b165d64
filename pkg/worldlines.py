"""
Closed-form worldlines used as oracles by the validation suite and the tests.
Each gives r, u, a = du/ds and adot = d^2u/ds^2 at proper time s.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from history import HistorySample, TrajectoryHistory
from minkowski import FourVector, as_four_vector


class Worldline:
    def r(self, s: float) -> FourVector:
        raise NotImplementedError

    def u(self, s: float) -> FourVector:
        raise NotImplementedError

    def a(self, s: float) -> FourVector:
        raise NotImplementedError

    def adot(self, s: float) -> FourVector:
        raise NotImplementedError


@dataclass(frozen=True)
class InertialWorldline(Worldline):
    velocity: tuple[float, float, float, float]
    origin: tuple[float, float, float, float] = (0.0, 0.0, 0.0, 0.0)

    def r(self, s: float) -> FourVector:
        return as_four_vector(self.origin) + s * as_four_vector(self.velocity)

    def u(self, s: float) -> FourVector:
        return as_four_vector(self.velocity)

    def a(self, s: float) -> FourVector:
        return np.zeros(4)

    def adot(self, s: float) -> FourVector:
        return np.zeros(4)


@dataclass(frozen=True)
class HyperbolicWorldline(Worldline):
    """Uniform proper acceleration g along x, at rest at x = 1/g when s = 0."""

    g: float

    def r(self, s: float) -> FourVector:
        gs = self.g * s
        return np.array([math.sinh(gs), math.cosh(gs), 0.0, 0.0]) / self.g

    def u(self, s: float) -> FourVector:
        gs = self.g * s
        return np.array([math.cosh(gs), math.sinh(gs), 0.0, 0.0])

    def a(self, s: float) -> FourVector:
        gs = self.g * s
        return self.g * np.array([math.sinh(gs), math.cosh(gs), 0.0, 0.0])

    def adot(self, s: float) -> FourVector:
        return self.g**2 * self.u(s)

    def delay(self, sigma: float) -> float:
        """Exact worldline delay: (2/g) asinh(g sigma / 2)."""
        return 2.0 / self.g * math.asinh(0.5 * self.g * sigma)


@dataclass(frozen=True)
class CircularWorldline(Worldline):
    """Uniform circular motion of radius R and lab angular frequency omega in the xy plane."""

    radius: float
    omega: float

    @property
    def gamma(self) -> float:
        return 1.0 / math.sqrt(1.0 - (self.radius * self.omega) ** 2)

    def _angle(self, s: float) -> float:
        return self.omega * self.gamma * s

    def r(self, s: float) -> FourVector:
        th = self._angle(s)
        return np.array([self.gamma * s, self.radius * math.cos(th), self.radius * math.sin(th), 0.0])

    def u(self, s: float) -> FourVector:
        th, v = self._angle(s), self.radius * self.omega * self.gamma
        return np.array([self.gamma, -v * math.sin(th), v * math.cos(th), 0.0])

    def a(self, s: float) -> FourVector:
        th, k = self._angle(s), self.radius * (self.omega * self.gamma) ** 2
        return np.array([0.0, -k * math.cos(th), -k * math.sin(th), 0.0])

    def adot(self, s: float) -> FourVector:
        th, k = self._angle(s), self.radius * (self.omega * self.gamma) ** 3
        return np.array([0.0, k * math.sin(th), -k * math.cos(th), 0.0])


def sampled_history(worldline: Worldline, s_end: float, step: float, s0: float = 0.0) -> TrajectoryHistory:
    """
    History holding the worldline on the grid s0 + k*step. Before s0 it continues
    inertially with u(s0), so only queries well after s0 follow the curve exactly.
    """
    history = TrajectoryHistory(s0, worldline.r(s0), worldline.u(s0))
    count = int(math.floor((s_end - s0) / step + 1e-9))
    for k in range(1, count + 1):
        s = s0 + k * step
        history.append(HistorySample(s, worldline.r(s), worldline.u(s), worldline.a(s)))
    return history
