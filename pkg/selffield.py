"""
Exact retarded self-field of the shell.

With s' = s - s_ret, R~ = r(s) - r(s'), D = R~.u(s') and N_{mu k} = u_mu(s') R~_k - u_k(s') R~_mu,
the surface-averaged self Faraday tensor is

    F_self_{mu k} = -(2q / |D|) d/ds' { N_{mu k} / D }

and the s'-derivative is expanded analytically (dR~/ds' = -u(s'), dD/ds' = R~.a(s') - 1):

    d/ds' { N / D } = (a(s') ^ R~) / D - N (R~.a(s') - 1) / D^2

The derivative is taken first and s' substituted afterwards.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass
from typing import Optional

import numpy as np

from errors import DegenerateDenominator
from history import TrajectoryHistory
from minkowski import FaradayTensor, FourVector, dot, lower, raise_index
from particle import ParticleState, ShellParticle
from retardation import (
    DelaySolution,
    classify_field_point,
    fieldpoint_retarded_root,
    simultaneity_root,
    worldline_delay,
)

logger = logging.getLogger(__name__)

# overall factor of the self tensor; the validation suite flips its sign as a mutation check
SELF_FIELD_PREFACTOR = -2.0

# components of R~ - D u(s') below this many ulps of the operands are roundoff
_PARALLEL_CHOP_ULPS = 256.0


@dataclass(frozen=True)
class RetardedState:
    s: float
    r: FourVector
    u: FourVector
    a: FourVector


@dataclass(frozen=True)
class SelfFieldEvaluation:
    F_self: FaradayTensor
    delay: DelaySolution
    retarded_state: RetardedState
    denominator: float


@dataclass(frozen=True)
class SelfPotentialEvaluation:
    potential: FourVector
    branch: str
    s1: float
    rho2: float
    delay: DelaySolution


def self_tensor(
    chord: FourVector,
    u_ret: FourVector,
    a_ret: FourVector,
    charge: float,
    sigma: float,
    position_scale: float = 0.0,
) -> tuple[FaradayTensor, float]:
    """
    Analytic expansion of the self tensor from the chord R~ and the retarded
    u, a (all contravariant). Returns (F_self, D).

    N is built from the part of R~ orthogonal to u(s') (u ^ u = 0), with
    roundoff-level components removed, so an inertial retarded state gives
    the literal zero tensor.
    """
    d = dot(chord, u_ret)
    if abs(d) < 1e-10 * sigma:
        raise DegenerateDenominator(f"|R~.u(s')| = {abs(d):.3e} is below 1e-10 sigma")
    transverse = chord - d * u_ret
    eps = np.finfo(float).eps
    scale = max(position_scale, float(np.max(np.abs(chord)))) + abs(d) * float(np.max(np.abs(u_ret)))
    transverse[np.abs(transverse) <= _PARALLEL_CHOP_ULPS * eps * scale] = 0.0

    u_l, a_l, chord_l, transverse_l = lower(u_ret), lower(a_ret), lower(chord), lower(transverse)
    n = np.outer(u_l, transverse_l) - np.outer(transverse_l, u_l)
    a_wedge = np.outer(a_l, chord_l) - np.outer(chord_l, a_l)
    bracket = a_wedge / d - n * ((dot(chord, a_ret) - 1.0) / (d * d))
    return FaradayTensor((SELF_FIELD_PREFACTOR * charge / abs(d)) * bracket), d


def self_faraday_at(
    history: TrajectoryHistory,
    r: FourVector,
    s: float,
    particle: ShellParticle,
    guess: Optional[float] = None,
) -> SelfFieldEvaluation:
    """Self tensor for a COS position r at proper time s (stored or an RK stage)."""
    delay = worldline_delay(history, r, s, particle.sigma, guess)
    r_ret, u_ret, a_ret = history.eval(delay.s_emit)
    chord = r - r_ret
    scale = max(float(np.max(np.abs(r))), float(np.max(np.abs(r_ret))))
    tensor, d = self_tensor(chord, u_ret, a_ret, particle.charge, particle.sigma, scale)
    return SelfFieldEvaluation(tensor, delay, RetardedState(delay.s_emit, r_ret, u_ret, a_ret), d)


def self_faraday(
    history: TrajectoryHistory,
    s: float,
    particle: ShellParticle,
    guess: Optional[float] = None,
) -> SelfFieldEvaluation:
    r, _, _ = history.eval(s)
    return self_faraday_at(history, r, s, particle, guess)


def self_force(state: ParticleState, evaluation: SelfFieldEvaluation, particle: ShellParticle) -> FourVector:
    """Contravariant self 4-force q F_self^mu_k u^k; orthogonal to u by antisymmetry."""
    return raise_index(particle.charge * evaluation.F_self.contract(state.u))


def evaluate_self_potential(
    history: TrajectoryHistory,
    r: FourVector,
    particle: ShellParticle,
) -> SelfPotentialEvaluation:
    s1 = simultaneity_root(history, r)
    r1, _, _ = history.eval(s1)
    branch, rho2 = classify_field_point(r - r1, particle.sigma)
    delay = fieldpoint_retarded_root(history, r, rho2, s1=s1, sigma=particle.sigma)
    r_ret, u_ret, _ = history.eval(delay.s_emit)
    potential = particle.charge * u_ret / dot(r - r_ret, u_ret)
    return SelfPotentialEvaluation(potential, branch, s1, rho2, delay)


def self_potential(history: TrajectoryHistory, r: FourVector, particle: ShellParticle) -> FourVector:
    """Contravariant self 4-potential q u(s') / (R^.u(s')) at the field point r."""
    return evaluate_self_potential(history, r, particle).potential
