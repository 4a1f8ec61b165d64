"""
Method-of-steps integration of the radiation-reaction delay equation

    m0 du/ds = q (ramp(s) F_ext_avg + F_self) u,    dr/ds = u

with classic fixed-step RK4. Every retarded lookup lands in the already
accepted history because h <= sigma / kappa and s_ret is of order sigma, so each
step is an ordinary ODE step over known past data. RK stages read the history
as of the last accepted step; stage predictions are never appended.
"""

from __future__ import annotations

import logging
import math
import time
from dataclasses import asdict, dataclass, field
from typing import TYPE_CHECKING, Callable, Optional

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, field_validator

from errors import ConfigInvalid, DriftExceeded, QueryBeyondHistory, StepTooLarge
from extfield import DEFAULT_QUAD_ORDER, RampSchedule, ramp, surface_average_faraday
from history import SAMPLE_TOLERANCE, HistorySample, TrajectoryHistory
from minkowski import FaradayTensor, FourVector, dot, raise_index
from particle import ParticleState, ShellParticle, validate_state
from retardation import DelaySolution
from selffield import self_faraday_at

if TYPE_CHECKING:
    from scenario import Scenario

logger = logging.getLogger(__name__)

RUNAWAY_GROWTH_RATIO = 10.0


class IntegratorConfig(BaseModel):
    model_config = ConfigDict(frozen=True, extra="forbid")

    step: float = Field(gt=0)
    kappa: float = Field(default=2.0, ge=2.0)
    s_end: float
    renormalize_u: bool = False
    # accepted samples are gated at SAMPLE_TOLERANCE by the history
    drift_tolerance: float = Field(default=1e-8, gt=0, le=SAMPLE_TOLERANCE)
    quad_order: int = Field(default=DEFAULT_QUAD_ORDER, ge=2)

    @field_validator("step", "s_end")
    @classmethod
    def _finite(cls, value: float) -> float:
        if not math.isfinite(value):
            raise ValueError("must be finite")
        return value

    def max_step(self, sigma: float) -> float:
        return sigma / self.kappa


@dataclass(frozen=True)
class RhsEvaluation:
    dr: FourVector
    du: FourVector
    self_force: FourVector
    ext_force: FourVector
    ramp: float
    delay: DelaySolution


@dataclass(frozen=True)
class StepDiagnostics:
    s: float
    u_norm_residual: float
    s_ret: float
    delay_residual: float
    self_force_norm: float
    ext_force_norm: float
    gamma: float
    accel_norm: float
    ramp: float


@dataclass
class RunSummary:
    scenario: str
    steps: int
    s_start: float
    s_end: float
    final_s: float
    final_r: list[float]
    final_u: list[float]
    lorentzian: bool
    coupling: float
    ramp_hard_step: bool
    max_u_norm_residual: float = 0.0
    final_u_norm_residual: float = 0.0
    max_delay_residual: float = 0.0
    min_s_ret: float = math.inf
    max_s_ret: float = 0.0
    max_self_force_norm: float = 0.0
    max_ext_force_norm: float = 0.0
    max_accel_norm: float = 0.0
    gamma_max_driven: float = 1.0
    gamma_end: float = 1.0
    accel_growth_ratio: float = 0.0
    runaway_suspected: bool = False
    renormalized_steps: int = 0
    wall_time_s: float = 0.0

    def to_dict(self) -> dict:
        return asdict(self)


@dataclass
class IntegrationResult:
    history: TrajectoryHistory
    diagnostics: list[StepDiagnostics] = field(default_factory=list)
    summary: Optional[RunSummary] = None


def evaluate_rhs(
    s: float,
    r: FourVector,
    u: FourVector,
    history: TrajectoryHistory,
    particle: ShellParticle,
    field_model,
    schedule: RampSchedule,
    quad_order: int = DEFAULT_QUAD_ORDER,
    guess: Optional[float] = None,
) -> RhsEvaluation:
    weight = ramp(schedule, s)
    if weight > 0.0:
        f_ext = surface_average_faraday(field_model, ParticleState(s, r, u), particle.sigma, quad_order)
    else:
        f_ext = FaradayTensor.zero()
    evaluation = self_faraday_at(history, r, s, particle, guess)
    ext_force = raise_index(particle.charge * weight * f_ext.contract(u))
    self_force = raise_index(particle.charge * evaluation.F_self.contract(u))
    du = (ext_force + self_force) / particle.rest_mass
    return RhsEvaluation(u.copy(), du, self_force, ext_force, weight, evaluation.delay)


def rhs(
    state: ParticleState,
    history: TrajectoryHistory,
    particle: ShellParticle,
    field_model,
    schedule: RampSchedule,
    quad_order: int = DEFAULT_QUAD_ORDER,
) -> tuple[FourVector, FourVector]:
    """(dr/ds, du/ds) at `state`, reading the retarded data from `history`."""
    evaluation = evaluate_rhs(state.s, state.r, state.u, history, particle, field_model, schedule, quad_order)
    return evaluation.dr, evaluation.du


def _diagnostics(s: float, u: FourVector, evaluation: RhsEvaluation) -> StepDiagnostics:
    return StepDiagnostics(
        s=s,
        u_norm_residual=abs(dot(u, u) - 1.0),
        s_ret=evaluation.delay.s_ret,
        delay_residual=evaluation.delay.residual,
        self_force_norm=float(np.linalg.norm(evaluation.self_force)),
        ext_force_norm=float(np.linalg.norm(evaluation.ext_force)),
        gamma=float(u[0]),
        accel_norm=float(np.linalg.norm(evaluation.du)),
        ramp=evaluation.ramp,
    )


def integrate(
    scenario: "Scenario",
    on_step: Optional[Callable[[StepDiagnostics], None]] = None,
) -> IntegrationResult:
    """
    Integrate a scenario from its initial state (inertial before s0) to s_end.

    Raises StepTooLarge when a retarded lookup would need unaccepted history and
    DriftExceeded (carrying the partial result) when |u.u - 1| leaves the
    configured tolerance.
    """
    started = time.perf_counter()
    particle = scenario.particle
    config = scenario.integrator
    schedule = scenario.resolved_ramp()
    field_model = scenario.field
    state = scenario.initial_particle_state()

    h = config.step
    if h > config.max_step(particle.sigma):
        raise StepTooLarge(f"step {h} exceeds sigma/kappa = {config.max_step(particle.sigma)}")
    report = validate_state(state, 1e-10)
    if not report:
        raise ConfigInvalid(f"initial state is not admissible: {report.reason}")
    if schedule.is_hard_step:
        logger.warning(f"scenario {scenario.name}: external field switched on as a hard step at s={schedule.s0}")

    s0 = state.s
    n_steps = int(math.ceil((config.s_end - s0) / h - 1e-9))
    history = TrajectoryHistory(s0, state.r, state.u)
    result = IntegrationResult(history)
    summary = RunSummary(
        scenario=scenario.name,
        steps=0,
        s_start=s0,
        s_end=config.s_end,
        final_s=s0,
        final_r=state.r.tolist(),
        final_u=state.u.tolist(),
        lorentzian=particle.is_lorentzian,
        coupling=particle.coupling,
        ramp_hard_step=schedule.is_hard_step,
        gamma_max_driven=state.gamma,
        gamma_end=state.gamma,
    )
    result.summary = summary
    logger.info(f"integrating {scenario.name}: {n_steps} steps of h={h} from s={s0} (sigma={particle.sigma})")

    def stage(s: float, r: FourVector, u: FourVector, guess: float) -> RhsEvaluation:
        try:
            return evaluate_rhs(s, r, u, history, particle, field_model, schedule, config.quad_order, guess)
        except QueryBeyondHistory as exc:
            raise StepTooLarge(f"retarded lookup at s={s} needs unaccepted history: {exc}") from exc

    r, u = state.r, state.u
    current = stage(s0, r, u, particle.sigma)
    accel_norms: list[float] = []
    for n in range(n_steps):
        s = s0 + n * h
        s_next = s0 + (n + 1) * h
        guess = current.delay.s_ret
        k1 = current
        k2 = stage(s + 0.5 * h, r + 0.5 * h * k1.dr, u + 0.5 * h * k1.du, guess)
        k3 = stage(s + 0.5 * h, r + 0.5 * h * k2.dr, u + 0.5 * h * k2.du, guess)
        k4 = stage(s_next, r + h * k3.dr, u + h * k3.du, guess)
        r = r + (h / 6.0) * (k1.dr + 2.0 * k2.dr + 2.0 * k3.dr + k4.dr)
        u = u + (h / 6.0) * (k1.du + 2.0 * k2.du + 2.0 * k3.du + k4.du)
        if config.renormalize_u:
            norm = math.sqrt(dot(u, u))
            logger.debug(f"s={s_next}: projecting u back to unit norm (|u| = {norm!r})")
            u = u / norm
            summary.renormalized_steps += 1

        residual = abs(dot(u, u) - 1.0)
        if not residual <= config.drift_tolerance:
            summary.wall_time_s = time.perf_counter() - started
            raise DriftExceeded(
                f"|u.u - 1| = {residual:.3e} at s={s_next} exceeds drift tolerance {config.drift_tolerance:.1e}",
                result=result,
            )

        # the RHS at the accepted state gives the stored a and the next k1
        current = stage(s_next, r, u, guess)
        history.append(HistorySample(s_next, r, u, current.du))
        step = _diagnostics(s_next, u, current)
        result.diagnostics.append(step)
        accel_norms.append(step.accel_norm)
        _update_summary(summary, step, s_next, r, u)
        if on_step is not None:
            on_step(step)

    _finish_summary(summary, accel_norms)
    summary.wall_time_s = time.perf_counter() - started
    logger.info(
        f"finished {scenario.name}: {summary.steps} steps, max |u.u - 1| = {summary.max_u_norm_residual:.3e}, "
        f"gamma_end = {summary.gamma_end:.6f}"
    )
    return result


def _update_summary(summary: RunSummary, step: StepDiagnostics, s: float, r: FourVector, u: FourVector) -> None:
    summary.steps += 1
    summary.final_s = s
    summary.final_r = r.tolist()
    summary.final_u = u.tolist()
    summary.final_u_norm_residual = step.u_norm_residual
    summary.max_u_norm_residual = max(summary.max_u_norm_residual, step.u_norm_residual)
    summary.max_delay_residual = max(summary.max_delay_residual, step.delay_residual)
    summary.min_s_ret = min(summary.min_s_ret, step.s_ret)
    summary.max_s_ret = max(summary.max_s_ret, step.s_ret)
    summary.max_self_force_norm = max(summary.max_self_force_norm, step.self_force_norm)
    summary.max_ext_force_norm = max(summary.max_ext_force_norm, step.ext_force_norm)
    summary.max_accel_norm = max(summary.max_accel_norm, step.accel_norm)
    if step.ramp > 0.0:
        summary.gamma_max_driven = max(summary.gamma_max_driven, step.gamma)
    summary.gamma_end = step.gamma


def _finish_summary(summary: RunSummary, accel_norms: list[float]) -> None:
    if summary.steps == 0:
        summary.min_s_ret = 0.0
    if len(accel_norms) < 10:
        return
    split = int(0.9 * len(accel_norms))
    early = max(accel_norms[:split])
    late = max(accel_norms[split:])
    if early > 0.0:
        summary.accel_growth_ratio = late / early
        summary.runaway_suspected = summary.accel_growth_ratio > RUNAWAY_GROWTH_RATIO
        if summary.runaway_suspected:
            logger.warning(
                f"{summary.scenario}: |a| grew by {summary.accel_growth_ratio:.3g} over the last tenth of the run"
            )
