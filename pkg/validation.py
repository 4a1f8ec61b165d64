"""
Machine-verifiable checks behind `cli.py validate`.

Every check returns (passed, detail). A check that raises is reported as a
failure carrying the exception, so the suite always completes. Mutations patch
the engine for the duration of a suite run to show that the checks can fail.
"""

from __future__ import annotations

import contextlib
import logging
import math
import tempfile
import time
from dataclasses import dataclass
from pathlib import Path
from typing import Callable, Iterator, Optional, Sequence

import numpy as np

import selffield
from asymptotics import compare_exact_vs_lad, em_mass, fit_sigma_sweep, lad_force
from errors import QueryBeyondHistory, RadiationReactionError
from extfield import PlaneWaveField, UniformStaticField, surface_average_faraday, surface_average_potential
from history import TrajectoryHistory
from integrator import integrate
from minkowski import boost_from_velocity, dot, from_beta, lower
from outputs import write_trajectory
from particle import ParticleState, ShellParticle
from retardation import proper_delay
from scenario import Scenario, parse_scenario
from selffield import self_faraday, self_potential, self_tensor
from worldlines import CircularWorldline, HyperbolicWorldline, sampled_history

logger = logging.getLogger(__name__)

DELAY_ROOT_CASES = 1000
NORM_CONSERVATION_FULL_STEPS = 100_000

CheckFunction = Callable[[], tuple[bool, str]]

CHECKS: dict[str, CheckFunction] = {}


def check(name: str) -> Callable[[CheckFunction], CheckFunction]:
    def register(func: CheckFunction) -> CheckFunction:
        CHECKS[name] = func
        return func

    return register


@dataclass(frozen=True)
class CheckResult:
    name: str
    passed: bool
    detail: str
    seconds: float


def gyration_scenario(
    name: str = "gyration",
    sigma: float = 0.05,
    step: float = 0.01,
    s_end: float = 10.0,
    charge: float = 0.01,
    magnetic: float = 100.0,
) -> Scenario:
    """Weakly coupled shell gyrating in a uniform B along z, smoothly switched on."""
    return parse_scenario(
        {
            "name": name,
            "particle": {"rest_mass": 1.0, "charge": charge, "sigma": sigma},
            "initial_state": {"s0": 0.0, "momentum_per_mass": [0.5, 0.0, 0.0]},
            "field": {"kind": "uniform_static", "magnetic": [0.0, 0.0, magnetic]},
            "integrator": {"step": step, "s_end": s_end},
        }
    )


def _static_history(s_end: float = 6.0, step: float = 0.05) -> TrajectoryHistory:
    return TrajectoryHistory.inertial(0.0, np.zeros(4), np.array([1.0, 0.0, 0.0, 0.0]), s_end, step)


def _coulomb(q: float, sigma: float, radius: float) -> float:
    return q / max(radius, sigma)


@check("coulomb")
def check_coulomb() -> tuple[bool, str]:
    particle = ShellParticle(rest_mass=1.0, charge=1.0, sigma=0.5)
    history = _static_history()
    worst = 0.0
    radii = list(np.linspace(0.55, 5.0, 50)) + list(np.linspace(0.0, 0.45, 20))
    for i, radius in enumerate(radii):
        direction = np.array([math.cos(0.37 * i), math.sin(0.37 * i), 0.3])
        point = np.concatenate(([3.0], radius * direction / np.linalg.norm(direction)))
        expected = _coulomb(1.0, 0.5, radius)
        phi = self_potential(history, point, particle)[0]
        worst = max(worst, abs(phi - expected) / expected)
    return worst <= 1e-10, f"max relative error {worst:.2e} over {len(radii)} radii"


@check("boost-covariance")
def check_boost_covariance() -> tuple[bool, str]:
    particle = ShellParticle(rest_mass=1.0, charge=1.0, sigma=0.5)
    u = from_beta([0.6, 0.0, 0.0])
    to_rest = boost_from_velocity(u)
    to_lab = to_rest.inverse()
    moving = TrajectoryHistory.inertial(0.0, np.zeros(4), u, 8.0, 0.05)
    rng = np.random.default_rng(7)
    worst = 0.0
    for _ in range(100):
        direction = rng.normal(size=3)
        direction /= np.linalg.norm(direction)
        radius = rng.uniform(0.0, 4.0)
        rest_point = np.concatenate(([3.0], radius * direction))
        expected = to_lab.matrix @ np.array([_coulomb(1.0, 0.5, radius), 0.0, 0.0, 0.0])
        got = self_potential(moving, to_lab.matrix @ rest_point, particle)
        worst = max(worst, float(np.max(np.abs(got - expected))) / float(np.max(np.abs(expected))))
    return worst <= 1e-8, f"max relative error {worst:.2e} at 100 points (beta = 0.6)"


@check("inertial-null")
def check_inertial_null() -> tuple[bool, str]:
    scenario = parse_scenario(
        {
            "name": "inertial",
            "particle": {"rest_mass": 1.0, "charge": 1.0, "sigma": 0.1},
            "initial_state": {"four_velocity": [1.25, 0.75, 0.0, 0.0]},
            "integrator": {"step": 0.05, "s_end": 500.0},
        }
    )
    result = integrate(scenario)
    max_accel = max(d.accel_norm for d in result.diagnostics)
    max_drift = max(d.u_norm_residual for d in result.diagnostics)
    passed = max_accel == 0.0 and max_drift == 0.0
    return passed, f"max |du/ds| = {max_accel!r}, max |u.u - 1| = {max_drift!r} over {len(result.diagnostics)} steps"


@check("delay-root")
def check_delay_root() -> tuple[bool, str]:
    rng = np.random.default_rng(11)
    worst = 0.0
    for _ in range(DELAY_ROOT_CASES):
        w = rng.uniform(-2.0, 2.0, size=3)
        u = np.concatenate(([math.sqrt(1.0 + w @ w)], w))
        sigma = float(rng.uniform(0.01, 1.0))
        history = TrajectoryHistory.inertial(0.0, np.zeros(4), u, 4.0 * sigma, 0.25 * sigma)
        solution = proper_delay(history, 3.0 * sigma, sigma)
        worst = max(worst, abs(solution.s_ret - sigma) / sigma)
    curve = HyperbolicWorldline(1.0)
    history = sampled_history(curve, 4.0, 0.001)
    hyper_worst = 0.0
    for s in np.linspace(1.0, 4.0, 20):
        for sigma in (0.05, 0.2, 0.5):
            hyper_worst = max(hyper_worst, abs(proper_delay(history, s, sigma).s_ret - curve.delay(sigma)))
    passed = worst <= 1e-12 and hyper_worst <= 1e-10
    return passed, (
        f"inertial max relative error {worst:.2e} over {DELAY_ROOT_CASES} random cases, "
        f"hyperbolic max error {hyper_worst:.2e}"
    )


def _difference_oracle(worldline, s: float, s_emit: float, charge: float, step: float = 2e-5) -> np.ndarray:
    r = worldline.r(s)

    def ratio(sp: float) -> tuple[np.ndarray, float]:
        chord = r - worldline.r(sp)
        u = worldline.u(sp)
        n = np.outer(lower(u), lower(chord)) - np.outer(lower(chord), lower(u))
        d = dot(chord, u)
        return n / d, d

    upper, _ = ratio(s_emit + step)
    lower_, _ = ratio(s_emit - step)
    _, d = ratio(s_emit)
    return -2.0 * charge / abs(d) * (upper - lower_) / (2.0 * step)


@check("self-tensor-oracle")
def check_self_tensor() -> tuple[bool, str]:
    rng = np.random.default_rng(5)
    worst = 0.0
    for curve in (HyperbolicWorldline(0.8), CircularWorldline(0.5, 1.0)):
        for _ in range(50):
            s = float(rng.uniform(1.0, 5.0))
            s_emit = s - float(rng.uniform(0.1, 0.3))
            chord = curve.r(s) - curve.r(s_emit)
            tensor, _ = self_tensor(chord, curve.u(s_emit), curve.a(s_emit), 1.0, 0.1)
            oracle = _difference_oracle(curve, s, s_emit, 1.0)
            worst = max(worst, float(np.max(np.abs(tensor.matrix - oracle)) / np.max(np.abs(oracle))))
    return worst <= 1e-6, f"max relative deviation {worst:.2e} over 100 states"


@check("norm-conservation")
def check_norm_conservation() -> tuple[bool, str]:
    result = integrate(gyration_scenario(s_end=100.0))
    drift = max(d.u_norm_residual for d in result.diagnostics)
    return drift <= 1e-8, (
        f"max |u.u - 1| = {drift:.2e} over {len(result.diagnostics)} steps "
        f"(shortened run, the full-length check takes {NORM_CONSERVATION_FULL_STEPS} steps)"
    )


@check("em-mass")
def check_em_mass() -> tuple[bool, str]:
    for k in range(10):
        sigma = 0.7 * 10.0**-k
        particle = ShellParticle(rest_mass=1.0, charge=1.0, sigma=sigma)
        half = ShellParticle(rest_mass=1.0, charge=1.0, sigma=0.5 * sigma)
        if em_mass(half) != 2.0 * em_mass(particle):
            return False, f"em_mass does not double exactly at sigma = {sigma!r}"
    try:
        ShellParticle(rest_mass=1.0, charge=1.0, sigma=0.0)
    except ValueError:
        return True, "doubling exact over 10 decades, sigma = 0 rejected"
    return False, "sigma = 0 was accepted"


@check("surface-average")
def check_surface_average() -> tuple[bool, str]:
    state = ParticleState(0.3, [0.3, 0.1, -0.2, 0.4], [1.25, 0.0, 0.75, 0.0])
    uniform = UniformStaticField(electric=(0.3, -1.0, 2.0), magnetic=(1.5, 0.2, -0.7))
    averaged = surface_average_faraday(uniform, state, 0.5)
    uniform_error = float(np.max(np.abs(averaged.matrix - uniform.faraday(state.r).matrix)))

    sigma, k = 0.5, 1.0
    wave = PlaneWaveField(amplitude=1.0, wavevector=(0.0, 0.0, k), polarization=(1.0, 0.0, 0.0))
    rest = ParticleState(0.3, [0.3, 0.0, 0.0, 0.0], [1.0, 0.0, 0.0, 0.0])
    sinc = math.sin(k * sigma) / (k * sigma)
    potential_error = float(np.max(np.abs(surface_average_potential(wave, rest, sigma) - sinc * wave.potential(rest.r))))
    tensor_error = float(
        np.max(np.abs(surface_average_faraday(wave, rest, sigma).matrix - sinc * wave.faraday(rest.r).matrix))
    )
    passed = uniform_error <= 1e-13 and potential_error <= 1e-8 and tensor_error <= 1e-8
    return passed, (
        f"uniform {uniform_error:.1e}, plane-wave potential {potential_error:.1e}, tensor {tensor_error:.1e}"
    )


@check("hyperbolic-schott-null")
def check_schott_null() -> tuple[bool, str]:
    particle = ShellParticle(rest_mass=1.0, charge=1.0, sigma=0.1)
    worst = 0.0
    for g in (0.1, 1.0, 3.0):
        curve = HyperbolicWorldline(g)
        for s in np.linspace(-2.0, 2.0, 9):
            u = curve.u(s)
            schott = lad_force(u, curve.a(s), curve.adot(s), particle).schott_term
            scale = (2.0 / 3.0) * g * g * float(np.linalg.norm(u))
            worst = max(worst, float(np.linalg.norm(schott)) / scale)
    return worst <= 1e-10, f"max ||g|| / ((2/3) q^2 g^2 ||u||) = {worst:.1e}"


@check("lad-asymptotics")
def check_lad_asymptotics() -> tuple[bool, str]:
    curve = CircularWorldline(0.5, 1.0)
    history = sampled_history(curve, 2.0, 0.001)
    samples = np.linspace(1.0, 1.5, 6)
    reports = [
        compare_exact_vs_lad(history, samples, ShellParticle(rest_mass=1.0, charge=1.0, sigma=sigma))
        for sigma in (0.04, 0.02, 0.01)
    ]
    fit = fit_sigma_sweep(reports)
    means = [r.mean_deviation for r in reports]
    decreasing = all(b < a for a, b in zip(means, means[1:]))
    passed = decreasing and fit.exponent >= 0.95 and means[-1] <= 0.1
    table = ", ".join(f"{r.sigma}: {m:.3e}" for r, m in zip(reports, means))
    return passed, f"mean deviation {table}; fitted exponent {fit.exponent:.3f}"


@check("history-coverage")
def check_history_coverage() -> tuple[bool, str]:
    particle = ShellParticle(rest_mass=1.0, charge=1.0, sigma=0.1)
    history = _static_history(s_end=1.0, step=0.05)
    try:
        self_faraday(history, 1.5, particle)
    except QueryBeyondHistory as e:
        return True, f"QueryBeyondHistory surfaced: {e}"
    return False, "a lookup past the last accepted sample was served"


@check("determinism")
def check_determinism() -> tuple[bool, str]:
    scenario = gyration_scenario(s_end=1.0)
    blobs = []
    with tempfile.TemporaryDirectory() as tmp:
        for attempt in range(2):
            path = write_trajectory(Path(tmp) / f"trajectory-{attempt}.csv", integrate(scenario).history)
            blobs.append(path.read_bytes())
    return blobs[0] == blobs[1], f"two runs gave {'identical' if blobs[0] == blobs[1] else 'different'} trajectories"


@contextlib.contextmanager
def _flip_self_sign() -> Iterator[None]:
    original = selffield.SELF_FIELD_PREFACTOR
    selffield.SELF_FIELD_PREFACTOR = -original
    try:
        yield
    finally:
        selffield.SELF_FIELD_PREFACTOR = original


MUTATIONS: dict[str, Callable[[], contextlib.AbstractContextManager]] = {
    "flip-self-sign": _flip_self_sign,
}


def run_checks(names: Optional[Sequence[str]] = None, mutation: Optional[str] = None) -> list[CheckResult]:
    selected = list(names) if names else list(CHECKS)
    unknown = [n for n in selected if n not in CHECKS]
    if unknown:
        raise ValueError(f"unknown checks: {', '.join(unknown)}")
    if mutation is not None and mutation not in MUTATIONS:
        raise ValueError(f"unknown mutation {mutation!r}, expected one of {', '.join(MUTATIONS)}")

    context = MUTATIONS[mutation]() if mutation else contextlib.nullcontext()
    results = []
    with context:
        if mutation:
            logger.warning(f"running the suite with mutation {mutation}")
        for name in selected:
            started = time.perf_counter()
            try:
                passed, detail = CHECKS[name]()
            except (RadiationReactionError, ValueError, ArithmeticError) as e:
                passed, detail = False, f"{type(e).__name__}: {e}"
            elapsed = time.perf_counter() - started
            logger.info(f"check {name}: {'pass' if passed else 'FAIL'} ({elapsed:.2f}s)")
            results.append(CheckResult(name, bool(passed), detail, elapsed))
    return results


def format_table(results: Sequence[CheckResult]) -> str:
    width = max((len(r.name) for r in results), default=5)
    lines = [f"{'check':<{width}}  result  time     detail"]
    for r in results:
        lines.append(f"{r.name:<{width}}  {'pass' if r.passed else 'FAIL':<6}  {r.seconds:6.2f}s  {r.detail}")
    passed = sum(r.passed for r in results)
    lines.append(f"{passed}/{len(results)} checks passed")
    return "\n".join(lines)
