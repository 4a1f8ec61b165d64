"""
Short delay-time (LAD) form of the self-force and its comparison with the
exact retarded self-force along an integrated worldline.

    G^mu ~ -m_EM a^mu + g^mu,   g^mu = (2/3) q^2 [adot^mu - u^mu (u.adot)]

with m_EM = q^2 / sigma at leading order.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from typing import Iterable, Optional, Sequence

import numpy as np

from errors import DegenerateDenominator
from history import TrajectoryHistory
from minkowski import FourVector, dot
from particle import ParticleState, ShellParticle
from selffield import self_faraday, self_force

logger = logging.getLogger(__name__)

SCHOTT_COEFFICIENT = 2.0 / 3.0
DEFAULT_DEVIATION_FLOOR = 1e-300


def em_mass(particle: ShellParticle) -> float:
    """Leading-order electromagnetic mass q^2 / sigma."""
    return particle.charge**2 / particle.sigma


def em_mass_corrected(particle: ShellParticle, coordinate_delay: float, d_inv_gamma_ds: float) -> float:
    """
    EM mass with the retardation bracket kept:
    q^2 / sigma / [1 + (t - t') / 2 * d(1/gamma)/ds]^2.

    The caller picks where t - t' and d(1/gamma)/ds are evaluated; with either
    of them zero this is `em_mass`.
    """
    bracket = 1.0 + 0.5 * coordinate_delay * d_inv_gamma_ds
    if bracket == 0.0:
        raise DegenerateDenominator("EM mass bracket vanishes")
    return em_mass(particle) / (bracket * bracket)


@dataclass(frozen=True)
class LadEvaluation:
    em_mass_term: FourVector
    schott_term: FourVector
    total: FourVector
    epsilon: float = 0.0


def lad_force(
    u: FourVector,
    a: FourVector,
    adot: FourVector,
    particle: ShellParticle,
    epsilon: float = 0.0,
) -> LadEvaluation:
    """
    Contravariant LAD self-force for unit u, a = du/ds orthogonal to u and
    adot = d^2u/ds^2.
    """
    u = np.asarray(u, dtype=np.float64)
    a = np.asarray(a, dtype=np.float64)
    adot = np.asarray(adot, dtype=np.float64)
    em_term = -em_mass(particle) * a
    schott = SCHOTT_COEFFICIENT * particle.charge**2 * (adot - u * dot(u, adot))
    return LadEvaluation(em_term, schott, em_term + schott, epsilon)


def estimate_adot(history: TrajectoryHistory, s: float, step: Optional[float] = None) -> FourVector:
    """Central difference of the stored acceleration, at the grid spacing by default."""
    h = step if step is not None else history.spacing_near(s)
    _, _, a_plus = history.eval(s + h)
    _, _, a_minus = history.eval(s - h)
    return (a_plus - a_minus) / (2.0 * h)


@dataclass(frozen=True)
class ComparisonRow:
    s: float
    epsilon: float
    exact_force_norm: float
    lad_force_norm: float
    deviation: float


@dataclass(frozen=True)
class PowerLawFit:
    """deviation ~ prefactor * x^exponent, fitted in log-log space."""

    exponent: float
    prefactor: float
    points: int

    def predict(self, x: float) -> float:
        return self.prefactor * x**self.exponent


@dataclass
class ComparisonReport:
    sigma: float
    rows: list[ComparisonRow] = field(default_factory=list)
    fit: Optional[PowerLawFit] = None

    @property
    def deviations(self) -> np.ndarray:
        return np.array([row.deviation for row in self.rows])

    @property
    def max_deviation(self) -> float:
        return float(self.deviations.max()) if self.rows else 0.0

    @property
    def mean_deviation(self) -> float:
        return float(self.deviations.mean()) if self.rows else 0.0

    @property
    def max_epsilon(self) -> float:
        return max((row.epsilon for row in self.rows), default=0.0)


def compare_exact_vs_lad(
    history: TrajectoryHistory,
    s_samples: Iterable[float],
    particle: ShellParticle,
    floor: float = DEFAULT_DEVIATION_FLOOR,
) -> ComparisonReport:
    """
    Relative deviation ||F_exact - G_lad|| / max(||F_exact||, floor) at each
    sample (Euclidean component norms), with the local delay parameter
    epsilon = s_ret * sqrt(-a.a).
    """
    report = ComparisonReport(particle.sigma)
    guess = None
    for s in s_samples:
        r, u, a = history.eval(s)
        evaluation = self_faraday(history, s, particle, guess)
        guess = evaluation.delay.s_ret
        exact = self_force(ParticleState(s, r, u), evaluation, particle)
        lad = lad_force(u, a, estimate_adot(history, s), particle)
        exact_norm = float(np.linalg.norm(exact))
        difference = float(np.linalg.norm(exact - lad.total))
        deviation = difference / max(exact_norm, floor) if difference > 0.0 else 0.0
        epsilon = evaluation.delay.s_ret * math.sqrt(max(-dot(a, a), 0.0))
        report.rows.append(
            ComparisonRow(float(s), epsilon, exact_norm, float(np.linalg.norm(lad.total)), deviation)
        )
    logger.debug(f"sigma={particle.sigma}: {len(report.rows)} samples, max deviation {report.max_deviation:.3e}")
    return report


def fit_power_law(xs: Sequence[float], ys: Sequence[float]) -> PowerLawFit:
    x = np.asarray(xs, dtype=np.float64)
    y = np.asarray(ys, dtype=np.float64)
    if x.shape != y.shape or len(x) < 2:
        raise ValueError("a power-law fit needs at least two (x, y) pairs")
    if np.any(x <= 0.0) or np.any(y <= 0.0):
        raise ValueError("a power-law fit needs positive data")
    slope, intercept = np.polyfit(np.log(x), np.log(y), 1)
    return PowerLawFit(float(slope), float(np.exp(intercept)), len(x))


def fit_sigma_sweep(reports: Sequence[ComparisonReport]) -> PowerLawFit:
    """Fit the mean deviation of each report against its sigma and attach the fit to every report."""
    fit = fit_power_law([r.sigma for r in reports], [r.mean_deviation for r in reports])
    for report in reports:
        report.fit = fit
    return fit
