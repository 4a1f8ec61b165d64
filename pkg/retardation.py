"""
Retardation conditions and their root solvers.

Two algebraic conditions fix the emission point on the stored worldline:
  * worldline to worldline (self-force):  R~.R~ = sigma^2,  R~ = r(s) - r(s - s_ret)
  * field point (self-potential):         R^.R^ = rho^2,    R^ = r - r(s')
Only the smallest positive (retarded) root is physical; the advanced branch is
never searched.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np

from errors import NumericalStall, QueryBeyondHistory, RootNotBracketed
from history import TrajectoryHistory
from minkowski import FourVector, dot

logger = logging.getLogger(__name__)

MAX_ITERATIONS = 200
MAX_BRACKET_DOUBLINGS = 80

BRANCH_INTERNAL = "int"
BRANCH_EXTERNAL = "ext"


def root_tolerance(sigma: float) -> float:
    return 1e-12 * max(1.0, sigma * sigma)


@dataclass(frozen=True)
class DelaySolution:
    s_ret: float
    s_emit: float
    residual: float
    iterations: int


def safeguarded_newton(
    func: Callable[[float], tuple[float, float]],
    lo: float,
    hi: float,
    tol: float,
    guess: Optional[float] = None,
    maxit: int = MAX_ITERATIONS,
) -> tuple[float, float, float, int]:
    """
    Newton-Raphson kept inside a bracket, falling back to bisection.

    `func(x)` returns (f, df/dx) and must satisfy f(lo) < 0 < f(hi). Stops when
    |f| <= tol. Returns (root, f(root), df(root), iterations).
    """
    x = guess if guess is not None and lo <= guess <= hi else 0.5 * (lo + hi)
    xlo, xhi = lo, hi
    dxold = abs(hi - lo)
    dx = dxold
    f, df = func(x)
    for iteration in range(1, maxit + 1):
        if abs(f) <= tol:
            return x, f, df, iteration
        if f < 0.0:
            xlo = x
        else:
            xhi = x
        # bisect if Newton leaves the bracket or is not shrinking fast enough
        if df == 0.0 or ((x - xhi) * df - f) * ((x - xlo) * df - f) >= 0.0 or abs(2.0 * f) > abs(dxold * df):
            dxold = dx
            dx = 0.5 * (xhi - xlo)
            x = xlo + dx
        else:
            dxold = dx
            dx = f / df
            x = x - dx
        if xhi - xlo <= 4.0 * np.finfo(float).eps * max(1.0, abs(x)):
            f, df = func(x)
            if abs(f) <= 16.0 * tol:
                return x, f, df, iteration
            raise NumericalStall(f"bracket collapsed at x={x} with residual {f:.3e} above tolerance {tol:.1e}")
        f, df = func(x)
    raise NumericalStall(f"no convergence after {maxit} iterations (x={x}, residual={f:.3e})")


def _retarded_root(
    history: TrajectoryHistory,
    point: FourVector,
    s_ref: float,
    rho2: float,
    tol: float,
    guess: float,
) -> DelaySolution:
    """Smallest delta > 0 with (point - r(s_ref - delta))^2 = rho2."""

    def phi(delta: float) -> tuple[float, float]:
        r_emit, u_emit, _ = history.eval(s_ref - delta)
        chord = point - r_emit
        return dot(chord, chord) - rho2, 2.0 * dot(chord, u_emit)

    # lookups newer than s_last are not allowed, so the bracket starts there
    lo = max(0.0, s_ref - history.s_last)
    f_lo, _ = phi(lo)
    if f_lo >= 0.0:
        if abs(f_lo) <= tol and lo > 0.0:
            return DelaySolution(lo, s_ref - lo, abs(f_lo), 0)
        raise QueryBeyondHistory(
            f"retarded root for s={s_ref} lies after the last accepted sample s={history.s_last}"
        )

    guess = max(guess, lo)
    hi = max(guess, lo + guess)
    f_hi, _ = phi(hi)
    doublings = 0
    while f_hi < 0.0:
        if -f_hi <= tol:
            return DelaySolution(hi, s_ref - hi, abs(f_hi), doublings)
        lo, hi = hi, 2.0 * hi
        f_hi, _ = phi(hi)
        doublings += 1
        if doublings > MAX_BRACKET_DOUBLINGS:
            raise RootNotBracketed(f"delay function stays negative up to delta={hi} (s={s_ref}, rho2={rho2})")
    if f_hi <= tol:
        return DelaySolution(hi, s_ref - hi, abs(f_hi), doublings)

    delta, residual, slope, iterations = safeguarded_newton(phi, lo, hi, tol, guess=guess)
    if slope <= 0.0:
        raise RootNotBracketed(f"delay function is not increasing at the accepted root delta={delta} (slope {slope:.3e})")
    return DelaySolution(delta, s_ref - delta, abs(residual), iterations + doublings)


def proper_delay(
    history: TrajectoryHistory,
    s: float,
    sigma: float,
    guess: Optional[float] = None,
) -> DelaySolution:
    """Delay s_ret with (r(s) - r(s - s_ret))^2 = sigma^2 along the stored worldline."""
    r, _, _ = history.eval(s)
    return worldline_delay(history, r, s, sigma, guess)


def worldline_delay(
    history: TrajectoryHistory,
    r: FourVector,
    s: float,
    sigma: float,
    guess: Optional[float] = None,
) -> DelaySolution:
    """
    Same condition for a COS position r at proper time s that need not be stored
    yet (an RK stage). `guess` warm-starts the bracket, default sigma.
    """
    if sigma <= 0.0:
        raise ValueError(f"sigma must be positive, got {sigma}")
    return _retarded_root(history, r, s, sigma * sigma, root_tolerance(sigma), guess or sigma)


def simultaneity_root(history: TrajectoryHistory, r: FourVector, guess: Optional[float] = None) -> float:
    """
    Proper time s1 with u(s1).(r - r(s1)) = 0: the COS instant simultaneous with
    the field point r in the instantaneous rest frame.
    """

    def psi(s1: float) -> tuple[float, float]:
        # increasing form: -u.(r - r(s1)), derivative 1 - a.X
        r1, u1, a1 = history.eval(s1)
        x = r - r1
        return -dot(u1, x), 1.0 - dot(a1, x)

    hi = history.s_last
    f_hi, _ = psi(hi)
    if f_hi < 0.0:
        raise RootNotBracketed(f"field point {r.tolist()} is not simultaneous with any stored time up to s={hi}")
    if f_hi == 0.0:
        return hi
    start = hi if guess is None else min(guess, hi)
    width = max(1.0, abs(hi - start))
    lo = start - width
    f_lo, _ = psi(lo)
    doublings = 0
    while f_lo > 0.0:
        width *= 2.0
        hi, lo = lo, lo - width
        f_lo, _ = psi(lo)
        doublings += 1
        if doublings > MAX_BRACKET_DOUBLINGS:
            raise RootNotBracketed(f"simultaneity function keeps its sign down to s={lo}")
    if f_lo == 0.0:
        return lo
    scale = max(1.0, float(np.max(np.abs(r))))
    s1, _, _, _ = safeguarded_newton(psi, lo, hi, 1e-12 * scale)
    return s1


def classify_field_point(x: FourVector, sigma: float) -> tuple[str, float]:
    """
    Internal / external classification of the displacement X = r - r(s1) and
    the matching rho^2: 0 outside the shell, sigma^2 (1 + X.X / sigma^2) inside.
    """
    xx = dot(x, x)
    if xx <= -sigma * sigma:
        return BRANCH_EXTERNAL, 0.0
    return BRANCH_INTERNAL, sigma * sigma + xx


def fieldpoint_retarded_root(
    history: TrajectoryHistory,
    r: FourVector,
    rho2: float,
    s1: Optional[float] = None,
    sigma: float = 1.0,
) -> DelaySolution:
    """
    Emission time s' with (r - r(s'))^2 = rho2, measured back from the
    simultaneity root: s_ret = s1 - s'.
    """
    if rho2 < 0.0:
        raise ValueError(f"rho2 must be non-negative, got {rho2}")
    if s1 is None:
        s1 = simultaneity_root(history, r)
    r1, _, _ = history.eval(s1)
    x = r - r1
    # exact root in the instantaneous rest frame of an inertial worldline
    guess = max(float(np.sqrt(max(rho2 - dot(x, x), 0.0))), 1e-3 * sigma)
    return _retarded_root(history, r, s1, rho2, root_tolerance(sigma), guess)
