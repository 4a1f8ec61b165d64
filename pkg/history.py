"""
Worldline memory read by the delay equation.

Accepted samples (s, r, u, a) are kept in growing arrays and interpolated
locally with cubic Hermite segments: r from nodal r and u, u from nodal u and a,
a piecewise linear. Before the turn-on time s0 the motion is inertial and is
evaluated in closed form, so the retarded lookups may reach arbitrarily far back.
"""

from __future__ import annotations

import bisect
import logging
from dataclasses import dataclass
from typing import Iterator

import numpy as np

from errors import InvalidSample, NonMonotoneTime, QueryBeyondHistory
from minkowski import FourVector, LorentzBoost, as_four_vector, dot

logger = logging.getLogger(__name__)

SAMPLE_TOLERANCE = 1e-6
_INITIAL_CAPACITY = 1024


@dataclass(frozen=True)
class HistorySample:
    s: float
    r: FourVector
    u: FourVector
    a: FourVector

    def __post_init__(self):
        object.__setattr__(self, "s", float(self.s))
        for name in ("r", "u", "a"):
            object.__setattr__(self, name, as_four_vector(getattr(self, name)))

    def check(self, tol: float = SAMPLE_TOLERANCE) -> None:
        norm = abs(dot(self.u, self.u) - 1.0)
        if norm > tol:
            raise InvalidSample(f"sample at s={self.s}: |u.u - 1| = {norm:.3e} exceeds {tol:.1e}")
        ortho = abs(dot(self.u, self.a))
        if ortho > tol:
            raise InvalidSample(f"sample at s={self.s}: |u.a| = {ortho:.3e} exceeds {tol:.1e}")


class TrajectoryHistory:
    """
    Dense record of the COS worldline plus its inertial prehistory.

    There is a single writer (the integrator); `eval` never mutates state, so
    readers may query freely between appends. Appending never changes the
    value returned for an already covered proper time.
    """

    def __init__(self, s0: float, r0: FourVector, u0: FourVector):
        self.s0 = float(s0)
        self.r0 = as_four_vector(r0)
        self.u0 = as_four_vector(u0)
        first = HistorySample(self.s0, self.r0, self.u0, np.zeros(4))
        first.check()
        self._s: list[float] = [self.s0]
        self._r = np.empty((_INITIAL_CAPACITY, 4))
        self._u = np.empty((_INITIAL_CAPACITY, 4))
        self._a = np.empty((_INITIAL_CAPACITY, 4))
        self._r[0], self._u[0], self._a[0] = first.r, first.u, first.a

    @classmethod
    def inertial(cls, s0: float, r0: FourVector, u0: FourVector, s_end: float, step: float) -> "TrajectoryHistory":
        history = cls(s0, r0, u0)
        history.extend_inertial(s_end, step)
        return history

    def __len__(self) -> int:
        return len(self._s)

    @property
    def s_last(self) -> float:
        return self._s[-1]

    @property
    def times(self) -> np.ndarray:
        return np.array(self._s)

    def spacing_near(self, s: float) -> float:
        """Grid spacing of the segment containing s (or the last one)."""
        n = len(self._s)
        if n < 2:
            raise QueryBeyondHistory("history holds a single sample, no spacing defined")
        i = min(max(bisect.bisect_left(self._s, s), 1), n - 1)
        return self._s[i] - self._s[i - 1]

    def sample(self, index: int) -> HistorySample:
        n = len(self._s)
        if not -n <= index < n:
            raise IndexError(index)
        i = index % n
        return HistorySample(self._s[i], self._r[i].copy(), self._u[i].copy(), self._a[i].copy())

    def samples(self) -> Iterator[HistorySample]:
        for i in range(len(self._s)):
            yield self.sample(i)

    def append(self, sample: HistorySample) -> None:
        if not sample.s > self._s[-1]:
            raise NonMonotoneTime(f"sample at s={sample.s} does not follow s_last={self._s[-1]}")
        sample.check()
        n = len(self._s)
        if n == self._r.shape[0]:
            self._grow()
        self._r[n], self._u[n], self._a[n] = sample.r, sample.u, sample.a
        self._s.append(sample.s)

    def extend_inertial(self, s_end: float, step: float) -> None:
        """Append exact inertial samples (r0 + u0 (s - s0), u0, 0) up to s_end."""
        first = int(np.floor((self._s[-1] - self.s0) / step + 1e-9)) + 1
        count = int(np.floor((s_end - self.s0) / step + 1e-9))
        for k in range(first, count + 1):
            s = self.s0 + k * step
            self.append(HistorySample(s, self.r0 + self.u0 * (s - self.s0), self.u0, np.zeros(4)))

    def _grow(self) -> None:
        size = 2 * self._r.shape[0]
        for name in ("_r", "_u", "_a"):
            old = getattr(self, name)
            new = np.empty((size, 4))
            new[: old.shape[0]] = old
            setattr(self, name, new)

    def eval(self, s_query: float) -> tuple[FourVector, FourVector, FourVector]:
        """(r, u, a) at s_query; closed form before s0, Hermite inside, error past s_last."""
        s = float(s_query)
        if s <= self.s0:
            return self.r0 + self.u0 * (s - self.s0), self.u0.copy(), np.zeros(4)
        if s > self._s[-1]:
            raise QueryBeyondHistory(f"query at s={s} is beyond the last accepted sample s={self._s[-1]}")
        i = bisect.bisect_left(self._s, s)
        if self._s[i] == s:
            return self._r[i].copy(), self._u[i].copy(), self._a[i].copy()
        j = i - 1
        h = self._s[i] - self._s[j]
        t = (s - self._s[j]) / h
        # h00 = 1 - h01, so the constant part is written as a difference
        h01 = t * t * (3.0 - 2.0 * t)
        h10 = t * (1.0 - t) * (1.0 - t)
        h11 = t * t * (t - 1.0)
        r_j, r_i = self._r[j], self._r[i]
        u_j, u_i = self._u[j], self._u[i]
        a_j, a_i = self._a[j], self._a[i]
        r = r_j + h01 * (r_i - r_j) + h * (h10 * u_j + h11 * u_i)
        u = u_j + h01 * (u_i - u_j) + h * (h10 * a_j + h11 * a_i)
        a = a_j + t * (a_i - a_j)
        return r, u, a

    def transformed(self, boost: LorentzBoost) -> "TrajectoryHistory":
        """Copy of this history with every vector mapped by `boost` (proper times unchanged)."""
        m = boost.matrix
        other = TrajectoryHistory(self.s0, m @ self.r0, m @ self.u0)
        for i in range(1, len(self._s)):
            other.append(HistorySample(self._s[i], m @ self._r[i], m @ self._u[i], m @ self._a[i]))
        return other

    def rows(self) -> Iterator[tuple[float, ...]]:
        """Flat rows (s, ct, x, y, z, u0..u3, a0..a3) for export."""
        for i, s in enumerate(self._s):
            yield (s, *self._r[i].tolist(), *self._u[i].tolist(), *self._a[i].tolist())
