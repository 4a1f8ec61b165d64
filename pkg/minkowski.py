"""
Four-vector algebra in Minkowski space with signature (+,-,-,-).

Conventions used by every other module:
  * c = 1 (Gaussian units), so ct, x, y, z and proper time s share length units.
  * A FourVector is a float64 numpy array of shape (4,) holding contravariant
    components (ct, x, y, z).
  * Tensors are stored with covariant indices. Indices are lowered or raised
    only through `lower` / `raise_index`, never implicitly.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from errors import NonTimelikeVelocity

SIGNATURE = np.array([1.0, -1.0, -1.0, -1.0])
ETA = np.diag(SIGNATURE)

FourVector = np.ndarray

UNIT_NORM_TOLERANCE = 1e-9


def four_vector(ct: float, x: float, y: float, z: float) -> FourVector:
    return as_four_vector((ct, x, y, z))


def as_four_vector(values: Sequence[float] | np.ndarray) -> FourVector:
    """Coerce to a finite float64 4-vector; reject NaN/Inf and wrong shapes."""
    v = np.array(values, dtype=np.float64)
    if v.shape != (4,):
        raise ValueError(f"a four-vector needs 4 components, got shape {v.shape}")
    if not np.all(np.isfinite(v)):
        raise ValueError(f"four-vector components must be finite, got {v}")
    return v


def dot(a: FourVector, b: FourVector) -> float:
    return float(a[0] * b[0] - a[1] * b[1] - a[2] * b[2] - a[3] * b[3])


def lower(v: FourVector) -> np.ndarray:
    return SIGNATURE * v


def raise_index(v: np.ndarray) -> FourVector:
    return SIGNATURE * v


def from_spatial_velocity(momentum_per_mass: Sequence[float]) -> FourVector:
    """Unit timelike 4-velocity (gamma, gamma*beta) from its spatial part gamma*beta."""
    w = np.array(momentum_per_mass, dtype=np.float64)
    return as_four_vector(np.concatenate(([np.sqrt(1.0 + w @ w)], w)))


def from_beta(beta: Sequence[float]) -> FourVector:
    b = np.array(beta, dtype=np.float64)
    b2 = float(b @ b)
    if b2 >= 1.0:
        raise NonTimelikeVelocity(f"|beta| = {np.sqrt(b2)} is not subluminal")
    gamma = 1.0 / np.sqrt(1.0 - b2)
    return as_four_vector(np.concatenate(([gamma], gamma * b)))


class FaradayTensor:
    """
    Antisymmetric rank-2 tensor with covariant indices.

    The constructor keeps only the antisymmetric part, (M - M^T)/2, which is an
    exact negation pair in IEEE arithmetic, so T[mu][nu] == -T[nu][mu] always.
    F[0][i] holds E_i and the spatial block holds -eps_ijk B_k.
    """

    __slots__ = ("_m",)

    def __init__(self, matrix: np.ndarray):
        m = np.asarray(matrix, dtype=np.float64)
        if m.shape != (4, 4):
            raise ValueError(f"a Faraday tensor is 4x4, got shape {m.shape}")
        m = 0.5 * (m - m.T)
        m.setflags(write=False)
        self._m = m

    @classmethod
    def zero(cls) -> "FaradayTensor":
        return cls(np.zeros((4, 4)))

    @classmethod
    def wedge(cls, a: np.ndarray, b: np.ndarray) -> "FaradayTensor":
        """a_mu b_nu - a_nu b_mu for covariant component arrays a, b."""
        return cls(np.outer(a, b) - np.outer(b, a))

    @classmethod
    def from_fields(cls, electric: Sequence[float], magnetic: Sequence[float]) -> "FaradayTensor":
        return cls(faraday_matrices(np.atleast_2d(electric), np.atleast_2d(magnetic))[0])

    @property
    def matrix(self) -> np.ndarray:
        return self._m

    @property
    def electric(self) -> np.ndarray:
        return self._m[0, 1:].copy()

    @property
    def magnetic(self) -> np.ndarray:
        m = self._m
        return np.array([-m[2, 3], m[1, 3], -m[1, 2]])

    def contract(self, u: FourVector) -> np.ndarray:
        """F_{mu k} u^k, a covariant 4-vector."""
        return self._m @ u

    def antisymmetry_residual(self) -> float:
        return float(np.max(np.abs(self._m + self._m.T)))

    def is_zero(self) -> bool:
        return not np.any(self._m)

    def __add__(self, other: "FaradayTensor") -> "FaradayTensor":
        return FaradayTensor(self._m + other._m)

    def __mul__(self, factor: float) -> "FaradayTensor":
        return FaradayTensor(self._m * factor)

    __rmul__ = __mul__

    def __repr__(self) -> str:
        return f"FaradayTensor(E={self.electric.tolist()}, B={self.magnetic.tolist()})"


def faraday_matrices(electric: np.ndarray, magnetic: np.ndarray) -> np.ndarray:
    """Vectorised covariant F_{mu nu} for arrays of E and B of shape (n, 3)."""
    e = np.asarray(electric, dtype=np.float64)
    b = np.asarray(magnetic, dtype=np.float64)
    f = np.zeros((e.shape[0], 4, 4))
    f[:, 0, 1:] = e
    f[:, 1:, 0] = -e
    f[:, 1, 2] = -b[:, 2]
    f[:, 2, 1] = b[:, 2]
    f[:, 1, 3] = b[:, 1]
    f[:, 3, 1] = -b[:, 1]
    f[:, 2, 3] = -b[:, 0]
    f[:, 3, 2] = b[:, 0]
    return f


@dataclass(frozen=True)
class LorentzBoost:
    """Proper orthochronous boost; `matrix` maps contravariant components."""

    matrix: np.ndarray

    def __post_init__(self):
        self.matrix.setflags(write=False)

    @classmethod
    def identity(cls) -> "LorentzBoost":
        return cls(np.eye(4))

    def inverse(self) -> "LorentzBoost":
        # Lambda^{-1} = eta Lambda^T eta
        return LorentzBoost(ETA @ self.matrix.T @ ETA)

    def transform_tensor(self, tensor: FaradayTensor) -> FaradayTensor:
        """Covariant rank-2 transform F' = Lambda^{-T} F Lambda^{-1}."""
        inv = self.inverse().matrix
        return FaradayTensor(inv.T @ tensor.matrix @ inv)

    def metric_residual(self) -> float:
        return float(np.max(np.abs(self.matrix.T @ ETA @ self.matrix - ETA)))

    def determinant(self) -> float:
        return float(np.linalg.det(self.matrix))


def boost_from_velocity(u: FourVector) -> LorentzBoost:
    """
    Boost into the frame where u becomes (1, 0, 0, 0).

    With w = gamma*beta the spatial part of u:
      L[0][0] = u0, L[0][i] = L[i][0] = -w_i, L[i][j] = delta_ij + w_i w_j / (1 + u0)
    """
    u = np.asarray(u, dtype=np.float64)
    residual = abs(dot(u, u) - 1.0)
    if residual > UNIT_NORM_TOLERANCE or u[0] <= 0.0:
        raise NonTimelikeVelocity(
            f"boost needs a future-pointing unit 4-velocity, got {u.tolist()} (|u.u - 1| = {residual:.3e})"
        )
    w = u[1:]
    m = np.empty((4, 4))
    m[0, 0] = u[0]
    m[0, 1:] = -w
    m[1:, 0] = -w
    m[1:, 1:] = np.eye(3) + np.outer(w, w) / (1.0 + u[0])
    return LorentzBoost(m)


def apply(boost: LorentzBoost, v: FourVector) -> FourVector:
    return boost.matrix @ v
