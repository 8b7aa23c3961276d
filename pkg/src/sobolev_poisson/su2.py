"""SU(2) in the fundamental representation.

Generators are ``tau_j / 2`` with ``tau_j = i sigma_j``; with this choice
``[tau_i/2, tau_j/2] = -eps_ijk tau_k/2``.  The relation is checked once at
import so a sign slip in the tables cannot go unnoticed.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.linalg import expm

SIGMA = np.array(
    [
        [[0, 1], [1, 0]],
        [[0, -1j], [1j, 0]],
        [[1, 0], [0, -1]],
    ],
    dtype=complex,
)
TAU = 1j * SIGMA
GEN = TAU / 2

EPS = np.zeros((3, 3, 3))
for _i, _j, _k in ((0, 1, 2), (1, 2, 0), (2, 0, 1)):
    EPS[_i, _j, _k] = 1.0
    EPS[_j, _i, _k] = -1.0

IDENTITY = np.eye(2, dtype=complex)


def commutator_defect() -> float:
    """Largest entry of ``[T_i, T_j] + eps_ijk T_k`` over all ``i, j``."""
    worst = 0.0
    for i in range(3):
        for j in range(3):
            lhs = GEN[i] @ GEN[j] - GEN[j] @ GEN[i]
            rhs = -np.einsum("k,kab->ab", EPS[i, j], GEN)
            worst = max(worst, float(np.abs(lhs - rhs).max()))
    return worst


if commutator_defect() > 1e-15:  # pragma: no cover
    raise RuntimeError("su(2) generator table is inconsistent")


def su2_matrix(v) -> np.ndarray:
    """``v_i tau_i / 2`` for coefficient arrays of shape ``(..., 3)``."""
    return np.einsum("...i,iab->...ab", np.asarray(v, dtype=float), GEN)


@dataclass(frozen=True)
class Su2Vector:
    """Lie-algebra element given by its coefficients on ``tau_i / 2``."""

    v: tuple

    def __post_init__(self):
        if len(self.v) != 3:
            raise ValueError("an su(2) vector has three coefficients")

    def matrix(self):
        return su2_matrix(self.v)

    def exp(self) -> "SU2Element":
        return SU2Element(expm(self.matrix()))


@dataclass(frozen=True, eq=False)
class SU2Element:
    m: np.ndarray

    def __matmul__(self, other):
        return SU2Element(self.m @ other.m)

    def inverse(self):
        return SU2Element(np.linalg.inv(self.m))

    def unitarity_gap(self) -> float:
        return unitarity_gap(self.m)

    def det_gap(self) -> float:
        return det_gap(self.m)


def unitarity_gap(m) -> float:
    """Spectral norm of ``m^dagger m - 1``."""
    return float(np.linalg.norm(m.conj().T @ m - IDENTITY, 2))


def det_gap(m) -> float:
    return float(abs(np.linalg.det(m) - 1.0))


def matrix_to_json(m):
    """Complex matrix as nested ``[re, im]`` pairs."""
    return [[[float(z.real), float(z.imag)] for z in row] for row in np.asarray(m)]


def matrix_from_json(rows):
    return np.array([[complex(re, im) for re, im in row] for row in rows])
