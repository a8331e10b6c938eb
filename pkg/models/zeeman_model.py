"""
Zeeman Model — linear Zeeman Hamiltonian H = 2π·γ·B·F in rad/s.

γ = g_F·μ_B/h in Hz/G is signed; the quadratic Zeeman shift is not modelled
(below 3 mHz at 200 mG).
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from config.constants import EXPECTATION_IMAG_TOL, TWO_PI
from models.spin_algebra import ComplexMatrix, SpinOperatorSet, StateVector, SpinAlgebraError


class ZeemanError(Exception):
    pass


@dataclass(frozen=True)
class ZeemanParams:
    gamma_hz_per_gauss: float

    def __post_init__(self):
        g = self.gamma_hz_per_gauss
        if not math.isfinite(g) or g == 0.0:
            raise ZeemanError(f"gyromagnetic ratio must be finite and nonzero, got {g}")

    @property
    def angular(self) -> float:
        """2π·γ in rad/(s·G)."""
        return TWO_PI * self.gamma_hz_per_gauss

    def reversed(self) -> "ZeemanParams":
        """Negated gamma; pairs with `time_reversed` to retrace an evolution."""
        return ZeemanParams(-self.gamma_hz_per_gauss)


def zeeman_hamiltonian(ops: SpinOperatorSet, z: ZeemanParams, b) -> ComplexMatrix:
    """
    Args:
        ops: spin operators of the manifold
        z:   gyromagnetic ratio
        b:   FieldVector (gauss)

    Returns:
        Hermitian matrix in rad/s with eigenvalues 2π·γ·|B|·m.
    """
    w = z.angular
    return ops.along(w * b.bx, w * b.by, w * b.bz)


def expectation_energy(state: StateVector, h: ComplexMatrix) -> float:
    """Real ⟨ψ|H|ψ⟩ in rad/s."""
    h = np.asarray(h)
    if h.shape != (state.dim, state.dim):
        raise SpinAlgebraError(f"state of dimension {state.dim} cannot meet H of shape {h.shape}")
    value = complex(np.vdot(state.amplitudes, h @ state.amplitudes))
    scale = max(1.0, float(np.max(np.abs(h)))) if h.size else 1.0
    if abs(value.imag) >= EXPECTATION_IMAG_TOL * scale:
        raise ZeemanError(
            f"⟨H⟩ has imaginary part {value.imag:.3e}; a non-Hermitian Hamiltonian reached the dynamics"
        )
    return value.real
