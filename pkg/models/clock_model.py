"""
Clock Model — F=1 ⊕ F=2 hyperfine ground state in the microwave rotating frame.

H_RF = Z(F=1; γ₁) ⊕ Z(F=2; γ₂) − 2π·Δ·P_F2 + π·Ω·(|1,0⟩⟨2,0| + h.c.)   [rad/s]

The microwave couples only the clock pair |1,0⟩ ↔ |2,0⟩ (π polarisation;
the other hyperfine lines are Zeeman-detuned far beyond Ω at the bias field).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace
from functools import lru_cache

import numpy as np

from config.constants import (
    DEFAULT_RABI_HZ,
    GAMMA_F1_HZ_PER_G,
    GAMMA_F2_HZ_PER_G,
    TWO_PI,
)
from models.spin_algebra import (
    SpinOperatorSet,
    SpinQuantumNumber,
    StateVector,
    basis_state,
    build_spin_operators,
    direct_sum_labels,
    embed_direct_sum,
)
from models.zeeman_model import ZeemanParams, zeeman_hamiltonian

CLOCK_LOWER = (1, 0)
CLOCK_UPPER = (2, 0)


class ClockModelError(Exception):
    pass


@lru_cache(maxsize=None)
def manifold_operators(two_f: int) -> SpinOperatorSet:
    return build_spin_operators(SpinQuantumNumber(two_f))


def clock_labels() -> tuple[tuple, ...]:
    f1, f2 = manifold_operators(2), manifold_operators(4)
    return direct_sum_labels([(f1.fz, f1.labels), (f2.fz, f2.labels)])


@dataclass(frozen=True)
class ClockModel:
    rabi_hz: float = DEFAULT_RABI_HZ
    detuning_hz: float = 0.0
    gamma_f1: float = GAMMA_F1_HZ_PER_G
    gamma_f2: float = GAMMA_F2_HZ_PER_G

    @property
    def dim(self) -> int:
        return 8

    @property
    def labels(self) -> tuple[tuple, ...]:
        return clock_labels()

    @property
    def lower_index(self) -> int:
        return self.labels.index(CLOCK_LOWER)

    @property
    def upper_index(self) -> int:
        return self.labels.index(CLOCK_UPPER)

    def with_detuning(self, detuning_hz: float) -> "ClockModel":
        return replace(self, detuning_hz=detuning_hz)


def build_clock_model(
    rabi_hz: float,
    detuning_hz: float = 0.0,
    gamma_f1: float = GAMMA_F1_HZ_PER_G,
    gamma_f2: float = GAMMA_F2_HZ_PER_G,
) -> ClockModel:
    if not rabi_hz > 0:
        raise ClockModelError(f"Rabi frequency must be positive, got {rabi_hz}")
    for name, g in (("gamma_f1", gamma_f1), ("gamma_f2", gamma_f2)):
        if not math.isfinite(g) or g == 0:
            raise ClockModelError(f"{name} must be finite and nonzero, got {g}")
    if not math.isfinite(detuning_hz):
        raise ClockModelError(f"detuning must be finite, got {detuning_hz}")
    return ClockModel(rabi_hz=rabi_hz, detuning_hz=detuning_hz, gamma_f1=gamma_f1, gamma_f2=gamma_f2)


def prepare_initial_state() -> StateVector:
    """|F=2, m=0⟩ after optical pumping."""
    return basis_state(clock_labels(), *CLOCK_UPPER)


def zeeman_blocks(model: ClockModel, b) -> np.ndarray:
    f1, f2 = manifold_operators(2), manifold_operators(4)
    return embed_direct_sum([
        (zeeman_hamiltonian(f1, ZeemanParams(model.gamma_f1), b), f1.labels),
        (zeeman_hamiltonian(f2, ZeemanParams(model.gamma_f2), b), f2.labels),
    ])


def upper_projector(model: ClockModel) -> np.ndarray:
    """P_F2, the projector onto the F=2 manifold."""
    return np.diag([1.0 if f == 2 else 0.0 for f, _ in model.labels]).astype(complex)


def detuning_hamiltonian(model: ClockModel) -> np.ndarray:
    return -TWO_PI * model.detuning_hz * upper_projector(model)


def microwave_coupling(model: ClockModel) -> np.ndarray:
    h = np.zeros((model.dim, model.dim), dtype=complex)
    i, j = model.lower_index, model.upper_index
    h[i, j] = h[j, i] = math.pi * model.rabi_hz
    return h


def rotating_frame_hamiltonian(model: ClockModel, b, microwave_on: bool = True) -> np.ndarray:
    h = zeeman_blocks(model, b) + detuning_hamiltonian(model)
    if microwave_on:
        h = h + microwave_coupling(model)
    return h


def clock_direct_sum(u_f1: np.ndarray, u_f2: np.ndarray) -> np.ndarray:
    f1, f2 = manifold_operators(2), manifold_operators(4)
    return embed_direct_sum([(u_f1, f1.labels), (u_f2, f2.labels)])
