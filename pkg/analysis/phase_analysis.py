"""
Phase Analysis — dynamical / geometric split of the phase acquired in a reversal.

Includes:
    - total_phase, dynamical_phase, geometric_phase, decompose_phase
      (Pancharatnam convention: total = arg⟨ψ(0)|ψ(T)⟩)
    - topological_class: snap to {0, π} with fidelity floor
    - y_f0 / parity_factor: Y_F0(π−θ) = (−1)^F·Y_F0(θ)
    - instantaneous_m0_state, phase_from_fringes
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass

import numpy as np
from scipy import integrate, linalg

from config.constants import (
    FIDELITY_FLOOR,
    PHASE_UNDEFINED_FIDELITY,
    SNAP_TOLERANCE_RAD,
)
from models.spin_algebra import SpinOperatorSet, SpinQuantumNumber, StateVector, overlap

logger = logging.getLogger(__name__)


class PhaseAnalysisError(Exception):
    pass


def wrap_phase(x: float) -> float:
    """Wrap to (−π, π]; π represents the class boundary."""
    if not math.isfinite(x):
        return x
    y = math.fmod(x + math.pi, 2.0 * math.pi)
    if y <= 0.0:
        y += 2.0 * math.pi
    return y - math.pi


def phase_distance(a: float, b: float) -> float:
    """Shortest distance between two angles on the circle."""
    return abs(wrap_phase(a - b))


@dataclass(frozen=True)
class PhaseDecomposition:
    total_phase: float
    return_fidelity: float
    dynamical_phase: float | None = None
    geometric_phase: float | None = None

    @property
    def defined(self) -> bool:
        return math.isfinite(self.total_phase)


@dataclass(frozen=True)
class TopologicalClass:
    label: str          # "trivial" | "pi" | "undefined"
    residual: float
    fidelity: float

    @property
    def value(self) -> float | None:
        return {"trivial": 0.0, "pi": math.pi}.get(self.label)


# ═══════════════════════════════════════════════════════════════════════
# Decomposition
# ═══════════════════════════════════════════════════════════════════════

def total_phase(initial: StateVector, result) -> PhaseDecomposition:
    """arg⟨initial|final⟩ and |⟨initial|final⟩|; NaN phase below fidelity 1e-6."""
    amp = overlap(initial, result.final_state)
    fidelity = min(abs(amp), 1.0)
    if fidelity < PHASE_UNDEFINED_FIDELITY:
        logger.warning("return fidelity %.2e too small, phase undefined", fidelity)
        return PhaseDecomposition(total_phase=math.nan, return_fidelity=fidelity)
    return PhaseDecomposition(total_phase=wrap_phase(math.atan2(amp.imag, amp.real)),
                              return_fidelity=fidelity)


def dynamical_phase(result) -> float:
    """−∫⟨H⟩dt by trapezoidal quadrature over the energy record, wrapped."""
    if not result.energy_record:
        raise PhaseAnalysisError("energy record is empty; evolve with record=True")
    ts = np.array([t for t, _ in result.energy_record])
    es = np.array([e for _, e in result.energy_record])
    return wrap_phase(-float(integrate.trapezoid(es, ts)))


def geometric_phase(total: PhaseDecomposition, dynamical: float) -> float:
    """Total minus dynamical phase, wrapped; NaN when the total is undefined."""
    if not total.defined:
        return math.nan
    return wrap_phase(total.total_phase - dynamical)


def decompose_phase(initial: StateVector, result) -> PhaseDecomposition:
    total = total_phase(initial, result)
    dyn = dynamical_phase(result)
    geo = geometric_phase(total, dyn)
    return PhaseDecomposition(
        total_phase=total.total_phase,
        return_fidelity=total.return_fidelity,
        dynamical_phase=dyn,
        geometric_phase=geo,
    )


def phase_from_fringes(shift_rad: float, fit_quality: float) -> PhaseDecomposition:
    """Decomposition of a Ramsey-measured shift; the fringe fit R² stands in for fidelity."""
    quality = min(max(fit_quality, 0.0), 1.0)
    shift = wrap_phase(shift_rad)
    return PhaseDecomposition(total_phase=shift, return_fidelity=quality,
                              dynamical_phase=0.0, geometric_phase=shift)


def topological_class(p: PhaseDecomposition) -> TopologicalClass:
    phase = p.geometric_phase if p.geometric_phase is not None else p.total_phase
    if phase is None or not math.isfinite(phase):
        return TopologicalClass("undefined", math.nan, p.return_fidelity)
    d0 = phase_distance(phase, 0.0)
    dpi = phase_distance(phase, math.pi)
    label, residual = ("trivial", d0) if d0 <= dpi else ("pi", dpi)
    if residual > SNAP_TOLERANCE_RAD or p.return_fidelity < FIDELITY_FLOOR:
        label = "undefined"
    return TopologicalClass(label, residual, p.return_fidelity)


# ═══════════════════════════════════════════════════════════════════════
# Spherical harmonics and parity
# ═══════════════════════════════════════════════════════════════════════

def _integer_spin(f) -> int:
    if isinstance(f, SpinQuantumNumber):
        if not f.is_integer:
            raise PhaseAnalysisError(f"spherical harmonics need integer F, got F={f.value}")
        return int(f.value)
    if isinstance(f, bool) or not float(f).is_integer():
        raise PhaseAnalysisError(f"spherical harmonics need integer F, got F={f}")
    if f < 0:
        raise PhaseAnalysisError(f"F must be non-negative, got {f}")
    return int(f)


def legendre(n: int, x: float) -> float:
    """P_n(x) by the three-term recurrence."""
    p_prev, p = 1.0, x
    if n == 0:
        return p_prev
    for k in range(1, n):
        p_prev, p = p, ((2 * k + 1) * x * p - k * p_prev) / (k + 1)
    return p


def y_f0(f, theta: float) -> float:
    """Y_F0(θ) = √((2F+1)/4π)·P_F(cos θ); no φ dependence."""
    n = _integer_spin(f)
    if not 0.0 <= theta <= math.pi:
        raise PhaseAnalysisError(f"theta must lie in [0, π], got {theta}")
    return math.sqrt((2 * n + 1) / (4.0 * math.pi)) * legendre(n, math.cos(theta))


def parity_factor(f, n_theta_samples: int = 64) -> int:
    """
    Sign s with Y_F0(π−θ) = s·Y_F0(θ) on θ samples away from the zeros of P_F.

    Returns:
        +1 or −1; always (−1)^F.
    """
    n = _integer_spin(f)
    if n_theta_samples < 1:
        raise PhaseAnalysisError(f"need at least one θ sample, got {n_theta_samples}")
    signs = set()
    for j in range(n_theta_samples):
        theta = (j + 0.5) / n_theta_samples * (math.pi / 2.0)
        a = y_f0(n, theta)
        if abs(a) < 1e-6:
            continue
        ratio = y_f0(n, math.pi - theta) / a
        if abs(abs(ratio) - 1.0) > 1e-6:
            raise PhaseAnalysisError(f"|Y(π−θ)/Y(θ)| = {abs(ratio)} at θ = {theta}")
        signs.add(1 if ratio > 0 else -1)
    if len(signs) != 1:
        raise PhaseAnalysisError(f"no consistent parity sign for F={n}: {sorted(signs)}")
    s = signs.pop()
    if s != (-1) ** n:
        raise PhaseAnalysisError(f"parity sign {s} contradicts (−1)^F for F={n}")
    return s


def instantaneous_m0_state(ops: SpinOperatorSet, b) -> StateVector:
    """m=0 eigenvector of n̂·F for field b (integer F), largest component made real positive."""
    if not ops.f.is_integer:
        raise PhaseAnalysisError(f"m=0 exists only for integer F, got F={ops.f.value}")
    mag = b.magnitude()
    if mag == 0.0:
        raise PhaseAnalysisError("field direction undefined at |B| = 0")
    evals, evecs = linalg.eigh(ops.along(b.bx / mag, b.by / mag, b.bz / mag))
    vec = evecs[:, int(np.argmin(np.abs(evals)))]
    k = int(np.argmax(np.abs(vec)))
    vec = vec * (abs(vec[k]) / vec[k])
    return StateVector(vec, ops.labels)
