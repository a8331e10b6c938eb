"""
Spin Algebra — spin-F operator matrices and the Hermitian linear-algebra kernel.

Includes:
    - SpinQuantumNumber (2F stored as an integer, exact for half-integer F)
    - SpinOperatorSet   (F_x, F_y, F_z in the basis m = F … −F)
    - StateVector       (amplitudes tagged with (F, m) labels)
    - unitary_from_hamiltonian (exp(−i·H·dt) via eigendecomposition)
    - overlap, embed_direct_sum, basis_state, rotation_phase
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field

import numpy as np
from scipy import linalg

from config.constants import HERMITIAN_TOL

logger = logging.getLogger(__name__)

ComplexMatrix = np.ndarray


class SpinAlgebraError(Exception):
    pass


class TrivialSpinError(SpinAlgebraError):
    pass


class NonHermitianError(SpinAlgebraError):
    pass


class BasisMismatchError(SpinAlgebraError):
    pass


def _half(two_x: int) -> int | float:
    return two_x // 2 if two_x % 2 == 0 else two_x / 2


# ═══════════════════════════════════════════════════════════════════════
# Domain types
# ═══════════════════════════════════════════════════════════════════════

@dataclass(frozen=True)
class SpinQuantumNumber:
    two_f: int

    def __post_init__(self):
        if isinstance(self.two_f, bool) or not isinstance(self.two_f, (int, np.integer)):
            raise SpinAlgebraError(f"two_f must be an integer, got {self.two_f!r}")
        if self.two_f < 0:
            raise SpinAlgebraError(f"two_f must be non-negative, got {self.two_f}")

    @classmethod
    def from_f(cls, f: float) -> "SpinQuantumNumber":
        two_f = round(2 * f)
        if abs(2 * f - two_f) > 1e-12:
            raise SpinAlgebraError(f"F must be integer or half-integer, got {f}")
        return cls(int(two_f))

    @property
    def value(self) -> int | float:
        return _half(self.two_f)

    @property
    def dim(self) -> int:
        return self.two_f + 1

    @property
    def is_integer(self) -> bool:
        return self.two_f % 2 == 0

    def m_values(self) -> list[int | float]:
        return [_half(self.two_f - 2 * k) for k in range(self.dim)]

    def labels(self) -> tuple[tuple, ...]:
        f = self.value
        return tuple((f, m) for m in self.m_values())


@dataclass(frozen=True, eq=False)
class SpinOperatorSet:
    f: SpinQuantumNumber
    fx: ComplexMatrix
    fy: ComplexMatrix
    fz: ComplexMatrix

    @property
    def dim(self) -> int:
        return self.f.dim

    @property
    def labels(self) -> tuple[tuple, ...]:
        return self.f.labels()

    def along(self, nx: float, ny: float, nz: float) -> ComplexMatrix:
        """n·F for a (not necessarily unit) vector n."""
        return nx * self.fx + ny * self.fy + nz * self.fz


@dataclass(frozen=True, eq=False)
class StateVector:
    amplitudes: np.ndarray
    labels: tuple[tuple, ...] = field(default=())

    def __post_init__(self):
        amps = np.asarray(self.amplitudes, dtype=complex).reshape(-1)
        object.__setattr__(self, "amplitudes", amps)
        if self.labels and len(self.labels) != amps.size:
            raise BasisMismatchError(
                f"{amps.size} amplitudes but {len(self.labels)} basis labels"
            )

    @property
    def dim(self) -> int:
        return self.amplitudes.size

    def norm(self) -> float:
        return float(np.linalg.norm(self.amplitudes))

    def evolved(self, u: ComplexMatrix) -> "StateVector":
        return StateVector(u @ self.amplitudes, self.labels)

    def amplitude(self, f, m) -> complex:
        return complex(self.amplitudes[self.labels.index((f, m))])

    def population(self, f, m) -> float:
        return abs(self.amplitude(f, m)) ** 2


# ═══════════════════════════════════════════════════════════════════════
# Operators
# ═══════════════════════════════════════════════════════════════════════

def build_spin_operators(f: SpinQuantumNumber) -> SpinOperatorSet:
    """
    Ladder-operator construction of F_x, F_y, F_z.

    Basis order is m = F, F−1, …, −F, so F_z is diagonal and descending and
    F_+ has its entries on the first superdiagonal.
    """
    if f.two_f < 1:
        raise TrivialSpinError("spin F=0 has a one-dimensional space and no dynamics")

    ff = f.value
    ms = np.array(f.m_values(), dtype=float)
    dim = f.dim

    f_plus = np.zeros((dim, dim), dtype=complex)
    for k in range(1, dim):
        m = ms[k]
        f_plus[k - 1, k] = math.sqrt(ff * (ff + 1) - m * (m + 1))
    f_minus = f_plus.conj().T

    fx = 0.5 * (f_plus + f_minus)
    fy = -0.5j * (f_plus - f_minus)
    fz = np.diag(ms).astype(complex)

    for mat in (fx, fy, fz):
        mat.setflags(write=False)
    return SpinOperatorSet(f=f, fx=fx, fy=fy, fz=fz)


def hermitian_defect(h: ComplexMatrix) -> float:
    return float(np.max(np.abs(h - h.conj().T))) if h.size else 0.0


def unitary_from_hamiltonian(h: ComplexMatrix, dt: float) -> ComplexMatrix:
    """
    exp(−i·h·dt) for Hermitian h in rad/s.

    Args:
        h:  square Hermitian matrix (angular-frequency units)
        dt: duration in seconds

    Returns:
        Unitary matrix built from the eigendecomposition of h.
    """
    h = np.asarray(h, dtype=complex)
    if h.ndim != 2 or h.shape[0] != h.shape[1]:
        raise SpinAlgebraError(f"Hamiltonian must be square, got shape {h.shape}")
    if not math.isfinite(dt):
        raise SpinAlgebraError(f"duration must be finite, got {dt}")
    asym = hermitian_defect(h)
    if asym > HERMITIAN_TOL:
        raise NonHermitianError(f"Hamiltonian is not Hermitian: max |H − H†| = {asym:.3e}")

    evals, evecs = linalg.eigh(h)
    phases = np.exp(-1j * evals * dt)
    return (evecs * phases) @ evecs.conj().T


def overlap(a: StateVector, b: StateVector) -> complex:
    """⟨a|b⟩."""
    if a.dim != b.dim or a.labels != b.labels:
        raise BasisMismatchError(
            f"cannot overlap states of dimension {a.dim} and {b.dim} with different bases"
        )
    return complex(np.vdot(a.amplitudes, b.amplitudes))


def embed_direct_sum(blocks: list[tuple[ComplexMatrix, tuple]]) -> ComplexMatrix:
    if not blocks:
        raise SpinAlgebraError("direct sum needs at least one block")
    mats = []
    for i, (mat, labels) in enumerate(blocks):
        mat = np.asarray(mat, dtype=complex)
        if mat.ndim != 2 or mat.shape[0] != mat.shape[1]:
            raise SpinAlgebraError(f"block {i} is not square: shape {mat.shape}")
        if labels and len(labels) != mat.shape[0]:
            raise BasisMismatchError(f"block {i} has {mat.shape[0]} rows but {len(labels)} labels")
        mats.append(mat)
    return linalg.block_diag(*mats).astype(complex)


def direct_sum_labels(blocks: list[tuple[ComplexMatrix, tuple]]) -> tuple[tuple, ...]:
    return tuple(label for _, labels in blocks for label in labels)


def basis_state(labels: tuple[tuple, ...], f, m) -> StateVector:
    """|F, m⟩ in the basis described by labels."""
    try:
        idx = labels.index((f, m))
    except ValueError:
        raise BasisMismatchError(f"|F={f}, m={m}⟩ is not in this basis") from None
    amps = np.zeros(len(labels), dtype=complex)
    amps[idx] = 1.0
    return StateVector(amps, tuple(labels))


def rotation_phase(f: SpinQuantumNumber, axis: str = "y") -> complex:
    """
    ⟨F,0| exp(−iπF_axis) |F,0⟩ for a π rotation about x or y.

    Equals (−1)^F: the m=0 state returns to itself with the parity sign.
    """
    if not f.is_integer:
        raise SpinAlgebraError(f"m=0 exists only for integer F, got F={f.value}")
    ops = build_spin_operators(f)
    gen = {"x": ops.fx, "y": ops.fy}.get(axis)
    if gen is None:
        raise SpinAlgebraError(f"rotation axis must be 'x' or 'y', got {axis!r}")
    u = unitary_from_hamiltonian(math.pi * gen, 1.0)
    zero = basis_state(ops.labels, f.value, 0)
    return complex(np.vdot(zero.amplitudes, u @ zero.amplitudes))
