"""
SU(2) Rotation Kernel — closed-form propagators for Zeeman Hamiltonians.

Every Zeeman Hamiltonian H = 2π·γ·B·F lies in the spin-F representation of
su(2), so its propagator is fixed by one SU(2) element. The element is
carried as a unit quaternion q = (w, x, y, z) ↔ w·I − i·(x, y, z)·σ, i.e.
the spin-1/2 matrix exp(−i φ⃗·σ/2) has q = (cos(φ/2), sin(φ/2)·φ̂).

Scalar Python floats throughout: the integrator calls these millions of
times on 3-vectors, where numpy call overhead dominates.
"""

from __future__ import annotations

import math

import numpy as np

from models.spin_algebra import SpinOperatorSet, unitary_from_hamiltonian

Quaternion = tuple[float, float, float, float]

IDENTITY: Quaternion = (1.0, 0.0, 0.0, 0.0)


def rotation_quaternion(px: float, py: float, pz: float) -> Quaternion:
    """exp(−i φ⃗·σ/2) for rotation vector φ⃗ = (px, py, pz) in radians."""
    angle = math.sqrt(px * px + py * py + pz * pz)
    if angle < 1e-300:
        return IDENTITY
    half = 0.5 * angle
    k = math.sin(half) / angle
    return (math.cos(half), k * px, k * py, k * pz)


def compose(a: Quaternion, b: Quaternion) -> Quaternion:
    """Matrix product U_a · U_b (b acts first)."""
    aw, ax, ay, az = a
    bw, bx, by, bz = b
    return (
        aw * bw - ax * bx - ay * by - az * bz,
        aw * bx + bw * ax + ay * bz - az * by,
        aw * by + bw * ay + az * bx - ax * bz,
        aw * bz + bw * az + ax * by - ay * bx,
    )


def normalized(q: Quaternion) -> Quaternion:
    w, x, y, z = q
    n = math.sqrt(w * w + x * x + y * y + z * z)
    return (w / n, x / n, y / n, z / n)


def distance(a: Quaternion, b: Quaternion) -> float:
    return math.sqrt(sum((u - v) ** 2 for u, v in zip(a, b)))


def norm_defect(q: Quaternion) -> float:
    return abs(math.sqrt(sum(c * c for c in q)) - 1.0)


def axis_angle(q: Quaternion) -> tuple[float, tuple[float, float, float]]:
    """
    Rotation angle θ ∈ [0, 2π] and unit axis with U = exp(−iθ n·σ/2).

    θ runs up to 2π (not π) so the spinor sign of q is kept.
    """
    w, x, y, z = q
    s = math.sqrt(x * x + y * y + z * z)
    theta = 2.0 * math.atan2(s, w)
    if s < 1e-300:
        return theta, (0.0, 0.0, 1.0)
    return theta, (x / s, y / s, z / s)


def lift_to_spin(q: Quaternion, ops: SpinOperatorSet) -> np.ndarray:
    """D^F(q) = exp(−iθ n·F), exact for every F including the −I of 2π rotations."""
    theta, (nx, ny, nz) = axis_angle(q)
    return unitary_from_hamiltonian(theta * ops.along(nx, ny, nz), 1.0)


def as_matrix(q: Quaternion) -> np.ndarray:
    """Spin-1/2 matrix w·I − i·v·σ."""
    w, x, y, z = q
    return np.array(
        [[w - 1j * z, -1j * x - y],
         [-1j * x + y, w + 1j * z]],
        dtype=complex,
    )


# ── single steps ──

SQRT3_6 = math.sqrt(3.0) / 6.0
SQRT3_12 = math.sqrt(3.0) / 12.0
GAUSS_NODES = (0.5 - SQRT3_6, 0.5 + SQRT3_6)


def gauss4_step(v1: tuple, v2: tuple, h: float) -> Quaternion:
    """
    Fourth-order Magnus step from the angular velocities at the two Gauss
    nodes. In su(2) the commutator term [A1, A2] is the cross product, so
    φ⃗ = (h/2)(v1 + v2) − (√3/12)·h²·(v1 × v2).
    """
    ax, ay, az = v1
    bx, by, bz = v2
    half = 0.5 * h
    c = SQRT3_12 * h * h
    return rotation_quaternion(
        half * (ax + bx) - c * (ay * bz - az * by),
        half * (ay + by) - c * (az * bx - ax * bz),
        half * (az + bz) - c * (ax * by - ay * bx),
    )


def midpoint_step(v_mid: tuple, h: float) -> Quaternion:
    """Second-order exponential midpoint step exp(−i·H(t+h/2)·h)."""
    return rotation_quaternion(h * v_mid[0], h * v_mid[1], h * v_mid[2])
