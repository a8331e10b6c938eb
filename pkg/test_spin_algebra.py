"""Spin operators, the unitary kernel and the SU(2) lift."""

import math

import numpy as np
import pytest
from scipy import linalg

from models import su2_rotation as su2
from models.spin_algebra import (
    BasisMismatchError,
    NonHermitianError,
    SpinAlgebraError,
    SpinQuantumNumber,
    StateVector,
    TrivialSpinError,
    basis_state,
    build_spin_operators,
    direct_sum_labels,
    embed_direct_sum,
    overlap,
    rotation_phase,
    unitary_from_hamiltonian,
)


def _ops(f):
    return build_spin_operators(SpinQuantumNumber.from_f(f))


# ── operators ──

def test_spin_one_fz_is_diagonal_descending():
    ops = _ops(1)
    assert np.allclose(ops.fz, np.diag([1, 0, -1]))
    assert ops.labels == ((1, 1), (1, 0), (1, -1))


def test_spin_half_fx_is_half_pauli_x():
    ops = _ops(0.5)
    assert np.allclose(ops.fx, 0.5 * np.array([[0, 1], [1, 0]]))


@pytest.mark.parametrize("f", [0.5, 1, 1.5, 2, 3])
def test_commutation_and_casimir(f):
    ops = _ops(f)
    comm = ops.fx @ ops.fy - ops.fy @ ops.fx
    assert np.max(np.abs(comm - 1j * ops.fz)) < 1e-12
    casimir = ops.fx @ ops.fx + ops.fy @ ops.fy + ops.fz @ ops.fz
    assert np.allclose(casimir, f * (f + 1) * np.eye(ops.dim), atol=1e-12)


def test_spin_zero_rejected():
    with pytest.raises(TrivialSpinError):
        build_spin_operators(SpinQuantumNumber(0))


def test_negative_or_fractional_two_f_rejected():
    with pytest.raises(SpinAlgebraError):
        SpinQuantumNumber(-1)
    with pytest.raises(SpinAlgebraError):
        SpinQuantumNumber.from_f(0.3)


def test_operator_arrays_read_only():
    ops = _ops(1)
    with pytest.raises(ValueError):
        ops.fz[0, 0] = 5


# ── unitary kernel ──

def test_unitary_matches_expm():
    ops = _ops(2)
    h = 2 * math.pi * 1e3 * ops.along(0.3, -0.4, 0.866)
    u = unitary_from_hamiltonian(h, 1.7e-4)
    assert np.allclose(u, linalg.expm(-1j * h * 1.7e-4), atol=1e-12)
    assert np.allclose(u.conj().T @ u, np.eye(5), atol=1e-12)


def test_unitary_of_diagonal_hamiltonian():
    u = unitary_from_hamiltonian(np.diag([1.0, -2.0]), 0.5)
    assert u[0, 0] == pytest.approx(np.exp(-0.5j))
    assert u[1, 1] == pytest.approx(np.exp(1.0j))


@pytest.mark.parametrize("f", [0.5, 1, 2])
def test_unitaries_compose_over_consecutive_intervals(f):
    ops = _ops(f)
    h = 2 * math.pi * 2.5e3 * ops.along(0.6, 0.0, -0.8) + 0.3e3 * ops.fx @ ops.fx
    u1 = unitary_from_hamiltonian(h, 3.1e-5)
    u2 = unitary_from_hamiltonian(h, 7.4e-5)
    assert np.allclose(u2 @ u1, unitary_from_hamiltonian(h, 1.05e-4), atol=1e-12)


@pytest.mark.parametrize("f,sign", [(0.5, -1), (1, 1), (2, 1)])
def test_full_precession_period_gives_spinor_sign(f, sign):
    omega = 2 * math.pi * 1.4e5
    u = unitary_from_hamiltonian(omega * _ops(f).fz, 2 * math.pi / omega)
    assert np.allclose(u, sign * np.eye(int(2 * f + 1)), atol=1e-12)


def test_non_hermitian_rejected():
    with pytest.raises(NonHermitianError):
        unitary_from_hamiltonian(np.array([[0.0, 1.0], [0.0, 0.0]]), 1.0)


def test_overlap_and_basis_mismatch():
    ops1, ops2 = _ops(1), _ops(2)
    a = basis_state(ops1.labels, 1, 0)
    assert overlap(a, a) == pytest.approx(1.0)
    b = basis_state(ops2.labels, 2, 0)
    with pytest.raises(BasisMismatchError):
        overlap(a, b)
    with pytest.raises(BasisMismatchError):
        basis_state(ops1.labels, 1, 2)


def test_state_vector_label_count_checked():
    with pytest.raises(BasisMismatchError):
        StateVector(np.ones(3), ((1, 1), (1, 0)))


def test_direct_sum_embeds_blocks():
    ops1, ops2 = _ops(1), _ops(2)
    blocks = [(ops1.fz, ops1.labels), (ops2.fz, ops2.labels)]
    m = embed_direct_sum(blocks)
    assert m.shape == (8, 8)
    assert np.allclose(m[:3, :3], ops1.fz)
    assert np.allclose(m[3:, 3:], ops2.fz)
    assert np.all(m[:3, 3:] == 0)
    labels = direct_sum_labels(blocks)
    assert labels.index((1, 0)) == 1
    assert labels.index((2, 0)) == 5


def test_direct_sum_needs_blocks():
    with pytest.raises(SpinAlgebraError):
        embed_direct_sum([])


@pytest.mark.parametrize("f,sign", [(1, -1), (2, 1), (3, -1), (4, 1)])
@pytest.mark.parametrize("axis", ["x", "y"])
def test_pi_rotation_returns_m0_with_parity_sign(f, sign, axis):
    phase = rotation_phase(SpinQuantumNumber.from_f(f), axis)
    assert phase == pytest.approx(sign, abs=1e-12)


# ── SU(2) kernel ──

def test_quaternion_matches_spin_half_exponential():
    phi = (0.4, -1.1, 0.7)
    q = su2.rotation_quaternion(*phi)
    sigma = 2 * _ops(0.5).along(*phi)
    assert np.allclose(su2.as_matrix(q), linalg.expm(-0.5j * sigma), atol=1e-14)


def test_compose_is_matrix_product():
    a = su2.rotation_quaternion(0.3, 0.2, -0.5)
    b = su2.rotation_quaternion(-1.0, 0.4, 0.9)
    assert np.allclose(su2.as_matrix(su2.compose(a, b)), su2.as_matrix(a) @ su2.as_matrix(b))


def test_lift_keeps_spinor_sign():
    full_turn = su2.rotation_quaternion(0.0, 0.0, 2 * math.pi)
    assert np.allclose(su2.lift_to_spin(full_turn, _ops(0.5)), -np.eye(2), atol=1e-12)
    assert np.allclose(su2.lift_to_spin(full_turn, _ops(1)), np.eye(3), atol=1e-12)


def test_lift_matches_direct_exponential():
    ops = _ops(2)
    phi = np.array([0.9, -0.3, 2.2])
    q = su2.rotation_quaternion(*phi)
    expected = linalg.expm(-1j * ops.along(*phi))
    assert np.allclose(su2.lift_to_spin(q, ops), expected, atol=1e-12)


def test_gauss4_step_exact_for_constant_field():
    v = (3e5, -1e5, 8e5)
    h = 2e-6
    assert su2.distance(su2.gauss4_step(v, v, h), su2.rotation_quaternion(h * v[0], h * v[1], h * v[2])) < 1e-15
