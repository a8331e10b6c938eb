"""Phase split, topological classification and the parity of Y_F0."""

import math

import numpy as np
import pytest
from scipy.special import eval_legendre

from analysis.dynamics import EvolutionResult
from analysis.phase_analysis import (
    PhaseAnalysisError,
    PhaseDecomposition,
    dynamical_phase,
    geometric_phase,
    instantaneous_m0_state,
    parity_factor,
    phase_distance,
    phase_from_fringes,
    topological_class,
    wrap_phase,
    y_f0,
)
from analysis.reversal import ReversalError, gamma_for_manifold, oracle_check, run_reversal
from config.constants import GAMMA_F1_HZ_PER_G, GAMMA_F2_HZ_PER_G
from features.field_schedules import FieldVector, make_smooth_reversal, make_sudden_reversal
from models.spin_algebra import SpinQuantumNumber, build_spin_operators


def _smooth():
    return make_smooth_reversal(0.2, 0.02, 2e-3, 1e-3)


# ── phase wrapping ──

def test_wrap_phase_interval():
    assert wrap_phase(math.pi) == pytest.approx(math.pi)
    assert wrap_phase(-math.pi) == pytest.approx(math.pi)
    assert wrap_phase(1.5 * math.pi) == pytest.approx(-0.5 * math.pi)
    assert wrap_phase(0.25) == 0.25
    assert math.isnan(wrap_phase(math.nan))


def test_phase_distance_is_circular():
    assert phase_distance(3.1, -3.1) == pytest.approx(2 * math.pi - 6.2)


# ── adiabatic reversal ──

@pytest.mark.parametrize("f,expected,label", [(1, math.pi, "pi"), (2, 0.0, "trivial")])
def test_adiabatic_reversal_phase_is_parity(f, expected, label):
    outcome = run_reversal(f, gamma_for_manifold(f), _smooth())
    d = outcome.decomposition
    assert phase_distance(d.geometric_phase, expected) < 0.01
    assert abs(d.dynamical_phase) < 1e-3
    assert phase_distance(d.total_phase, d.dynamical_phase + d.geometric_phase) < 1e-12
    assert d.return_fidelity > 0.999
    assert outcome.topology.label == label
    assert outcome.adiabaticity.classification == "adiabatic"


def test_reversal_report_keys():
    outcome = run_reversal(1, GAMMA_F1_HZ_PER_G, _smooth())
    report = outcome.as_report("f1")
    assert report["f1.class"] == "pi"
    assert report["f1.regime"] == "adiabatic"
    assert "f1.geometric_phase_rad" in report


def test_reversal_agrees_with_reference():
    s = _smooth()
    outcome = run_reversal(2, GAMMA_F2_HZ_PER_G, s)
    assert oracle_check(outcome, GAMMA_F2_HZ_PER_G, s, dt=1e-7) < 1e-6


def test_sudden_reversal_is_trivial_for_spin_one():
    s = make_sudden_reversal(0.2, 1e-6, 1e-4)
    outcome = run_reversal(1, GAMMA_F1_HZ_PER_G, s)
    assert phase_distance(outcome.decomposition.total_phase, 0.0) < 0.01
    assert outcome.topology.label == "trivial"
    assert outcome.adiabaticity.classification == "sudden"


def test_unknown_manifold_rejected():
    with pytest.raises(ReversalError):
        gamma_for_manifold(3)


def test_geometric_phase_is_wrapped_difference():
    assert geometric_phase(PhaseDecomposition(3.0, 1.0), -0.5) == pytest.approx(3.5 - 2 * math.pi)
    assert geometric_phase(PhaseDecomposition(0.2, 1.0), 0.2) == pytest.approx(0.0)
    assert math.isnan(geometric_phase(PhaseDecomposition(math.nan, 1e-8), 0.0))


# ── classification ──

def test_snap_to_pi_with_residual():
    c = topological_class(PhaseDecomposition(3.10, 0.99, 0.0, 3.10))
    assert c.label == "pi"
    assert c.residual == pytest.approx(math.pi - 3.10)
    assert c.value == math.pi


def test_snap_to_trivial():
    c = topological_class(PhaseDecomposition(0.01, 0.99, 0.0, 0.01))
    assert c.label == "trivial"
    assert c.value == 0.0


def test_low_fidelity_or_far_phase_is_undefined():
    assert topological_class(PhaseDecomposition(3.10, 0.5, 0.0, 3.10)).label == "undefined"
    assert topological_class(PhaseDecomposition(1.5, 0.99, 0.0, 1.5)).label == "undefined"
    c = topological_class(PhaseDecomposition(math.nan, 1e-8))
    assert c.label == "undefined"
    assert c.value is None


def test_fringe_shift_classification():
    p = phase_from_fringes(-3.12, 0.98)
    assert p.geometric_phase == pytest.approx(-3.12)
    assert topological_class(p).label == "pi"
    assert topological_class(phase_from_fringes(0.02, 0.5)).label == "undefined"


def test_dynamical_phase_needs_energy_record():
    with pytest.raises(PhaseAnalysisError):
        dynamical_phase(EvolutionResult(final_state=None))


# ── spherical harmonics ──

@pytest.mark.parametrize("f,theta,value", [
    (1, math.pi / 3, 0.2443),
    (2, math.pi / 2, -0.3154),
    (0, 1.0, 1 / math.sqrt(4 * math.pi)),
])
def test_y_f0_values(f, theta, value):
    assert y_f0(f, theta) == pytest.approx(value, abs=1e-4)


@pytest.mark.parametrize("f", range(7))
def test_y_f0_matches_legendre(f):
    for theta in np.linspace(0.0, math.pi, 13):
        expected = math.sqrt((2 * f + 1) / (4 * math.pi)) * eval_legendre(f, math.cos(theta))
        assert y_f0(f, float(theta)) == pytest.approx(expected, abs=1e-12)


@pytest.mark.parametrize("f", range(7))
def test_parity_factor(f):
    assert parity_factor(f) == (-1) ** f


def test_y_f0_rejects_bad_input():
    with pytest.raises(PhaseAnalysisError):
        y_f0(1.5, 0.3)
    with pytest.raises(PhaseAnalysisError):
        y_f0(1, 4.0)
    with pytest.raises(PhaseAnalysisError):
        parity_factor(SpinQuantumNumber.from_f(0.5))


# ── instantaneous eigenstate ──

def test_instantaneous_m0_along_z_is_basis_state():
    ops = build_spin_operators(SpinQuantumNumber.from_f(2))
    state = instantaneous_m0_state(ops, FieldVector(0.0, 0.0, -0.2))
    assert abs(state.amplitudes[2]) == pytest.approx(1.0)
    assert state.amplitudes[2].real > 0


def test_instantaneous_m0_needs_field_and_integer_spin():
    with pytest.raises(PhaseAnalysisError):
        instantaneous_m0_state(build_spin_operators(SpinQuantumNumber.from_f(1)), FieldVector(0, 0, 0))
    with pytest.raises(PhaseAnalysisError):
        instantaneous_m0_state(build_spin_operators(SpinQuantumNumber.from_f(1.5)), FieldVector(0, 0, 1))
