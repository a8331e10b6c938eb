"""Field schedules: shapes, domains, gaps, adiabaticity and perturbations."""

import math

import numpy as np
import pytest

from config.constants import GAMMA_F1_HZ_PER_G, GAMMA_F2_HZ_PER_G
from features.field_schedules import (
    FieldVector,
    GapClosedError,
    NoReversalWindowError,
    ScheduleDomainError,
    ScheduleError,
    adiabaticity_ratio,
    breakpoints,
    field_at,
    make_constant,
    make_sampled_trace,
    make_smooth_reversal,
    make_sudden_reversal,
    min_field,
    min_zeeman_gap,
    perturb_schedule,
    reversal_window,
    time_reversed,
    with_b_min,
)

GAMMA = abs(GAMMA_F2_HZ_PER_G)


def _smooth(b_min=0.2, delta_tau=2e-3):
    return make_smooth_reversal(0.2, b_min, delta_tau, 0.5 * delta_tau)


# ── smooth reversal ──

def test_smooth_reversal_endpoints_and_midpoint():
    s = _smooth(b_min=0.02)
    assert field_at(s, 0.0).as_tuple() == (0.0, 0.0, 0.2)
    assert field_at(s, 2e-3).as_tuple() == (0.0, 0.0, -0.2)
    mid = field_at(s, 1e-3)
    assert mid.bx == pytest.approx(0.02)
    assert mid.bz == pytest.approx(0.0, abs=1e-15)


def test_smooth_reversal_with_equal_fields_has_constant_magnitude():
    s = _smooth(b_min=0.2)
    for t in np.linspace(0.0, 2e-3, 51):
        assert field_at(s, float(t)).magnitude() == pytest.approx(0.2, rel=1e-12)


def test_transverse_axis_y():
    s = make_smooth_reversal(0.2, 0.05, 1e-3, 0.5e-3, transverse_axis="y")
    b = field_at(s, 0.5e-3)
    assert b.bx == 0.0 and b.by == pytest.approx(0.05)


@pytest.mark.parametrize("kwargs", [
    {"b0": 0.2, "b_min": 0.0, "delta_tau": 1e-3},
    {"b0": 0.2, "b_min": -0.1, "delta_tau": 1e-3},
    {"b0": -0.2, "b_min": 0.1, "delta_tau": 1e-3},
    {"b0": 0.2, "b_min": 0.1, "delta_tau": 0.0},
])
def test_smooth_reversal_preconditions(kwargs):
    with pytest.raises(ScheduleError):
        make_smooth_reversal(t_flip_center=0.0, **kwargs)


def test_field_outside_domain_raises():
    s = _smooth()
    with pytest.raises(ScheduleDomainError):
        field_at(s, 2.1e-3)
    with pytest.raises(ScheduleDomainError):
        field_at(s, -1e-9)


def test_explicit_domain_holds_endpoint_fields():
    s = make_smooth_reversal(0.2, 0.2, 2e-3, 1.5e-3, t_start=0.0, t_end=3e-3)
    assert field_at(s, 0.1e-3).as_tuple() == (0.0, 0.0, 0.2)
    assert field_at(s, 2.9e-3).as_tuple() == (0.0, 0.0, -0.2)
    assert breakpoints(s) == pytest.approx((0.5e-3, 2.5e-3))
    assert reversal_window(s) == pytest.approx((0.5e-3, 2.5e-3))


# ── sudden reversal ──

def test_sudden_reversal_ramp():
    s = make_sudden_reversal(0.2, 1e-6, 1e-3)
    assert field_at(s, 0.0).as_tuple() == (1e-3, 0.0, 0.2)
    assert field_at(s, 1e-6).bz == pytest.approx(0.0, abs=1e-15)
    assert field_at(s, 2e-6).bz == pytest.approx(-0.2)
    with pytest.raises(ScheduleError):
        make_sudden_reversal(0.2, 1e-6, -1e-3)


# ── constant and sampled traces ──

def test_constant_schedule_has_no_reversal_window():
    s = make_constant(FieldVector(0.0, 0.0, 0.2), 0.0, 1e-3)
    assert field_at(s, 5e-4).bz == 0.2
    assert breakpoints(s) == ()
    with pytest.raises(NoReversalWindowError):
        reversal_window(s)


def test_sampled_trace_interpolates_linearly():
    s = make_sampled_trace([0.0, 1.0, 2.0], [(0, 0, 1), (1, 0, 0), (0, 0, -1)])
    assert field_at(s, 0.5).as_tuple() == pytest.approx((0.5, 0.0, 0.5))
    assert breakpoints(s) == (1.0,)
    assert reversal_window(s) == (0.0, 2.0)


def test_sampled_trace_validation():
    with pytest.raises(ScheduleError):
        make_sampled_trace([0.0], [(0, 0, 1)])
    with pytest.raises(ScheduleError):
        make_sampled_trace([0.0, 0.0], [(0, 0, 1), (0, 0, -1)])
    with pytest.raises(ScheduleError):
        make_sampled_trace([0.0, 1.0], [(0, 0, 1)])


def test_time_reversed_mirrors_field():
    s = _smooth(b_min=0.05)
    r = time_reversed(s)
    for t in (0.0, 3e-4, 1e-3, 1.7e-3):
        assert field_at(r, t).as_tuple() == pytest.approx(field_at(s, 2e-3 - t).as_tuple())
    assert time_reversed(r) == s


# ── gaps and adiabaticity ──

def test_min_field_of_smooth_reversal_is_b_min():
    assert min_field(_smooth(b_min=0.02)) == pytest.approx(0.02, rel=1e-6)


@pytest.mark.parametrize("b_min,gap_hz", [(0.2, 139962.5), (0.02, 13996.25), (0.004, 2799.25)])
def test_gap_values_of_the_three_adiabatic_paths(b_min, gap_hz):
    s = _smooth(b_min=b_min)
    assert min_zeeman_gap(s, GAMMA) == pytest.approx(gap_hz, rel=1e-6)
    assert min_zeeman_gap(s, GAMMA_F1_HZ_PER_G) == pytest.approx(gap_hz, rel=1e-6)
    report = adiabaticity_ratio(s, GAMMA)
    assert report.delta_tau == pytest.approx(2e-3)
    assert report.classification == "adiabatic"


def test_sudden_reversal_classifies_sudden():
    s = make_sudden_reversal(0.2, 1e-6, 1e-3)
    report = adiabaticity_ratio(s, GAMMA)
    assert report.min_gap_hz == pytest.approx(699.8125, rel=1e-6)
    assert report.ratio == pytest.approx(2 * math.pi * 699.8125 * 2e-6, rel=1e-6)
    assert report.classification == "sudden"


def test_marginal_band():
    s = make_smooth_reversal(0.2, 1e-3, 20e-6, 10e-6)
    assert adiabaticity_ratio(s, GAMMA).classification == "sudden"
    s = make_smooth_reversal(0.2, 1e-3, 200e-6, 100e-6)
    assert adiabaticity_ratio(s, GAMMA).classification == "marginal"


def test_constant_schedule_has_no_adiabaticity_ratio():
    with pytest.raises(NoReversalWindowError):
        adiabaticity_ratio(make_constant(FieldVector(0, 0, 0.2), 0.0, 1e-3), GAMMA)


def test_with_b_min():
    s = with_b_min(_smooth(), 0.004)
    assert s.b_min == 0.004
    with pytest.raises(ScheduleError):
        with_b_min(_smooth(), 0.0)
    with pytest.raises(ScheduleError):
        with_b_min(make_constant(FieldVector(0, 0, 0.2), 0.0, 1.0), 0.1)


# ── perturbations ──

def test_perturbation_is_seeded_and_bounded():
    s = _smooth()
    a = perturb_schedule(s, seed=7, amplitude=0.04, n_modes=4)
    b = perturb_schedule(s, seed=7, amplitude=0.04, n_modes=4)
    c = perturb_schedule(s, seed=8, amplitude=0.04, n_modes=4)
    t = 0.37e-3
    assert field_at(a, t).as_tuple() == field_at(b, t).as_tuple()
    assert field_at(a, t).as_tuple() != field_at(c, t).as_tuple()
    for t in np.linspace(0.0, 2e-3, 101):
        da = np.subtract(field_at(a, float(t)).as_tuple(), field_at(s, float(t)).as_tuple())
        assert np.max(np.abs(da)) <= 0.04 + 1e-15
    assert field_at(a, 0.0).as_tuple() == field_at(s, 0.0).as_tuple()
    assert field_at(a, 2e-3).as_tuple() == field_at(s, 2e-3).as_tuple()
    assert a.min_field_g > 0.02


def test_zero_amplitude_returns_same_schedule():
    s = _smooth()
    assert perturb_schedule(s, seed=1, amplitude=0.0, n_modes=3) is s


def test_gap_closing_perturbation_rejected():
    s = _smooth(b_min=0.01)
    # cancels the transverse field at the midpoint
    phases = np.array([[0.0], [math.pi / 2], [math.pi / 2]])
    with pytest.raises(GapClosedError):
        perturb_schedule(s, seed=3, amplitude=0.01, n_modes=1, phases=phases)


def test_only_smooth_reversals_are_perturbed():
    with pytest.raises(ScheduleError):
        perturb_schedule(make_sudden_reversal(0.2, 1e-6, 1e-3), seed=1, amplitude=0.01, n_modes=2)
