"""
Ramsey Engine — Rabi scans, Ramsey sequences and fringe scans on the clock pair.

Sequence timeline (s):
    [0, τ1]                 pulse 1, microwave on, field held at its value mid-pulse
    [τ1, τ1 + T_free]       interrogation, microwave off, schedule-driven Zeeman evolution
    [τ1 + T_free, end]      pulse 2

The interrogation time T is measured pulse centre to pulse centre, so
T_free = T − (τ1 + τ2)/2. During the interrogation the Zeeman blocks commute
with the detuning term, so the Zeeman propagator is computed once per
schedule and reused for every detuning of a scan.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field, replace
from functools import lru_cache, partial

import numpy as np
from scipy import linalg

from analysis.dynamics import EvolutionConfig, evolve_propagator
from analysis.fringe_fit import CosineFit, FringeFit, fit_cosine, fit_fringe, phase_shift
from analysis.parallel import parallel_map
from analysis.phase_analysis import TopologicalClass, phase_from_fringes, topological_class
from config.constants import (
    DEFAULT_GUARD_S,
    DEFAULT_RESIDUAL_G,
    DEFAULT_SUDDEN_RAMP_S,
    VISIBILITY_FLAT_TOL,
)
from features.field_schedules import (
    FieldSchedule,
    FieldVector,
    NoReversalWindowError,
    make_constant,
    make_smooth_reversal,
    make_sudden_reversal,
    reversal_window,
    with_b_min,
)
from models import su2_rotation as su2
from models.clock_model import (
    ClockModel,
    clock_direct_sum,
    detuning_hamiltonian,
    manifold_operators,
    prepare_initial_state,
    rotating_frame_hamiltonian,
)
from models.spin_algebra import StateVector, unitary_from_hamiltonian

logger = logging.getLogger(__name__)

WINDOW_SLACK_S = 1e-12


class RamseyError(Exception):
    pass


class SequenceWindowError(RamseyError):
    pass


# ═══════════════════════════════════════════════════════════════════════
# Domain types
# ═══════════════════════════════════════════════════════════════════════

@dataclass(frozen=True)
class RamseySequence:
    pulse1_duration: float
    interrogation_time: float
    pulse2_duration: float
    schedule: FieldSchedule
    microwave_off_during_interrogation: bool = True

    def __post_init__(self):
        if not (self.pulse1_duration > 0 and self.pulse2_duration > 0):
            raise RamseyError(
                f"pulse durations must be positive, got {self.pulse1_duration} and {self.pulse2_duration}"
            )
        if not self.microwave_off_during_interrogation:
            raise RamseyError("the microwave is always off during the interrogation")
        if self.free_time < -WINDOW_SLACK_S:
            raise RamseyError(
                f"interrogation time {self.interrogation_time} s is shorter than half the pulses "
                f"({0.5 * (self.pulse1_duration + self.pulse2_duration)} s)"
            )

    @property
    def free_time(self) -> float:
        return self.interrogation_time - 0.5 * (self.pulse1_duration + self.pulse2_duration)

    @property
    def free_window(self) -> tuple[float, float]:
        start = self.pulse1_duration
        return start, start + max(self.free_time, 0.0)

    @property
    def total_duration(self) -> float:
        return self.free_window[1] + self.pulse2_duration

    @property
    def pulse_midpoints(self) -> tuple[float, float]:
        return 0.5 * self.pulse1_duration, self.free_window[1] + 0.5 * self.pulse2_duration


@dataclass(frozen=True, eq=False)
class FringeScan:
    points: list
    sequence: RamseySequence
    model: ClockModel

    def detunings(self) -> np.ndarray:
        return np.array([d for d, _ in self.points])

    def populations(self) -> np.ndarray:
        return np.array([p for _, p in self.points])


@dataclass(frozen=True, eq=False)
class RabiScan:
    points: list
    model: ClockModel
    bias: FieldVector
    fit: CosineFit | None = None

    @property
    def rabi_hz_fitted(self) -> float | None:
        return None if self.fit is None else self.fit.frequency


@dataclass(frozen=True, eq=False)
class VisibilityPoint:
    b_min_g: float
    visibility: float
    contrast: float
    phase_shift_rad: float
    topology: TopologicalClass
    fit: FringeFit
    scan: FringeScan = field(repr=False)


def apply_envelope(p: float, duration: float, decay_s: float | None) -> float:
    """Phenomenological contrast decay p → 1/2 + (p − 1/2)·e^(−t/τ)."""
    if decay_s is None:
        return p
    return 0.5 + (p - 0.5) * math.exp(-duration / decay_s)


# ═══════════════════════════════════════════════════════════════════════
# Sequence builders
# ═══════════════════════════════════════════════════════════════════════

def pi_half_duration(rabi_hz: float) -> float:
    return 1.0 / (4.0 * rabi_hz)


def baseline_sequence(
    rabi_hz: float,
    interrogation_time: float,
    b0: float,
    pulse_duration: float | None = None,
) -> RamseySequence:
    """Constant bias (0, 0, b0) throughout."""
    tau = pulse_duration or pi_half_duration(rabi_hz)
    total = interrogation_time + tau
    schedule = make_constant(FieldVector(0.0, 0.0, b0), 0.0, total)
    return RamseySequence(tau, interrogation_time, tau, schedule)


def reversal_sequence(
    rabi_hz: float,
    kind: str,
    b0: float,
    interrogation_time: float = 0.0,
    b_min: float = 0.2,
    delta_tau: float = 2e-3,
    transverse_axis: str = "x",
    residual_transverse: float = DEFAULT_RESIDUAL_G,
    ramp_duration: float = DEFAULT_SUDDEN_RAMP_S,
    guard_time: float = DEFAULT_GUARD_S,
    pulse_duration: float | None = None,
) -> RamseySequence:
    """
    Sequence with a reversal centred in the interrogation.

    T is lengthened when needed so the reversal fits with guard_time of
    microwave-off margin on both sides.
    """
    tau = pulse_duration or pi_half_duration(rabi_hz)
    span = delta_tau if kind == "smooth_reversal" else ramp_duration
    t_interrogation = max(interrogation_time, span + 2.0 * guard_time + tau)
    total = t_interrogation + tau
    center = 0.5 * total
    if kind == "smooth_reversal":
        schedule = make_smooth_reversal(b0, b_min, delta_tau, center, transverse_axis,
                                        t_start=0.0, t_end=total)
    elif kind == "sudden_reversal":
        schedule = make_sudden_reversal(b0, center, residual_transverse, ramp_duration,
                                        t_start=0.0, t_end=total)
    else:
        raise RamseyError(f"reversal kind must be smooth_reversal or sudden_reversal, got {kind!r}")
    return RamseySequence(tau, t_interrogation, tau, schedule)


def matching_baseline(seq: RamseySequence, b0: float) -> RamseySequence:
    """Constant-bias sequence with the same pulses and interrogation time."""
    schedule = make_constant(FieldVector(0.0, 0.0, b0), 0.0, seq.total_duration)
    return replace(seq, schedule=schedule)


def validate_sequence(seq: RamseySequence) -> None:
    s = seq.schedule
    if s.t_start > WINDOW_SLACK_S or s.t_end < seq.total_duration - WINDOW_SLACK_S:
        raise SequenceWindowError(
            f"schedule domain [{s.t_start:.9g}, {s.t_end:.9g}] s does not cover the sequence "
            f"[0, {seq.total_duration:.9g}] s"
        )
    if s.kind == "constant":
        return
    try:
        start, end = reversal_window(s)
    except NoReversalWindowError:
        return
    t_a, t_b = seq.free_window
    if start < t_a - WINDOW_SLACK_S or end > t_b + WINDOW_SLACK_S:
        raise SequenceWindowError(
            f"reversal window [{start:.9g}, {end:.9g}] s overlaps a microwave pulse "
            f"(interrogation is [{t_a:.9g}, {t_b:.9g}] s)"
        )


# ═══════════════════════════════════════════════════════════════════════
# Propagators
# ═══════════════════════════════════════════════════════════════════════

def _field_mid(schedule: FieldSchedule, t: float) -> FieldVector:
    t = min(max(t, schedule.t_start), schedule.t_end)
    return FieldVector(*schedule.components(t))


def pulse_unitary(model: ClockModel, b: FieldVector, duration: float) -> np.ndarray:
    return unitary_from_hamiltonian(rotating_frame_hamiltonian(model, b, microwave_on=True), duration)


def _manifold_quaternion(gamma: float, schedule: FieldSchedule, t_a: float, t_b: float,
                         cfg: EvolutionConfig, spin_bound: float) -> su2.Quaternion:
    if schedule.kind == "constant" and not schedule.time_reversed:
        w = 2.0 * math.pi * gamma * (t_b - t_a)
        bx, by, bz = schedule.constant
        return su2.rotation_quaternion(w * bx, w * by, w * bz)
    return evolve_propagator(gamma, schedule, t_a, t_b, cfg, spin_bound=spin_bound).quaternion


@lru_cache(maxsize=64)
def _interrogation_zeeman_cached(gamma_f1: float, gamma_f2: float, schedule: FieldSchedule,
                                 t_a: float, t_b: float, cfg: EvolutionConfig) -> np.ndarray:
    if t_b <= t_a:
        u = np.eye(8, dtype=complex)
    else:
        q1 = _manifold_quaternion(gamma_f1, schedule, t_a, t_b, cfg, 1.0)
        q2 = _manifold_quaternion(gamma_f2, schedule, t_a, t_b, cfg, 2.0)
        u = clock_direct_sum(su2.lift_to_spin(q1, manifold_operators(2)),
                             su2.lift_to_spin(q2, manifold_operators(4)))
    u.setflags(write=False)
    return u


def interrogation_zeeman(model: ClockModel, seq: RamseySequence,
                         cfg: EvolutionConfig = EvolutionConfig()) -> np.ndarray:
    """Detuning-independent Zeeman propagator Z₁ ⊕ Z₂ over the interrogation."""
    t_a, t_b = seq.free_window
    return _interrogation_zeeman_cached(model.gamma_f1, model.gamma_f2, seq.schedule, t_a, t_b, cfg)


# ═══════════════════════════════════════════════════════════════════════
# Ramsey
# ═══════════════════════════════════════════════════════════════════════

def ramsey_final_state(
    model: ClockModel,
    seq: RamseySequence,
    cfg: EvolutionConfig = EvolutionConfig(),
    zeeman: np.ndarray | None = None,
) -> StateVector:
    """Full 8-level state after pulse 1 → interrogation → pulse 2."""
    validate_sequence(seq)
    if zeeman is None:
        zeeman = interrogation_zeeman(model, seq, cfg)
    mid1, mid2 = seq.pulse_midpoints
    psi = prepare_initial_state()
    amps = pulse_unitary(model, _field_mid(seq.schedule, mid1), seq.pulse1_duration) @ psi.amplitudes
    amps = zeeman @ amps
    free = max(seq.free_time, 0.0)
    if free > 0:
        amps = unitary_from_hamiltonian(detuning_hamiltonian(model), free) @ amps
    amps = pulse_unitary(model, _field_mid(seq.schedule, mid2), seq.pulse2_duration) @ amps
    return StateVector(amps, psi.labels)


def run_ramsey(
    model: ClockModel,
    seq: RamseySequence,
    cfg: EvolutionConfig = EvolutionConfig(),
    decay_free_s: float | None = None,
    zeeman: np.ndarray | None = None,
) -> float:
    """Population of |2,0⟩ at the end of the sequence."""
    state = ramsey_final_state(model, seq, cfg, zeeman)
    p = abs(state.amplitudes[model.upper_index]) ** 2
    return apply_envelope(p, seq.interrogation_time, decay_free_s)


def _ramsey_point(detuning_hz: float, model_factory, seq: RamseySequence,
                  cfg: EvolutionConfig, zeeman: np.ndarray, decay_free_s: float | None):
    model = model_factory(detuning_hz)
    return (float(detuning_hz), float(run_ramsey(model, seq, cfg, decay_free_s, zeeman)))


def scan_ramsey(
    model_factory,
    detunings,
    seq: RamseySequence,
    cfg: EvolutionConfig = EvolutionConfig(),
    workers: int = 1,
    decay_free_s: float | None = None,
) -> FringeScan:
    """
    run_ramsey at every detuning, in input order.

    Args:
        model_factory: detuning_hz → ClockModel; must be picklable for workers > 1
    """
    detunings = [float(d) for d in detunings]
    if not detunings:
        raise RamseyError("detuning list is empty")
    validate_sequence(seq)
    reference = model_factory(detunings[0])
    zeeman = interrogation_zeeman(reference, seq, cfg)
    point = partial(_ramsey_point, model_factory=model_factory, seq=seq, cfg=cfg,
                    zeeman=zeeman, decay_free_s=decay_free_s)
    points = parallel_map(point, detunings, workers)
    logger.info("Ramsey scan: %d detunings, T = %.6g s, schedule %s",
                len(points), seq.interrogation_time, seq.schedule.kind)
    return FringeScan(points=points, sequence=seq, model=reference)


# ═══════════════════════════════════════════════════════════════════════
# Rabi
# ═══════════════════════════════════════════════════════════════════════

def simulate_rabi(
    model: ClockModel,
    durations,
    b_bias: FieldVector,
    decay_driven_s: float | None = None,
    fit: bool = True,
) -> RabiScan:
    """
    p_f2(τ) under continuous drive from |2,0⟩, with an optional contrast envelope.
    The frequency fit needs at least eight durations.
    """
    durations = [float(t) for t in durations]
    if any(t < 0 for t in durations):
        raise RamseyError("pulse durations must be non-negative")
    psi0 = prepare_initial_state().amplitudes
    evals, evecs = linalg.eigh(rotating_frame_hamiltonian(model, b_bias, microwave_on=True))
    c0 = evecs.conj().T @ psi0
    row = evecs[model.upper_index]
    points = []
    for tau in durations:
        amp = row @ (np.exp(-1j * evals * tau) * c0)
        p = apply_envelope(float(abs(amp) ** 2), tau, decay_driven_s)
        points.append((tau, p))
    scan = RabiScan(points=points, model=model, bias=b_bias)
    if fit and len(points) >= 8:
        scan = replace(scan, fit=fit_rabi(scan))
    return scan


def fit_rabi(scan: RabiScan) -> CosineFit:
    x = np.array([t for t, _ in scan.points])
    y = np.array([p for _, p in scan.points])
    result = fit_cosine(x, y)
    logger.info("Rabi fit: %.6g Hz (configured %.6g Hz)", result.frequency, scan.model.rabi_hz)
    return result


# ═══════════════════════════════════════════════════════════════════════
# Visibility degradation
# ═══════════════════════════════════════════════════════════════════════

def visibility_vs_gap(
    model_factory,
    seq_template: RamseySequence,
    b_min_list,
    detunings,
    cfg: EvolutionConfig = EvolutionConfig(),
    workers: int = 1,
) -> list[VisibilityPoint]:
    """
    For each b_min: adiabatic reversal scan, fringe fit, visibility and
    phase shift against a constant-bias baseline of identical timing.
    """
    template = seq_template.schedule
    if template.kind != "smooth_reversal":
        raise RamseyError(f"visibility sweep needs a smooth reversal template, got {template.kind}")
    b_min_list = [float(b) for b in b_min_list]
    if any(not b > 0 for b in b_min_list):
        raise RamseyError(f"b_min values must be positive, got {b_min_list}")

    base_seq = matching_baseline(seq_template, template.b0)
    base_fit = fit_fringe(scan_ramsey(model_factory, detunings, base_seq, cfg, workers),
                          seq_template.interrogation_time)
    rows = []
    for b_min in b_min_list:
        seq = replace(seq_template, schedule=with_b_min(template, b_min))
        scan = scan_ramsey(model_factory, detunings, seq, cfg, workers)
        fit = fit_fringe(scan, seq_template.interrogation_time)
        shift = phase_shift(fit, base_fit)
        topo = topological_class(phase_from_fringes(shift, fit.r_squared))
        logger.info("b_min = %.4g G: visibility %.4f, contrast %.4f, shift %.4f rad (%s)",
                    b_min, fit.visibility, fit.contrast, shift, topo.label)
        rows.append(VisibilityPoint(b_min, fit.visibility, fit.contrast, shift, topo, fit, scan))
    return rows


def visibility_ordered(rows: list[VisibilityPoint], flat_tol: float = VISIBILITY_FLAT_TOL) -> bool:
    """
    Whether A/C degrades as the gap shrinks.

    Rows are ordered by decreasing b_min. Neighbouring visibilities may be
    equal within flat_tol, since the coherent model keeps A/C at 1 while the
    reversal stays adiabatic. The smallest field must still lose more than
    flat_tol against the largest.
    """
    if len(rows) < 2:
        return True
    by_field = sorted(rows, key=lambda r: r.b_min_g, reverse=True)
    steps_ok = all(b.visibility <= a.visibility + flat_tol for a, b in zip(by_field, by_field[1:]))
    return steps_ok and by_field[-1].visibility < by_field[0].visibility - flat_tol


def contrast_decreasing(rows: list[VisibilityPoint]) -> bool:
    """Strict fall of the fringe contrast 2A with decreasing b_min."""
    by_field = sorted(rows, key=lambda r: r.b_min_g, reverse=True)
    return all(a.contrast > b.contrast for a, b in zip(by_field, by_field[1:]))
