"""
Dynamics — unitary integration of iħ∂ψ/∂t = H(t)ψ for Zeeman Hamiltonians.

Includes:
    - EvolutionConfig / EvolutionResult
    - evolve_propagator: adaptive SU(2) propagator with step-doubling control
    - evolve: spin-F state evolution with trajectory and ⟨H⟩ record
    - oracle_evolve: fixed-step reference integrator
    - dump_trajectory_csv

The propagator of H = 2π·γ·B(t)·F is integrated once as an SU(2) element
and lifted to spin F, so every step is exactly unitary and the cost does not
grow with F. Steps never straddle a schedule breakpoint or a recording time.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field

import numpy as np
import pandas as pd

from config.constants import (
    DEFAULT_DT_INIT,
    DEFAULT_DT_MAX,
    DEFAULT_RECORD_STRIDE,
    DEFAULT_TARGET_ERROR,
    DT_FLOOR_S,
    ORACLE_DT_S,
    RECORD_QUANTUM_S,
    STEP_GROWTH_MAX,
    STEP_SAFETY,
    STEP_SHRINK_MIN,
)
from features.field_schedules import FieldSchedule, FieldVector, breakpoints
from models import su2_rotation as su2
from models.spin_algebra import SpinOperatorSet, StateVector
from models.zeeman_model import ZeemanParams, expectation_energy, zeeman_hamiltonian

logger = logging.getLogger(__name__)

SCHEME_ORDER = {"gauss4": 4, "midpoint": 2}


class EvolutionError(Exception):
    pass


class StiffnessError(EvolutionError):
    pass


@dataclass(frozen=True)
class EvolutionConfig:
    target_error: float = DEFAULT_TARGET_ERROR
    dt_init: float = DEFAULT_DT_INIT
    dt_max: float = DEFAULT_DT_MAX
    record_stride: int = DEFAULT_RECORD_STRIDE
    scheme: str = "gauss4"

    def __post_init__(self):
        if not 0 < self.target_error <= 1e-3:
            raise EvolutionError(f"target_error must lie in (0, 1e-3], got {self.target_error}")
        if not 0 < self.dt_init <= self.dt_max:
            raise EvolutionError(f"need 0 < dt_init ≤ dt_max, got {self.dt_init} and {self.dt_max}")
        if self.record_stride < 1:
            raise EvolutionError(f"record_stride must be at least 1, got {self.record_stride}")
        if self.scheme not in SCHEME_ORDER:
            raise EvolutionError(f"unknown scheme {self.scheme!r}; expected one of {tuple(SCHEME_ORDER)}")


@dataclass(frozen=True, eq=False)
class EvolutionResult:
    final_state: StateVector
    trajectory: list = field(default_factory=list)      # [(t, StateVector)]
    energy_record: list = field(default_factory=list)   # [(t, ⟨H⟩ rad/s)]
    steps_taken: int = 0
    steps_rejected: int = 0
    max_norm_defect: float = 0.0
    propagator: su2.Quaternion = su2.IDENTITY


@dataclass(frozen=True)
class PropagatorRun:
    quaternion: su2.Quaternion
    steps_taken: int
    steps_rejected: int
    max_norm_defect: float
    snapshots: tuple = ()                               # ((t, quaternion), …) at recording times


# ═══════════════════════════════════════════════════════════════════════
# SU(2) integration
# ═══════════════════════════════════════════════════════════════════════

def _stops(schedule: FieldSchedule, t0: float, t1: float, record_every: float | None) -> list[float]:
    """Sorted landing times in (t0, t1]: breakpoints, recording grid, t1."""
    stops = {t1}
    stops.update(t for t in breakpoints(schedule) if t0 < t < t1)
    if record_every:
        n = int(math.floor((t1 - t0) / record_every + 1e-9))
        stops.update(t0 + k * record_every for k in range(1, n + 1))
    ordered = sorted(stops)
    merged = []
    for t in ordered:
        if t <= t0:
            continue
        if merged and t - merged[-1] <= 1e-15 * max(1.0, abs(t)):
            merged[-1] = max(merged[-1], t)
            continue
        merged.append(t)
    if merged[-1] != t1:
        merged[-1] = t1
    return merged


def _check_window(schedule: FieldSchedule, t0: float, t1: float):
    if not t0 < t1:
        raise EvolutionError(f"need t0 < t1, got {t0} and {t1}")
    if not (schedule.contains(t0) and schedule.contains(t1)):
        raise EvolutionError(
            f"interval [{t0:.9g}, {t1:.9g}] s exceeds schedule domain "
            f"[{schedule.t_start:.9g}, {schedule.t_end:.9g}]"
        )


def evolve_propagator(
    gamma_hz_per_gauss: float,
    schedule: FieldSchedule,
    t0: float,
    t1: float,
    cfg: EvolutionConfig = EvolutionConfig(),
    spin_bound: float = 2.0,
    record: bool = False,
) -> PropagatorRun:
    """
    Adaptive SU(2) propagator U(t1, t0) for H = 2π·γ·B(t)·σ/2.

    Step doubling: the accepted step is two half steps; the error estimate
    2F·‖q_full − q_halves‖ bounds the state error of any spin-F lift, and a
    step is accepted when it is below target_error·dt/(t1 − t0).

    Args:
        spin_bound: largest F the propagator will be lifted to
        record:     keep snapshots at every recording time

    Raises:
        StiffnessError: the controller asks for dt below 1e-12 s.
    """
    _check_window(schedule, t0, t1)
    w = 2.0 * math.pi * gamma_hz_per_gauss
    field_of = schedule.components
    scheme = cfg.scheme
    order = SCHEME_ORDER[scheme]
    exponent = 1.0 / order
    c1, c2 = su2.GAUSS_NODES
    tol_rate = cfg.target_error / (t1 - t0)
    weight = 2.0 * spin_bound
    rounding_floor = 64.0 * 2.2e-16 * weight

    def v(t):
        bx, by, bz = field_of(t)
        return (w * bx, w * by, w * bz)

    if scheme == "gauss4":
        def step(t, h):
            return su2.gauss4_step(v(t + c1 * h), v(t + c2 * h), h)
    else:
        def step(t, h):
            return su2.midpoint_step(v(t + 0.5 * h), h)

    record_every = RECORD_QUANTUM_S * cfg.record_stride if record else None
    stops = _stops(schedule, t0, t1, record_every)
    snapshots = [(t0, su2.IDENTITY)] if record else []

    q = su2.IDENTITY
    t = t0
    dt = cfg.dt_init
    taken = rejected = 0
    max_defect = 0.0

    for stop in stops:
        while t < stop:
            h = min(dt, cfg.dt_max)
            last = stop - t <= h * (1.0 + 1e-9)
            if last:
                h = stop - t
            full = step(t, h)
            half = 0.5 * h
            halves = su2.compose(step(t + half, half), step(t, half))
            err = weight * su2.distance(full, halves)
            allowed = max(tol_rate * h, rounding_floor)

            if err <= allowed:
                q = su2.compose(halves, q)
                max_defect = max(max_defect, su2.norm_defect(q))
                q = su2.normalized(q)
                t = stop if last else t + h
                taken += 1
                factor = STEP_GROWTH_MAX if err == 0.0 else STEP_SAFETY * (allowed / err) ** exponent
                # a short landing step says nothing about the step size the path allows
                if not last or h >= dt:
                    dt = h * min(STEP_GROWTH_MAX, max(STEP_SHRINK_MIN, factor))
            else:
                rejected += 1
                dt = h * max(STEP_SHRINK_MIN, STEP_SAFETY * (allowed / err) ** exponent)
                if dt < DT_FLOOR_S:
                    raise StiffnessError(
                        f"stiffness: schedule varies faster than resolvable at t = {t:.9g} s "
                        f"(dt = {dt:.3g} s below {DT_FLOOR_S:g} s)"
                    )
        if record:
            snapshots.append((stop, q))

    logger.debug("propagator %s [%.6g, %.6g] s: %d steps, %d rejected, defect %.2e",
                 scheme, t0, t1, taken, rejected, max_defect)
    return PropagatorRun(q, taken, rejected, max_defect, tuple(snapshots))


# ═══════════════════════════════════════════════════════════════════════
# Spin-F evolution
# ═══════════════════════════════════════════════════════════════════════

def _check_initial(initial: StateVector, ops: SpinOperatorSet):
    if initial.dim != ops.dim or (initial.labels and initial.labels != ops.labels):
        raise EvolutionError(f"initial state of dimension {initial.dim} does not match spin F={ops.f.value}")
    if abs(initial.norm() - 1.0) > 1e-10:
        raise EvolutionError(f"initial state must be normalized, norm = {initial.norm():.12g}")


def evolve(
    initial: StateVector,
    ops: SpinOperatorSet,
    z: ZeemanParams,
    schedule: FieldSchedule,
    t0: float,
    t1: float,
    cfg: EvolutionConfig = EvolutionConfig(),
    record: bool = True,
) -> EvolutionResult:
    """
    Evolve a spin-F state from t0 to t1 under H(t) = 2π·γ·B(t)·F.

    Returns:
        EvolutionResult with trajectory and ⟨H⟩ sampled every record_stride μs
        (first sample at t0, last at t1).
    """
    _check_initial(initial, ops)
    run = evolve_propagator(z.gamma_hz_per_gauss, schedule, t0, t1, cfg,
                            spin_bound=float(ops.f.value), record=record)
    labels = initial.labels or ops.labels
    psi0 = initial.amplitudes

    trajectory, energies = [], []
    max_defect = run.max_norm_defect
    for t, q in run.snapshots:
        state = StateVector(su2.lift_to_spin(q, ops) @ psi0, labels)
        max_defect = max(max_defect, abs(state.norm() - 1.0))
        b = FieldVector(*schedule.components(t))
        trajectory.append((t, state))
        energies.append((t, expectation_energy(state, zeeman_hamiltonian(ops, z, b))))

    if record:
        final = trajectory[-1][1]
    else:
        final = StateVector(su2.lift_to_spin(run.quaternion, ops) @ psi0, labels)
        max_defect = max(max_defect, abs(final.norm() - 1.0))

    return EvolutionResult(
        final_state=final,
        trajectory=trajectory,
        energy_record=energies,
        steps_taken=run.steps_taken,
        steps_rejected=run.steps_rejected,
        max_norm_defect=max_defect,
        propagator=run.quaternion,
    )


def oracle_evolve(
    initial: StateVector,
    ops: SpinOperatorSet,
    z: ZeemanParams,
    schedule: FieldSchedule,
    t0: float,
    t1: float,
    dt: float = ORACLE_DT_S,
    scheme: str = "midpoint",
) -> StateVector:
    """
    Fixed-step reference: every breakpoint interval is split into equal steps
    of at most dt.
    """
    _check_initial(initial, ops)
    _check_window(schedule, t0, t1)
    w = 2.0 * math.pi * z.gamma_hz_per_gauss
    field_of = schedule.components
    c1, c2 = su2.GAUSS_NODES

    def v(t):
        bx, by, bz = field_of(t)
        return (w * bx, w * by, w * bz)

    q = su2.IDENTITY
    edges = [t0] + _stops(schedule, t0, t1, None)
    for a, b in zip(edges, edges[1:]):
        n = max(1, int(math.ceil((b - a) / dt - 1e-9)))
        h = (b - a) / n
        for k in range(n):
            t = a + k * h
            if scheme == "gauss4":
                s = su2.gauss4_step(v(t + c1 * h), v(t + c2 * h), h)
            else:
                s = su2.midpoint_step(v(t + 0.5 * h), h)
            q = su2.compose(s, q)
        q = su2.normalized(q)
    return StateVector(su2.lift_to_spin(q, ops) @ initial.amplitudes, initial.labels or ops.labels)


# ═══════════════════════════════════════════════════════════════════════
# Trajectory export
# ═══════════════════════════════════════════════════════════════════════

def trajectory_frame(result: EvolutionResult) -> pd.DataFrame:
    if not result.trajectory:
        raise EvolutionError("result carries no trajectory; evolve with record=True")
    dim = result.final_state.dim
    rows = []
    for t, state in result.trajectory:
        row = [t]
        for c in state.amplitudes:
            row.extend((c.real, c.imag))
        rows.append(row)
    cols = ["t_s"] + [f"{part}_c{i}" for i in range(dim) for part in ("re", "im")]
    return pd.DataFrame(rows, columns=cols)


def dump_trajectory_csv(result: EvolutionResult, path) -> None:
    """CSV `t_s,re_c0,im_c0,...`, one row per recorded sample."""
    trajectory_frame(result).to_csv(path, index=False, lineterminator="\n")


def state_difference(a: StateVector, b: StateVector) -> float:
    """Global-phase-sensitive vector distance ‖a − b‖."""
    return float(np.linalg.norm(a.amplitudes - b.amplitudes))
