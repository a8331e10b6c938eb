"""
Field Schedules — time-parameterised magnetic-field paths B(t).

Includes:
    - constant fields
    - smooth (adiabatic) reversals: bz = b0·cos(πs), b_⊥ = b_min·sin(πs)
    - sudden reversals: 2 μs linear bz ramp under a constant residual bx
    - sampled traces (piecewise-linear replay of digitised field records)
    - seeded perturbations of smooth reversals
    - minimum Zeeman gap, adiabaticity ratio and its classification

Schedules are frozen (hashable) values, so propagators computed from them
can be cached and shared across scan workers.
"""

from __future__ import annotations

import bisect
import logging
import math
from dataclasses import dataclass, field, replace

import numpy as np

from config.constants import (
    ADIABATIC_RATIO_HI,
    ADIABATIC_RATIO_LO,
    DEFAULT_SUDDEN_RAMP_S,
    GAP_CLOSED_FRACTION,
    GAP_REL_ACCURACY,
    GAP_SAMPLES,
    TWO_PI,
)

logger = logging.getLogger(__name__)

KINDS = ("constant", "smooth_reversal", "sudden_reversal", "sampled_trace", "perturbed")
TRANSVERSE_AXES = ("x", "y")
GOLDEN = (math.sqrt(5.0) - 1.0) / 2.0


class ScheduleError(Exception):
    pass


class ScheduleDomainError(ScheduleError):
    pass


class GapClosedError(ScheduleError):
    pass


class NoReversalWindowError(ScheduleError):
    pass


# ═══════════════════════════════════════════════════════════════════════
# Domain types
# ═══════════════════════════════════════════════════════════════════════

@dataclass(frozen=True)
class FieldVector:
    """Magnetic field in gauss."""
    bx: float
    by: float
    bz: float

    def __post_init__(self):
        for name in ("bx", "by", "bz"):
            v = getattr(self, name)
            if not math.isfinite(v):
                raise ScheduleError(f"field component {name} must be finite, got {v}")

    def magnitude(self) -> float:
        return math.sqrt(self.bx ** 2 + self.by ** 2 + self.bz ** 2)

    def as_tuple(self) -> tuple[float, float, float]:
        return (self.bx, self.by, self.bz)


@dataclass(frozen=True)
class FieldSchedule:
    kind: str
    t_start: float
    t_end: float
    # constant
    constant: tuple[float, float, float] = (0.0, 0.0, 0.0)
    # smooth / sudden reversal
    b0: float = 0.0
    b_min: float = 0.0
    delta_tau: float = 0.0
    t_center: float = 0.0
    transverse_axis: str = "x"
    residual_transverse: float = 0.0
    # sampled trace
    times: tuple[float, ...] = ()
    samples: tuple[tuple[float, float, float], ...] = ()
    # perturbed
    base: FieldSchedule | None = None
    seed: int | None = None
    amplitude: float = 0.0
    phases: tuple[tuple[float, ...], ...] = ()
    min_field_g: float | None = field(default=None, compare=False)

    time_reversed: bool = False

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ScheduleError(f"unknown schedule kind {self.kind!r}; expected one of {KINDS}")
        if not (math.isfinite(self.t_start) and math.isfinite(self.t_end)) or self.t_end <= self.t_start:
            raise ScheduleError(f"schedule domain [{self.t_start}, {self.t_end}] is empty")

    # ── evaluation ──
    def contains(self, t: float) -> bool:
        return self.t_start <= t <= self.t_end

    def components(self, t: float) -> tuple[float, float, float]:
        """(bx, by, bz) at t without the domain check; hot path of the integrator."""
        if self.time_reversed:
            t = self.t_start + self.t_end - t
        return _EVALUATORS[self.kind](self, t)


# ═══════════════════════════════════════════════════════════════════════
# Per-kind evaluation
# ═══════════════════════════════════════════════════════════════════════

def _constant(s: FieldSchedule, t: float):
    return s.constant


def _smooth(s: FieldSchedule, t: float):
    u = (t - (s.t_center - 0.5 * s.delta_tau)) / s.delta_tau
    if u <= 0.0:
        return (0.0, 0.0, s.b0)
    if u >= 1.0:
        return (0.0, 0.0, -s.b0)
    bz = s.b0 * math.cos(math.pi * u)
    bt = s.b_min * math.sin(math.pi * u)
    if s.transverse_axis == "y":
        return (0.0, bt, bz)
    return (bt, 0.0, bz)


def _sudden(s: FieldSchedule, t: float):
    start = s.t_center - 0.5 * s.delta_tau
    if t <= start:
        bz = s.b0
    elif t >= start + s.delta_tau:
        bz = -s.b0
    else:
        bz = s.b0 * (1.0 - 2.0 * (t - start) / s.delta_tau)
    return (s.residual_transverse, 0.0, bz)


def _trace(s: FieldSchedule, t: float):
    times = s.times
    if t <= times[0]:
        return s.samples[0]
    if t >= times[-1]:
        return s.samples[-1]
    k = bisect.bisect_right(times, t)
    t0, t1 = times[k - 1], times[k]
    w = (t - t0) / (t1 - t0)
    a, b = s.samples[k - 1], s.samples[k]
    return (a[0] + w * (b[0] - a[0]), a[1] + w * (b[1] - a[1]), a[2] + w * (b[2] - a[2]))


def _perturbed(s: FieldSchedule, t: float):
    bx, by, bz = _EVALUATORS[s.base.kind](s.base, t)
    start, end = reversal_window(s.base)
    u = (t - start) / (end - start)
    if u <= 0.0 or u >= 1.0:
        return (bx, by, bz)
    env = s.amplitude / len(s.phases[0]) * math.sin(math.pi * u)
    out = [bx, by, bz]
    for c, comp_phases in enumerate(s.phases):
        acc = 0.0
        for k, phi in enumerate(comp_phases, start=1):
            acc += math.cos(TWO_PI * k * u + phi)
        out[c] += env * acc
    return (out[0], out[1], out[2])


_EVALUATORS = {
    "constant": _constant,
    "smooth_reversal": _smooth,
    "sudden_reversal": _sudden,
    "sampled_trace": _trace,
    "perturbed": _perturbed,
}


# ═══════════════════════════════════════════════════════════════════════
# Constructors
# ═══════════════════════════════════════════════════════════════════════

def make_constant(b: FieldVector, t_start: float, t_end: float) -> FieldSchedule:
    return FieldSchedule("constant", t_start, t_end, constant=b.as_tuple())


def make_smooth_reversal(
    b0: float,
    b_min: float,
    delta_tau: float,
    t_flip_center: float,
    transverse_axis: str = "x",
    t_start: float | None = None,
    t_end: float | None = None,
) -> FieldSchedule:
    """
    Adiabatic reversal (0,0,+b0) → (0,0,−b0) over a window of length delta_tau
    centred on t_flip_center. |B| never drops below b_min.

    Without explicit t_start/t_end the domain is the reversal window itself.
    """
    if not b0 > 0:
        raise ScheduleError(f"b0 must be positive, got {b0}")
    if not b_min > 0:
        raise ScheduleError(f"b_min must be positive (|B(t)| ≠ 0 along the path), got {b_min}")
    if not delta_tau > 0:
        raise ScheduleError(f"delta_tau must be positive, got {delta_tau}")
    if transverse_axis not in TRANSVERSE_AXES:
        raise ScheduleError(f"transverse_axis must be 'x' or 'y', got {transverse_axis!r}")
    t_start = t_flip_center - 0.5 * delta_tau if t_start is None else t_start
    t_end = t_flip_center + 0.5 * delta_tau if t_end is None else t_end
    return FieldSchedule(
        "smooth_reversal", t_start, t_end,
        b0=b0, b_min=b_min, delta_tau=delta_tau, t_center=t_flip_center,
        transverse_axis=transverse_axis,
    )


def make_sudden_reversal(
    b0: float,
    t_flip: float,
    residual_transverse: float,
    ramp_duration: float = DEFAULT_SUDDEN_RAMP_S,
    t_start: float | None = None,
    t_end: float | None = None,
) -> FieldSchedule:
    """bz ramps linearly +b0 → −b0 over ramp_duration centred on t_flip; bx = residual."""
    if not b0 > 0:
        raise ScheduleError(f"b0 must be positive, got {b0}")
    if not residual_transverse >= 0:
        raise ScheduleError(f"residual_transverse must be non-negative, got {residual_transverse}")
    if not ramp_duration > 0:
        raise ScheduleError(f"ramp_duration must be positive, got {ramp_duration}")
    t_start = t_flip - 0.5 * ramp_duration if t_start is None else t_start
    t_end = t_flip + 0.5 * ramp_duration if t_end is None else t_end
    return FieldSchedule(
        "sudden_reversal", t_start, t_end,
        b0=b0, delta_tau=ramp_duration, t_center=t_flip,
        residual_transverse=residual_transverse,
    )


def make_sampled_trace(times, fields) -> FieldSchedule:
    """
    Piecewise-linear replay of (t, B) samples.

    Args:
        times:  strictly increasing sample times (s), at least two
        fields: matching (bx, by, bz) samples in gauss
    """
    ts = [float(t) for t in times]
    bs = [tuple(float(c) for c in b) for b in fields]
    if len(ts) < 2:
        raise ScheduleError(f"sampled trace needs at least 2 samples, got {len(ts)}")
    if len(bs) != len(ts):
        raise ScheduleError(f"{len(ts)} sample times but {len(bs)} field samples")
    if any(len(b) != 3 for b in bs):
        raise ScheduleError("every field sample needs three components (bx, by, bz)")
    if not all(math.isfinite(v) for v in ts) or not all(math.isfinite(v) for b in bs for v in b):
        raise ScheduleError("sampled trace contains non-finite values")
    if any(b <= a for a, b in zip(ts, ts[1:])):
        raise ScheduleError("sample times must be strictly increasing")
    return FieldSchedule("sampled_trace", ts[0], ts[-1], times=tuple(ts), samples=tuple(bs))


def with_b_min(schedule: FieldSchedule, b_min: float) -> FieldSchedule:
    """Same smooth reversal with a different minimum field."""
    if schedule.kind != "smooth_reversal":
        raise ScheduleError(f"b_min applies to smooth reversals, not {schedule.kind}")
    if not b_min > 0:
        raise ScheduleError(f"b_min must be positive (|B(t)| ≠ 0 along the path), got {b_min}")
    return replace(schedule, b_min=b_min)


def time_reversed(schedule: FieldSchedule) -> FieldSchedule:
    """
    B_rev(t) = B(t_start + t_end − t) on the same domain.

    Evolving under the mirrored schedule undoes a forward run only together
    with the negated gyromagnetic ratio (`ZeemanParams.reversed()`), which
    turns each step of the mirrored path into the inverse of its forward step.
    """
    return replace(schedule, time_reversed=not schedule.time_reversed)


# ═══════════════════════════════════════════════════════════════════════
# Evaluation
# ═══════════════════════════════════════════════════════════════════════

def field_at(schedule: FieldSchedule, t: float) -> FieldVector:
    if not schedule.contains(t):
        raise ScheduleDomainError(
            f"t = {t:.9g} s outside schedule domain [{schedule.t_start:.9g}, {schedule.t_end:.9g}]"
        )
    return FieldVector(*schedule.components(t))


def sample_fields(schedule: FieldSchedule, times) -> np.ndarray:
    """(n, 3) array of field samples; every time must lie in the domain."""
    return np.array([field_at(schedule, float(t)).as_tuple() for t in times], dtype=float)


def _mirror(schedule: FieldSchedule, t: float) -> float:
    return schedule.t_start + schedule.t_end - t


def breakpoints(schedule: FieldSchedule) -> tuple[float, ...]:
    """Interior times where dB/dt is discontinuous, sorted."""
    kind = schedule.kind
    if kind == "constant":
        raw = []
    elif kind in ("smooth_reversal", "sudden_reversal"):
        half = 0.5 * schedule.delta_tau
        raw = [schedule.t_center - half, schedule.t_center + half]
    elif kind == "sampled_trace":
        raw = list(schedule.times)
    else:
        raw = list(breakpoints(replace(schedule.base, time_reversed=False)))
    if schedule.time_reversed:
        raw = [_mirror(schedule, t) for t in raw]
    return tuple(sorted(t for t in set(raw) if schedule.t_start < t < schedule.t_end))


def reversal_window(schedule: FieldSchedule) -> tuple[float, float]:
    """
    (start, end) of the field reversal.

    Sampled traces: from the last sample still within 1 % of the initial bz
    to the first sample within 1 % of the final bz, around the sign change.
    """
    kind = schedule.kind
    if kind == "constant":
        raise NoReversalWindowError("no reversal window: constant schedule")
    if kind in ("smooth_reversal", "sudden_reversal"):
        half = 0.5 * schedule.delta_tau
        start, end = schedule.t_center - half, schedule.t_center + half
    elif kind == "perturbed":
        start, end = reversal_window(replace(schedule.base, time_reversed=False))
    else:
        start, end = _trace_window(schedule)
    if schedule.time_reversed:
        start, end = _mirror(schedule, end), _mirror(schedule, start)
    return start, end


def _trace_window(schedule: FieldSchedule) -> tuple[float, float]:
    bz = [b[2] for b in schedule.samples]
    first, last = bz[0], bz[-1]
    if first == 0.0 or last == 0.0 or (first > 0) == (last > 0):
        raise NoReversalWindowError("no reversal window: bz does not change sign along the trace")
    cross = next(i for i, v in enumerate(bz) if (v > 0) != (first > 0))
    i0 = max(i for i in range(cross) if abs(bz[i] - first) <= 0.01 * abs(first))
    i1 = min(i for i in range(cross, len(bz)) if abs(bz[i] - last) <= 0.01 * abs(last))
    return schedule.times[i0], schedule.times[i1]


# ═══════════════════════════════════════════════════════════════════════
# Gap and adiabaticity
# ═══════════════════════════════════════════════════════════════════════

@dataclass(frozen=True)
class AdiabaticityReport:
    delta_tau: float
    min_gap_hz: float
    ratio: float
    classification: str


def min_field(schedule: FieldSchedule, n_samples: int = GAP_SAMPLES) -> float:
    """Minimum |B(t)| over the domain: dense sampling, then golden-section refinement."""
    if n_samples < 100:
        raise ScheduleError(f"n_samples must be at least 100, got {n_samples}")
    t0, t1 = schedule.t_start, schedule.t_end
    ts = np.linspace(t0, t1, n_samples)
    mags = np.array([_magnitude(schedule, float(t)) for t in ts])
    i = int(np.argmin(mags))
    best = float(mags[i])
    a = float(ts[max(i - 1, 0)])
    b = float(ts[min(i + 1, n_samples - 1)])
    refined = _golden_min(schedule, a, b, best)
    return min(best, refined)


def _magnitude(schedule: FieldSchedule, t: float) -> float:
    bx, by, bz = schedule.components(t)
    return math.sqrt(bx * bx + by * by + bz * bz)


def _golden_min(schedule: FieldSchedule, a: float, b: float, best: float) -> float:
    span = b - a
    c = b - GOLDEN * (b - a)
    d = a + GOLDEN * (b - a)
    fc, fd = _magnitude(schedule, c), _magnitude(schedule, d)
    for _ in range(200):
        if (b - a) <= GAP_REL_ACCURACY * 1e-6 * span:
            break
        if fc < fd:
            b, d, fd = d, c, fc
            c = b - GOLDEN * (b - a)
            fc = _magnitude(schedule, c)
        else:
            a, c, fc = c, d, fd
            d = a + GOLDEN * (b - a)
            fd = _magnitude(schedule, d)
    return min(best, fc, fd)


def min_zeeman_gap(schedule: FieldSchedule, gamma_hz_per_gauss: float, n_samples: int = GAP_SAMPLES) -> float:
    """Smallest m=0 ↔ m=±1 splitting |γ|·|B(t)| along the path, in Hz."""
    if gamma_hz_per_gauss == 0:
        raise ScheduleError("gyromagnetic ratio must be nonzero")
    return abs(gamma_hz_per_gauss) * min_field(schedule, n_samples)


def classify_ratio(ratio: float) -> str:
    if ratio > ADIABATIC_RATIO_HI:
        return "adiabatic"
    if ratio < ADIABATIC_RATIO_LO:
        return "sudden"
    return "marginal"


def adiabaticity_ratio(schedule: FieldSchedule, gamma_hz_per_gauss: float) -> AdiabaticityReport:
    """
    Δτ·ΔE/ħ = 2π·(min gap in Hz)·Δτ, with Δτ the reversal window length.

    Returns:
        AdiabaticityReport with classification adiabatic (> 10), sudden (< 0.1)
        or marginal.
    """
    start, end = reversal_window(schedule)
    delta_tau = end - start
    gap = min_zeeman_gap(schedule, gamma_hz_per_gauss)
    ratio = TWO_PI * gap * delta_tau
    report = AdiabaticityReport(
        delta_tau=delta_tau, min_gap_hz=gap, ratio=ratio, classification=classify_ratio(ratio),
    )
    logger.debug("adiabaticity %s: Δτ=%.3g s gap=%.4g Hz ratio=%.4g → %s",
                 schedule.kind, delta_tau, gap, ratio, report.classification)
    return report


# ═══════════════════════════════════════════════════════════════════════
# Perturbations
# ═══════════════════════════════════════════════════════════════════════

def perturb_schedule(
    schedule: FieldSchedule,
    seed: int,
    amplitude: float,
    n_modes: int,
    phases=None,
) -> FieldSchedule:
    """
    Add a seeded random-phase perturbation to a smooth reversal.

    Each component gets amplitude·(1/n_modes)·Σ_k sin(πs)·cos(2πks + φ_k),
    k = 1 … n_modes, which vanishes at both window edges and is bounded by
    amplitude. Phases come from numpy's default_rng(seed) unless given as a
    (3, n_modes) array.

    Raises:
        GapClosedError: when min|B| falls below 0.1·b_min.
    """
    if schedule.kind != "smooth_reversal":
        raise ScheduleError(f"only smooth reversals can be perturbed, got {schedule.kind}")
    if not amplitude >= 0:
        raise ScheduleError(f"perturbation amplitude must be non-negative, got {amplitude}")
    if n_modes < 1:
        raise ScheduleError(f"n_modes must be at least 1, got {n_modes}")
    if amplitude == 0:
        return schedule

    if phases is None:
        rng = np.random.default_rng(seed)
        phases = rng.uniform(0.0, TWO_PI, size=(3, n_modes))
    phases = np.asarray(phases, dtype=float)
    if phases.shape != (3, n_modes):
        raise ScheduleError(f"phases must have shape (3, {n_modes}), got {phases.shape}")

    perturbed = FieldSchedule(
        "perturbed", schedule.t_start, schedule.t_end,
        base=replace(schedule, time_reversed=False), seed=seed, amplitude=float(amplitude),
        phases=tuple(tuple(float(p) for p in row) for row in phases),
        time_reversed=schedule.time_reversed,
    )
    floor = min_field(perturbed)
    object.__setattr__(perturbed, "min_field_g", floor)
    logger.debug("perturbed path seed=%s amplitude=%.3g G: min|B| = %.4g G", seed, amplitude, floor)
    if floor < GAP_CLOSED_FRACTION * schedule.b_min:
        raise GapClosedError(
            f"gap closed: perturbation drives min|B| to {floor:.3g} G "
            f"(< {GAP_CLOSED_FRACTION} × b_min = {GAP_CLOSED_FRACTION * schedule.b_min:.3g} G)"
        )
    return perturbed
