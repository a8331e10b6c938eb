"""
Reversal — m=0 state carried through one field reversal, with its phase split
and topological class.

Includes:
    - gamma_for_manifold: F → gyromagnetic ratio
    - run_reversal: evolve |F,0⟩ over the schedule domain, decompose and classify
    - oracle_check: fixed-step reference comparison for the same run
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass

from analysis.dynamics import EvolutionConfig, EvolutionResult, evolve, oracle_evolve, state_difference
from analysis.phase_analysis import (
    PhaseDecomposition,
    TopologicalClass,
    decompose_phase,
    instantaneous_m0_state,
    topological_class,
)
from config.constants import GAMMA_F1_HZ_PER_G, GAMMA_F2_HZ_PER_G, ORACLE_DT_S
from features.field_schedules import (
    AdiabaticityReport,
    FieldSchedule,
    NoReversalWindowError,
    adiabaticity_ratio,
    field_at,
)
from models.spin_algebra import SpinQuantumNumber, basis_state, build_spin_operators, overlap
from models.zeeman_model import ZeemanParams

logger = logging.getLogger(__name__)


class ReversalError(Exception):
    pass


@dataclass(frozen=True, eq=False)
class ReversalOutcome:
    f: int
    schedule_kind: str
    decomposition: PhaseDecomposition
    topology: TopologicalClass
    adiabaticity: AdiabaticityReport | None
    adiabatic_fidelity: float
    steps_taken: int
    steps_rejected: int
    max_norm_defect: float
    result: EvolutionResult

    def as_report(self, prefix: str) -> dict:
        d = self.decomposition
        report = {
            f"{prefix}.total_phase_rad": d.total_phase,
            f"{prefix}.dynamical_phase_rad": d.dynamical_phase,
            f"{prefix}.geometric_phase_rad": d.geometric_phase,
            f"{prefix}.return_fidelity": d.return_fidelity,
            f"{prefix}.adiabatic_fidelity": self.adiabatic_fidelity,
            f"{prefix}.class": self.topology.label,
            f"{prefix}.residual_rad": self.topology.residual,
            f"{prefix}.steps": self.steps_taken,
            f"{prefix}.max_norm_defect": self.max_norm_defect,
        }
        if self.adiabaticity is not None:
            report[f"{prefix}.adiabaticity_ratio"] = self.adiabaticity.ratio
            report[f"{prefix}.regime"] = self.adiabaticity.classification
        return report


def gamma_for_manifold(f: int, gamma_f1: float = GAMMA_F1_HZ_PER_G,
                       gamma_f2: float = GAMMA_F2_HZ_PER_G) -> float:
    gammas = {1: gamma_f1, 2: gamma_f2}
    if f not in gammas:
        raise ReversalError(f"no gyromagnetic ratio for F={f}; the ground state has F=1 and F=2")
    return gammas[f]


def run_reversal(
    f: int,
    gamma_hz_per_gauss: float,
    schedule: FieldSchedule,
    cfg: EvolutionConfig = EvolutionConfig(),
) -> ReversalOutcome:
    """
    Carry |F, m=0⟩ from schedule.t_start to schedule.t_end.

    Returns:
        ReversalOutcome; the class is "undefined" rather than an error when
        the return fidelity is too low.
    """
    ops = build_spin_operators(SpinQuantumNumber.from_f(f))
    z = ZeemanParams(gamma_hz_per_gauss)
    initial = basis_state(ops.labels, f, 0)
    result = evolve(initial, ops, z, schedule, schedule.t_start, schedule.t_end, cfg, record=True)
    decomposition = decompose_phase(initial, result)
    topology = topological_class(decomposition)

    final_field = field_at(schedule, schedule.t_end)
    tracked = instantaneous_m0_state(ops, final_field)
    adiabatic_fidelity = abs(overlap(tracked, result.final_state))

    try:
        adiabaticity = adiabaticity_ratio(schedule, gamma_hz_per_gauss)
    except NoReversalWindowError:
        adiabaticity = None

    logger.info("F=%d %s: total %.6f rad, geometric %.6f rad, fidelity %.6f → %s",
                f, schedule.kind, decomposition.total_phase, decomposition.geometric_phase,
                decomposition.return_fidelity, topology.label)
    if topology.label == "undefined":
        logger.warning("F=%d %s: topological class undefined (fidelity %.3g, residual %.3g)",
                       f, schedule.kind, topology.fidelity, topology.residual)
    return ReversalOutcome(
        f=f,
        schedule_kind=schedule.kind,
        decomposition=decomposition,
        topology=topology,
        adiabaticity=adiabaticity,
        adiabatic_fidelity=adiabatic_fidelity,
        steps_taken=result.steps_taken,
        steps_rejected=result.steps_rejected,
        max_norm_defect=result.max_norm_defect,
        result=result,
    )


def oracle_check(outcome: ReversalOutcome, gamma_hz_per_gauss: float, schedule: FieldSchedule,
                 dt: float = ORACLE_DT_S) -> float:
    """‖ψ_adaptive − ψ_oracle‖ at the end of the schedule."""
    ops = build_spin_operators(SpinQuantumNumber.from_f(outcome.f))
    initial = basis_state(ops.labels, outcome.f, 0)
    reference = oracle_evolve(initial, ops, ZeemanParams(gamma_hz_per_gauss), schedule,
                              schedule.t_start, schedule.t_end, dt=dt)
    diff = state_difference(outcome.result.final_state, reference)
    if not math.isfinite(diff):
        raise ReversalError("oracle comparison produced a non-finite difference")
    return diff
