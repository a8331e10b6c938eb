"""
Robustness Suite — topological class of m=0 reversals under seeded path perturbations.

For every F, the unperturbed smooth reversal fixes the reference class; each
perturbed path (amplitude = fraction·b_min, random mode phases from a derived
seed) must land in the same class. The raw phase is allowed to move.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from functools import partial

import numpy as np

from analysis.dynamics import EvolutionConfig
from analysis.parallel import parallel_map
from analysis.reversal import run_reversal
from config.constants import (
    DEFAULT_ROBUSTNESS_FRACTION,
    DEFAULT_ROBUSTNESS_MODES,
    DEFAULT_ROBUSTNESS_PATHS,
)
from features.field_schedules import FieldSchedule, GapClosedError, perturb_schedule

logger = logging.getLogger(__name__)


class RobustnessError(Exception):
    pass


@dataclass(frozen=True)
class RobustnessRow:
    f: int
    path_index: int
    seed: int
    min_field_g: float
    total_phase: float
    geometric_phase: float
    dynamical_phase: float
    fidelity: float
    topological_class: str
    preserved: bool


@dataclass
class RobustnessReport:
    rows: list = field(default_factory=list)
    reference_class: dict = field(default_factory=dict)     # F → class of the unperturbed path

    def preserved_count(self, f: int) -> int:
        return sum(1 for r in self.rows if r.f == f and r.preserved)

    def path_count(self, f: int) -> int:
        return sum(1 for r in self.rows if r.f == f)

    def all_preserved(self) -> bool:
        return all(r.preserved for r in self.rows)

    def summary(self) -> dict:
        out = {}
        for f in sorted(self.reference_class):
            out[f"f{f}.reference_class"] = self.reference_class[f]
            out[f"f{f}.preserved"] = self.preserved_count(f)
            out[f"f{f}.paths"] = self.path_count(f)
        return out


def path_seeds(seed: int, n_paths: int) -> list[int]:
    """Independent per-path seeds derived from one base seed."""
    return [int(s) for s in np.random.SeedSequence(seed).generate_state(n_paths)]


def _run_path(task, schedule: FieldSchedule, amplitude: float, n_modes: int,
              gammas: dict, cfg: EvolutionConfig, reference: dict) -> RobustnessRow:
    f, index, path_seed = task
    try:
        path = perturb_schedule(schedule, path_seed, amplitude, n_modes)
    except GapClosedError as exc:
        logger.warning("F=%d path %d (seed %d): %s", f, index, path_seed, exc)
        return RobustnessRow(f, index, path_seed, math.nan, math.nan, math.nan, math.nan,
                             0.0, "gap_closed", False)
    outcome = run_reversal(f, gammas[f], path, cfg)
    d = outcome.decomposition
    floor = path.min_field_g if path.min_field_g is not None else schedule.b_min
    return RobustnessRow(
        f=f,
        path_index=index,
        seed=path_seed,
        min_field_g=floor,
        total_phase=d.total_phase,
        geometric_phase=d.geometric_phase,
        dynamical_phase=d.dynamical_phase,
        fidelity=d.return_fidelity,
        topological_class=outcome.topology.label,
        preserved=outcome.topology.label == reference[f],
    )


def robustness_suite(
    f_values,
    schedule: FieldSchedule,
    seed: int,
    gammas: dict,
    n_paths: int = DEFAULT_ROBUSTNESS_PATHS,
    amplitude_fraction: float = DEFAULT_ROBUSTNESS_FRACTION,
    n_modes: int = DEFAULT_ROBUSTNESS_MODES,
    cfg: EvolutionConfig = EvolutionConfig(),
    workers: int = 1,
) -> RobustnessReport:
    """
    Args:
        f_values:           manifolds to test, e.g. [1, 2]
        schedule:           unperturbed smooth reversal
        seed:               base seed; the same path shapes are used for every F
        gammas:             F → gyromagnetic ratio (Hz/G)
        amplitude_fraction: perturbation amplitude as a fraction of b_min

    Returns:
        RobustnessReport with one row per (F, path), in F-then-path order.
    """
    if schedule.kind != "smooth_reversal":
        raise RobustnessError(f"robustness suite perturbs smooth reversals, got {schedule.kind}")
    if n_paths < 1:
        raise RobustnessError(f"n_paths must be at least 1, got {n_paths}")
    if not 0 <= amplitude_fraction <= 1:
        raise RobustnessError(f"amplitude_fraction must lie in [0, 1], got {amplitude_fraction}")
    f_values = list(f_values)
    missing = [f for f in f_values if f not in gammas]
    if missing:
        raise RobustnessError(f"no gyromagnetic ratio given for F = {missing}")

    report = RobustnessReport()
    for f in f_values:
        outcome = run_reversal(f, gammas[f], schedule, cfg)
        report.reference_class[f] = outcome.topology.label
        logger.info("F=%d unperturbed path: class %s", f, outcome.topology.label)

    seeds = path_seeds(seed, n_paths)
    tasks = [(f, i, s) for f in f_values for i, s in enumerate(seeds)]
    runner = partial(_run_path, schedule=schedule, amplitude=amplitude_fraction * schedule.b_min,
                     n_modes=n_modes, gammas=dict(gammas), cfg=cfg,
                     reference=dict(report.reference_class))
    report.rows = parallel_map(runner, tasks, workers)

    for f in f_values:
        logger.info("F=%d: class preserved on %d/%d perturbed paths",
                    f, report.preserved_count(f), report.path_count(f))
    return report
