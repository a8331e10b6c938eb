"""
ExperimentRunner — orchestrates one configured simulation run end to end.

Dispatches on the experiment kind, writes every artefact into the output
directory and returns a RunManifest. Artefacts per kind:
    rabi                 rabi_scan.csv (+ .svg)
    ramsey_scan          fringe_scan.csv (+ .svg); baseline_scan.csv when a reversal is set
    reversal_phase       reversal_phase.csv (+ trajectory_f<F>.csv on request)
    adiabaticity_report  adiabaticity.csv
    visibility_sweep     visibility_sweep.csv, scan_bmin_<b>.csv (+ .svg)
    robustness_suite     robustness.csv
and for every kind: fit_report.txt, config.yaml, manifest.txt.

On failure every file written by the run is removed again.
"""

from __future__ import annotations

import logging
import math
from dataclasses import asdict, dataclass, field, replace
from datetime import datetime, timezone
from functools import partial
from pathlib import Path

from analysis.dynamics import EvolutionConfig, dump_trajectory_csv
from analysis.fringe_fit import FitError, fit_fringe, phase_shift, phase_shift_stderr
from analysis.phase_analysis import parity_factor, phase_from_fringes, topological_class
from analysis.ramsey_engine import (
    RamseySequence,
    baseline_sequence,
    contrast_decreasing,
    matching_baseline,
    pi_half_duration,
    reversal_sequence,
    run_ramsey,
    scan_ramsey,
    simulate_rabi,
    visibility_ordered,
    visibility_vs_gap,
)
from analysis.reversal import run_reversal
from analysis.robustness import robustness_suite
from config.constants import TOOL_NAME, TOOL_VERSION
from config.experiment_config import ExperimentConfig, config_hash, serialize
from features.field_schedules import (
    FieldSchedule,
    FieldVector,
    adiabaticity_ratio,
    make_smooth_reversal,
    make_sudden_reversal,
    perturb_schedule,
)
from models.clock_model import ClockModel, build_clock_model
from trace_reader import load_trace_csv
from visualization.fringe_chart import write_svg
from visualization.report_generator import (
    write_report,
    write_rows_csv,
    write_scan_csv,
)

logger = logging.getLogger(__name__)

REPORT_FILE = "fit_report.txt"
MANIFEST_FILE = "manifest.txt"
CONFIG_FILE = "config.yaml"


class ExperimentError(Exception):
    def __init__(self, experiment: str, cause: Exception):
        self.experiment = experiment
        self.cause = cause
        super().__init__(f"{experiment} failed: {type(cause).__name__}: {cause}")


@dataclass
class RunManifest:
    experiment: str
    config_hash: str
    tool_version: str
    timestamp: str
    outputs: list = field(default_factory=list)
    all_converged: bool = True

    def as_entries(self) -> dict:
        return {
            "tool": TOOL_NAME,
            "tool_version": self.tool_version,
            "experiment": self.experiment,
            "config_hash": self.config_hash,
            "timestamp": self.timestamp,
            "all_converged": self.all_converged,
            "outputs": list(self.outputs),
        }


def _clock_model(detuning_hz: float, rabi_hz: float, gamma_f1: float, gamma_f2: float) -> ClockModel:
    return build_clock_model(rabi_hz, detuning_hz, gamma_f1, gamma_f2)


class ExperimentRunner:
    """Run one ExperimentConfig and collect its artefacts."""

    def __init__(self, cfg: ExperimentConfig):
        self.cfg = cfg
        self.out_dir = Path(cfg.output.directory)
        self.written: list[Path] = []
        self.report: dict = {}
        self.converged = True
        self._created_dir = False

    # ─── public entry ────────────────────────────────────────────────
    def run(self) -> RunManifest:
        kind = self.cfg.experiment
        logger.info("running %s → %s", kind, self.out_dir)
        try:
            if not self.out_dir.exists():
                self.out_dir.mkdir(parents=True)
                self._created_dir = True
            getattr(self, f"_run_{kind}")()
            self.report["all_converged"] = self.converged
            write_report(self.report, self._path(REPORT_FILE))
            with open(self._path(CONFIG_FILE), "w", encoding="utf-8", newline="\n") as fh:
                fh.write(serialize(self.cfg))
            manifest = RunManifest(
                experiment=kind,
                config_hash=config_hash(self.cfg),
                tool_version=TOOL_VERSION,
                timestamp=datetime.now(timezone.utc).isoformat(timespec="seconds"),
                outputs=[p.name for p in self.written],
                all_converged=self.converged,
            )
            write_report(manifest.as_entries(), self._path(MANIFEST_FILE))
        except Exception as exc:
            self._cleanup()
            raise ExperimentError(kind, exc) from exc
        logger.info("%s finished: %d files, converged=%s", kind, len(self.written), self.converged)
        return manifest

    # ─── helpers ─────────────────────────────────────────────────────
    def _path(self, name: str) -> Path:
        path = self.out_dir / name
        self.written.append(path)
        return path

    def _cleanup(self):
        for path in self.written:
            try:
                path.unlink()
            except FileNotFoundError:
                pass
        self.written.clear()
        if self._created_dir:
            try:
                self.out_dir.rmdir()
            except OSError:
                pass

    def _evolution_config(self) -> EvolutionConfig:
        n = self.cfg.numerics
        return EvolutionConfig(target_error=n.target_error, dt_init=n.dt_init, dt_max=n.dt_max,
                               record_stride=n.record_stride, scheme=n.scheme)

    def _model_factory(self):
        p = self.cfg.physics
        return partial(_clock_model, rabi_hz=p.rabi_hz,
                       gamma_f1=p.gamma_f1_hz_per_g, gamma_f2=p.gamma_f2_hz_per_g)

    def _pulse(self) -> float:
        p = self.cfg.physics
        return p.pulse_duration_s or pi_half_duration(p.rabi_hz)

    def _maybe_perturb(self, schedule: FieldSchedule) -> FieldSchedule:
        s = self.cfg.schedule
        if s.perturbation_amplitude_g > 0:
            schedule = perturb_schedule(schedule, self.cfg.seed, s.perturbation_amplitude_g,
                                        s.perturbation_modes)
            self.report["perturbation.seed"] = self.cfg.seed
            self.report["perturbation.min_field_g"] = schedule.min_field_g
        return schedule

    def _standalone_schedule(self, kind: str, b_min: float | None = None) -> FieldSchedule:
        """Reversal whose domain is the reversal window itself, starting at t = 0."""
        p, s = self.cfg.physics, self.cfg.schedule
        if kind == "smooth_reversal":
            return make_smooth_reversal(p.b0_g, b_min or s.b_min_g, s.delta_tau_s,
                                        0.5 * s.delta_tau_s, s.transverse_axis)
        if kind == "sudden_reversal":
            return make_sudden_reversal(p.b0_g, 0.5 * s.ramp_duration_s,
                                        s.residual_transverse_g, s.ramp_duration_s)
        if kind == "sampled_trace":
            return load_trace_csv(s.trace_path)
        raise ValueError(f"no standalone schedule for kind {kind!r}")

    def _ramsey_sequence(self) -> RamseySequence:
        p, s = self.cfg.physics, self.cfg.schedule
        if s.kind == "none":
            return baseline_sequence(p.rabi_hz, p.interrogation_time_s, p.b0_g, p.pulse_duration_s)
        if s.kind == "sampled_trace":
            tau = self._pulse()
            return RamseySequence(tau, p.interrogation_time_s, tau, load_trace_csv(s.trace_path))
        seq = reversal_sequence(
            p.rabi_hz, s.kind, p.b0_g,
            interrogation_time=p.interrogation_time_s,
            b_min=s.b_min_g,
            delta_tau=s.delta_tau_s,
            transverse_axis=s.transverse_axis,
            residual_transverse=s.residual_transverse_g,
            ramp_duration=s.ramp_duration_s,
            guard_time=p.guard_time_s,
            pulse_duration=p.pulse_duration_s,
        )
        return replace(seq, schedule=self._maybe_perturb(seq.schedule))

    def _svg(self, name: str, points, fit=None, **labels):
        if self.cfg.output.svg:
            write_svg(self._path(name), points, fit, **labels)

    def _fit_entries(self, prefix: str, fit) -> dict:
        head = f"{prefix}." if prefix else ""
        return {f"{head}{k}": v for k, v in fit.as_report().items()}

    # ─── 1. Rabi oscillation ─────────────────────────────────────────
    def _run_rabi(self):
        p, sc = self.cfg.physics, self.cfg.scan
        model = build_clock_model(p.rabi_hz, p.detuning_hz, p.gamma_f1_hz_per_g, p.gamma_f2_hz_per_g)
        scan = simulate_rabi(model, sc.durations_s, FieldVector(0.0, 0.0, p.b0_g), p.decay_driven_s)
        write_scan_csv(scan, ["duration_s", "p_f2"], self._path("rabi_scan.csv"))
        self._svg("rabi_scan.svg", scan, scan.fit, x_label="Pulse duration (s)", y_label="Population")
        self.report["rabi_hz_configured"] = p.rabi_hz
        if scan.fit is None:
            self.report["rabi_fit"] = "skipped"
            return
        fit = scan.fit
        self.report.update({
            "rabi_hz_fitted": fit.frequency,
            "rabi_hz_stderr": fit.frequency_stderr,
            "rabi_relative_error": abs(fit.frequency - p.rabi_hz) / p.rabi_hz,
            "A": fit.amplitude,
            "C": fit.offset,
            "r_squared": fit.r_squared,
            "converged": fit.converged,
        })
        self.converged &= fit.converged

    # ─── 2. Ramsey fringes ───────────────────────────────────────────
    def _run_ramsey_scan(self):
        p, sc, n = self.cfg.physics, self.cfg.scan, self.cfg.numerics
        cfg = self._evolution_config()
        factory = self._model_factory()
        seq = self._ramsey_sequence()

        scan = scan_ramsey(factory, sc.detunings_hz, seq, cfg, n.workers, p.decay_free_s)
        fit = fit_fringe(scan, seq.interrogation_time)
        write_scan_csv(scan, ["detuning_hz", "p_f2"], self._path("fringe_scan.csv"))
        self._svg("fringe_scan.svg", scan, fit, x_label="Detuning (Hz)", y_label="Population")
        self.report.update({
            "schedule": seq.schedule.kind,
            "interrogation_time_s": seq.interrogation_time,
            "free_time_s": seq.free_time,
            "pulse_duration_s": seq.pulse1_duration,
            "p_f2_at_detuning": run_ramsey(factory(p.detuning_hz), seq, cfg, p.decay_free_s),
        })
        self.report.update(self._fit_entries("", fit))
        self.converged &= fit.converged

        if self.cfg.schedule.kind == "none":
            return
        base_seq = matching_baseline(seq, p.b0_g)
        base = scan_ramsey(factory, sc.detunings_hz, base_seq, cfg, n.workers, p.decay_free_s)
        base_fit = fit_fringe(base, base_seq.interrogation_time)
        write_scan_csv(base, ["detuning_hz", "p_f2"], self._path("baseline_scan.csv"))
        self._svg("baseline_scan.svg", base, base_fit, x_label="Detuning (Hz)", y_label="Population")
        self.report.update(self._fit_entries("baseline", base_fit))
        self.converged &= base_fit.converged
        try:
            shift = phase_shift(fit, base_fit)
        except FitError as exc:
            logger.warning("phase shift undefined: %s", exc)
            self.report.update({"phase_shift_rad": math.nan, "class": "undefined"})
            self.converged = False
            return
        topo = topological_class(phase_from_fringes(shift, fit.r_squared))
        self.report.update({
            "phase_shift_rad": shift,
            "phase_shift_stderr_rad": phase_shift_stderr(fit, base_fit),
            "class": topo.label,
        })
        if topo.label == "undefined":
            self.converged = False

    # ─── 3. Reversal phase of m=0 ────────────────────────────────────
    def _run_reversal_phase(self):
        p, s = self.cfg.physics, self.cfg.schedule
        cfg = self._evolution_config()
        schedule = self._maybe_perturb(self._standalone_schedule(s.kind))
        rows = []
        for f in p.f_values:
            outcome = run_reversal(f, self.cfg.gammas[f], schedule, cfg)
            d = outcome.decomposition
            self.report.update(outcome.as_report(f"f{f}"))
            self.report[f"f{f}.parity_factor"] = parity_factor(f)
            rows.append({
                "f": f,
                "schedule": schedule.kind,
                "total_phase_rad": d.total_phase,
                "dynamical_phase_rad": d.dynamical_phase,
                "geometric_phase_rad": d.geometric_phase,
                "return_fidelity": d.return_fidelity,
                "adiabatic_fidelity": outcome.adiabatic_fidelity,
                "class": outcome.topology.label,
                "steps": outcome.steps_taken,
                "max_norm_defect": outcome.max_norm_defect,
            })
            if outcome.topology.label == "undefined":
                self.converged = False
            if self.cfg.output.trajectory:
                dump_trajectory_csv(outcome.result, self._path(f"trajectory_f{f}.csv"))
        write_rows_csv(rows, self._path("reversal_phase.csv"))

    # ─── 4. Adiabaticity of the reversal regimes ─────────────────────
    def _run_adiabaticity_report(self):
        p, s, sc = self.cfg.physics, self.cfg.schedule, self.cfg.scan
        cases = [(f"smooth_bmin_{b:g}", self._standalone_schedule("smooth_reversal", b))
                 for b in sc.b_min_list_g]
        cases.append(("sudden", self._standalone_schedule("sudden_reversal")))
        if s.kind == "sampled_trace":
            cases.append(("trace", self._standalone_schedule("sampled_trace")))
        rows = []
        for f in p.f_values:
            for label, schedule in cases:
                rep = adiabaticity_ratio(schedule, self.cfg.gammas[f])
                rows.append({
                    "f": f,
                    "case": label,
                    "delta_tau_s": rep.delta_tau,
                    "min_gap_hz": rep.min_gap_hz,
                    "ratio": rep.ratio,
                    "classification": rep.classification,
                })
                self.report[f"f{f}.{label}.min_gap_hz"] = rep.min_gap_hz
                self.report[f"f{f}.{label}.ratio"] = rep.ratio
                self.report[f"f{f}.{label}.classification"] = rep.classification
        write_rows_csv(rows, self._path("adiabaticity.csv"))

    # ─── 5. Visibility versus minimum field ──────────────────────────
    def _run_visibility_sweep(self):
        p, s, sc, n = self.cfg.physics, self.cfg.schedule, self.cfg.scan, self.cfg.numerics
        template = reversal_sequence(
            p.rabi_hz, "smooth_reversal", p.b0_g,
            interrogation_time=p.interrogation_time_s,
            b_min=s.b_min_g,
            delta_tau=s.delta_tau_s,
            transverse_axis=s.transverse_axis,
            guard_time=p.guard_time_s,
            pulse_duration=p.pulse_duration_s,
        )
        rows = visibility_vs_gap(self._model_factory(), template, sc.b_min_list_g,
                                 sc.detunings_hz, self._evolution_config(), n.workers)
        table = []
        for row in rows:
            tag = f"{row.b_min_g:g}"
            write_scan_csv(row.scan, ["detuning_hz", "p_f2"], self._path(f"scan_bmin_{tag}.csv"))
            self._svg(f"scan_bmin_{tag}.svg", row.scan, row.fit,
                      x_label="Detuning (Hz)", y_label="Population", title=f"b_min = {tag} G")
            table.append({
                "b_min_g": row.b_min_g,
                "visibility": row.visibility,
                "contrast": row.contrast,
                "phase_shift_rad": row.phase_shift_rad,
                "class": row.topology.label,
                "r_squared": row.fit.r_squared,
                "converged": row.fit.converged,
            })
            self.report[f"b_min_{tag}.visibility"] = row.visibility
            self.report[f"b_min_{tag}.contrast"] = row.contrast
            self.report[f"b_min_{tag}.phase_shift_rad"] = row.phase_shift_rad
            self.report[f"b_min_{tag}.class"] = row.topology.label
            self.converged &= row.fit.converged and row.topology.label != "undefined"
        write_rows_csv(table, self._path("visibility_sweep.csv"))
        self._svg("visibility_sweep.svg", [(r.b_min_g, r.contrast) for r in rows],
                  x_label="Minimum field (G)", y_label="Fringe contrast", log_x=True)

        self.report["visibility_decreasing"] = visibility_ordered(rows)
        self.report["contrast_decreasing"] = contrast_decreasing(rows)
        if not self.report["visibility_decreasing"]:
            logger.warning("fringe visibility did not degrade with the gap")

    # ─── 6. Robustness suite ─────────────────────────────────────────
    def _run_robustness_suite(self):
        p, r, n = self.cfg.physics, self.cfg.robustness, self.cfg.numerics
        suite = robustness_suite(
            p.f_values,
            self._standalone_schedule("smooth_reversal"),
            self.cfg.seed,
            self.cfg.gammas,
            n_paths=r.n_paths,
            amplitude_fraction=r.amplitude_fraction,
            n_modes=r.n_modes,
            cfg=self._evolution_config(),
            workers=n.workers,
        )
        write_rows_csv([asdict(row) for row in suite.rows], self._path("robustness.csv"))
        self.report.update(suite.summary())
        self.report["all_preserved"] = suite.all_preserved()
        if any(row.topological_class in ("undefined", "gap_closed") for row in suite.rows):
            self.converged = False


def run_experiment(cfg: ExperimentConfig) -> RunManifest:
    return ExperimentRunner(cfg).run()
