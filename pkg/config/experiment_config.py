"""
Experiment Config — strict YAML configuration for a single simulation run.

Layers (later wins): built-in defaults < preset < config file < SPINSIM_*
environment variables < command-line flags.

Document sections:
    experiment   one of EXPERIMENT_KINDS (required)
    seed         integer, required for perturbations and the robustness suite
    physics      manifolds, gyromagnetic ratios, Rabi frequency, timings, bias
    schedule     field-reversal shape during the interrogation
    scan         detuning grid, Rabi durations, b_min sweep
    robustness   perturbed-path count, amplitude, modes
    numerics     integrator accuracy and worker count
    output       result directory and optional artefacts
"""

from __future__ import annotations

import hashlib
import logging
import math
import os
from dataclasses import asdict, dataclass, field, fields, replace

import numpy as np
import yaml

from config.constants import (
    DEFAULT_B0_G,
    DEFAULT_B_MIN_G,
    DEFAULT_B_MIN_SWEEP_G,
    DEFAULT_DELTA_TAU_S,
    DEFAULT_DETUNING_POINTS,
    DEFAULT_DETUNING_SPAN_HZ,
    DEFAULT_DT_INIT,
    DEFAULT_DT_MAX,
    DEFAULT_GUARD_S,
    DEFAULT_INTERROGATION_S,
    DEFAULT_RABI_HZ,
    DEFAULT_RABI_MAX_S,
    DEFAULT_RABI_POINTS,
    DEFAULT_RECORD_STRIDE,
    DEFAULT_RESIDUAL_G,
    DEFAULT_ROBUSTNESS_FRACTION,
    DEFAULT_ROBUSTNESS_MODES,
    DEFAULT_ROBUSTNESS_PATHS,
    DEFAULT_SUDDEN_RAMP_S,
    DEFAULT_TARGET_ERROR,
    GAMMA_F1_HZ_PER_G,
    GAMMA_F2_HZ_PER_G,
)

logger = logging.getLogger(__name__)

ENV_PREFIX = "SPINSIM_"

EXPERIMENT_KINDS = (
    "rabi",
    "ramsey_scan",
    "reversal_phase",
    "adiabaticity_report",
    "visibility_sweep",
    "robustness_suite",
)
SCHEDULE_KINDS = ("none", "smooth_reversal", "sudden_reversal", "sampled_trace")
SCHEMES = ("gauss4", "midpoint")


class ConfigError(Exception):
    def __init__(self, key_path: str, message: str):
        self.key_path = key_path
        super().__init__(f"{key_path}: {message}" if key_path else message)


class MissingKeyError(ConfigError):
    pass


class UnknownKeyError(ConfigError):
    pass


class DuplicateKeyError(ConfigError):
    pass


class TypeMismatchError(ConfigError):
    pass


class PhysicsViolationError(ConfigError):
    pass


# ═══════════════════════════════════════════════════════════════════════
# Sections
# ═══════════════════════════════════════════════════════════════════════

def _opt(kind: str, default=None):
    return field(default=default, metadata={"kind": kind})


def _detuning_default() -> tuple:
    grid = np.linspace(-DEFAULT_DETUNING_SPAN_HZ, DEFAULT_DETUNING_SPAN_HZ, DEFAULT_DETUNING_POINTS)
    return tuple(float(x) for x in grid)


def _duration_default() -> tuple:
    return tuple(float(x) for x in np.linspace(0.0, DEFAULT_RABI_MAX_S, DEFAULT_RABI_POINTS))


@dataclass(frozen=True)
class PhysicsConfig:
    f_values: tuple = _opt("int_list", (1, 2))
    gamma_f1_hz_per_g: float = _opt("float", GAMMA_F1_HZ_PER_G)
    gamma_f2_hz_per_g: float = _opt("float", GAMMA_F2_HZ_PER_G)
    rabi_hz: float = _opt("float", DEFAULT_RABI_HZ)
    detuning_hz: float = _opt("float", 0.0)
    interrogation_time_s: float = _opt("float", DEFAULT_INTERROGATION_S)
    b0_g: float = _opt("float", DEFAULT_B0_G)
    pulse_duration_s: float | None = _opt("float?")
    guard_time_s: float = _opt("float", DEFAULT_GUARD_S)
    decay_driven_s: float | None = _opt("float?")
    decay_free_s: float | None = _opt("float?")


@dataclass(frozen=True)
class ScheduleConfig:
    kind: str | None = _opt("str?")
    b_min_g: float = _opt("float", DEFAULT_B_MIN_G)
    delta_tau_s: float = _opt("float", DEFAULT_DELTA_TAU_S)
    transverse_axis: str = _opt("str", "x")
    residual_transverse_g: float = _opt("float", DEFAULT_RESIDUAL_G)
    ramp_duration_s: float = _opt("float", DEFAULT_SUDDEN_RAMP_S)
    trace_path: str | None = _opt("str?")
    perturbation_amplitude_g: float = _opt("float", 0.0)
    perturbation_modes: int = _opt("int", DEFAULT_ROBUSTNESS_MODES)


@dataclass(frozen=True)
class ScanConfig:
    detunings_hz: tuple = field(default_factory=_detuning_default, metadata={"kind": "grid"})
    durations_s: tuple = field(default_factory=_duration_default, metadata={"kind": "grid"})
    b_min_list_g: tuple = _opt("float_list", tuple(DEFAULT_B_MIN_SWEEP_G))


@dataclass(frozen=True)
class RobustnessConfig:
    n_paths: int = _opt("int", DEFAULT_ROBUSTNESS_PATHS)
    amplitude_fraction: float = _opt("float", DEFAULT_ROBUSTNESS_FRACTION)
    n_modes: int = _opt("int", DEFAULT_ROBUSTNESS_MODES)


@dataclass(frozen=True)
class NumericsConfig:
    target_error: float = _opt("float", DEFAULT_TARGET_ERROR)
    dt_init: float = _opt("float", DEFAULT_DT_INIT)
    dt_max: float = _opt("float", DEFAULT_DT_MAX)
    record_stride: int = _opt("int", DEFAULT_RECORD_STRIDE)
    scheme: str = _opt("str", "gauss4")
    workers: int = _opt("int", 1)


@dataclass(frozen=True)
class OutputConfig:
    directory: str = _opt("str", "results")
    svg: bool = _opt("bool", True)
    trajectory: bool = _opt("bool", False)


SECTIONS = {
    "physics": PhysicsConfig,
    "schedule": ScheduleConfig,
    "scan": ScanConfig,
    "robustness": RobustnessConfig,
    "numerics": NumericsConfig,
    "output": OutputConfig,
}


@dataclass(frozen=True)
class ExperimentConfig:
    experiment: str
    seed: int | None = None
    physics: PhysicsConfig = field(default_factory=PhysicsConfig)
    schedule: ScheduleConfig = field(default_factory=ScheduleConfig)
    scan: ScanConfig = field(default_factory=ScanConfig)
    robustness: RobustnessConfig = field(default_factory=RobustnessConfig)
    numerics: NumericsConfig = field(default_factory=NumericsConfig)
    output: OutputConfig = field(default_factory=OutputConfig)

    @property
    def gammas(self) -> dict:
        return {1: self.physics.gamma_f1_hz_per_g, 2: self.physics.gamma_f2_hz_per_g}


# ═══════════════════════════════════════════════════════════════════════
# YAML loading
# ═══════════════════════════════════════════════════════════════════════

class StrictLoader(yaml.SafeLoader):
    """SafeLoader that rejects duplicate mapping keys."""


def _construct_mapping(loader: StrictLoader, node, deep=False):
    loader.flatten_mapping(node)
    seen = set()
    for key_node, _ in node.value:
        key = loader.construct_object(key_node, deep=deep)
        if key in seen:
            mark = key_node.start_mark
            raise DuplicateKeyError(str(key), f"duplicate key (line {mark.line + 1})")
        seen.add(key)
    return loader.construct_mapping(node, deep=deep)


StrictLoader.add_constructor(yaml.resolver.BaseResolver.DEFAULT_MAPPING_TAG, _construct_mapping)


def load_document(text: str) -> dict:
    try:
        doc = yaml.load(text, Loader=StrictLoader)
    except DuplicateKeyError:
        raise
    except yaml.YAMLError as exc:
        raise ConfigError("", f"malformed configuration document: {exc}") from exc
    if doc is None:
        return {}
    if not isinstance(doc, dict):
        raise TypeMismatchError("", f"document must be a mapping, got {type(doc).__name__}")
    return doc


# ═══════════════════════════════════════════════════════════════════════
# Coercion
# ═══════════════════════════════════════════════════════════════════════

def _as_float(value, path: str) -> float:
    if isinstance(value, bool):
        raise TypeMismatchError(path, f"expected a number, got {value!r}")
    if isinstance(value, (int, float)):
        return float(value)
    if isinstance(value, str):
        try:
            return float(value.strip())
        except ValueError:
            pass
    raise TypeMismatchError(path, f"expected a number, got {value!r}")


def _as_int(value, path: str) -> int:
    if isinstance(value, bool):
        raise TypeMismatchError(path, f"expected an integer, got {value!r}")
    if isinstance(value, int):
        return value
    number = _as_float(value, path) if isinstance(value, (float, str)) else None
    if number is None or not math.isfinite(number) or not number.is_integer():
        raise TypeMismatchError(path, f"expected an integer, got {value!r}")
    return int(number)


def _as_bool(value, path: str) -> bool:
    if isinstance(value, bool):
        return value
    if isinstance(value, str) and value.strip().lower() in ("true", "false"):
        return value.strip().lower() == "true"
    raise TypeMismatchError(path, f"expected true or false, got {value!r}")


def _as_str(value, path: str) -> str:
    if not isinstance(value, str):
        raise TypeMismatchError(path, f"expected a string, got {value!r}")
    return value


def _as_list(value, path: str, item) -> tuple:
    if not isinstance(value, (list, tuple)):
        raise TypeMismatchError(path, f"expected a list, got {value!r}")
    return tuple(item(v, f"{path}[{i}]") for i, v in enumerate(value))


def _as_grid(value, path: str) -> tuple:
    """Explicit list, or {start, stop, num} expanded with numpy.linspace."""
    if isinstance(value, dict):
        _reject_unknown(value, ("start", "stop", "num"), path)
        for key in ("start", "stop", "num"):
            if key not in value:
                raise MissingKeyError(f"{path}.{key}", "required in a grid specification")
        num = _as_int(value["num"], f"{path}.num")
        if num < 1:
            raise PhysicsViolationError(f"{path}.num", f"grid needs at least one point, got {num}")
        grid = np.linspace(_as_float(value["start"], f"{path}.start"),
                           _as_float(value["stop"], f"{path}.stop"), num)
        return tuple(float(x) for x in grid)
    return _as_list(value, path, _as_float)


_COERCERS = {
    "float": _as_float,
    "int": _as_int,
    "bool": _as_bool,
    "str": _as_str,
    "float_list": lambda v, p: _as_list(v, p, _as_float),
    "int_list": lambda v, p: _as_list(v, p, _as_int),
    "grid": _as_grid,
}


def _coerce(kind: str, value, path: str):
    if kind.endswith("?"):
        if value is None:
            return None
        kind = kind[:-1]
    elif value is None:
        raise TypeMismatchError(path, "value may not be null")
    return _COERCERS[kind](value, path)


def _reject_unknown(raw: dict, known, path: str):
    for key in raw:
        if key not in known:
            where = f"{path}.{key}" if path else str(key)
            raise UnknownKeyError(where, f"unknown key; expected one of {sorted(known)}")


def _build_section(cls, raw, name: str):
    if raw is None:
        raw = {}
    if not isinstance(raw, dict):
        raise TypeMismatchError(name, f"section must be a mapping, got {raw!r}")
    specs = {f.name: f for f in fields(cls)}
    _reject_unknown(raw, specs, name)
    values = {key: _coerce(specs[key].metadata["kind"], value, f"{name}.{key}")
              for key, value in raw.items()}
    return cls(**values)


# ═══════════════════════════════════════════════════════════════════════
# Validation
# ═══════════════════════════════════════════════════════════════════════

def _require(condition: bool, path: str, message: str):
    if not condition:
        raise PhysicsViolationError(path, message)


def default_schedule_kind(experiment: str) -> str:
    return "none" if experiment in ("rabi", "ramsey_scan") else "smooth_reversal"


def _validate(cfg: ExperimentConfig) -> None:
    p, s, sc, r, n = cfg.physics, cfg.schedule, cfg.scan, cfg.robustness, cfg.numerics

    _require(len(p.f_values) > 0 and all(f in (1, 2) for f in p.f_values), "physics.f_values",
             f"manifolds must be drawn from F = 1, 2, got {list(p.f_values)}")
    _require(len(set(p.f_values)) == len(p.f_values), "physics.f_values",
             f"manifolds must not repeat, got {list(p.f_values)}")
    for key in ("gamma_f1_hz_per_g", "gamma_f2_hz_per_g"):
        v = getattr(p, key)
        _require(math.isfinite(v) and v != 0, f"physics.{key}",
                 f"ZeemanParams requires a finite nonzero ratio, got {v}")
    _require(p.rabi_hz > 0, "physics.rabi_hz", f"build_clock_model requires rabi_hz > 0, got {p.rabi_hz}")
    _require(math.isfinite(p.detuning_hz), "physics.detuning_hz", f"must be finite, got {p.detuning_hz}")
    _require(p.interrogation_time_s > 0, "physics.interrogation_time_s",
             f"interrogation time must be positive, got {p.interrogation_time_s}")
    _require(p.b0_g > 0, "physics.b0_g", f"bias field must be positive, got {p.b0_g}")
    _require(p.guard_time_s >= 0, "physics.guard_time_s", f"must be non-negative, got {p.guard_time_s}")
    for key in ("pulse_duration_s", "decay_driven_s", "decay_free_s"):
        v = getattr(p, key)
        _require(v is None or v > 0, f"physics.{key}", f"must be positive when set, got {v}")

    _require(s.kind in SCHEDULE_KINDS, "schedule.kind",
             f"unknown schedule kind {s.kind!r}; expected one of {SCHEDULE_KINDS}")
    _require(s.b_min_g > 0, "schedule.b_min_g",
             f"make_smooth_reversal requires b_min > 0 (|B(t)| never zero), got {s.b_min_g}")
    _require(s.delta_tau_s > 0, "schedule.delta_tau_s",
             f"make_smooth_reversal requires delta_tau > 0, got {s.delta_tau_s}")
    _require(s.transverse_axis in ("x", "y"), "schedule.transverse_axis",
             f"transverse axis must be 'x' or 'y', got {s.transverse_axis!r}")
    _require(s.residual_transverse_g >= 0, "schedule.residual_transverse_g",
             f"make_sudden_reversal requires residual_transverse ≥ 0, got {s.residual_transverse_g}")
    _require(s.ramp_duration_s > 0, "schedule.ramp_duration_s",
             f"make_sudden_reversal requires ramp_duration > 0, got {s.ramp_duration_s}")
    _require(s.perturbation_amplitude_g >= 0, "schedule.perturbation_amplitude_g",
             f"perturb_schedule requires amplitude ≥ 0, got {s.perturbation_amplitude_g}")
    _require(s.perturbation_modes >= 1, "schedule.perturbation_modes",
             f"perturb_schedule requires n_modes ≥ 1, got {s.perturbation_modes}")
    if s.kind == "sampled_trace" and not s.trace_path:
        raise MissingKeyError("schedule.trace_path", "required when schedule.kind is sampled_trace")
    if cfg.experiment in ("visibility_sweep", "robustness_suite") and s.kind != "smooth_reversal":
        raise PhysicsViolationError("schedule.kind", f"{cfg.experiment} needs a smooth_reversal, got {s.kind}")
    if cfg.experiment == "reversal_phase" and s.kind == "none":
        raise PhysicsViolationError("schedule.kind", "reversal_phase needs a reversal schedule, got none")
    if s.perturbation_amplitude_g > 0 and s.kind != "smooth_reversal":
        raise PhysicsViolationError("schedule.perturbation_amplitude_g",
                                    "perturb_schedule applies only to smooth reversals")

    _require(len(sc.detunings_hz) > 0, "scan.detunings_hz", "scan_ramsey requires a non-empty detuning list")
    _require(all(math.isfinite(d) for d in sc.detunings_hz), "scan.detunings_hz", "detunings must be finite")
    _require(len(sc.durations_s) > 0 and all(t >= 0 for t in sc.durations_s), "scan.durations_s",
             "simulate_rabi requires non-negative durations")
    _require(len(sc.b_min_list_g) > 0 and all(b > 0 for b in sc.b_min_list_g), "scan.b_min_list_g",
             f"visibility_vs_gap requires positive b_min values, got {list(sc.b_min_list_g)}")

    _require(r.n_paths >= 1, "robustness.n_paths", f"must be at least 1, got {r.n_paths}")
    _require(0 <= r.amplitude_fraction <= 1, "robustness.amplitude_fraction",
             f"must lie in [0, 1], got {r.amplitude_fraction}")
    _require(r.n_modes >= 1, "robustness.n_modes", f"must be at least 1, got {r.n_modes}")

    _require(0 < n.target_error <= 1e-3, "numerics.target_error",
             f"must lie in (0, 1e-3], got {n.target_error}")
    _require(0 < n.dt_init <= n.dt_max, "numerics.dt_init",
             f"need 0 < dt_init ≤ dt_max, got {n.dt_init} and {n.dt_max}")
    _require(n.record_stride >= 1, "numerics.record_stride", f"must be at least 1, got {n.record_stride}")
    _require(n.scheme in SCHEMES, "numerics.scheme", f"unknown scheme {n.scheme!r}; expected one of {SCHEMES}")
    _require(n.workers >= 0, "numerics.workers", f"must be non-negative (0 = all CPUs), got {n.workers}")

    needs_seed = cfg.experiment == "robustness_suite" or s.perturbation_amplitude_g > 0
    if needs_seed and cfg.seed is None:
        raise MissingKeyError("seed", "a seed is mandatory for stochastic path perturbations")


# ═══════════════════════════════════════════════════════════════════════
# Public API
# ═══════════════════════════════════════════════════════════════════════

def build_config(raw: dict) -> ExperimentConfig:
    """Validate a nested mapping and fill every default."""
    if not isinstance(raw, dict):
        raise TypeMismatchError("", f"configuration must be a mapping, got {type(raw).__name__}")
    _reject_unknown(raw, ("experiment", "seed", *SECTIONS), "")
    if raw.get("experiment") is None:
        raise MissingKeyError("experiment", f"required; one of {EXPERIMENT_KINDS}")
    experiment = _as_str(raw["experiment"], "experiment")
    if experiment not in EXPERIMENT_KINDS:
        raise TypeMismatchError("experiment", f"unknown experiment {experiment!r}; expected one of {EXPERIMENT_KINDS}")
    seed = None if raw.get("seed") is None else _as_int(raw["seed"], "seed")
    if seed is not None and seed < 0:
        raise PhysicsViolationError("seed", f"seed must be non-negative, got {seed}")

    sections = {name: _build_section(cls, raw.get(name), name) for name, cls in SECTIONS.items()}
    if sections["schedule"].kind is None:
        sections["schedule"] = replace(sections["schedule"], kind=default_schedule_kind(experiment))

    cfg = ExperimentConfig(experiment=experiment, seed=seed, **sections)
    _validate(cfg)
    return cfg


def parse_config(text: str) -> ExperimentConfig:
    return build_config(load_document(text))


def to_document(cfg: ExperimentConfig) -> dict:
    """Plain nested dict (lists, not tuples) of every field."""
    def plain(v):
        if isinstance(v, (tuple, list)):
            return [plain(x) for x in v]
        if isinstance(v, dict):
            return {k: plain(x) for k, x in v.items()}
        return v
    return plain(asdict(cfg))


def serialize(cfg: ExperimentConfig) -> str:
    return yaml.safe_dump(to_document(cfg), sort_keys=True)


def config_hash(cfg: ExperimentConfig) -> str:
    """SHA-256 over every physics/numerics field; output paths and worker count excluded."""
    doc = to_document(cfg)
    doc.pop("output")
    doc["numerics"].pop("workers")
    canonical = yaml.safe_dump(doc, sort_keys=True)
    return hashlib.sha256(canonical.encode("utf-8")).hexdigest()


def deep_merge(base: dict, update: dict) -> dict:
    merged = dict(base)
    for key, value in update.items():
        if isinstance(value, dict) and isinstance(merged.get(key), dict):
            merged[key] = deep_merge(merged[key], value)
        else:
            merged[key] = value
    return merged


def env_overrides(environ=None) -> dict:
    """
    SPINSIM_<SECTION>__<KEY>=value, plus SPINSIM_SEED, SPINSIM_WORKERS and
    SPINSIM_OUT. Values are read as YAML scalars/flow collections.
    """
    environ = os.environ if environ is None else environ
    out: dict = {}
    for name, text in environ.items():
        if not name.startswith(ENV_PREFIX):
            continue
        key = name[len(ENV_PREFIX):].lower()
        try:
            value = yaml.safe_load(text)
        except yaml.YAMLError as exc:
            raise TypeMismatchError(name, f"unparseable environment value {text!r}") from exc
        if key == "seed":
            out["seed"] = value
        elif key == "experiment":
            out["experiment"] = value
        elif key == "workers":
            out = deep_merge(out, {"numerics": {"workers": value}})
        elif key == "out":
            out = deep_merge(out, {"output": {"directory": str(value)}})
        elif "__" in key:
            section, _, item = key.partition("__")
            if section not in SECTIONS:
                raise UnknownKeyError(name, f"unknown section {section!r}")
            out = deep_merge(out, {section: {item: value}})
        else:
            raise UnknownKeyError(name, "expected SPINSIM_<SECTION>__<KEY>")
    return out


def load_config(
    path: str | None = None,
    preset: dict | None = None,
    environ=None,
    overrides: dict | None = None,
) -> ExperimentConfig:
    """
    Merge preset, file, environment and flag layers, then validate.

    Args:
        path:      YAML config file, optional
        preset:    preset document (see config.presets), optional
        environ:   mapping used instead of os.environ
        overrides: nested dict from command-line flags
    """
    raw: dict = {}
    if preset:
        raw = deep_merge(raw, preset)
    if path is not None:
        try:
            with open(path, encoding="utf-8") as fh:
                text = fh.read()
        except OSError as exc:
            raise ConfigError("", f"cannot read config file {path}: {exc}") from exc
        raw = deep_merge(raw, load_document(text))
    raw = deep_merge(raw, env_overrides(environ))
    if overrides:
        raw = deep_merge(raw, overrides)
    cfg = build_config(raw)
    logger.debug("configuration %s (hash %s)", cfg.experiment, config_hash(cfg)[:12])
    return cfg
