"""Strict YAML configuration, layering and presets."""

from dataclasses import replace

import pytest

from config.experiment_config import (
    ConfigError,
    DuplicateKeyError,
    MissingKeyError,
    PhysicsViolationError,
    TypeMismatchError,
    UnknownKeyError,
    build_config,
    config_hash,
    env_overrides,
    load_config,
    parse_config,
    serialize,
)
from config.presets import PRESETS, get_preset_display_name, preset_document, preset_layer, resolve_preset


# ── parsing ──

def test_minimal_config_fills_defaults():
    cfg = parse_config("experiment: ramsey_scan\n")
    assert cfg.physics.rabi_hz == 12.2e3
    assert cfg.physics.f_values == (1, 2)
    assert cfg.schedule.kind == "none"
    assert len(cfg.scan.detunings_hz) == 41
    assert cfg.scan.detunings_hz[0] == -2500.0
    assert cfg.output.directory == "results"
    assert cfg.seed is None


def test_reversal_experiments_default_to_smooth_schedule():
    assert parse_config("experiment: reversal_phase\n").schedule.kind == "smooth_reversal"


def test_numeric_strings_are_coerced():
    cfg = parse_config("experiment: rabi\nphysics:\n  rabi_hz: '10000'\nseed: '5'\n")
    assert cfg.physics.rabi_hz == 10000.0
    assert cfg.seed == 5


def test_negative_b_min_names_the_constructor():
    with pytest.raises(PhysicsViolationError) as exc:
        parse_config("experiment: reversal_phase\nschedule:\n  b_min_g: '-0.1'\n")
    assert exc.value.key_path == "schedule.b_min_g"
    assert "make_smooth_reversal" in str(exc.value)


def test_duplicate_keys_rejected():
    with pytest.raises(DuplicateKeyError):
        parse_config("experiment: rabi\nphysics:\n  rabi_hz: 1\n  rabi_hz: 2\n")


def test_unknown_keys_rejected():
    with pytest.raises(UnknownKeyError) as exc:
        parse_config("experiment: rabi\nphysics:\n  rabbi_hz: 1\n")
    assert exc.value.key_path == "physics.rabbi_hz"
    with pytest.raises(UnknownKeyError):
        parse_config("experiment: rabi\nplotting: {}\n")


@pytest.mark.parametrize("text", [
    "experiment: rabi\nphysics:\n  rabi_hz: fast\n",
    "experiment: rabi\nnumerics:\n  workers: 1.5\n",
    "experiment: rabi\noutput:\n  svg: maybe\n",
    "experiment: rabi\nphysics:\n  b0_g: true\n",
    "experiment: rabi\nphysics: [1, 2]\n",
    "experiment: teleport\n",
    "- a\n- b\n",
])
def test_type_mismatches(text):
    with pytest.raises(TypeMismatchError):
        parse_config(text)


def test_missing_experiment():
    with pytest.raises(MissingKeyError):
        parse_config("seed: 1\n")


def test_malformed_yaml():
    with pytest.raises(ConfigError):
        parse_config("experiment: [rabi\n")


def test_grid_specification():
    cfg = parse_config("experiment: ramsey_scan\nscan:\n  detunings_hz: {start: -100, stop: 100, num: 5}\n")
    assert cfg.scan.detunings_hz == (-100.0, -50.0, 0.0, 50.0, 100.0)
    with pytest.raises(MissingKeyError):
        parse_config("experiment: ramsey_scan\nscan:\n  detunings_hz: {start: -100, stop: 100}\n")


@pytest.mark.parametrize("doc,key", [
    ({"experiment": "robustness_suite"}, "seed"),
    ({"experiment": "reversal_phase", "schedule": {"perturbation_amplitude_g": 0.01}}, "seed"),
])
def test_stochastic_runs_need_a_seed(doc, key):
    with pytest.raises(MissingKeyError) as exc:
        build_config(doc)
    assert exc.value.key_path == key


@pytest.mark.parametrize("doc,key", [
    ({"experiment": "visibility_sweep", "schedule": {"kind": "sudden_reversal"}}, "schedule.kind"),
    ({"experiment": "reversal_phase", "schedule": {"kind": "none"}}, "schedule.kind"),
    ({"experiment": "rabi", "seed": -1}, "seed"),
    ({"experiment": "rabi", "physics": {"f_values": [1, 3]}}, "physics.f_values"),
    ({"experiment": "rabi", "numerics": {"target_error": 0.1}}, "numerics.target_error"),
    ({"experiment": "rabi", "physics": {"rabi_hz": 0}}, "physics.rabi_hz"),
])
def test_physics_violations(doc, key):
    with pytest.raises(PhysicsViolationError) as exc:
        build_config(doc)
    assert exc.value.key_path == key


def test_sampled_trace_needs_a_path():
    with pytest.raises(MissingKeyError):
        build_config({"experiment": "reversal_phase", "schedule": {"kind": "sampled_trace"}})


# ── serialization ──

def test_serialize_round_trip():
    cfg = build_config({"experiment": "robustness_suite", "seed": 2024,
                        "physics": {"pulse_duration_s": 2e-5}, "scan": {"b_min_list_g": [0.2, 0.004]}})
    assert parse_config(serialize(cfg)) == cfg


def test_hash_ignores_output_and_workers():
    cfg = parse_config("experiment: ramsey_scan\n")
    h = config_hash(cfg)
    assert len(h) == 64
    assert config_hash(replace(cfg, output=replace(cfg.output, directory="elsewhere"))) == h
    assert config_hash(replace(cfg, numerics=replace(cfg.numerics, workers=8))) == h
    assert config_hash(replace(cfg, numerics=replace(cfg.numerics, target_error=1e-8))) != h
    assert config_hash(replace(cfg, physics=replace(cfg.physics, b0_g=0.3))) != h


# ── layering ──

def test_env_overrides():
    env = {"SPINSIM_SEED": "9", "SPINSIM_WORKERS": "4", "SPINSIM_OUT": "runs/a",
           "SPINSIM_PHYSICS__RABI_HZ": "11000", "HOME": "/root"}
    assert env_overrides(env) == {
        "seed": 9,
        "numerics": {"workers": 4},
        "output": {"directory": "runs/a"},
        "physics": {"rabi_hz": 11000},
    }


def test_env_unknown_names_rejected():
    with pytest.raises(UnknownKeyError):
        env_overrides({"SPINSIM_COLOUR": "red"})
    with pytest.raises(UnknownKeyError):
        env_overrides({"SPINSIM_PLOT__DPI": "300"})


def test_layer_precedence(tmp_path):
    path = tmp_path / "run.yaml"
    path.write_text("experiment: ramsey_scan\nseed: 1\nphysics:\n  rabi_hz: 11000\n  b0_g: 0.3\n")
    preset = {"experiment": "rabi", "physics": {"rabi_hz": 10000, "detuning_hz": 50}}
    env = {"SPINSIM_SEED": "2", "SPINSIM_PHYSICS__B0_G": "0.25"}
    cfg = load_config(str(path), preset=preset, environ=env, overrides={"seed": 3})
    assert cfg.experiment == "ramsey_scan"
    assert cfg.physics.detuning_hz == 50.0
    assert cfg.physics.rabi_hz == 11000.0
    assert cfg.physics.b0_g == 0.25
    assert cfg.seed == 3


def test_unreadable_file(tmp_path):
    with pytest.raises(ConfigError):
        load_config(str(tmp_path / "missing.yaml"), environ={})


# ── presets ──

@pytest.mark.parametrize("key", sorted(PRESETS))
def test_every_preset_builds(key):
    cfg = load_config(preset=preset_document(key), environ={})
    assert cfg.experiment == PRESETS[key]["config"]["experiment"]


def test_preset_document_is_a_copy():
    doc = preset_document("parity_phase")
    doc["physics"]["f_values"].append(3)
    assert PRESETS["parity_phase"]["config"]["physics"]["f_values"] == [1, 2]
    with pytest.raises(KeyError):
        preset_document("nope")


def test_preset_names_resolve_by_fragment():
    assert resolve_preset("sudden_700hz") == "sudden_700hz"
    assert resolve_preset("SUDDEN") == "sudden_700hz"
    with pytest.raises(ConfigError) as exc:
        resolve_preset("adiabatic")
    assert exc.value.key_path == "preset"
    assert "adiabatic_14khz" in str(exc.value)
    with pytest.raises(ConfigError):
        resolve_preset("teleport")
    with pytest.raises(ConfigError):
        resolve_preset("")
    assert get_preset_display_name("rabi_oscillation").startswith("rabi_oscillation — ")


def test_preset_layer_checks_experiment_kind():
    assert preset_layer("gap", "adiabaticity_report") == {"experiment": "adiabaticity_report"}
    with pytest.raises(ConfigError) as exc:
        preset_layer("robustness", "ramsey_scan")
    assert "robustness_suite" in str(exc.value)
