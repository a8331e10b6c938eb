"""
Named scenarios for SpinSim.
Each preset has a display name, a short description, the expected outcome,
and a partial configuration document merged under the user's config file.
"""

import copy

from config.experiment_config import ConfigError

PRESETS = {
    # ── Calibration ───────────────────────────────────────────────────────
    "rabi_oscillation": {
        "name": "Rabi oscillation — 12.2 kHz drive",
        "description": "Continuous microwave drive on the clock transition at a 0.2 G bias, 0–400 μs. Calibrates the π/2 pulse length.",
        "expected": "fitted Rabi frequency 12.2 kHz",
        "config": {"experiment": "rabi"},
    },
    "baseline_fringes": {
        "name": "Ramsey fringes — constant bias",
        "description": "Two π/2 pulses 1 ms apart at a constant 0.2 G bias, detuning scanned over ±2.5 kHz.",
        "expected": "fringe period ≈ 1 kHz, complete flip at zero detuning",
        "config": {"experiment": "ramsey_scan", "schedule": {"kind": "none"}},
    },
    # ── Field reversals inside the interrogation ──────────────────────────
    "adiabatic_140khz": {
        "name": "Adiabatic reversal — 140 kHz minimum gap",
        "description": "2 ms smooth reversal with |B| held at 0.2 G, centred between the pulses.",
        "expected": "fringes shifted by π",
        "config": {"experiment": "ramsey_scan", "schedule": {"kind": "smooth_reversal", "b_min_g": 0.2}},
    },
    "adiabatic_14khz": {
        "name": "Adiabatic reversal — 14 kHz minimum gap",
        "description": "2 ms smooth reversal dipping to 20 mG halfway through.",
        "expected": "fringes shifted by π, reduced visibility",
        "config": {"experiment": "ramsey_scan", "schedule": {"kind": "smooth_reversal", "b_min_g": 0.02}},
    },
    "adiabatic_2p8khz": {
        "name": "Adiabatic reversal — 2.8 kHz minimum gap",
        "description": "2 ms smooth reversal dipping to 4 mG; the slowest gap still adiabatic.",
        "expected": "fringes barely visible but still shifted by π",
        "config": {"experiment": "ramsey_scan", "schedule": {"kind": "smooth_reversal", "b_min_g": 0.004}},
    },
    "sudden_700hz": {
        "name": "Sudden reversal — 700 Hz residual gap",
        "description": "2 μs bz flip under a 1 mG residual transverse field.",
        "expected": "fringes not shifted",
        "config": {
            "experiment": "ramsey_scan",
            "schedule": {"kind": "sudden_reversal", "residual_transverse_g": 1e-3, "ramp_duration_s": 2e-6},
        },
    },
    # ── Phase and classification studies ─────────────────────────────────
    "parity_phase": {
        "name": "Reversal phase of m=0 — F=1 and F=2",
        "description": "Bare-state adiabatic reversal of |F,0⟩ with phase decomposition and topological class.",
        "expected": "π for F=1, 0 for F=2",
        "config": {"experiment": "reversal_phase", "physics": {"f_values": [1, 2]}},
    },
    "gap_regimes": {
        "name": "Adiabaticity of the four reversal regimes",
        "description": "Ratio Δτ·ΔE/ħ for the three smooth reversals and the sudden flip.",
        "expected": "three adiabatic, one sudden",
        "config": {"experiment": "adiabaticity_report"},
    },
    "visibility_sweep": {
        "name": "Visibility versus minimum field",
        "description": "Fringe contrast for b_min = 0.2, 0.02 and 0.004 G with the phase class of each scan.",
        "expected": "contrast falls with b_min; class stays π",
        "config": {"experiment": "visibility_sweep"},
    },
    "robustness": {
        "name": "Robustness to path perturbations",
        "description": "20 seeded random-phase distortions (20 % of b_min) of the adiabatic path, for F=1 and F=2.",
        "expected": "class preserved on every path",
        "config": {"experiment": "robustness_suite", "seed": 2024},
    },
}


# ── Lookup helpers ──────────────────────────────────────────────────────────
def get_preset_display_name(key: str) -> str:
    """Return 'key — Display Name' for listings."""
    return f"{key} — {PRESETS[key]['name']}"


def resolve_preset(name: str) -> str:
    """
    Preset key for an exact key or an unambiguous fragment of one.

    Raises:
        ConfigError: no preset matches, or the fragment fits several keys
    """
    if name in PRESETS:
        return name
    fragment = name.lower().strip()
    matches = [key for key in PRESETS if fragment and fragment in key]
    if len(matches) == 1:
        return matches[0]
    if not matches:
        raise ConfigError("preset", f"unknown preset {name!r}; available: {', '.join(PRESETS)}")
    raise ConfigError("preset", f"preset {name!r} is ambiguous: {', '.join(matches)}")


def preset_document(key: str) -> dict:
    """Configuration layer for a preset; KeyError lists the known names."""
    if key not in PRESETS:
        raise KeyError(f"unknown preset {key!r}; available: {', '.join(PRESETS)}")
    return copy.deepcopy(PRESETS[key]["config"])


def preset_layer(name: str, experiment: str) -> dict:
    """
    Resolve a preset for a run of the given experiment kind.

    Raises:
        ConfigError: unknown or ambiguous name, or the preset belongs to
                     another experiment kind
    """
    key = resolve_preset(name)
    doc = preset_document(key)
    kind = doc.get("experiment")
    if kind is not None and kind != experiment:
        raise ConfigError(
            "preset", f"preset {key!r} runs a {kind} experiment, not {experiment}"
        )
    return doc
