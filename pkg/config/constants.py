"""
Global constants for SpinSim.

Physical constants of the ⁸⁷Rb ground state, the defaults table used by the
experiment configuration, and the numerical tolerances shared by the
spin-algebra, dynamics and phase-analysis layers.
"""

import math

TOOL_NAME = "spinsim"
TOOL_VERSION = "0.3.0"

# ═══════════════════════════════════════════════════════════════════════
# Physical constants
# ═══════════════════════════════════════════════════════════════════════

MU_B_HZ_PER_G = 1.399625e6          # Bohr magneton / h
G_F1 = -0.5                          # Landé factor, F=1 (nuclear-g correction ignored)
G_F2 = +0.5                          # Landé factor, F=2

GAMMA_F1_HZ_PER_G = G_F1 * MU_B_HZ_PER_G     # −699 812.5 Hz/G
GAMMA_F2_HZ_PER_G = G_F2 * MU_B_HZ_PER_G     # +699 812.5 Hz/G

TWO_PI = 2.0 * math.pi

# ═══════════════════════════════════════════════════════════════════════
# Experiment defaults (observed conditions of the clock experiment)
# ═══════════════════════════════════════════════════════════════════════

DEFAULT_RABI_HZ = 12.2e3             # observed Rabi frequency
DEFAULT_INTERROGATION_S = 1e-3       # time between the two π/2 pulses
DEFAULT_B0_G = 0.2                   # bias field
DEFAULT_B_MIN_G = 0.2                # smallest |B| on the adiabatic path
DEFAULT_DELTA_TAU_S = 2e-3           # adiabatic reversal time
DEFAULT_SUDDEN_RAMP_S = 2e-6         # sudden reversal ramp
DEFAULT_RESIDUAL_G = 1e-3            # residual transverse field during sudden flip
DEFAULT_GUARD_S = 100e-6             # microwave-off margin around a reversal
DEFAULT_DECAY_DRIVEN_S = 0.4e-3      # contrast decay under continuous drive
DEFAULT_DECAY_FREE_S = 5.5e-3        # contrast decay of free precession

DEFAULT_DETUNING_SPAN_HZ = 2.5e3
DEFAULT_DETUNING_POINTS = 41
DEFAULT_RABI_MAX_S = 400e-6
DEFAULT_RABI_POINTS = 161
DEFAULT_B_MIN_SWEEP_G = [0.2, 0.02, 0.004]

DEFAULT_ROBUSTNESS_PATHS = 20
DEFAULT_ROBUSTNESS_FRACTION = 0.2
DEFAULT_ROBUSTNESS_MODES = 4

# ═══════════════════════════════════════════════════════════════════════
# Numerics
# ═══════════════════════════════════════════════════════════════════════

HERMITIAN_TOL = 1e-12                # absolute, entrywise
EXPECTATION_IMAG_TOL = 1e-10         # relative to the largest |H| entry
NORM_TOL = 1e-10

DEFAULT_TARGET_ERROR = 1e-9
DEFAULT_DT_INIT = 1e-8
DEFAULT_DT_MAX = 1e-5
DEFAULT_RECORD_STRIDE = 1
RECORD_QUANTUM_S = 1e-6              # one trajectory sample per μs × stride
DT_FLOOR_S = 1e-12
ORACLE_DT_S = 1e-8

STEP_SAFETY = 0.9
STEP_GROWTH_MAX = 5.0
STEP_SHRINK_MIN = 0.2

GAP_SAMPLES = 10_000
GAP_REL_ACCURACY = 1e-6

# ═══════════════════════════════════════════════════════════════════════
# Classification thresholds
# ═══════════════════════════════════════════════════════════════════════

ADIABATIC_RATIO_HI = 10.0
ADIABATIC_RATIO_LO = 0.1

FIDELITY_FLOOR = 0.9
SNAP_TOLERANCE_RAD = 0.3
PHASE_UNDEFINED_FIDELITY = 1e-6

GAP_CLOSED_FRACTION = 0.1            # perturbed min|B| must stay above this × b_min

TOPOLOGICAL_CLASSES = {
    "trivial":   {"value": 0.0,     "label": "0"},
    "pi":        {"value": math.pi, "label": "π"},
    "undefined": {"value": None,    "label": "undefined"},
}

# ═══════════════════════════════════════════════════════════════════════
# Fringe fitting
# ═══════════════════════════════════════════════════════════════════════

FIT_XTOL = 1e-8
FIT_MAX_ITERATIONS = 200
FIT_MIN_POINTS = 8
FIT_PERIOD_MATCH = 0.05              # fringe periods must agree within 5 %
FIT_GRID_STEP_CYCLES = 0.02          # grid resolution for the frequency search
VISIBILITY_FLAT_TOL = 1e-4           # A/C differences below this count as flat
