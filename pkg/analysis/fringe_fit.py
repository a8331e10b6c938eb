"""
Fringe Fit — damped least-squares fit of p(x) = C + A·cos(2π·f·x + φ).

Used for Ramsey fringes (x = detuning in Hz, f = T_eff in s) and Rabi
oscillations (x = pulse duration in s, f = Rabi frequency in Hz).

Pipeline:
    1. grid search over f, solving the linear problem in (C, a, b) per point
    2. Levenberg–Marquardt refinement (scipy.optimize.least_squares, method="lm")
    3. covariance from the Jacobian at the optimum
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field

import numpy as np
from scipy import optimize

from config.constants import (
    FIT_GRID_STEP_CYCLES,
    FIT_MAX_ITERATIONS,
    FIT_MIN_POINTS,
    FIT_PERIOD_MATCH,
    FIT_XTOL,
)
from analysis.phase_analysis import wrap_phase

logger = logging.getLogger(__name__)


class FitError(Exception):
    pass


@dataclass(frozen=True, eq=False)
class CosineFit:
    offset: float
    amplitude: float
    frequency: float
    phase: float
    offset_stderr: float
    amplitude_stderr: float
    frequency_stderr: float
    phase_stderr: float
    r_squared: float
    converged: bool
    iterations: int
    message: str = ""
    covariance: np.ndarray = field(default_factory=lambda: np.full((4, 4), np.nan))

    def model(self, x) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        return self.offset + self.amplitude * np.cos(2.0 * math.pi * self.frequency * x + self.phase)


@dataclass(frozen=True, eq=False)
class FringeFit:
    amplitude: float
    phi0: float
    offset: float
    t_eff_s: float
    fringe_period_hz: float
    visibility: float
    contrast: float
    phi0_stderr: float
    t_eff_stderr: float
    r_squared: float
    converged: bool
    iterations: int
    covariance: np.ndarray = field(default_factory=lambda: np.full((4, 4), np.nan))

    def model(self, detunings) -> np.ndarray:
        d = np.asarray(detunings, dtype=float)
        return self.offset + self.amplitude * np.cos(2.0 * math.pi * d * self.t_eff_s + self.phi0)

    def as_report(self) -> dict:
        return {
            "A": self.amplitude,
            "phi0_rad": self.phi0,
            "phi0_stderr_rad": self.phi0_stderr,
            "C": self.offset,
            "t_eff_s": self.t_eff_s,
            "fringe_period_hz": self.fringe_period_hz,
            "visibility": self.visibility,
            "contrast": self.contrast,
            "r_squared": self.r_squared,
            "converged": self.converged,
        }


# ═══════════════════════════════════════════════════════════════════════
# Generic cosine fit
# ═══════════════════════════════════════════════════════════════════════

def _linear_solve(u: np.ndarray, y: np.ndarray, k: float):
    arg = 2.0 * math.pi * k * u
    m = np.column_stack([np.ones_like(u), np.cos(arg), np.sin(arg)])
    coef, *_ = np.linalg.lstsq(m, y, rcond=None)
    resid = y - m @ coef
    return coef, float(resid @ resid)


def _grid(u: np.ndarray, k_init: float | None) -> np.ndarray:
    if k_init is not None:
        lo, hi = 0.5 * k_init, 1.5 * k_init
    else:
        spacing = np.diff(np.unique(u))
        lo = FIT_GRID_STEP_CYCLES
        hi = 0.5 / float(spacing.min())
    n = max(int(math.ceil((hi - lo) / FIT_GRID_STEP_CYCLES)) + 1, 3)
    return np.linspace(lo, hi, n)


def fit_cosine(x, y, frequency_init: float | None = None) -> CosineFit:
    """
    Args:
        x, y:            samples (at least 8)
        frequency_init:  expected cycles per unit x; restricts the grid to ±50 %

    Returns:
        CosineFit with A ≥ 0, f > 0 and φ wrapped to (−π, π]. Non-convergence
        is reported through `converged`, never raised.
    """
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    if x.shape != y.shape or x.ndim != 1:
        raise FitError(f"x and y must be matching 1-D arrays, got {x.shape} and {y.shape}")
    if x.size < FIT_MIN_POINTS:
        raise FitError(f"need at least {FIT_MIN_POINTS} points, got {x.size}")
    if not (np.all(np.isfinite(x)) and np.all(np.isfinite(y))):
        raise FitError("data contain non-finite values")
    scale = float(np.max(np.abs(x)))
    if scale == 0.0 or np.unique(x).size < 4:
        raise FitError("x values do not span an interval")
    if frequency_init is not None and not frequency_init > 0:
        raise FitError(f"initial frequency must be positive, got {frequency_init}")

    u = x / scale
    k_init = None if frequency_init is None else frequency_init * scale
    best_k, best_coef, best_ss = None, None, math.inf
    for k in _grid(u, k_init):
        coef, ss = _linear_solve(u, y, float(k))
        if ss < best_ss:
            best_k, best_coef, best_ss = float(k), coef, ss
    c0, a0, b0 = (float(v) for v in best_coef)
    p0 = np.array([c0, math.hypot(a0, b0), best_k, math.atan2(-b0, a0)])

    two_pi_u = 2.0 * math.pi * u

    def residuals(p):
        return p[0] + p[1] * np.cos(p[2] * two_pi_u + p[3]) - y

    def jacobian(p):
        arg = p[2] * two_pi_u + p[3]
        s = np.sin(arg)
        return np.column_stack([
            np.ones_like(u),
            np.cos(arg),
            -p[1] * s * two_pi_u,
            -p[1] * s,
        ])

    try:
        sol = optimize.least_squares(
            residuals, p0, jac=jacobian, method="lm",
            xtol=FIT_XTOL, ftol=1e-15, gtol=1e-15, max_nfev=FIT_MAX_ITERATIONS,
        )
        p, converged, iterations, message = sol.x, sol.status > 0, int(sol.nfev), sol.message
    except (ValueError, np.linalg.LinAlgError) as exc:
        logger.warning("cosine fit failed, keeping grid estimate: %s", exc)
        p, converged, iterations, message = p0, False, 0, str(exc)

    c, a, k, phi = (float(v) for v in p)
    if a < 0:
        a, phi = -a, phi + math.pi
    if k < 0:
        k, phi = -k, -phi
    phi = wrap_phase(phi)
    p_final = np.array([c, a, k, phi])

    resid = residuals(p_final)
    ss_res = float(resid @ resid)
    ss_tot = float(np.sum((y - y.mean()) ** 2))
    r2 = 1.0 - ss_res / ss_tot if ss_tot > 0 else (1.0 if ss_res == 0 else 0.0)

    dof = max(x.size - 4, 1)
    jac = jacobian(p_final)
    cov = np.linalg.pinv(jac.T @ jac) * (ss_res / dof)
    cov[2, :] /= scale
    cov[:, 2] /= scale
    err = np.sqrt(np.clip(np.diag(cov), 0.0, None))

    if not converged:
        logger.warning("cosine fit did not converge after %d evaluations: %s", iterations, message)
    return CosineFit(
        offset=c, amplitude=a, frequency=k / scale, phase=phi,
        offset_stderr=float(err[0]), amplitude_stderr=float(err[1]),
        frequency_stderr=float(err[2]), phase_stderr=float(err[3]),
        r_squared=r2, converged=bool(converged), iterations=iterations,
        message=str(message), covariance=cov,
    )


# ═══════════════════════════════════════════════════════════════════════
# Ramsey fringes
# ═══════════════════════════════════════════════════════════════════════

def fit_fringe(scan, t_eff_init: float | None = None) -> FringeFit:
    """
    Fit p(Δ) = C + A·cos(2π·Δ·T_eff + φ_0) to a FringeScan (or (Δ, p) pairs).

    Args:
        scan:       FringeScan or iterable of (detuning_hz, p_f2)
        t_eff_init: expected effective interrogation time (s), optional
    """
    points = getattr(scan, "points", scan)
    det = np.array([d for d, _ in points], dtype=float)
    pop = np.array([p for _, p in points], dtype=float)
    if det.size and t_eff_init is not None:
        span = float(det.max() - det.min())
        if span * t_eff_init < 1.0:
            raise FitError(
                f"scan spans {span:.4g} Hz, less than one fringe period (~{1.0 / t_eff_init:.4g} Hz)"
            )
    fit = fit_cosine(det, pop, t_eff_init)
    span = float(det.max() - det.min())
    converged = fit.converged and span * fit.frequency >= 1.0
    if fit.converged and not converged:
        logger.warning("fringe fit spans less than one period (T_eff = %.4g s)", fit.frequency)
    return FringeFit(
        amplitude=fit.amplitude,
        phi0=fit.phase,
        offset=fit.offset,
        t_eff_s=fit.frequency,
        fringe_period_hz=1.0 / fit.frequency,
        visibility=fit.amplitude / fit.offset if fit.offset > 0 else math.nan,
        contrast=2.0 * fit.amplitude,
        phi0_stderr=fit.phase_stderr,
        t_eff_stderr=fit.frequency_stderr,
        r_squared=fit.r_squared,
        converged=converged,
        iterations=fit.iterations,
        covariance=fit.covariance,
    )


def phase_shift(fit_a: FringeFit, fit_b: FringeFit) -> float:
    """wrap(φ_a − φ_b); both fits must have converged with periods within 5 %."""
    for name, f in (("first", fit_a), ("second", fit_b)):
        if not f.converged:
            raise FitError(f"{name} fringe fit did not converge; phase shift undefined")
    pa, pb = fit_a.fringe_period_hz, fit_b.fringe_period_hz
    if abs(pa - pb) > FIT_PERIOD_MATCH * min(pa, pb):
        raise FitError(
            f"fringe periods {pa:.4g} Hz and {pb:.4g} Hz differ by more than "
            f"{FIT_PERIOD_MATCH:.0%}; scans not comparable"
        )
    return wrap_phase(fit_a.phi0 - fit_b.phi0)


def phase_shift_stderr(fit_a: FringeFit, fit_b: FringeFit) -> float:
    return math.hypot(fit_a.phi0_stderr, fit_b.phi0_stderr)
