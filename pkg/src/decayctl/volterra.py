"""Direct solution of the exact amplitude equation

    d alpha/dt = -conj(eps(t)) int_0^t eps(t') Phi(t - t') exp(i omega_a (t - t')) alpha(t') dt'

by implicit trapezoidal product integration on a uniform grid.  The memory
integral is a trapezoid sum over all past grid points (O(N^2) in total)
and the outer time step is a trapezoid as well, so the scheme is second
order.  Jumps of eps sit on grid points and each subinterval uses the
one-sided limits of eps at its ends.

Nothing here consumes R(t) or F_t; the solver sees only Phi and eps.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction

import numpy as np

from . import modulation as mod_
from .rate_engine import DecayCurve, validity_tier
from .spectra import CouplingSpectrum, correlation_time, response_function, spectral_scale_xi

__all__ = [
    "StepTooCoarse",
    "AmplitudeTrajectory",
    "ComparisonReport",
    "solve",
    "default_step",
    "compare_with_universal",
    "MAX_STEPS",
]

MAX_STEPS = 200_000
STEPS_PER_SCALE = 40
MIN_STEPS_PER_SCALE = 20


class StepTooCoarse(ValueError):
    """The time step does not resolve the modulation or the reservoir memory."""

    def __init__(self, message: str, recommended: float):
        super().__init__(f"{message}; try h <= {recommended:.6g}")
        self.recommended = recommended


@dataclass(frozen=True, eq=False)
class AmplitudeTrajectory:
    h: float
    t: np.ndarray
    alpha: np.ndarray
    kernel: np.ndarray
    spectrum: CouplingSpectrum
    modulation: object

    @property
    def modulus(self) -> np.ndarray:
        return np.abs(self.alpha)

    def at(self, times) -> np.ndarray:
        """alpha at grid times; raises ValueError for off-grid or out-of-range times."""
        times = np.asarray(times, dtype=float)
        idx = np.rint(times / self.h)
        if np.any(np.abs(idx * self.h - times) > 1e-9 * max(self.h, 1.0) + 1e-12 * np.abs(times)):
            raise ValueError("requested times are not on the solver grid")
        if np.any(idx < 0) or np.any(idx >= self.t.size):
            raise ValueError("requested times fall outside the solved horizon")
        return self.alpha[idx.astype(int)]


def _modulation_scale(mod) -> float:
    scale = mod.timescale
    return scale if math.isfinite(scale) else math.inf


def _memory_time(spectrum: CouplingSpectrum, mod) -> float:
    try:
        h = mod_.harmonic_decomposition(mod)
        if len(h) and np.any(h.weights > 0):
            return correlation_time(spectrum, h)
    except mod_.UnsupportedOperation:
        pass
    return float(1.0 / spectral_scale_xi(spectrum, spectrum.omega_a))


def _jump_grid(mod) -> tuple[Fraction, ...]:
    return tuple(Fraction(p).limit_denominator(10**9) for p in getattr(mod, "grid_periods", ()))


def _common_step(periods, h_max: float) -> float:
    """Largest step <= h_max that divides every period exactly (as rationals)."""
    if not periods:
        return h_max
    num = math.gcd(*(p.numerator for p in periods))
    den = math.lcm(*(p.denominator for p in periods))
    base = Fraction(num, den)
    if float(base) < 1e-6 * max(float(p) for p in periods):
        raise ValueError("modulation periods are not commensurate enough for a jump-aligned grid")
    return float(base) / math.ceil(float(base) / h_max)


def default_step(spectrum: CouplingSpectrum, mod) -> float:
    """min(modulation time scale, memory time)/40, shrunk so jumps fall on grid points."""
    scale = min(_modulation_scale(mod), _memory_time(spectrum, mod))
    if not math.isfinite(scale):
        raise ValueError("no finite time scale to choose a step from; pass h explicitly")
    return _common_step(_jump_grid(mod), scale / STEPS_PER_SCALE)


def _check_step(spectrum, mod, h: float) -> None:
    scale = min(_modulation_scale(mod), _memory_time(spectrum, mod))
    if math.isfinite(scale) and h > scale / MIN_STEPS_PER_SCALE * (1 + 1e-12):
        raise StepTooCoarse(f"step {h:.6g} does not resolve time scale {scale:.6g}", scale / STEPS_PER_SCALE)
    for p in getattr(mod, "grid_periods", ()):
        ratio = p / h
        if abs(ratio - round(ratio)) > 1e-9 * ratio:
            raise StepTooCoarse(f"modulation jumps every {p:.6g} are not on the grid", _common_step(_jump_grid(mod), h))


def _one_sided(mod, h: float, n: int) -> tuple[np.ndarray, np.ndarray]:
    """Right and left limits of eps at the grid points t_j = j h, j = 0..n."""
    j = np.arange(n + 1)
    if isinstance(mod, mod_.ImpulsivePM):
        p = round(mod.tau / h)
        plus = np.exp(1j * mod.phi * (j // p))
        minus = np.exp(1j * mod.phi * ((j - 1) // p))
    elif isinstance(mod, mod_.OnOffAM):
        p0, p1 = round(mod.period / h), round(mod.tau_on / h)
        plus = np.where(j % p0 < p1, 1.0 + 0j, 0.0 + 0j)
        minus = np.where((j - 1) % p0 < p1, 1.0 + 0j, 0.0 + 0j)
    else:  # continuous schemes
        plus = np.asarray(mod.epsilon(j * h), dtype=complex).reshape(n + 1)
        minus = plus.copy()
    minus[0] = 0.0
    return plus, minus


def solve(spectrum: CouplingSpectrum, mod, T: float, h: float | None = None) -> AmplitudeTrajectory:
    """alpha(t) on [0, T] with step h (default: see ``default_step``)."""
    if not mod.time_domain:
        raise mod_.UnsupportedOperation("the amplitude equation needs a time-domain modulation")
    if not (T > 0 and math.isfinite(T)):
        raise ValueError("horizon must be positive")
    if h is None:
        h = default_step(spectrum, mod)
    elif not h > 0:
        raise ValueError("step must be positive")
    _check_step(spectrum, mod, h)
    n = int(round(T / h))
    if n > MAX_STEPS:
        raise ValueError(f"{n} steps exceed the limit of {MAX_STEPS}; shorten the horizon or enlarge h")
    n = max(n, 1)

    s = h * np.arange(n + 1)
    plus, minus = _one_sided(mod, h, n)
    alpha = np.empty(n + 1, dtype=complex)
    alpha[0] = 1.0
    if not np.any(plus) and not np.any(minus):
        alpha[:] = 1.0
        return AmplitudeTrajectory(h, s, alpha, np.zeros(0, dtype=complex), spectrum, mod)

    resp = response_function(spectrum)
    K = np.asarray(resp(s), dtype=complex) * np.exp(1j * spectrum.omega_a * s)
    Krev = K[::-1].copy()  # Krev[n - m] = K[m]
    half = 0.5 * h
    c = np.zeros(n + 1, dtype=complex)  # eps-weighted alpha at grid points, both one-sided terms
    c[0] = plus[0]
    I_prev = 0.0 + 0j
    for m in range(n):
        if m:
            c[m] += minus[m] * alpha[m]
        # known part of the memory integral at t_{m+1}: sum_{j<=m} c_j K_{m+1-j}
        S = half * np.dot(c[: m + 1], Krev[n - m - 1 : n])
        em = minus[m + 1]
        denom = 1.0 + half * half * (em.real**2 + em.imag**2) * K[0]
        a_next = (alpha[m] - half * (np.conj(plus[m]) * I_prev + np.conj(em) * S)) / denom
        alpha[m + 1] = a_next
        I_prev = S + half * em * K[0] * a_next
        c[m + 1] = plus[m + 1] * a_next
    return AmplitudeTrajectory(h, s, alpha, K, spectrum, mod)


@dataclass(frozen=True, eq=False)
class ComparisonReport:
    """Relative deviation of |alpha| from exp(-R Q / 2) on the curve's times."""

    t: np.ndarray
    oracle: np.ndarray
    universal: np.ndarray
    max_deviation: float
    mean_deviation: float
    tolerance: float
    validity_ratio: float

    @property
    def passed(self) -> bool:
        return self.max_deviation <= self.tolerance

    @property
    def regime(self) -> str:
        return validity_tier(self.validity_ratio)


def compare_with_universal(traj: AmplitudeTrajectory, curve: DecayCurve, tolerance: float = 0.02) -> ComparisonReport:
    """Compare the oracle trajectory with a decay curve of the same system."""
    if curve.source is not None:
        spectrum, modulation = curve.source
        if spectrum != traj.spectrum or modulation != traj.modulation:
            raise ValueError("trajectory and curve describe different systems")
    oracle = np.abs(traj.at(curve.t))
    universal = curve.amplitude
    dev = np.abs(oracle - universal) / universal
    return ComparisonReport(
        t=curve.t,
        oracle=oracle,
        universal=universal,
        max_deviation=float(dev.max()),
        mean_deviation=float(dev.mean()),
        tolerance=tolerance,
        validity_ratio=curve.validity.ratio,
    )
