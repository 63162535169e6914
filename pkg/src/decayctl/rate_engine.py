"""Modified decay rate R(t), its long-time harmonic limit, and survival curves.

The rate is the overlap R(t) = 2 pi int G(omega + omega_a) F_t(omega) d omega
and the survival probability is P(t) = exp(-R(t) Q(t)).
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import modulation as mod_
from ._quadrature import QuadratureError, window_overlap
from .spectra import CouplingSpectrum, correlation_time, spectral_scale_xi

__all__ = [
    "QuadratureError",
    "Validity",
    "DecayCurve",
    "universal_rate",
    "longtime_rate",
    "truncation_error_bound",
    "survival_curve",
    "validity_ratio",
    "validity_tier",
    "STRONG",
    "ACCEPTABLE",
]

STRONG = 0.01
ACCEPTABLE = 0.1
ABS_TOL = 1e-8


def validity_tier(ratio: float) -> str:
    """'strong' below 0.01, 'acceptable' below 0.1, else 'flagged'."""
    if not ratio < ACCEPTABLE:
        return "flagged"
    return "strong" if ratio < STRONG else "acceptable"


@dataclass(frozen=True)
class Validity:
    ratio: float
    t_c: float

    @property
    def tier(self) -> str:
        return validity_tier(self.ratio)

    @property
    def flagged(self) -> bool:
        return self.tier == "flagged"


@dataclass(frozen=True, eq=False)
class DecayCurve:
    """Sampled (t, Q, R, P); R is nan where it is undefined (Q = 0)."""

    t: np.ndarray
    Q: np.ndarray
    R: np.ndarray
    P: np.ndarray
    method: str
    validity: Validity
    source: tuple | None = None

    @property
    def samples(self) -> list[tuple[float, float, float, float]]:
        return list(zip(self.t.tolist(), self.Q.tolist(), self.R.tolist(), self.P.tolist()))

    @property
    def amplitude(self) -> np.ndarray:
        """|alpha(t)| = exp(-R Q / 2)."""
        return np.sqrt(self.P)

    def __len__(self):
        return self.t.size


def _shifted_features(spectrum: CouplingSpectrum):
    wa = spectrum.omega_a
    edges = tuple(e - wa for e in spectrum.model.edges)
    peaks = tuple((c - wa, w) for c, w in spectrum.model.peaks)
    return edges, peaks


def universal_rate(spectrum: CouplingSpectrum, F: mod_.WindowSpectrum, rtol: float = 1e-6) -> float:
    """R = 2 pi int G(omega + omega_a) F(omega) d omega.

    Raises QuadratureError (carrying the estimate and its error) when the
    error estimate exceeds 1e-8 + rtol * R.
    """
    model, wa = spectrum.model, spectrum.omega_a
    edges, peaks = _shifted_features(spectrum)
    val, err = window_overlap(lambda x: model.G(x + wa), F, edges=edges, peaks=peaks, rtol=rtol)
    rate, err = 2.0 * math.pi * val, 2.0 * math.pi * err
    if not math.isfinite(rate) or err > ABS_TOL + rtol * abs(rate):
        raise QuadratureError(f"overlap quadrature error {err:.3g} exceeds tolerance", estimate=rate, error=err)
    return max(rate, 0.0)


def longtime_rate(spectrum: CouplingSpectrum, h: mod_.HarmonicDecomposition) -> float:
    """R = 2 pi sum_k |lambda_k|^2 G(omega_a + omega_k) over the retained harmonics."""
    if len(h) == 0:
        return 0.0
    g = spectrum.model.G(spectrum.omega_a + h.omegas)
    return float(2.0 * math.pi * np.dot(h.weights, g))


def truncation_error_bound(spectrum: CouplingSpectrum, h: mod_.HarmonicDecomposition) -> float:
    """Upper bound on the rate carried by harmonics dropped from ``h``: 2 pi * tail mass * sup G."""
    return 2.0 * math.pi * h.tail_mass * spectrum.model.sup


def _time_domain_tc(spectrum, modulation, K) -> float:
    h = mod_.harmonic_decomposition(modulation, K)
    if len(h) == 0 or not np.any(h.weights > 0):
        return 0.0
    return correlation_time(spectrum, h)


def _stationary_tc(spectrum, F) -> float:
    xi = spectral_scale_xi(spectrum, spectrum.omega_a + np.asarray(F.centers, dtype=float))
    return float(np.max(1.0 / np.atleast_1d(xi)))


def survival_curve(
    spectrum: CouplingSpectrum,
    modulation,
    times,
    *,
    method: str = "finite-window",
    rtol: float = 1e-6,
    K: int = mod_.DEFAULT_K,
) -> DecayCurve:
    """P(t) = exp(-R(t) Q(t)) at each requested time.

    ``method`` selects the finite-window rate (default) or the long-time
    harmonic rate with Q = eps_c^2 t ('long-time-harmonic').  Spectral-only
    schemes always use their stationary spectrum with Q = eps_c^2 t.
    """
    t = np.asarray(times, dtype=float).ravel()
    if t.size == 0:
        raise ValueError("no times given")
    if np.any(~np.isfinite(t)) or np.any(t < 0) or np.any(np.diff(t) <= 0):
        raise ValueError("times must be finite, nonnegative and strictly increasing")
    R = np.full(t.size, math.nan)

    if not modulation.time_domain:
        F = mod_.stationary_spectrum(modulation)
        rate = universal_rate(spectrum, F, rtol)
        Q = modulation.intensity * t
        R[t > 0] = rate
        t_c = _stationary_tc(spectrum, F)
        method = "stationary-random"
    elif method == "long-time-harmonic":
        h = mod_.harmonic_decomposition(modulation, K)
        Q = h.intensity * t
        R[Q > 0] = longtime_rate(spectrum, h)
        t_c = _time_domain_tc(spectrum, modulation, K)
    elif method == "finite-window":
        Q = np.asarray(mod_.fluence(modulation, t), dtype=float)
        for i, ti in enumerate(t):
            if Q[i] > 0:
                R[i] = universal_rate(spectrum, mod_.window_spectrum(modulation, ti), rtol)
        t_c = _time_domain_tc(spectrum, modulation, K)
    else:
        raise ValueError(f"unknown method {method!r}")

    P = np.where(Q > 0, np.exp(-np.nan_to_num(R) * Q), 1.0)
    finite = R[np.isfinite(R)]
    ratio = float(finite.max()) * t_c if finite.size else 0.0
    return DecayCurve(
        t=t, Q=Q, R=R, P=P, method=method, validity=Validity(ratio=ratio, t_c=t_c),
        source=(spectrum, modulation),
    )


def validity_ratio(spectrum: CouplingSpectrum, h: mod_.HarmonicDecomposition) -> float:
    """R t_c with the long-time rate; small values justify the weak-coupling rate."""
    rate = longtime_rate(spectrum, h)
    if rate == 0.0:
        return 0.0
    return rate * correlation_time(spectrum, h)
