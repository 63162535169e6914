"""Choosing modulation parameters that slow down (or speed up) decay.

Objectives use the long-time harmonic rate, optionally averaged over a
band of resonance frequencies omega_a with weights P(omega_a).  Two band
averages exist: the rate average sum P R and the survival average
-ln(sum P exp(-R eps_c^2 t*))/t*.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Mapping

import numpy as np
from scipy import optimize as sopt

from . import modulation as mod_
from .rate_engine import longtime_rate, truncation_error_bound, universal_rate, validity_ratio
from .spectra import CouplingSpectrum, golden_rule_rate

__all__ = [
    "OptimizationError",
    "InfeasibleProblem",
    "Band",
    "load_band",
    "PMFamily",
    "MonochromaticFamily",
    "AMFamily",
    "FreeHarmonics",
    "ControlProblem",
    "ControlResult",
    "SchemeTable",
    "band_rate",
    "band_survival",
    "survival_exponent",
    "optimize",
    "compare_schemes",
    "scheme_rate",
    "pm_scheme",
    "am_scheme",
    "measurement_scheme",
]


class OptimizationError(ValueError):
    pass


class InfeasibleProblem(OptimizationError):
    """Every candidate violates the validity bound; ``validity_map`` lists them."""

    def __init__(self, message: str, validity_map: list):
        super().__init__(message)
        self.validity_map = validity_map


@dataclass(frozen=True, eq=False)
class Band:
    """Distribution P(omega_a) over resonance frequencies; weights sum to 1."""

    omegas: np.ndarray
    weights: np.ndarray

    def __post_init__(self):
        w = np.atleast_1d(np.asarray(self.omegas, dtype=float))
        p = np.atleast_1d(np.asarray(self.weights, dtype=float))
        if w.size == 0:
            raise OptimizationError("band is empty")
        if w.shape != p.shape:
            raise OptimizationError("band frequencies and weights differ in length")
        if np.any(~np.isfinite(w)) or np.any(~np.isfinite(p)) or np.any(p < 0):
            raise OptimizationError("band weights must be finite and nonnegative")
        if abs(p.sum() - 1.0) > 1e-9:
            raise OptimizationError(f"band weights sum to {p.sum():.12g}, not 1")
        object.__setattr__(self, "omegas", w)
        object.__setattr__(self, "weights", p)

    @classmethod
    def normalized(cls, omegas, weights) -> "Band":
        p = np.asarray(weights, dtype=float)
        return cls(omegas, p / p.sum())

    @classmethod
    def single(cls, omega_a: float) -> "Band":
        return cls([omega_a], [1.0])


def load_band(path) -> Band:
    """Two columns (omega_a, weight); weights are normalized on load."""
    from .textio import read_columns

    data = read_columns(path, ncols=2)
    if data.shape[0] == 0:
        raise OptimizationError(f"{path}: band is empty")
    return Band.normalized(data[:, 0], data[:, 1])


def _members(spectrum: CouplingSpectrum, band: Band | None):
    if band is None:
        return [spectrum], np.array([1.0])
    return [spectrum.at(w) for w in band.omegas], band.weights


def band_rate(spectrum: CouplingSpectrum, h: mod_.HarmonicDecomposition, band: Band | None = None) -> float:
    """sum_a P(omega_a) R(omega_a); without a band, the single-level rate."""
    specs, p = _members(spectrum, band)
    return float(sum(pa * longtime_rate(s, h) for s, pa in zip(specs, p)))


def band_survival(spectrum: CouplingSpectrum, h: mod_.HarmonicDecomposition, band: Band | None, t_star: float) -> float:
    """sum_a P(omega_a) exp(-R(omega_a) eps_c^2 t*)."""
    if not t_star > 0:
        raise OptimizationError("t_star must be positive")
    specs, p = _members(spectrum, band)
    return float(sum(pa * math.exp(-longtime_rate(s, h) * h.intensity * t_star) for s, pa in zip(specs, p)))


def survival_exponent(spectrum, h, band, t_star: float) -> float:
    """Effective rate -ln(band_survival)/t*."""
    return -math.log(band_survival(spectrum, h, band, t_star)) / t_star


# ---------------------------------------------------------------- families


@dataclass(frozen=True)
class PMFamily:
    phi: tuple[float, float] = (0.02, math.pi)
    tau: tuple[float, float] = (1.0, 30.0)

    names = ("phi", "tau")

    @property
    def bounds(self):
        return (self.phi, self.tau)

    def build(self, phi, tau):
        return mod_.ImpulsivePM(phi=float(phi), tau=float(tau))


@dataclass(frozen=True)
class MonochromaticFamily:
    delta: tuple[float, float]
    eps0: float = 1.0

    names = ("delta",)

    @property
    def bounds(self):
        return (self.delta,)

    def build(self, delta):
        return mod_.Monochromatic(eps0=self.eps0, delta=float(delta))


@dataclass(frozen=True)
class AMFamily:
    """On-off modulation; points with tau_on > period are infeasible."""

    tau_on: tuple[float, float]
    period: tuple[float, float]

    names = ("tau_on", "period")

    @property
    def bounds(self):
        return (self.tau_on, self.period)

    def build(self, tau_on, period):
        if tau_on > period:
            return None
        return mod_.OnOffAM(tau_on=float(tau_on), period=float(period))


@dataclass(frozen=True, eq=False)
class FreeHarmonics:
    """Fixed sideband frequencies with free weights |lambda_k|^2 on the simplex."""

    omegas: np.ndarray

    def __post_init__(self):
        w = np.atleast_1d(np.asarray(self.omegas, dtype=float))
        if w.size == 0 or np.unique(w).size != w.size:
            raise OptimizationError("harmonic grid must be nonempty with distinct frequencies")
        object.__setattr__(self, "omegas", w)


@dataclass(frozen=True, eq=False)
class ControlProblem:
    spectrum: CouplingSpectrum
    family: PMFamily | MonochromaticFamily | AMFamily | FreeHarmonics
    objective: str = "minimize"
    band: Band | None = None
    band_objective: str = "survival"
    t_star: float | None = None
    K: int = mod_.DEFAULT_K
    grid: int = 64
    max_validity: float | None = 0.1
    xtol: float = 1e-4

    def __post_init__(self):
        if self.objective not in ("minimize", "maximize"):
            raise OptimizationError("objective must be 'minimize' or 'maximize'")
        if self.band_objective not in ("rate", "survival"):
            raise OptimizationError("band_objective must be 'rate' or 'survival'")
        if self.band is not None and self.band_objective == "survival" and self.t_star is None:
            raise OptimizationError("survival-averaged band objective needs t_star")
        if self.grid < 2:
            raise OptimizationError("grid needs at least 2 points per axis")
        for lo, hi in getattr(self.family, "bounds", ()):
            if not lo <= hi:
                raise OptimizationError("empty parameter box")

    @property
    def sign(self) -> float:
        return 1.0 if self.objective == "minimize" else -1.0

    def value(self, h: mod_.HarmonicDecomposition) -> float:
        if self.band is not None and self.band_objective == "survival":
            return survival_exponent(self.spectrum, h, self.band, self.t_star)
        return band_rate(self.spectrum, h, self.band)

    def validity(self, h: mod_.HarmonicDecomposition) -> float:
        specs, _ = _members(self.spectrum, self.band)
        return max(validity_ratio(s, h) for s in specs)

    def reference(self) -> float:
        """Objective without modulation (eps = 1)."""
        return self.value(mod_.harmonic_decomposition(mod_.Constant(1.0)))


@dataclass(frozen=True, eq=False)
class ControlResult:
    params: dict
    value: float
    evaluations: int
    reference: float
    objective: str = "minimize"
    modulation: object = None
    weights: np.ndarray | None = None
    validity: float = 0.0
    excluded: list = field(default_factory=list)

    @property
    def improvement(self) -> float:
        """reference/value when minimizing, value/reference when maximizing."""
        num, den = (self.reference, self.value) if self.objective == "minimize" else (self.value, self.reference)
        if den == 0:
            return math.inf if num > 0 else math.nan
        return num / den

    def as_dict(self) -> dict:
        out = {
            "params": dict(self.params),
            "objective": self.objective,
            "value": self.value,
            "reference": self.reference,
            "improvement": self.improvement,
            "evaluations": self.evaluations,
            "validity_ratio": self.validity,
            "excluded_points": len(self.excluded),
        }
        if self.weights is not None:
            out["weights"] = [float(w) for w in self.weights]
        return out


def _free_harmonics(problem: ControlProblem) -> ControlResult:
    fam = problem.family
    specs, p = _members(problem.spectrum, problem.band)
    # linear objective: vertex k gives the band-averaged GR rate at omega_a + omega_k
    G = np.array([[s.model.G(np.array([s.omega_a + wk]))[0] for wk in fam.omegas] for s in specs])
    vertex = 2.0 * math.pi * (p @ G)
    feasible = np.ones(fam.omegas.size, dtype=bool)
    ratios = np.zeros(fam.omegas.size)
    if problem.max_validity is not None:
        for k, wk in enumerate(fam.omegas):
            h = mod_.HarmonicDecomposition(np.array([wk]), np.array([1.0 + 0j]), 1.0, math.inf)
            ratios[k] = problem.validity(h)
        feasible = ratios <= problem.max_validity
        if not feasible.any():
            raise InfeasibleProblem("every harmonic violates the validity bound",
                                    [(float(w), float(r)) for w, r in zip(fam.omegas, ratios)])
    score = np.where(feasible, problem.sign * vertex, math.inf)
    best = score.min()
    ties = np.flatnonzero(np.isclose(score, best, rtol=1e-12, atol=0.0) & feasible)
    k = int(ties[np.argmin(np.abs(fam.omegas[ties]))])
    weights = np.zeros(fam.omegas.size)
    weights[k] = 1.0
    ref = band_rate(problem.spectrum, mod_.harmonic_decomposition(mod_.Constant(1.0)), problem.band)
    return ControlResult(
        params={"omega_k": float(fam.omegas[k]), "index": k},
        objective=problem.objective,
        value=float(vertex[k]),
        evaluations=int(fam.omegas.size),
        reference=ref,
        modulation=mod_.Quasiperiodic([fam.omegas[k]], [1.0]),
        weights=weights,
        validity=float(ratios[k]),
        excluded=[(float(fam.omegas[i]), float(ratios[i])) for i in np.flatnonzero(~feasible)],
    )


def optimize(problem: ControlProblem) -> ControlResult:
    """Coarse grid scan followed by bounded Nelder-Mead refinement of the best point.

    FreeHarmonics problems are solved exactly: the objective is linear in
    the weights, so the optimum is the best single harmonic.
    """
    if isinstance(problem.family, FreeHarmonics):
        return _free_harmonics(problem)
    fam = problem.family
    bounds = fam.bounds
    count = 0
    cache: dict = {}
    excluded: list = []

    def evaluate(x) -> tuple[float, float]:
        nonlocal count
        key = tuple(float(v) for v in x)
        if key in cache:
            return cache[key]
        count += 1
        m = fam.build(*key)
        if m is None:
            cache[key] = (math.inf, math.nan)
            return cache[key]
        h = mod_.harmonic_decomposition(m, problem.K)
        ratio = problem.validity(h) if problem.max_validity is not None else 0.0
        if problem.max_validity is not None and ratio > problem.max_validity:
            excluded.append((dict(zip(fam.names, key)), ratio))
            cache[key] = (math.inf, ratio)
        else:
            cache[key] = (problem.sign * problem.value(h), ratio)
        return cache[key]

    axes = [np.linspace(lo, hi, problem.grid) if hi > lo else np.array([lo]) for lo, hi in bounds]
    best_x, best_f = None, math.inf
    for point in np.stack(np.meshgrid(*axes, indexing="ij"), axis=-1).reshape(-1, len(axes)):
        f, _ = evaluate(point)
        if f < best_f:
            best_x, best_f = point, f
    if best_x is None:
        raise InfeasibleProblem("no grid point satisfies the validity bound", excluded)

    span = np.array([hi - lo for lo, hi in bounds])
    if np.any(span > 0):
        scale = np.where(span > 0, span, 1.0)
        lo = np.array([b[0] for b in bounds])
        res = sopt.minimize(
            lambda u: evaluate(lo + u * scale)[0],
            (best_x - lo) / scale,
            method="Nelder-Mead",
            bounds=[(0.0, 1.0) if s > 0 else (0.0, 0.0) for s in span],
            options={"xatol": problem.xtol, "fatol": problem.xtol * max(abs(best_f), 1e-300), "maxiter": 400},
        )
        x = lo + res.x * scale
        f, _ = evaluate(x)
        if f < best_f:
            best_x, best_f = x, f
    value = problem.sign * best_f
    _, ratio = evaluate(best_x)
    return ControlResult(
        params=dict(zip(fam.names, (float(v) for v in best_x))),
        objective=problem.objective,
        value=float(value),
        evaluations=count,
        reference=problem.reference(),
        modulation=fam.build(*best_x),
        validity=float(ratio),
        excluded=excluded,
    )


# ------------------------------------------------------------ scheme table


def pm_scheme(phi: float) -> Callable[[float], mod_.ImpulsivePM]:
    return lambda tau: mod_.ImpulsivePM(phi=phi, tau=tau)


def am_scheme(duty: float) -> Callable[[float], mod_.OnOffAM]:
    """On-off modulation with on-time tau and period tau/duty."""
    return lambda tau: mod_.OnOffAM(tau_on=tau, period=tau / duty)


def measurement_scheme() -> Callable[[float], mod_.MeasurementSinc]:
    return lambda tau: mod_.MeasurementSinc(tau_on=tau)


@dataclass(frozen=True, eq=False)
class SchemeTable:
    """R/R_GR for each scheme (columns) at each tau (rows)."""

    taus: np.ndarray
    names: tuple[str, ...]
    ratios: np.ndarray
    bounds: np.ndarray

    def column(self, name: str) -> np.ndarray:
        return self.ratios[:, self.names.index(name)]

    def rows(self):
        for i, tau in enumerate(self.taus):
            yield float(tau), dict(zip(self.names, self.ratios[i].tolist()))


def scheme_rate(spectrum: CouplingSpectrum, modulation, K: int = 4096) -> tuple[float, float]:
    """Long-time rate and truncation bound; spectral-only schemes use their stationary spectrum."""
    if modulation.time_domain:
        h = mod_.harmonic_decomposition(modulation, K)
        return longtime_rate(spectrum, h), truncation_error_bound(spectrum, h)
    return universal_rate(spectrum, mod_.stationary_spectrum(modulation)), 0.0


def compare_schemes(
    spectrum: CouplingSpectrum,
    schemes: Mapping[str, Callable[[float], object]],
    taus,
    K: int = 4096,
) -> SchemeTable:
    """Long-time R/R_GR for every scheme at every tau."""
    taus = np.atleast_1d(np.asarray(taus, dtype=float))
    rgr = golden_rule_rate(spectrum)
    names = tuple(schemes)
    ratios = np.empty((taus.size, len(names)))
    bounds = np.empty_like(ratios)
    for i, tau in enumerate(taus):
        for j, name in enumerate(names):
            rate, bound = scheme_rate(spectrum, schemes[name](float(tau)), K)
            ratios[i, j] = rate / rgr if rgr > 0 else math.nan
            bounds[i, j] = bound / rgr if rgr > 0 else math.nan
    return SchemeTable(taus=taus, names=names, ratios=ratios, bounds=bounds)
