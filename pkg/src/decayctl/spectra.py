"""Reservoir coupling spectra G(omega) and their derived scales.

A coupling spectrum is the density of final states weighted by the squared
coupling.  It is the only property of the continuum that enters the
weak-coupling decay rate.  Everything here works in dimensionless
frequency units chosen by the caller (for instance Gamma = 1).

Models
------
BandEdge               C sqrt(w) / (w + Gamma) for w > 0, zero below the edge
LorentzianPeak         g w / ((omega - omega_0)^2 + w^2)
FlatCutoff             G_0 on [omega_low, omega_cut]
ParametricLatticePeak  g (omega/omega_g)^p exp(-(omega/omega_g)^q) for omega > 0
Tabulated              piecewise-linear interpolation of sampled (omega, G)

``CouplingSpectrum`` pairs a model with the resonance ``omega_a`` of the
decaying level.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field, replace
from typing import Callable

import numpy as np
from scipy import integrate

__all__ = [
    "SpectrumError",
    "DivergentSpectrumError",
    "EdgeDegenerateWarning",
    "BandEdge",
    "LorentzianPeak",
    "FlatCutoff",
    "ParametricLatticePeak",
    "Tabulated",
    "CouplingSpectrum",
    "ReservoirResponse",
    "eval_G",
    "response_function",
    "spectral_scale_xi",
    "correlation_time",
    "golden_rule_rate",
    "load_tabulated",
]

XI_FLOOR = 1e-9


class SpectrumError(ValueError):
    """Malformed spectrum or invalid spectral query."""


class DivergentSpectrumError(SpectrumError):
    """The spectrum has no finite total weight, so no response function exists."""


class EdgeDegenerateWarning(RuntimeWarning):
    """A probed frequency sits exactly on a spectral edge; xi was floored."""


def _as_float_array(w) -> np.ndarray:
    arr = np.asarray(w, dtype=float)
    if not np.all(np.isfinite(arr)):
        raise SpectrumError("frequency must be finite")
    return arr


def _positive(name: str, value: float) -> None:
    if not (value > 0 and math.isfinite(value)):
        raise SpectrumError(f"{name} must be positive and finite, got {value!r}")


class _Model:
    """Shared behaviour of spectrum models.

    Subclasses implement ``G``, ``dG``, ``d2G`` on arrays, plus the
    properties ``support`` (list of closed intervals where G may be
    positive), ``edges`` (points where G is not smooth), ``scale`` and
    ``sup``.
    """

    #: characteristic frequency scale of the model
    scale: float

    def G(self, w: np.ndarray) -> np.ndarray:  # pragma: no cover - abstract
        raise NotImplementedError

    def dG(self, w: np.ndarray) -> np.ndarray:  # pragma: no cover - abstract
        raise NotImplementedError

    def d2G(self, w: np.ndarray) -> np.ndarray:  # pragma: no cover - abstract
        raise NotImplementedError

    @property
    def support(self) -> list[tuple[float, float]]:
        return [(-math.inf, math.inf)]

    @property
    def edges(self) -> tuple[float, ...]:
        return ()

    @property
    def peaks(self) -> tuple[tuple[float, float], ...]:
        """Smooth features as (location, width) pairs, for quadrature refinement."""
        return ()

    @property
    def sup(self) -> float:  # pragma: no cover - abstract
        raise NotImplementedError

    def total_weight(self) -> float:
        """Integral of G over all frequencies."""
        raise NotImplementedError  # pragma: no cover

    def response(self, t: np.ndarray) -> np.ndarray:
        return _numeric_response(self, t)

    def scaled(self, factor: float) -> "_Model":  # pragma: no cover - abstract
        raise NotImplementedError


@dataclass(frozen=True)
class BandEdge(_Model):
    """Square-root band edge at omega = 0 with a 1/sqrt(omega) high-frequency tail.

    ``cutoff`` truncates G above Lambda.  The untruncated model has a
    divergent total weight, so a response function only exists with a
    cutoff.  The decay-rate formulas never need it.
    """

    C: float = 1.0
    Gamma: float = 1.0
    cutoff: float | None = None

    def __post_init__(self):
        if not (self.C >= 0 and math.isfinite(self.C)):
            raise SpectrumError("C must be nonnegative")
        _positive("Gamma", self.Gamma)
        if self.cutoff is not None:
            _positive("cutoff", self.cutoff)

    @property
    def scale(self) -> float:
        return self.Gamma

    def _inside(self, w):
        inside = w > 0
        if self.cutoff is not None:
            inside &= w <= self.cutoff
        return inside

    def G(self, w):
        w = np.asarray(w, dtype=float)
        pos = np.where(self._inside(w), w, 1.0)
        return np.where(self._inside(w), self.C * np.sqrt(pos) / (pos + self.Gamma), 0.0)

    def _log_derivs(self, w):
        pos = np.where(self._inside(w), w, 1.0)
        a = 0.5 / pos - 1.0 / (pos + self.Gamma)
        da = -0.5 / pos**2 + 1.0 / (pos + self.Gamma) ** 2
        return a, da

    def dG(self, w):
        w = np.asarray(w, dtype=float)
        a, _ = self._log_derivs(w)
        return self.G(w) * a

    def d2G(self, w):
        w = np.asarray(w, dtype=float)
        a, da = self._log_derivs(w)
        return self.G(w) * (a * a + da)

    @property
    def support(self):
        return [(0.0, math.inf if self.cutoff is None else self.cutoff)]

    @property
    def edges(self):
        return (0.0,) if self.cutoff is None else (0.0, self.cutoff)

    @property
    def sup(self):
        # maximum of sqrt(w)/(w+Gamma) sits at w = Gamma
        peak = min(self.Gamma, self.cutoff) if self.cutoff is not None else self.Gamma
        return float(self.G(peak))

    def total_weight(self):
        if self.cutoff is None:
            raise DivergentSpectrumError(
                "BandEdge integral diverges like sqrt(omega); supply a cutoff"
            )
        lam, gam = self.cutoff, self.Gamma
        return self.C * (2.0 * math.sqrt(lam) - 2.0 * math.sqrt(gam) * math.atan(math.sqrt(lam / gam)))

    def response(self, t):
        if self.cutoff is None:
            raise DivergentSpectrumError(
                "BandEdge response needs a high-frequency cutoff (e.g. cutoff=1e3*Gamma)"
            )
        return _numeric_response(self, t)

    def scaled(self, factor):
        return replace(self, C=self.C * factor)


@dataclass(frozen=True)
class LorentzianPeak(_Model):
    """Lorentzian of half-width ``w`` centred at ``omega_0``; total weight pi*g."""

    g: float = 1.0
    omega_0: float = 0.0
    w: float = 1.0

    def __post_init__(self):
        if not (self.g >= 0 and math.isfinite(self.g)):
            raise SpectrumError("g must be nonnegative")
        _positive("w", self.w)

    @property
    def scale(self):
        return self.w

    def G(self, w):
        x = np.asarray(w, dtype=float) - self.omega_0
        return self.g * self.w / (x * x + self.w**2)

    def dG(self, w):
        x = np.asarray(w, dtype=float) - self.omega_0
        return -2.0 * self.g * self.w * x / (x * x + self.w**2) ** 2

    def d2G(self, w):
        x = np.asarray(w, dtype=float) - self.omega_0
        return self.g * self.w * (6.0 * x * x - 2.0 * self.w**2) / (x * x + self.w**2) ** 3

    @property
    def peaks(self):
        return ((self.omega_0, self.w),)

    @property
    def sup(self):
        return self.g / self.w

    def total_weight(self):
        return math.pi * self.g

    def response(self, t):
        t = np.asarray(t, dtype=float)
        return math.pi * self.g * np.exp(-1j * self.omega_0 * t - self.w * np.abs(t))

    def scaled(self, factor):
        return replace(self, g=self.g * factor)


@dataclass(frozen=True)
class FlatCutoff(_Model):
    """Constant G_0 on [omega_low, omega_cut].

    Infinite bounds are allowed and give a strictly flat spectrum; that case
    has no response function.
    """

    G_0: float = 1.0
    omega_cut: float = 1.0
    omega_low: float = 0.0

    def __post_init__(self):
        if not (self.G_0 >= 0 and math.isfinite(self.G_0)):
            raise SpectrumError("G_0 must be nonnegative")
        if not self.omega_low < self.omega_cut:
            raise SpectrumError("omega_low must be below omega_cut")

    @property
    def scale(self):
        span = self.omega_cut - self.omega_low
        return span if math.isfinite(span) else 1.0

    def G(self, w):
        w = np.asarray(w, dtype=float)
        return np.where((w >= self.omega_low) & (w <= self.omega_cut), self.G_0, 0.0)

    def dG(self, w):
        return np.zeros_like(np.asarray(w, dtype=float))

    d2G = dG

    @property
    def support(self):
        return [(self.omega_low, self.omega_cut)]

    @property
    def edges(self):
        return tuple(e for e in (self.omega_low, self.omega_cut) if math.isfinite(e))

    @property
    def sup(self):
        return self.G_0

    def total_weight(self):
        span = self.omega_cut - self.omega_low
        if not math.isfinite(span):
            raise DivergentSpectrumError("unbounded flat spectrum has infinite weight")
        return self.G_0 * span

    def response(self, t):
        self.total_weight()
        t = np.asarray(t, dtype=float)
        lo, hi = self.omega_low, self.omega_cut
        # G_0 * int_lo^hi exp(-i w t) dw, written through sinc for small t
        mid, half = 0.5 * (lo + hi), 0.5 * (hi - lo)
        return self.G_0 * 2.0 * half * np.exp(-1j * mid * t) * np.sinc(half * t / math.pi)

    def scaled(self, factor):
        return replace(self, G_0=self.G_0 * factor)


@dataclass(frozen=True)
class ParametricLatticePeak(_Model):
    """Single-maximum stand-in g x^p exp(-x^q), x = omega/omega_g, for omega > 0.

    With p = q the maximum sits at omega_g with height g/e.  This is a
    qualitative substitute for an optical-lattice tunnelling spectrum.
    """

    g: float = 1.0
    omega_g: float = 1.0
    p: float = 2.0
    q: float = 2.0

    def __post_init__(self):
        if not (self.g >= 0 and math.isfinite(self.g)):
            raise SpectrumError("g must be nonnegative")
        _positive("omega_g", self.omega_g)
        _positive("p", self.p)
        _positive("q", self.q)

    @property
    def scale(self):
        return self.omega_g

    @property
    def upper(self) -> float:
        """Frequency above which G is below 1e-18 of its maximum."""
        x = 1.0
        for _ in range(60):
            x = (42.0 + self.p * math.log(max(x, 1.0))) ** (1.0 / self.q)
        return x * self.omega_g

    def G(self, w):
        w = np.asarray(w, dtype=float)
        x = np.where(w > 0, w / self.omega_g, 1.0)
        return np.where(w > 0, self.g * x**self.p * np.exp(-(x**self.q)), 0.0)

    def _log_derivs(self, w):
        x = np.where(w > 0, w / self.omega_g, 1.0)
        a = (self.p / x - self.q * x ** (self.q - 1)) / self.omega_g
        da = (-self.p / x**2 - self.q * (self.q - 1) * x ** (self.q - 2)) / self.omega_g**2
        return a, da

    def dG(self, w):
        w = np.asarray(w, dtype=float)
        a, _ = self._log_derivs(w)
        return self.G(w) * a

    def d2G(self, w):
        w = np.asarray(w, dtype=float)
        a, da = self._log_derivs(w)
        return self.G(w) * (a * a + da)

    @property
    def support(self):
        return [(0.0, math.inf)]

    @property
    def edges(self):
        return (0.0,)

    @property
    def peaks(self):
        xm = (self.p / self.q) ** (1.0 / self.q)
        return ((xm * self.omega_g, self.omega_g),)

    @property
    def sup(self):
        xm = (self.p / self.q) ** (1.0 / self.q)
        return float(self.G(xm * self.omega_g))

    def total_weight(self):
        # int_0^inf x^p exp(-x^q) dx = Gamma((p+1)/q)/q
        return self.g * self.omega_g * math.gamma((self.p + 1.0) / self.q) / self.q

    def scaled(self, factor):
        return replace(self, g=self.g * factor)


@dataclass(frozen=True, eq=False)
class Tabulated(_Model):
    """Sampled spectrum, linearly interpolated inside the grid and zero outside."""

    omega: np.ndarray
    values: np.ndarray
    _support: list = field(init=False, repr=False)

    def __post_init__(self):
        w = np.array(self.omega, dtype=float)
        g = np.array(self.values, dtype=float)
        if w.ndim != 1 or w.shape != g.shape or w.size < 2:
            raise SpectrumError("tabulated spectrum needs matching 1-d grids with >= 2 points")
        if not (np.all(np.isfinite(w)) and np.all(np.isfinite(g))):
            raise SpectrumError("tabulated spectrum contains non-finite entries")
        if np.any(np.diff(w) <= 0):
            raise SpectrumError("tabulated grid must be strictly increasing")
        if np.any(g < 0):
            raise SpectrumError("tabulated G must be nonnegative")
        w.flags.writeable = False
        g.flags.writeable = False
        object.__setattr__(self, "omega", w)
        object.__setattr__(self, "values", g)
        object.__setattr__(self, "_support", _positive_runs(w, g))

    def __eq__(self, other):
        return (
            isinstance(other, Tabulated)
            and np.array_equal(self.omega, other.omega)
            and np.array_equal(self.values, other.values)
        )

    def __hash__(self):
        return hash((self.omega.tobytes(), self.values.tobytes()))

    @property
    def scale(self):
        return float(self.omega[-1] - self.omega[0])

    def G(self, w):
        w = np.asarray(w, dtype=float)
        return np.interp(w, self.omega, self.values, left=0.0, right=0.0)

    def dG(self, w):
        h = 1e-4 * self.scale
        return (self.G(np.asarray(w) + h) - self.G(np.asarray(w) - h)) / (2 * h)

    def d2G(self, w):
        h = 1e-4 * self.scale
        w = np.asarray(w, dtype=float)
        return (self.G(w + h) - 2 * self.G(w) + self.G(w - h)) / (h * h)

    @property
    def support(self):
        return list(self._support)

    @property
    def edges(self):
        # every node is a kink of the interpolant
        return tuple(float(x) for x in self.omega)

    @property
    def sup(self):
        return float(self.values.max())

    def total_weight(self):
        return float(integrate.trapezoid(self.values, self.omega))

    def response(self, t):
        return _piecewise_linear_fourier(self.omega, self.values, np.asarray(t, dtype=float))

    def scaled(self, factor):
        return Tabulated(self.omega, self.values * factor)


def _positive_runs(w: np.ndarray, g: np.ndarray) -> list[tuple[float, float]]:
    """Closed intervals where the linear interpolant can be positive."""
    runs: list[tuple[float, float]] = []
    for i in range(w.size - 1):
        if g[i] > 0 or g[i + 1] > 0:
            lo, hi = float(w[i]), float(w[i + 1])
            if runs and runs[-1][1] == lo:
                runs[-1] = (runs[-1][0], hi)
            else:
                runs.append((lo, hi))
    return runs


def _piecewise_linear_fourier(w: np.ndarray, g: np.ndarray, t: np.ndarray) -> np.ndarray:
    """Exact int G(omega) exp(-i omega t) d omega for a piecewise-linear G."""
    t = np.atleast_1d(t)
    a = w[:-1][None, :]
    L = np.diff(w)[None, :]
    ga = g[:-1][None, :]
    slope = (np.diff(g) / np.diff(w))[None, :]
    x = t[:, None] * L
    small = np.abs(x) < 1e-3
    xs = np.where(small, 1.0, x)
    # E1 = int_0^1 exp(-i x v) dv, E2 = int_0^1 v exp(-i x v) dv
    e1 = np.where(small, 1 - 0.5j * x - x * x / 6 + 1j * x**3 / 24, (1 - np.exp(-1j * xs)) / (1j * xs))
    e2 = np.where(
        small,
        0.5 - 1j * x / 3 - x * x / 8 + 1j * x**3 / 30,
        1j * np.exp(-1j * xs) / xs - (1 - np.exp(-1j * xs)) / xs**2,
    )
    seg = np.exp(-1j * a * t[:, None]) * (ga * L * e1 + slope * L * L * e2)
    out = seg.sum(axis=1)
    return out if np.ndim(t) else out[0]


def _numeric_response(model: _Model, t) -> np.ndarray:
    """Phi(t) = int G(w) exp(-i w t) dw by oscillatory adaptive quadrature."""
    model.total_weight()
    t_arr = np.atleast_1d(np.asarray(t, dtype=float))
    lo = max(model.support[0][0], -1e300)
    hi = model.support[-1][1]
    if isinstance(model, ParametricLatticePeak):
        hi = model.upper
    if not (math.isfinite(lo) and math.isfinite(hi)):
        raise DivergentSpectrumError("numeric response needs a bounded support")
    split = [lo, min(lo + model.scale, hi), hi]
    out = np.empty(t_arr.shape, dtype=complex)
    f = lambda x: float(model.G(x))  # noqa: E731
    for i, ti in enumerate(t_arr):
        re = im = 0.0
        for a, b in zip(split[:-1], split[1:]):
            if b <= a:
                continue
            if abs(ti) * (b - a) < 1.0:
                re += integrate.quad(lambda x: f(x) * math.cos(ti * x), a, b, limit=200, epsabs=1e-13, epsrel=1e-11)[0]
                im -= integrate.quad(lambda x: f(x) * math.sin(ti * x), a, b, limit=200, epsabs=1e-13, epsrel=1e-11)[0]
            else:
                re += integrate.quad(f, a, b, weight="cos", wvar=ti, limit=400, epsabs=1e-13, epsrel=1e-11)[0]
                im -= integrate.quad(f, a, b, weight="sin", wvar=ti, limit=400, epsabs=1e-13, epsrel=1e-11)[0]
        out[i] = re + 1j * im
    return out if np.ndim(t) else out[0]


@dataclass(frozen=True)
class CouplingSpectrum:
    """A reservoir model together with the resonance omega_a of the decaying level."""

    model: _Model
    omega_a: float = 0.0

    def __post_init__(self):
        if not math.isfinite(self.omega_a):
            raise SpectrumError("omega_a must be finite")

    def G(self, w):
        return self.model.G(w)

    def at(self, omega_a: float) -> "CouplingSpectrum":
        return replace(self, omega_a=float(omega_a))

    def scaled(self, factor: float) -> "CouplingSpectrum":
        return replace(self, model=self.model.scaled(factor))


@dataclass(frozen=True)
class ReservoirResponse:
    """Memory function Phi(t) = int G(w) exp(-i w t) dw and the reservoir memory time."""

    phi: Callable[[np.ndarray], np.ndarray]
    t_c: float
    weight: float

    def __call__(self, t):
        return self.phi(t)


def eval_G(spectrum: CouplingSpectrum | _Model, w):
    """Coupling spectrum at absolute frequency ``w`` (scalar or array)."""
    model = spectrum.model if isinstance(spectrum, CouplingSpectrum) else spectrum
    arr = _as_float_array(w)
    out = model.G(arr)
    return float(out) if np.ndim(out) == 0 else out


def response_function(spectrum: CouplingSpectrum) -> ReservoirResponse:
    """Reservoir response for ``spectrum``.

    Raises DivergentSpectrumError when the total weight is infinite, which
    is the case for an uncut BandEdge.
    """
    model = spectrum.model
    weight = model.total_weight()
    return ReservoirResponse(phi=model.response, t_c=1.0 / spectral_scale_xi(spectrum, spectrum.omega_a), weight=weight)


def _edge_distance(model: _Model, w: np.ndarray) -> np.ndarray:
    edges = np.array([e for e in _support_bounds(model)], dtype=float)
    if edges.size == 0:
        return np.full(w.shape, np.inf)
    return np.min(np.abs(w[..., None] - edges), axis=-1)


def _support_bounds(model: _Model) -> list[float]:
    return [b for run in model.support for b in run if math.isfinite(b)]


def _distance_to_support(model: _Model, w: np.ndarray) -> np.ndarray:
    d = np.full(w.shape, np.inf)
    for lo, hi in model.support:
        d = np.minimum(d, np.maximum(np.maximum(lo - w, w - hi), 0.0))
    return d


def _xi_raw(model: _Model, w: np.ndarray) -> np.ndarray:
    g = model.G(w)
    with np.errstate(divide="ignore", invalid="ignore"):
        r1 = np.abs(g / model.dG(w))
        r2 = np.sqrt(np.abs(g / model.d2G(w)))
    r1 = np.where(np.isnan(r1), np.inf, r1)
    r2 = np.where(np.isnan(r2), np.inf, r2)
    inside = np.minimum(np.minimum(r1, r2), _edge_distance(model, w))
    return np.where(g > 0, inside, _distance_to_support(model, w))


def spectral_scale_xi(spectrum: CouplingSpectrum | _Model, w):
    """Local frequency interval over which G changes appreciably around ``w``.

    The minimum of |G/G'|, sqrt|G/G''| and the distance to the nearest edge
    of the support.  Where G vanishes the distance to the nearest point
    with G > 0 is returned.  Values are floored at 1e-9 times the model
    scale; the floor is reported through EdgeDegenerateWarning.
    """
    model = spectrum.model if isinstance(spectrum, CouplingSpectrum) else spectrum
    arr = _as_float_array(w)
    xi = _xi_raw(model, arr)
    floor = XI_FLOOR * model.scale
    if np.any(xi < floor):
        warnings.warn("frequency on a spectral edge; xi floored", EdgeDegenerateWarning, stacklevel=2)
        xi = np.maximum(xi, floor)
    return float(xi) if np.ndim(xi) == 0 else xi


def correlation_time(spectrum: CouplingSpectrum, harmonics) -> float:
    """Reservoir memory time max_k 1/xi(omega_a + omega_k) over populated harmonics."""
    omegas = np.asarray(harmonics.omegas, dtype=float)
    weights = np.abs(np.asarray(harmonics.lambdas)) ** 2
    omegas = omegas[weights > 0]
    if omegas.size == 0:
        raise SpectrumError("correlation time needs at least one populated harmonic")
    xi = spectral_scale_xi(spectrum, spectrum.omega_a + omegas)
    return float(np.max(1.0 / np.atleast_1d(xi)))


def golden_rule_rate(spectrum: CouplingSpectrum) -> float:
    """Golden-Rule rate 2 pi G(omega_a)."""
    return 2.0 * math.pi * eval_G(spectrum, spectrum.omega_a)


def load_tabulated(path) -> Tabulated:
    """Read a two-column (omega, G) table; whitespace or comma separated, '#' comments."""
    from .textio import read_columns

    data = read_columns(path, ncols=2)
    return Tabulated(data[:, 0], data[:, 1])
