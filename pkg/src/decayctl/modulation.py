"""Modulation functions epsilon(t) of the coupling and their spectra.

Sign convention: a quasiperiodic modulation is written
``epsilon(t) = sum_k eps_k exp(-i omega_k t)`` and its window transform is
``eps_t(omega) = (2 pi)^-1/2 int_0^t epsilon(t') exp(i omega t') dt'``, so the
sideband at omega_k samples the coupling spectrum at omega_a + omega_k.
A monochromatic shift ``epsilon(t) = eps_0 exp(-i Delta t)`` therefore sits
at omega_0 = Delta and gives R = 2 pi G(omega_a + Delta).

Time-domain schemes: Constant, Monochromatic, ImpulsivePM, OnOffAM,
Quasiperiodic.  Spectral-only schemes (ensemble spectra, no epsilon(t)):
RandomLorentzian, MeasurementSinc.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field, replace
from functools import cached_property
from typing import Callable

import numpy as np
from scipy import optimize

from . import _quadrature

__all__ = [
    "ModulationError",
    "UnsupportedOperation",
    "WeakFieldWarning",
    "Constant",
    "Monochromatic",
    "ImpulsivePM",
    "OnOffAM",
    "Quasiperiodic",
    "RandomLorentzian",
    "MeasurementSinc",
    "HarmonicDecomposition",
    "WindowSpectrum",
    "eval_epsilon",
    "fluence",
    "time_for_fluence",
    "window_spectrum",
    "harmonic_decomposition",
    "stationary_spectrum",
    "chaotic_field_params",
    "quasiperiodic_window_power",
    "load_harmonics",
    "DEFAULT_K",
]

DEFAULT_K = 64
SQRT_2PI = math.sqrt(2.0 * math.pi)


class ModulationError(ValueError):
    """Invalid modulation parameters or query."""


class UnsupportedOperation(ModulationError):
    """The requested operation does not exist for this modulation scheme."""


class WeakFieldWarning(RuntimeWarning):
    """A chaotic field violates the weak broadband condition |chi| I << nu_B."""


def _sinc(x):
    """sin(x)/x, unnormalized."""
    return np.sinc(np.asarray(x) / math.pi)


def _segment(w, length):
    """int_0^length exp(i w u) du, stable at w -> 0."""
    return length * np.exp(0.5j * w * length) * _sinc(0.5 * w * length)


def _geometric(theta, n: int):
    """sum_{m=0}^{n-1} exp(i m theta), 2 pi periodic in theta."""
    if n == 0:
        return np.zeros_like(theta, dtype=complex)
    th = np.mod(theta + math.pi, 2.0 * math.pi) - math.pi
    return np.exp(0.5j * (n - 1) * th) * n * _sinc(0.5 * n * th) / _sinc(0.5 * th)


def _periods(t: float, period: float) -> tuple[int, float]:
    """Whole periods contained in t and the remainder, robust to rounding."""
    n = int(math.floor(t / period + 1e-12))
    return n, max(t - n * period, 0.0)


def _check_time(t):
    arr = np.asarray(t, dtype=float)
    if np.any(~np.isfinite(arr)) or np.any(arr < 0):
        raise ModulationError("time must be finite and nonnegative")
    return arr


def _piecewise_jumps(starts, values, t):
    """Jump points and heights eps(s-) - eps(s+) of a piecewise-constant eps on [0, t].

    ``starts`` are segment starts (the first is 0) and ``values`` the levels.
    With these, sqrt(2 pi) eps_t(omega) = sum_j a_j exp(i omega s_j) / (i omega) exactly.
    """
    s = np.append(starts, t)
    before = np.concatenate([[0.0], values])
    after = np.concatenate([values, [0.0]])
    a = before - after
    nz = a != 0
    return s[nz], a[nz]


def _jump_envelope(s, a, spacing):
    """|sqrt(2 pi) eps_t|^2 with cross terms between distant jumps averaged out.

    Jumps closer than half the regular ``spacing`` are kept together: their
    interference terms vary slowly in omega and are returned as waves
    (lag, c) meaning Re(c exp(i omega lag))/omega^2.  Every dropped cross
    term oscillates with period at most 2 pi/gap.  Returns (smooth, waves, gap).
    """
    cut = 0.5 * spacing
    split = np.flatnonzero(np.diff(s) >= cut) + 1
    groups = np.split(np.arange(s.size), split)
    power = float(np.sum(np.abs(a) ** 2))
    waves = []
    for g in groups:
        for i, j in zip(*np.triu_indices(g.size, k=1)):
            waves.append((float(s[g[i]] - s[g[j]]), 2.0 * a[g[i]] * np.conj(a[g[j]])))
    gap = float(np.min(s[split] - s[split - 1])) if split.size else math.inf
    return (lambda w: power / (np.asarray(w, dtype=float) ** 2)), tuple(waves), gap


def _harmonic_envelope(omegas, amps, t):
    """|sqrt(2 pi) eps_t|^2 for a harmonic sum with the exp(i omega t) cross term averaged out.

    sqrt(2 pi) eps_t = exp(i omega t) A - B with A = sum eps_k exp(-i omega_k t)/(i(omega - omega_k))
    and B = sum eps_k/(i(omega - omega_k)); valid away from every omega_k.
    """
    late = amps * np.exp(-1j * omegas * t)

    def envelope(w):
        d = np.subtract.outer(np.asarray(w, dtype=float), omegas)
        A = (late / d).sum(axis=-1)
        B = (amps / d).sum(axis=-1)
        return np.abs(A) ** 2 + np.abs(B) ** 2

    return envelope, (), t


@dataclass(frozen=True)
class Constant:
    eps0: complex = 1.0

    time_domain = True

    def epsilon(self, t):
        return np.full(np.shape(t), complex(self.eps0))

    def fluence(self, t):
        return abs(self.eps0) ** 2 * t

    def amplitude(self, w, t):
        return self.eps0 * _segment(w, t)

    def envelope(self, t):
        return _jump_envelope(np.array([0.0, t]), np.array([-self.eps0, self.eps0], dtype=complex), t)

    def centers(self):
        return np.array([0.0])

    def harmonics(self, K):
        lam = self.eps0 / abs(self.eps0) if self.eps0 != 0 else 0.0
        return np.array([0.0]), np.array([lam], dtype=complex), abs(self.eps0) ** 2

    @property
    def timescale(self):
        return math.inf


@dataclass(frozen=True)
class Monochromatic:
    """epsilon(t) = eps0 exp(-i Delta t): a static level shift Delta."""

    eps0: complex = 1.0
    delta: float = 0.0

    time_domain = True

    def epsilon(self, t):
        return self.eps0 * np.exp(-1j * self.delta * np.asarray(t, dtype=float))

    def fluence(self, t):
        return abs(self.eps0) ** 2 * t

    def amplitude(self, w, t):
        return self.eps0 * _segment(w - self.delta, t)

    def envelope(self, t):
        return _harmonic_envelope(np.array([float(self.delta)]), np.array([self.eps0], dtype=complex), t)

    def centers(self):
        return np.array([float(self.delta)])

    def harmonics(self, K):
        lam = self.eps0 / abs(self.eps0) if self.eps0 != 0 else 0.0
        return np.array([float(self.delta)]), np.array([lam], dtype=complex), abs(self.eps0) ** 2

    @property
    def timescale(self):
        return 2.0 * math.pi / abs(self.delta) if self.delta else math.inf


@dataclass(frozen=True)
class ImpulsivePM:
    """Phase jumps by phi at t = tau, 2 tau, ...: epsilon(t) = exp(i floor(t/tau) phi)."""

    phi: float
    tau: float

    time_domain = True

    def __post_init__(self):
        if not (self.tau > 0 and math.isfinite(self.tau)):
            raise ModulationError("tau must be positive")
        if not (-math.pi < self.phi <= math.pi):
            raise ModulationError("phi must lie in (-pi, pi]")

    def epsilon(self, t):
        n = np.floor(np.asarray(t, dtype=float) / self.tau + 1e-12)
        return np.exp(1j * self.phi * n)

    def fluence(self, t):
        return t

    def amplitude(self, w, t):
        n, r = _periods(t, self.tau)
        full = _geometric(self.phi + w * self.tau, n) * _segment(w, self.tau)
        last = np.exp(1j * (n * self.phi + w * n * self.tau)) * _segment(w, r)
        return full + last

    def envelope(self, t):
        n, r = _periods(t, self.tau)
        m = n if r > 0 else n - 1
        starts = self.tau * np.arange(m + 1)
        values = np.exp(1j * self.phi * np.arange(m + 1))
        return _jump_envelope(*_piecewise_jumps(starts, values, t), min(self.tau, t))

    def centers(self):
        k = np.arange(-3, 4)
        return (2.0 * math.pi * k - self.phi) / self.tau

    def harmonics(self, K):
        k = np.arange(-K, K + 1)
        x = math.pi * k - 0.5 * self.phi
        return 2.0 * x / self.tau, np.exp(1j * x) * _sinc(x), 1.0

    @property
    def timescale(self):
        return self.tau

    grid_periods = property(lambda self: (self.tau,))


@dataclass(frozen=True)
class OnOffAM:
    """Coupling on during [n tau0, n tau0 + tau_on) and off for the rest of each period."""

    tau_on: float
    period: float

    time_domain = True

    def __post_init__(self):
        if not (0 < self.tau_on <= self.period and math.isfinite(self.period)):
            raise ModulationError("need 0 < tau_on <= period")

    @property
    def duty(self):
        return self.tau_on / self.period

    def epsilon(self, t):
        t = np.asarray(t, dtype=float)
        phase = t - np.floor(t / self.period + 1e-12) * self.period
        return np.where(phase < self.tau_on * (1 - 1e-12), 1.0 + 0j, 0.0 + 0j)

    def fluence(self, t):
        n, r = _periods(t, self.period)
        return n * self.tau_on + min(self.tau_on, r)

    def amplitude(self, w, t):
        n, r = _periods(t, self.period)
        full = _geometric(w * self.period, n) * _segment(w, self.tau_on)
        last = np.exp(1j * w * n * self.period) * _segment(w, min(self.tau_on, r))
        return full + last

    def envelope(self, t):
        n, r = _periods(t, self.period)
        k = np.arange(n + 1) * self.period
        starts = np.stack([k, k + self.tau_on], axis=1).ravel()
        values = np.tile([1.0 + 0j, 0.0 + 0j], n + 1)
        keep = starts < (n * self.period + r if r > 0 else n * self.period)
        if self.tau_on == self.period:
            keep &= values != 0
        regular = self.timescale if self.tau_on < self.period else self.period
        return _jump_envelope(*_piecewise_jumps(starts[keep], values[keep], t), min(regular, t))

    def centers(self):
        return 2.0 * math.pi * np.arange(-3, 4) / self.period

    def harmonics(self, K):
        k = np.arange(-K, K + 1)
        x = math.pi * k * self.duty
        return 2.0 * math.pi * k / self.period, math.sqrt(self.duty) * np.exp(1j * x) * _sinc(x), self.duty

    @property
    def timescale(self):
        if self.tau_on == self.period:
            return math.inf
        return min(self.tau_on, self.period - self.tau_on)

    grid_periods = property(lambda self: (self.tau_on, self.period))


@dataclass(frozen=True, eq=False)
class Quasiperiodic:
    """Explicit sum of harmonics eps_k exp(-i omega_k t); an empty list means epsilon = 0."""

    omegas: np.ndarray = field(default_factory=lambda: np.empty(0))
    amps: np.ndarray = field(default_factory=lambda: np.empty(0, dtype=complex))

    time_domain = True

    def __post_init__(self):
        w = np.atleast_1d(np.array(self.omegas, dtype=float))
        a = np.atleast_1d(np.array(self.amps, dtype=complex))
        if w.shape != a.shape or w.ndim != 1:
            raise ModulationError("omegas and amps must be matching 1-d lists")
        if not np.all(np.isfinite(w)) or not np.all(np.isfinite(a)):
            raise ModulationError("harmonics must be finite")
        if np.unique(w).size != w.size:
            raise ModulationError("harmonic frequencies must be distinct")
        w.flags.writeable = False
        a.flags.writeable = False
        object.__setattr__(self, "omegas", w)
        object.__setattr__(self, "amps", a)

    def __eq__(self, other):
        return (
            isinstance(other, Quasiperiodic)
            and np.array_equal(self.omegas, other.omegas)
            and np.array_equal(self.amps, other.amps)
        )

    def __hash__(self):
        return hash((self.omegas.tobytes(), self.amps.tobytes()))

    @property
    def spacing(self) -> float:
        if self.omegas.size < 2:
            return math.inf
        return float(np.min(np.diff(np.sort(self.omegas))))

    def epsilon(self, t):
        t = np.asarray(t, dtype=float)
        return (self.amps * np.exp(-1j * np.multiply.outer(t, self.omegas))).sum(axis=-1)

    def fluence(self, t):
        if self.omegas.size == 0:
            return 0.0
        d = self.omegas[None, :] - self.omegas[:, None]  # omega_l - omega_k
        cross = np.outer(self.amps, self.amps.conj())
        off = ~np.eye(d.shape[0], dtype=bool)
        # (exp(i d t) - 1)/(i d) = t exp(i d t/2) sinc(d t/2)
        terms = cross[off] * t * np.exp(0.5j * d[off] * t) * _sinc(0.5 * d[off] * t)
        return float(np.sum(np.abs(self.amps) ** 2) * t + terms.sum().real)

    def amplitude(self, w, t):
        w = np.asarray(w, dtype=float)
        out = np.zeros(w.shape, dtype=complex)
        for wk, ek in zip(self.omegas, self.amps):
            out += ek * _segment(w - wk, t)
        return out

    def envelope(self, t):
        return _harmonic_envelope(self.omegas, self.amps, t)

    def centers(self):
        return self.omegas.copy()

    def harmonics(self, K):
        return self.omegas.copy(), self.amps.copy(), float(np.sum(np.abs(self.amps) ** 2))

    @property
    def timescale(self):
        top = float(np.max(np.abs(self.omegas))) if self.omegas.size else 0.0
        return 2.0 * math.pi / top if top else math.inf


@dataclass(frozen=True)
class RandomLorentzian:
    """Stationary random modulation with a Lorentzian spectrum of shift delta and half-width nu."""

    delta: float
    nu: float
    intensity: float = 1.0

    time_domain = False

    def __post_init__(self):
        if not (self.nu > 0 and math.isfinite(self.nu)):
            raise ModulationError("nu must be positive")
        if not (self.intensity > 0):
            raise ModulationError("intensity must be positive")


@dataclass(frozen=True)
class MeasurementSinc:
    """Dephasing equivalent to ideal projective measurements at intervals tau_on."""

    tau_on: float

    time_domain = False
    intensity = 1.0

    def __post_init__(self):
        if not (self.tau_on > 0 and math.isfinite(self.tau_on)):
            raise ModulationError("tau_on must be positive")


Modulation = Constant | Monochromatic | ImpulsivePM | OnOffAM | Quasiperiodic | RandomLorentzian | MeasurementSinc


@dataclass(frozen=True, eq=False)
class HarmonicDecomposition:
    """Sidebands (omega_k, lambda_k) with intensity eps_c^2; sum |lambda_k|^2 <= 1."""

    omegas: np.ndarray
    lambdas: np.ndarray
    intensity: float
    spacing: float

    @property
    def weights(self) -> np.ndarray:
        return np.abs(self.lambdas) ** 2

    @property
    def tail_mass(self) -> float:
        """Weight missing from the truncated list, 1 - sum |lambda_k|^2."""
        if self.intensity == 0:
            return 0.0
        return max(0.0, 1.0 - float(self.weights.sum()))

    def __len__(self):
        return self.omegas.size


@dataclass(frozen=True, eq=False)
class WindowSpectrum:
    """Normalized modulation spectrum F(omega), either of a finite window or stationary.

    ``resolution`` is the oscillation period 2 pi/t for coherent windows and
    the feature width for smooth spectra.  For coherent windows ``envelope``
    is F with its fast oscillations (period at most ``2 pi/gap``) averaged
    out; quadrature hands F over to it between ``blend_start`` and
    ``blend_start + blend_length``.
    """

    density: Callable[[np.ndarray], np.ndarray]
    smooth_envelope: Callable[[np.ndarray], np.ndarray]
    kind: str
    t: float | None
    fluence: float | None
    centers: np.ndarray
    resolution: float
    oscillatory: bool
    blend_start: float
    blend_length: float = 0.0
    waves: tuple = ()

    def __call__(self, w):
        return self.density(np.asarray(w, dtype=float))

    def envelope(self, w):
        """Smooth envelope plus the slowly varying waves Re(c exp(i w lag))/w^2."""
        w = np.asarray(w, dtype=float)
        out = self.smooth_envelope(w)
        for lag, c in self.waves:
            out = out + (c * np.exp(1j * lag * w)).real / (w * w)
        return out

    @property
    def outer_halfwidth(self) -> float:
        return self.blend_start + self.blend_length

    def total_mass(self, rtol: float = 1e-6) -> float:
        """Numerical integral of F over the real line (1 for a valid spectrum)."""
        return _quadrature.window_overlap(np.ones_like, self, rtol=rtol)[0]

    @cached_property
    def shift(self) -> float:
        """Principal-value mean frequency Delta_t."""
        return _quadrature.window_first_moment(self)

    @cached_property
    def width(self) -> float:
        """Full width at half maximum of the dominant peak, nu_t."""
        return _fwhm(self)

    @cached_property
    def dominant_center(self) -> float:
        vals = self.density(self.centers)
        c = float(self.centers[int(np.argmax(vals))])
        res = self.resolution
        r = optimize.minimize_scalar(
            lambda x: -float(self.density(np.array(x))), bounds=(c - 0.5 * res, c + 0.5 * res), method="bounded",
            options={"xatol": 1e-10 * max(res, 1e-300)},
        )
        return float(r.x) if -r.fun >= vals.max() else c


def _fwhm(win: WindowSpectrum) -> float:
    c = win.dominant_center
    half = 0.5 * float(win.density(np.array(c)))
    step = win.resolution / 32.0
    edges = []
    for sign in (1, -1):
        x0 = c
        for _ in range(100_000):
            x1 = x0 + sign * step
            if float(win.density(np.array(x1))) < half:
                f = lambda x: float(win.density(np.array(x))) - half  # noqa: E731
                edges.append(optimize.brentq(f, min(x0, x1), max(x0, x1), xtol=1e-14 * max(1.0, abs(c))))
                break
            x0 = x1
        else:  # pragma: no cover - pathological flat spectrum
            return math.inf
    return abs(edges[0] - edges[1])


def _require_time_domain(mod, op: str):
    if not getattr(mod, "time_domain", False):
        raise UnsupportedOperation(f"{op} is undefined for spectral-only scheme {type(mod).__name__}")


def eval_epsilon(mod, t):
    """Modulation function epsilon(t); right-continuous at jumps."""
    _require_time_domain(mod, "eval_epsilon")
    arr = _check_time(t)
    out = mod.epsilon(arr)
    return complex(out) if np.ndim(out) == 0 else out


def fluence(mod, t) -> float:
    """Q(t) = int_0^t |epsilon|^2 in closed form."""
    _require_time_domain(mod, "fluence")
    arr = _check_time(t)
    if arr.ndim:
        return np.array([mod.fluence(float(x)) for x in arr])
    return float(mod.fluence(float(arr)))


def time_for_fluence(mod, q: float) -> float:
    """Earliest time at which the fluence reaches ``q``."""
    _require_time_domain(mod, "time_for_fluence")
    if q < 0:
        raise ModulationError("fluence must be nonnegative")
    if q == 0:
        return 0.0
    if isinstance(mod, (Constant, Monochromatic)):
        if mod.eps0 == 0:
            raise ModulationError("zero modulation never accumulates fluence")
        return q / abs(mod.eps0) ** 2
    if isinstance(mod, ImpulsivePM):
        return q
    if isinstance(mod, OnOffAM):
        n, rem = _periods(q, mod.tau_on)
        if rem == 0:
            return (n - 1) * mod.period + mod.tau_on
        return n * mod.period + rem
    hi = 1.0
    if mod.fluence(1e12) <= 0:
        raise ModulationError("zero modulation never accumulates fluence")
    while mod.fluence(hi) < q:
        hi *= 2.0
    return optimize.brentq(lambda x: mod.fluence(x) - q, 0.0, hi, xtol=1e-13 * hi)


def window_spectrum(mod, t: float) -> WindowSpectrum:
    """F_t(omega) = |eps_t(omega)|^2 / Q(t) for the window (0, t), in closed form."""
    _require_time_domain(mod, "window_spectrum")
    t = float(t)
    if not (t > 0 and math.isfinite(t)):
        raise ModulationError("window time must be positive")
    q = mod.fluence(t)
    if not q > 0:
        raise ModulationError("fluence is zero on this window; F_t is undefined")
    norm = 2.0 * math.pi * q

    def density(w):
        a = mod.amplitude(np.asarray(w, dtype=float), t)
        return (a.real**2 + a.imag**2) / norm

    centers = mod.centers()
    res = 2.0 * math.pi / t
    extent = float(np.max(np.abs(centers))) if centers.size else 0.0
    if isinstance(mod, Quasiperiodic):
        extent *= 200.0
    smooth, waves, gap = mod.envelope(t)
    fast = 2.0 * math.pi / min(gap, t)
    return WindowSpectrum(
        density=density,
        smooth_envelope=lambda w: smooth(w) / norm,
        waves=tuple((lag, c / norm) for lag, c in waves),
        kind="coherent-window",
        t=t,
        fluence=q,
        centers=centers,
        resolution=res,
        oscillatory=True,
        blend_start=extent + 64.0 * res,
        blend_length=24.0 * fast,
    )


def quasiperiodic_window_power(mod: Quasiperiodic, w, t: float) -> np.ndarray:
    """|eps_t(omega)|^2 as the explicit sum of diagonal sinc terms and k != l cross terms."""
    w = np.asarray(w, dtype=float)
    eps_c2 = float(np.sum(np.abs(mod.amps) ** 2))
    if eps_c2 == 0:
        return np.zeros_like(w)
    lam = mod.amps / math.sqrt(eps_c2)
    eta = w[..., None] - mod.omegas
    # S(eta t/2) = 2 sin^2(eta t/2)/(pi t eta^2) = (t/2pi) sinc^2(eta t/2)
    s = t / (2.0 * math.pi) * _sinc(0.5 * eta * t) ** 2
    diag = t * (np.abs(lam) ** 2 * s).sum(axis=-1)
    # (exp(i eta t) - 1)/(i eta) = t exp(i eta t/2) sinc(eta t/2); product of the k and conj(l) factors
    seg = t * np.exp(0.5j * eta * t) * _sinc(0.5 * eta * t)
    pair = (lam * seg)[..., :, None] * np.conj(lam * seg)[..., None, :]
    n = mod.omegas.size
    off = ~np.eye(n, dtype=bool)
    cross = pair[..., off].sum(axis=-1).real / (2.0 * math.pi)
    return eps_c2 * (diag + cross)


def harmonic_decomposition(mod, K: int = DEFAULT_K) -> HarmonicDecomposition:
    """Sidebands for k = -K..K (closed forms for PM and AM; passthrough for Quasiperiodic)."""
    _require_time_domain(mod, "harmonic_decomposition")
    if K < 0:
        raise ModulationError("K must be nonnegative")
    omegas, coeffs, intensity = mod.harmonics(int(K))
    omegas = np.asarray(omegas, dtype=float)
    coeffs = np.asarray(coeffs, dtype=complex)
    if isinstance(mod, Quasiperiodic):
        lambdas = coeffs / math.sqrt(intensity) if intensity > 0 else coeffs
        spacing = mod.spacing
    else:
        lambdas = coeffs
        spacing = float(np.min(np.diff(omegas))) if omegas.size > 1 else math.inf
        if isinstance(mod, (ImpulsivePM, OnOffAM)):
            spacing = 2.0 * math.pi / (mod.tau if isinstance(mod, ImpulsivePM) else mod.period)
    return HarmonicDecomposition(omegas=omegas, lambdas=lambdas, intensity=float(intensity), spacing=spacing)


def stationary_spectrum(mod) -> WindowSpectrum:
    """Normalized ensemble spectrum F(omega) of a random or measurement-like modulation."""
    if isinstance(mod, RandomLorentzian):
        d, nu = float(mod.delta), float(mod.nu)

        def lorentz(w):
            return (nu / math.pi) / ((np.asarray(w, dtype=float) - d) ** 2 + nu * nu)

        return WindowSpectrum(
            density=lorentz,
            smooth_envelope=lorentz,
            kind="stationary-random",
            t=None,
            fluence=None,
            centers=np.array([d]),
            resolution=nu,
            oscillatory=False,
            blend_start=abs(d) + 200.0 * nu,
        )
    if isinstance(mod, MeasurementSinc):
        # same shape as a single constant window of length tau_on
        win = window_spectrum(Constant(1.0), float(mod.tau_on))
        return replace(win, kind="measurement", t=None, fluence=None)
    raise UnsupportedOperation(f"stationary_spectrum needs a random or measurement scheme, got {type(mod).__name__}")


def chaotic_field_params(chi: float, mean_intensity: float, bandwidth: float, *, tolerance: float = 0.1):
    """Lorentzian dephasing of a weak broadband chaotic field.

    Shift chi*I and width (chi*I)^2/nu_B.  Warns when |chi| I exceeds
    ``tolerance`` * nu_B.  A vanishing shift returns ``Constant(1)``.
    """
    if not (bandwidth > 0 and math.isfinite(bandwidth)):
        raise ModulationError("bandwidth must be positive")
    shift = chi * mean_intensity
    if abs(shift) > tolerance * bandwidth:
        warnings.warn(
            f"|chi| I = {abs(shift):.3g} is not small against nu_B = {bandwidth:.3g}",
            WeakFieldWarning,
            stacklevel=2,
        )
    if shift == 0:
        return Constant(1.0)
    return RandomLorentzian(delta=shift, nu=shift * shift / bandwidth, intensity=1.0)


def load_harmonics(path) -> Quasiperiodic:
    """Read lines ``omega_k  Re(eps_k)  Im(eps_k)`` into a Quasiperiodic modulation."""
    from .textio import read_columns

    data = read_columns(path, ncols=3)
    return Quasiperiodic(data[:, 0], data[:, 1] + 1j * data[:, 2])
