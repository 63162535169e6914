"""Overlap integrals of a smooth-ish function with a window spectrum over the real line.

Window spectra from finite time windows oscillate in omega with period
2*pi/t and decay like c/omega^2.  The real line is split into

* a core [-W, W] covered by Gauss-Legendre panels no wider than two
  oscillation periods, refined geometrically toward every kink or edge of
  the integrand and uniformly across every smooth peak, and
* two tails integrated with QUADPACK, where a coherent window is replaced
  by its envelope (the window with its fast oscillations averaged out).

Near the ends of the core the window is handed over to the envelope by a
C-infinity ramp spanning many fast periods, so the dropped oscillating
part integrates to a negligible amount instead of leaving an O(period/W)
boundary error.

Each panel is integrated with a 24-point and a 16-point rule; their
difference is the error estimate.
"""

from __future__ import annotations

import math
import warnings

import numpy as np
from scipy import integrate

_X_HI, _W_HI = np.polynomial.legendre.leggauss(24)
_X_LO, _W_LO = np.polynomial.legendre.leggauss(16)

MAX_PANELS = 8_000_000
_CHUNK = 20_000


class QuadratureError(ArithmeticError):
    """Overlap quadrature failed to reach the requested tolerance."""

    def __init__(self, message: str, estimate: float = math.nan, error: float = math.nan):
        super().__init__(message)
        self.estimate = estimate
        self.error = error


def _graded(anchor: float, lo: float, hi: float, first: float, ratio: float = 1.35) -> list[np.ndarray]:
    out = []
    span = max(hi - anchor, anchor - lo)
    if span <= 0:
        return out
    n = int(math.ceil(math.log(max(span / first, 1.0)) / math.log(ratio))) + 1
    steps = first * ratio ** np.arange(n)
    for pts in (anchor + steps, anchor - steps):
        out.append(pts[(pts > lo) & (pts < hi)])
    out.append(np.array([anchor]) if lo < anchor < hi else np.empty(0))
    return out


def core_nodes(window, W: float, edges, peaks) -> np.ndarray:
    """Panel boundaries on [-W, W] for ``window`` times a function with the given features."""
    pieces = [np.array([-W, W])]
    if window.oscillatory:
        width = 2.0 * window.resolution
        n = int(math.ceil(2 * W / width))
        if n > MAX_PANELS:
            raise QuadratureError(
                f"window needs {n} panels on [-{W:.3g}, {W:.3g}]; loosen rtol or shorten the window"
            )
        pieces.append(np.linspace(-W, W, n + 1))
    else:
        for c in window.centers:
            res = window.resolution
            pieces.append(np.linspace(c - 10 * res, c + 10 * res, 161))
            pieces.extend(_graded(c, -W, W, res / 8.0, ratio=1.15))
    for e in edges:
        if -W < e < W:
            first = 1e-12 * max(1.0, abs(e), window.resolution)
            pieces.extend(_graded(e, -W, W, first))
    for c, width in peaks:
        lo, hi = max(c - 40 * width, -W), min(c + 40 * width, W)
        if lo < hi:
            pieces.append(np.linspace(lo, hi, int(math.ceil((hi - lo) / (width / 8))) + 1))
            pieces.extend(_graded(c, -W, W, width, ratio=1.2))
    nodes = np.unique(np.concatenate(pieces))
    nodes = nodes[(nodes >= -W) & (nodes <= W)]
    keep = np.concatenate([[True], np.diff(nodes) > 1e-15 * max(1.0, W)])
    return nodes[keep]


def panel_sum(f, nodes: np.ndarray) -> tuple[float, float]:
    """Integral of vectorized ``f`` over consecutive panels, with an error estimate."""
    total = 0.0
    err = 0.0
    for start in range(0, nodes.size - 1, _CHUNK):
        a = nodes[start : start + _CHUNK]
        b = nodes[start + 1 : start + _CHUNK + 1]
        a = a[: b.size]
        mid = 0.5 * (a + b)[:, None]
        half = 0.5 * (b - a)[:, None]
        hi = (f(mid + half * _X_HI) * _W_HI).sum(axis=1) * half[:, 0]
        lo = (f(mid + half * _X_LO) * _W_LO).sum(axis=1) * half[:, 0]
        total += float(hi.sum())
        err += float(np.abs(hi - lo).sum())
    return total, err


def _tail(f, start: float, sign: int, breaks, weight=None, wvar=0.0) -> tuple[float, float]:
    """int over x beyond ``start`` on one side (x -> sign * x), split at breakpoints.

    ``weight`` is None, 'cos' or 'sin' for the QUADPACK Fourier weights at
    frequency ``wvar`` in the reflected variable.
    """
    pts = sorted(b for b in (abs(x) for x in breaks if np.sign(x) == sign) if b > start)
    g = lambda x: float(f(np.array([sign * x]))[0])  # noqa: E731
    opts = {} if weight is None else {"weight": weight, "wvar": wvar}
    bounds = [start] + pts
    val = err = 0.0
    for a, b in zip(bounds[:-1], bounds[1:]):
        v, e = integrate.quad(g, a, b, limit=400, epsabs=1e-15, epsrel=1e-11, **opts)
        val, err = val + v, err + e
    if weight is None:
        v, e = integrate.quad(g, bounds[-1], math.inf, limit=400, epsabs=1e-15, epsrel=1e-11)
    else:
        v, e = integrate.quad(g, bounds[-1], math.inf, limlst=200, epsabs=1e-15, **opts)
    return val + v, err + e


def _envelope_tails(g, window, W: float, breaks) -> tuple[float, float]:
    """int_{|x|>W} g * envelope, with the slow waves integrated as Fourier integrals."""
    total = err = 0.0
    smooth = window.smooth_envelope
    for sign in (1, -1):
        v, e = _tail(lambda x: g(x) * smooth(x), W, sign, breaks)
        total, err = total + v, err + e
        for lag, c in window.waves:
            # Re(c exp(i lag x)) with x = sign*y: Re(c) cos(lag y) - sign Im(c) sin(lag y)
            h = lambda x: g(x) / (x * x)  # noqa: E731
            vc, ec = _tail(h, W, sign, breaks, "cos", abs(lag))
            vs, es = _tail(h, W, sign, breaks, "sin", abs(lag))
            s_im = sign * np.sign(lag)
            total += c.real * vc - s_im * c.imag * vs
            err += abs(c) * (ec + es)
    return total, err


def _ramp(x, start: float, length: float):
    """C-infinity step from 0 at |x| = start to 1 at |x| = start + length."""
    u = np.clip((np.abs(x) - start) / length, 0.0, 1.0)
    with np.errstate(divide="ignore", over="ignore"):
        a = np.where(u > 0, np.exp(-1.0 / np.where(u > 0, u, 1.0)), 0.0)
        b = np.where(u < 1, np.exp(-1.0 / np.where(u < 1, 1.0 - u, 1.0)), 0.0)
    return a / (a + b)


def _blended(window):
    """Window density handed over smoothly to its oscillation-averaged envelope."""
    if not window.oscillatory:
        return window.density
    start, length = window.blend_start, window.blend_length

    def f(x):
        out = window.density(x)
        far = np.abs(x) > start
        if np.any(far):
            chi = _ramp(x[far], start, length)
            out[far] = out[far] * (1.0 - chi) + window.envelope(x[far]) * chi
        return out

    return f


def window_overlap(g, window, *, edges=(), peaks=(), rtol: float = 1e-6) -> tuple[float, float]:
    """int g(x) F(x) dx over the real line for a WindowSpectrum F.

    ``edges`` are the points where g is not smooth and ``peaks`` are
    (location, width) pairs of smooth features of g, both in the shifted
    coordinate of F.  Returns (value, error estimate).
    """
    W = window.outer_halfwidth
    nodes = core_nodes(window, W, edges, peaks)
    F = _blended(window)
    core, err = panel_sum(lambda x: g(x) * F(x), nodes)
    breaks = list(edges) + [c for c, _ in peaks] + [c + s * 40 * w for c, w in peaks for s in (-1, 1)]
    tail, tail_err = _envelope_tails(g, window, W, breaks)
    return core + tail, err + tail_err


def window_first_moment(window) -> float:
    """Symmetric principal-value mean frequency of a window spectrum."""
    W = window.outer_halfwidth
    nodes = core_nodes(window, W, (), ())
    F = _blended(window)
    core, _ = panel_sum(lambda x: x * F(x), nodes)
    env = window.envelope
    odd = lambda x: float(x * (env(np.array([x]))[0] - env(np.array([-x]))[0]))  # noqa: E731
    with warnings.catch_warnings():
        # the odd part decays like 1/x^2 but may oscillate slowly; a rough value suffices
        warnings.simplefilter("ignore", integrate.IntegrationWarning)
        tail, _ = integrate.quad(odd, W, math.inf, limit=400, epsabs=1e-14, epsrel=1e-10)
    return core + tail
