"""Normal-incidence plane-wave analysis of layered dielectric stacks.

Reflection comes from the input-impedance recursion, transmission from the
chain-matrix cascade; the two routes are independent and are cross-checked by
power conservation in the tests. Thicknesses are mm, frequencies Hz.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from . import kernels
from .constants import C0


@dataclass(frozen=True)
class Layer:
    eps_real: float
    thickness: float  # mm
    loss_tangent: float = 0.0

    def __post_init__(self):
        if not self.eps_real >= 1.0:
            raise ValueError(f"eps_real must be >= 1, got {self.eps_real}")
        if not self.loss_tangent >= 0.0:
            raise ValueError("loss_tangent must be >= 0")
        if not (self.thickness > 0 and math.isfinite(self.thickness)):
            raise ValueError(f"thickness must be finite and > 0, got {self.thickness}")

    @property
    def eps(self) -> complex:
        return self.eps_real * (1.0 - 1j * self.loss_tangent)


@dataclass(frozen=True)
class Stack:
    entry_eps: float = 1.0
    layers: tuple[Layer, ...] = ()
    exit_eps: float = 1.0

    def __post_init__(self):
        object.__setattr__(self, "layers", tuple(self.layers))
        for v in (self.entry_eps, self.exit_eps):
            if not v >= 1.0:
                raise ValueError("entry/exit media must have eps >= 1")

    @property
    def lossless(self) -> bool:
        return all(l.loss_tangent == 0.0 for l in self.layers)

    def reversed(self) -> Stack:
        return Stack(self.exit_eps, self.layers[::-1], self.entry_eps)

    def with_loss(self, loss_tangent: float) -> Stack:
        return Stack(self.entry_eps,
                     tuple(Layer(l.eps_real, l.thickness, loss_tangent) for l in self.layers),
                     self.exit_eps)

    def _arrays(self):
        eps = np.array([l.eps for l in self.layers], dtype=complex)
        thick = np.array([l.thickness * 1e-3 for l in self.layers], dtype=float)
        return eps, thick


def stack_from_plan(plan, exit_eps=None, loss_tangent=0.0) -> Stack:
    """Air-side entry, the plan's sections, then the plan's end medium."""
    media = plan.media
    layers = tuple(Layer(s.eps, s.length, loss_tangent) for s in plan.sections)
    return Stack(media.eps_start, layers, media.eps_end if exit_eps is None else exit_eps)


def reflect(stack: Stack, f):
    """Complex reflection coefficient seen from the entry medium."""
    if np.any(np.asarray(f) <= 0):
        raise ValueError("frequency must be positive")
    eps, thick = stack._arrays()
    out = kernels.impedance_gamma(eps, thick, stack.entry_eps, stack.exit_eps,
                                  np.atleast_1d(np.asarray(f, dtype=float)))
    return out[0] if np.ndim(f) == 0 else out.reshape(np.shape(f))


def transmit(stack: Stack, f):
    """Complex field transmission coefficient, entry plane to exit plane."""
    if np.any(np.asarray(f) <= 0):
        raise ValueError("frequency must be positive")
    eps, thick = stack._arrays()
    _, tau = kernels.abcd_sweep(eps, thick, stack.entry_eps, stack.exit_eps,
                                np.atleast_1d(np.asarray(f, dtype=float)))
    return tau[0] if np.ndim(f) == 0 else tau.reshape(np.shape(f))


def small_reflection_gamma(stack: Stack, f):
    """First-order multiple-reflection-free estimate of the reflection."""
    f = np.asarray(f, dtype=float)
    eps = [stack.entry_eps] + [l.eps_real for l in stack.layers] + [stack.exit_eps]
    z = [1.0 / math.sqrt(e) for e in eps]
    out = np.zeros(f.shape, dtype=complex)
    phase = np.zeros(f.shape)
    for i in range(len(z) - 1):
        g = (z[i + 1] - z[i]) / (z[i + 1] + z[i])
        out = out + g * np.exp(-2j * phase)
        if i < len(stack.layers):
            layer = stack.layers[i]
            phase = phase + 2 * math.pi * f * math.sqrt(layer.eps_real) / C0 * layer.thickness * 1e-3
    return out


@dataclass
class SweepResult:
    frequencies: np.ndarray
    gamma: np.ndarray
    tau: np.ndarray
    f0: float
    stack: Stack | None = field(default=None, repr=False)

    def __post_init__(self):
        if np.any(np.diff(self.frequencies) <= 0):
            raise ValueError("frequencies must be strictly increasing")

    @property
    def mag(self) -> np.ndarray:
        return np.abs(self.gamma)

    @property
    def mag_db(self) -> np.ndarray:
        with np.errstate(divide="ignore"):
            return 20.0 * np.log10(np.abs(self.gamma))


def sweep(stack: Stack, f_lo: float, f_hi: float, points: int, f0: float | None = None) -> SweepResult:
    if not f_lo < f_hi:
        raise ValueError("f_lo must be below f_hi")
    if points < 2:
        raise ValueError("points must be >= 2")
    if f_lo <= 0:
        raise ValueError("frequencies must be positive")
    freqs = np.linspace(f_lo, f_hi, int(points))
    eps, thick = stack._arrays()
    gamma = kernels.impedance_gamma(eps, thick, stack.entry_eps, stack.exit_eps, freqs)
    _, tau = kernels.abcd_sweep(eps, thick, stack.entry_eps, stack.exit_eps, freqs)
    return SweepResult(freqs, gamma, tau, 0.5 * (f_lo + f_hi) if f0 is None else f0, stack)


@dataclass(frozen=True)
class Band:
    f_low: float
    f_high: float
    fbw: float
    ok: bool = True
    diagnostic: str = ""


def _refine_edge(fn, f_in, f_out, tol):
    """Bisect between a passing frequency and a failing one."""
    while abs(f_out - f_in) > tol:
        mid = 0.5 * (f_in + f_out)
        if fn(mid):
            f_in = mid
        else:
            f_out = mid
    return f_in


def bandwidth(result: SweepResult, threshold_db: float, rel_tol: float = 1e-6) -> Band:
    """Widest contiguous band around ``result.f0`` with return loss below threshold.

    Edges between grid points are refined by bisection when the sweep still
    carries its stack; otherwise the last passing grid point is used.
    """
    if not threshold_db < 0:
        raise ValueError("threshold_db must be negative")
    f = result.frequencies
    f0 = result.f0
    if not f[0] <= f0 <= f[-1]:
        raise ValueError("sweep does not cover f0")
    limit = 10.0 ** (threshold_db / 20.0)
    passing = result.mag <= limit
    i0 = int(np.argmin(np.abs(f - f0)))
    stack = result.stack

    def ok(freq):
        return abs(reflect(stack, freq)) <= limit

    centre_ok = ok(f0) if stack is not None else passing[i0]
    if not centre_ok or not passing[i0]:
        return Band(f0, f0, 0.0, False,
                    f"|gamma(f0)| above {threshold_db} dB; no passband around f0")
    lo = i0
    while lo > 0 and passing[lo - 1]:
        lo -= 1
    hi = i0
    while hi < len(f) - 1 and passing[hi + 1]:
        hi += 1
    f_low, f_high = f[lo], f[hi]
    tol = rel_tol * f0
    if stack is not None:
        if lo > 0:
            f_low = _refine_edge(ok, f[lo], f[lo - 1], tol)
        if hi < len(f) - 1:
            f_high = _refine_edge(ok, f[hi], f[hi + 1], tol)
    return Band(float(f_low), float(f_high), float((f_high - f_low) / f0))


@dataclass(frozen=True)
class Extremum:
    f: float
    mag: float


def ripple_extrema(result: SweepResult, band) -> list[Extremum]:
    """Interior local maxima of |gamma| inside ``band``.

    ``band`` is a :class:`Band` or an ``(f_low, f_high)`` pair. Peaks are
    refined with a parabola through the three surrounding grid points.
    """
    f_low, f_high = (band.f_low, band.f_high) if isinstance(band, Band) else band
    if f_high <= f_low:
        return []
    f = result.frequencies
    g = result.mag
    idx = np.nonzero((f > f_low) & (f < f_high))[0]
    out = []
    for i in idx:
        if i == 0 or i == len(f) - 1:
            continue
        if not (g[i] > g[i - 1] and g[i] >= g[i + 1]):
            continue
        y0, y1, y2 = g[i - 1], g[i], g[i + 1]
        denom = y0 - 2 * y1 + y2
        h = f[i + 1] - f[i]
        off = 0.5 * (y0 - y2) / denom if denom != 0 else 0.0
        off = max(-1.0, min(1.0, off))
        fpk = f[i] + off * h
        peak = y1 - 0.25 * (y0 - y2) * off
        if f_low < fpk < f_high:
            out.append(Extremum(float(fpk), float(peak)))
    return out


def power_balance(stack: Stack, f) -> np.ndarray:
    """|gamma|^2 + |tau|^2 * n_exit / n_entry; equals 1 for lossless stacks."""
    g = reflect(stack, f)
    t = transmit(stack, f)
    return np.abs(g) ** 2 + np.abs(t) ** 2 * math.sqrt(stack.exit_eps / stack.entry_eps)
