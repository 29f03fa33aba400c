"""Multi-section dielectric matching transformer synthesis.

Sections are quarter-wave thick at the design frequency and graded in wave
impedance between a start medium (usually air) and an end medium (the lens
bulk). Three families are provided: the single quarter-wave section, the
maximally flat binomial transformer and the equal-ripple Chebyshev
transformer. Both multi-section families work on log-impedance steps, so the
recursion always lands exactly on the end medium.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from enum import Enum

import numpy as np
from numpy.polynomial import chebyshev as npcheb

from .constants import C0, ETA0, MAX_SECTIONS

MAX_BINOM_N = 20


class DegenerateSpecError(ValueError):
    """The requested transformer cannot exist for the given media."""


class Kind(str, Enum):
    QUARTER_WAVE = "quarter-wave"
    BINOMIAL = "binomial"
    CHEBYSHEV = "chebyshev"


@dataclass(frozen=True)
class MediumPair:
    eps_start: float = 1.0
    eps_end: float = 2.738

    def __post_init__(self):
        for name in ("eps_start", "eps_end"):
            v = getattr(self, name)
            if not math.isfinite(v) or v < 1.0:
                raise ValueError(f"{name} must be finite and >= 1, got {v!r}")

    @property
    def log_impedance_ratio(self) -> float:
        """ln(Z_end / Z_start) for non-magnetic media."""
        return 0.5 * math.log(self.eps_start / self.eps_end)

    @property
    def interface_reflection(self) -> float:
        """Single-interface reflection magnitude in the small-reflection form."""
        return abs(self.log_impedance_ratio) / 2.0

    @property
    def identical(self) -> bool:
        return self.eps_start == self.eps_end


@dataclass(frozen=True)
class TransformerSpec:
    kind: Kind
    sections: int = 1
    ripple: float | None = None
    f0: float = 80e9

    def __post_init__(self):
        object.__setattr__(self, "kind", Kind(self.kind))
        if self.kind is Kind.QUARTER_WAVE and self.sections != 1:
            raise ValueError("quarter-wave transformers have exactly one section")
        if not 1 <= self.sections <= MAX_SECTIONS:
            raise ValueError(f"sections must be in [1, {MAX_SECTIONS}], got {self.sections}")
        if (self.ripple is not None) != (self.kind is Kind.CHEBYSHEV):
            raise ValueError("ripple is required for chebyshev and only for chebyshev")
        if self.ripple is not None and not 0.0 < self.ripple < 1.0:
            raise ValueError(f"ripple must be in (0, 1), got {self.ripple}")
        if not self.f0 > 0:
            raise ValueError("f0 must be positive")


@dataclass(frozen=True)
class Section:
    eps: float
    impedance: float  # ohm
    length: float  # mm


@dataclass(frozen=True)
class SectionPlan:
    sections: tuple[Section, ...]
    f0: float
    kind: Kind | None
    media: MediumPair
    # Chebyshev only: edge of the equal-ripple band in electrical angle (rad)
    theta_m: float | None = None
    steps: tuple[float, ...] = field(default=(), repr=False)

    def __len__(self):
        return len(self.sections)

    def __iter__(self):
        return iter(self.sections)

    @property
    def eps(self) -> list[float]:
        return [s.eps for s in self.sections]

    @property
    def lengths(self) -> list[float]:
        return [s.length for s in self.sections]

    @property
    def impedances(self) -> list[float]:
        return [s.impedance for s in self.sections]

    @property
    def total_length(self) -> float:
        return sum(s.length for s in self.sections)

    @classmethod
    def empty(cls, media: MediumPair, f0: float) -> SectionPlan:
        """No matching layers (bare interface)."""
        return cls((), f0, None, media)

    @classmethod
    def from_layers(cls, eps, lengths, media: MediumPair, f0: float,
                    kind: Kind | None = None) -> SectionPlan:
        """Build a plan from explicit permittivities and lengths (mm)."""
        if len(eps) != len(lengths):
            raise ValueError("eps and lengths must have the same length")
        secs = tuple(Section(float(e), ETA0 / math.sqrt(e), float(l))
                     for e, l in zip(eps, lengths))
        return cls(secs, f0, kind, media)


def quarter_wave_length(eps: float, f0: float) -> float:
    """Quarter of the in-medium wavelength at ``f0``, in mm."""
    return C0 / f0 * 1e3 / (4.0 * math.sqrt(eps))


def binom_coeff(N: int, n: int) -> int:
    if not (0 <= N <= MAX_BINOM_N):
        raise ValueError(f"N must be in [0, {MAX_BINOM_N}], got {N}")
    if not (0 <= n <= N):
        raise ValueError(f"n must be in [0, {N}], got {n}")
    return math.comb(N, n)


def _check_sections(N):
    if not isinstance(N, (int, np.integer)) or not 1 <= N <= MAX_SECTIONS:
        raise ValueError(f"section count must be an integer in [1, {MAX_SECTIONS}], got {N!r}")


def _plan_from_steps(steps, media, f0, kind, theta_m=None):
    """Accumulate log-impedance steps from the start medium.

    ``steps`` has N + 1 entries; the last closes onto the end medium and is
    not turned into a section.
    """
    log_z = math.log(ETA0 / math.sqrt(media.eps_start))
    secs = []
    for step in steps[:-1]:
        log_z += step
        z = math.exp(log_z)
        eps = (ETA0 / z) ** 2
        secs.append(Section(eps, z, quarter_wave_length(eps, f0)))
    return SectionPlan(tuple(secs), f0, kind, media, theta_m, tuple(steps))


def synth_binomial(media: MediumPair, N: int, f0: float) -> SectionPlan:
    """Binomial (maximally flat) transformer with ``N`` sections.

    Log-impedance step n is ``2**-N * C(N, n) * ln(Z_end / Z_start)``.
    """
    _check_sections(N)
    if not f0 > 0:
        raise ValueError("f0 must be positive")
    total = media.log_impedance_ratio
    steps = [2.0 ** -N * binom_coeff(N, n) * total for n in range(N + 1)]
    kind = Kind.QUARTER_WAVE if N == 1 else Kind.BINOMIAL
    return _plan_from_steps(steps, media, f0, kind)


def synth_quarter_wave(media: MediumPair, f0: float) -> SectionPlan:
    return synth_binomial(media, 1, f0)


def chebyshev_sec_theta_m(media: MediumPair, N: int, ripple: float) -> float:
    """sec(theta_m) for an N-section equal-ripple design."""
    arg = abs(media.log_impedance_ratio) / (2.0 * ripple)
    if arg <= 1.0:
        raise DegenerateSpecError(
            f"ripple {ripple} is not below the single-interface reflection "
            f"{media.interface_reflection:.6g}; no transformer is needed")
    return math.cosh(math.acosh(arg) / N)


def chebyshev_reflections(N: int, sec_theta_m: float, ripple: float) -> list[float]:
    """Section reflection magnitudes Gamma_0..Gamma_N.

    The multiple-angle expansion of ``ripple * T_N(sec_theta_m * cos(theta))``
    gives cos(k theta) coefficients c_k; for a symmetric transformer
    Gamma_n = c_{N-2n} / 2, except the middle term (N even) which is c_0.
    """
    power = npcheb.cheb2poly([0.0] * N + [1.0])
    power = power * sec_theta_m ** np.arange(N + 1)
    coeffs = ripple * npcheb.poly2cheb(power)
    out = []
    for n in range(N + 1):
        k = abs(N - 2 * n)
        out.append(float(coeffs[0]) if k == 0 else float(coeffs[k]) / 2.0)
    return out


def synth_chebyshev(media: MediumPair, N: int, ripple: float, f0: float) -> SectionPlan:
    """Chebyshev (equal-ripple) transformer from small-reflection theory."""
    _check_sections(N)
    if not f0 > 0:
        raise ValueError("f0 must be positive")
    if not 0.0 < ripple < 1.0:
        raise ValueError(f"ripple must be in (0, 1), got {ripple}")
    if media.identical:
        eps = media.eps_start
        secs = tuple(Section(eps, ETA0 / math.sqrt(eps), quarter_wave_length(eps, f0))
                     for _ in range(N))
        return SectionPlan(secs, f0, Kind.CHEBYSHEV, media, None, (0.0,) * (N + 1))
    sec_m = chebyshev_sec_theta_m(media, N, ripple)
    gammas = chebyshev_reflections(N, sec_m, ripple)
    sign = math.copysign(1.0, media.log_impedance_ratio)
    # ln(Z_{n+1}/Z_n) ~= 2 Gamma_n
    steps = [2.0 * sign * g for g in gammas]
    return _plan_from_steps(steps, media, f0, Kind.CHEBYSHEV, math.acos(1.0 / sec_m))


def synthesize(spec: TransformerSpec, media: MediumPair) -> SectionPlan:
    if spec.kind is Kind.QUARTER_WAVE:
        return synth_quarter_wave(media, spec.f0)
    if spec.kind is Kind.BINOMIAL:
        return synth_binomial(media, spec.sections, spec.f0)
    return synth_chebyshev(media, spec.sections, spec.ripple, spec.f0)


@dataclass(frozen=True)
class FbwEstimate:
    fbw: float
    theta_edge: float | None  # rad; band edge in electrical angle
    reachable: bool = True
    capped: bool = False
    note: str = ""

    def __float__(self):
        return self.fbw


def _fbw_from_theta(theta):
    fbw = 2.0 - 4.0 * theta / math.pi
    if fbw > 2.0:
        return FbwEstimate(2.0, theta, capped=True)
    return FbwEstimate(fbw, theta)


def predicted_fbw(spec: TransformerSpec, media: MediumPair, threshold: float) -> FbwEstimate:
    """Small-reflection fractional bandwidth where |Gamma| <= ``threshold``."""
    if not 0.0 < threshold < 1.0:
        raise ValueError("threshold must be in (0, 1)")
    if media.identical:
        return FbwEstimate(2.0, 0.0, capped=True, note="identical media (all-pass)")
    N = 1 if spec.kind is Kind.QUARTER_WAVE else spec.sections

    if spec.kind is not Kind.CHEBYSHEV:
        amp = 2.0 ** -(N + 1) * abs(media.log_impedance_ratio)
        x = 0.5 * (threshold / amp) ** (1.0 / N)
        if x >= 1.0:
            return FbwEstimate(2.0, 0.0, capped=True, note="threshold above peak response")
        return _fbw_from_theta(math.acos(x))

    ripple = spec.ripple
    cos_m = 1.0 / chebyshev_sec_theta_m(media, N, ripple)
    r = threshold / ripple
    if r >= 1.0:
        x_edge = math.cosh(math.acosh(r) / N)
    elif N % 2:
        x_edge = math.sin(math.asin(r) / N)
    else:
        return FbwEstimate(0.0, None, reachable=False,
                           note="threshold below the ripple at the band centre")
    c = x_edge * cos_m
    if c >= 1.0:
        return FbwEstimate(2.0, 0.0, capped=True, note="threshold above peak response")
    return _fbw_from_theta(math.acos(c))
