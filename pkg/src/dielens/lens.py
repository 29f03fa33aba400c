"""Discrete dielectric lens planning.

The lens is a square grid of pins of pitch ``period`` in the z = 0 plane, fed
from a focal point at ``(0, 0, -F)``. Each pin's insertion phase collimates the
feed's spherical wave towards ``beam_dir``; the phase is realised by the pin
body length (a TEM delay line in the bulk dielectric). Matching layers are
stacked identically on both faces of every pin.

Convention: the element needing the most delay gets the longest body, and
the phase-leading elements (lens edge, for a broadside focusing lens) sit at
``min_body_len``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from enum import Enum

import numpy as np
from scipy.integrate import trapezoid

from . import kernels
from .constants import (DEFAULT_BULK_EPS, DEFAULT_ELEMENTS_ACROSS, DEFAULT_F0,
                        DEFAULT_F_OVER_D, DEFAULT_MIN_BODY_LEN_MM, DEFAULT_PERIOD_MM,
                        wavenumber_per_mm)
from .effmed import VOLUME_FRACTION, MappingError, MappingModel, UnitCellGeometry, thickness_of_eps
from .tmm import Layer, Stack

TWO_PI = 2.0 * math.pi


class WrapMode(str, Enum):
    NONE = "none"
    MODULO_2PI = "modulo-2pi"


class ApertureShape(str, Enum):
    CIRCULAR_TRIM = "square-grid-circular-trim"
    FULL_SQUARE = "full-square"


@dataclass(frozen=True)
class LensSpec:
    f0: float = DEFAULT_F0
    period: float = DEFAULT_PERIOD_MM
    elements_across: int = DEFAULT_ELEMENTS_ACROSS
    f_over_d: float = DEFAULT_F_OVER_D
    bulk_eps: float = DEFAULT_BULK_EPS
    beam_dir: tuple[float, float, float] = (0.0, 0.0, 1.0)
    ref_phase: float = 0.0
    min_body_len: float = DEFAULT_MIN_BODY_LEN_MM
    wrap_mode: WrapMode = WrapMode.MODULO_2PI
    aperture_shape: ApertureShape = ApertureShape.CIRCULAR_TRIM

    def __post_init__(self):
        object.__setattr__(self, "wrap_mode", WrapMode(self.wrap_mode))
        object.__setattr__(self, "aperture_shape", ApertureShape(self.aperture_shape))
        object.__setattr__(self, "beam_dir", tuple(float(v) for v in self.beam_dir))
        if int(self.elements_across) != self.elements_across or self.elements_across < 1:
            raise ValueError("elements_across must be a positive integer")
        if not self.f_over_d > 0:
            raise ValueError("f_over_d must be positive")
        if not self.f0 > 0 or not self.period > 0:
            raise ValueError("f0 and period must be positive")
        if not self.bulk_eps > 1:
            raise ValueError("bulk_eps must exceed 1")
        if abs(math.sqrt(sum(v * v for v in self.beam_dir)) - 1.0) > 1e-9:
            raise ValueError("beam_dir must be a unit vector")
        if self.min_body_len < 0:
            raise ValueError("min_body_len must be >= 0")

    @property
    def aperture_diam(self) -> float:
        return self.elements_across * self.period

    @property
    def focal_len(self) -> float:
        return self.f_over_d * self.aperture_diam

    @property
    def k(self) -> float:
        return wavenumber_per_mm(self.f0)

    @property
    def delay_per_mm(self) -> float:
        """Extra phase per mm of body relative to the air it displaces."""
        return self.k * (math.sqrt(self.bulk_eps) - 1.0)


@dataclass(frozen=True)
class FaceLayer:
    pin_side: float  # mm
    length: float  # mm
    eps: float


@dataclass(frozen=True)
class ElementPlan:
    index: tuple[int, int]
    position: tuple[float, float]  # mm
    focal_dist: float  # mm
    phase: float  # rad
    body_len: float  # mm
    face_layers: tuple[FaceLayer, ...] = ()

    @property
    def radius(self) -> float:
        return math.hypot(*self.position)

    @property
    def layer_length(self) -> float:
        return sum(l.length for l in self.face_layers)

    @property
    def total_length(self) -> float:
        return 2.0 * self.layer_length + self.body_len


@dataclass
class LensPlan:
    spec: LensSpec
    elements: list[ElementPlan]
    sections: object = field(default=None, repr=False)  # SectionPlan the layers came from

    @property
    def aperture_diam(self) -> float:
        return self.spec.aperture_diam

    @property
    def focal_len(self) -> float:
        return self.spec.focal_len

    @property
    def total_thickness(self) -> float:
        return max(e.total_length for e in self.elements)

    @property
    def n_layers(self) -> int:
        return max((len(e.face_layers) for e in self.elements), default=0)

    def arrays(self):
        """Element positions (x, y), focal distances and body lengths as arrays."""
        x = np.array([e.position[0] for e in self.elements])
        y = np.array([e.position[1] for e in self.elements])
        R = np.array([e.focal_dist for e in self.elements])
        L = np.array([e.body_len for e in self.elements])
        return x, y, R, L


def element_grid(spec: LensSpec):
    """``(i, j, x_mm, y_mm)`` for every element kept in the aperture."""
    n = spec.elements_across
    half = (n - 1) / 2.0
    r_max = spec.aperture_diam / 2.0
    out = []
    for i in range(n):
        for j in range(n):
            x = (i - half) * spec.period
            y = (j - half) * spec.period
            if spec.aperture_shape is ApertureShape.CIRCULAR_TRIM and math.hypot(x, y) > r_max + 1e-9:
                continue
            out.append((i, j, x, y))
    return out


def _focal_distances(spec, grid):
    F = spec.focal_len
    return np.array([math.sqrt(F * F + x * x + y * y) for _, _, x, y in grid])


def phase_profile(spec: LensSpec) -> np.ndarray:
    """Required element phases, in :func:`element_grid` order."""
    grid = element_grid(spec)
    R = _focal_distances(spec, grid)
    bx, by, _ = spec.beam_dir
    proj = np.array([x * bx + y * by for _, _, x, y in grid])
    psi = spec.k * (R - proj) + spec.ref_phase
    if spec.wrap_mode is WrapMode.MODULO_2PI:
        psi = np.mod(psi - psi.min(), TWO_PI)
    return psi


def lengths_from_phase(phases, spec: LensSpec) -> np.ndarray:
    """Body lengths (mm) that realise the relative delays ``max(psi) - psi``."""
    phases = np.asarray(phases, dtype=float)
    if phases.size == 0:
        return phases.copy()
    delay = phases.max() - phases
    return spec.min_body_len + delay / spec.delay_per_mm


def plan_lens(spec: LensSpec = LensSpec()) -> LensPlan:
    """Bare lens (no matching layers)."""
    grid = element_grid(spec)
    R = _focal_distances(spec, grid)
    psi = phase_profile(spec)
    L = lengths_from_phase(psi, spec)
    elements = [ElementPlan((i, j), (x, y), float(r), float(p), float(l))
                for (i, j, x, y), r, p, l in zip(grid, R, psi, L)]
    return LensPlan(spec, elements)


def attach_layers(plan: LensPlan, layers, sections=None) -> LensPlan:
    layers = tuple(layers)
    elements = [replace(e, face_layers=layers) for e in plan.elements]
    return LensPlan(plan.spec, elements, sections)


def attach_matching(plan: LensPlan, sections, geom: UnitCellGeometry | None = None,
                    model: MappingModel = VOLUME_FRACTION) -> LensPlan:
    """Realise ``sections`` as pin layers on both faces of every element."""
    if geom is None:
        geom = UnitCellGeometry(plan.spec.period, plan.spec.bulk_eps)
    layers = []
    for k, s in enumerate(sections.sections, start=1):
        if not 1.0 <= s.eps <= geom.bulk_eps:
            raise MappingError(f"section {k} eps {s.eps:.6g} outside [1, {geom.bulk_eps}]")
        layers.append(FaceLayer(thickness_of_eps(s.eps, geom, model), s.length, s.eps))
    return attach_layers(plan, layers, sections)


def bare_aperture(plan: LensPlan) -> LensPlan:
    """Same grid with uniform bodies and no layers (no focusing)."""
    L = plan.spec.min_body_len
    return LensPlan(plan.spec, [replace(e, body_len=L, face_layers=()) for e in plan.elements])


def face_stack(element: ElementPlan, bulk_eps: float, loss_tangent: float = 0.0) -> Stack:
    """Air, one face's matching layers, then the semi-infinite bulk."""
    layers = tuple(Layer(l.eps, l.length, loss_tangent) for l in element.face_layers)
    return Stack(1.0, layers, bulk_eps)


def element_stack(element: ElementPlan, bulk_eps: float, loss_tangent: float = 0.0) -> Stack:
    """Full pin, air to air: layers, body, layers in reverse."""
    face = [Layer(l.eps, l.length, loss_tangent) for l in element.face_layers]
    body = [Layer(bulk_eps, element.body_len, loss_tangent)] if element.body_len > 0 else []
    return Stack(1.0, tuple(face + body + face[::-1]), 1.0)


@dataclass(frozen=True)
class FeedModel:
    pattern_exponent: float = 2.0
    position: tuple[float, float, float] | None = None  # mm; default (0, 0, -F)

    def __post_init__(self):
        if not (math.isfinite(self.pattern_exponent) and self.pattern_exponent >= 0):
            raise ValueError("pattern_exponent must be finite and >= 0")


@dataclass
class PatternResult:
    theta: np.ndarray  # rad, shape (n_theta,)
    phi: np.ndarray  # rad, shape (n_phi,)
    field: np.ndarray  # complex, shape (n_theta, n_phi)
    directivity_dBi: float
    peak_theta: float
    peak_phi: float

    @property
    def power_db(self) -> np.ndarray:
        p = np.abs(self.field) ** 2
        with np.errstate(divide="ignore"):
            return 10 * np.log10(p / p.max())


def element_weights(plan: LensPlan, feed: FeedModel, f: float) -> np.ndarray:
    """Complex excitation of each element's output face at frequency ``f``."""
    spec = plan.spec
    k = wavenumber_per_mm(f)
    src = feed.position if feed.position is not None else (0.0, 0.0, -spec.focal_len)
    x, y, _, L = plan.arrays()
    dx, dy, dz = x - src[0], y - src[1], -src[2]
    R = np.sqrt(dx * dx + dy * dy + dz * dz)
    taper = np.clip(dz / R, 0.0, None) ** feed.pattern_exponent
    n_bulk = math.sqrt(spec.bulk_eps)
    layer_delay = np.array([2.0 * sum((math.sqrt(l.eps) - 1.0) * l.length for l in e.face_layers)
                            for e in plan.elements])
    delay = R + (n_bulk - 1.0) * L + layer_delay
    return taper / R * np.exp(-1j * k * delay)


def _hemisphere_power_exact(x, y, w, k):
    # planar array: the hemisphere holds half of 4 pi * sum w_i w_j* sinc(k d_ij)
    d = np.hypot(x[:, None] - x[None, :], y[:, None] - y[None, :])
    return 2.0 * math.pi * float(np.real(np.conj(w) @ np.sinc(k * d / math.pi) @ w))


def estimate_pattern(plan: LensPlan, feed: FeedModel = FeedModel(), f: float | None = None,
                     n_phi: int = 181, n_theta: int = 91,
                     normalization: str = "grid") -> PatternResult:
    """Scalar aperture-summation far field over the forward hemisphere.

    Directivity is the peak intensity over the mean intensity, nothing being
    radiated backward. With ``normalization="grid"`` the total power is
    integrated on the sample grid; ``"exact"`` uses the closed-form pairwise
    sum instead, which does not depend on grid resolution.
    """
    if normalization not in ("grid", "exact"):
        raise ValueError("normalization must be 'grid' or 'exact'")
    if not plan.elements:
        raise ValueError("plan has no elements")
    f = plan.spec.f0 if f is None else f
    theta = np.linspace(0.0, math.pi / 2, n_theta)
    phi = np.linspace(0.0, TWO_PI, n_phi)
    th, ph = np.meshgrid(theta, phi, indexing="ij")
    ux = np.sin(th) * np.cos(ph)
    uy = np.sin(th) * np.sin(ph)
    x, y, _, _ = plan.arrays()
    w = element_weights(plan, feed, f)
    E = kernels.aperture_field(x, y, w, ux.ravel(), uy.ravel(), wavenumber_per_mm(f)).reshape(th.shape)
    P = np.abs(E) ** 2
    if normalization == "exact":
        total = _hemisphere_power_exact(x, y, w, wavenumber_per_mm(f))
    else:
        total = trapezoid(trapezoid(P * np.sin(th), phi, axis=1), theta)
    iq = np.unravel_index(np.argmax(P), P.shape)
    D = 4 * math.pi * P[iq] / total
    return PatternResult(theta, phi, E, 10 * math.log10(D), float(theta[iq[0]]), float(phi[iq[1]]))


def aperture_directivity_bound_dBi(plan: LensPlan, f: float | None = None) -> float:
    """10 log10(4 pi A / lambda^2) for the circular aperture of diameter D."""
    f = plan.spec.f0 if f is None else f
    lam = TWO_PI / wavenumber_per_mm(f)
    area = math.pi * (plan.aperture_diam / 2.0) ** 2
    return 10 * math.log10(4 * math.pi * area / lam ** 2)
