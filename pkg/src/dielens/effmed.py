"""Effective permittivity of a square-pin unit cell versus pin side.

A pin of side ``t`` centred in a square cell of period ``p`` fills a fraction
``(t/p)**2`` of the cross-section. Two analytic mixing rules are offered plus a
user calibration table (e.g. digitised from full-wave results), interpolated
with a monotone cubic.
"""

from __future__ import annotations

import csv
import math
import warnings
from dataclasses import dataclass
from enum import Enum

import numpy as np
from scipy.interpolate import PchipInterpolator
from scipy.optimize import brentq

from .constants import DEFAULT_BULK_EPS, DEFAULT_PERIOD_MM


class MappingError(ValueError):
    pass


class CalibrationError(ValueError):
    pass


class ExtrapolationWarning(UserWarning):
    """A lookup table was evaluated outside its sampled range and clamped."""


class ModelKind(str, Enum):
    VOLUME_FRACTION = "volume-fraction"
    MAXWELL_GARNETT = "maxwell-garnett"
    LOOKUP_TABLE = "lookup-table"


@dataclass(frozen=True)
class UnitCellGeometry:
    period: float = DEFAULT_PERIOD_MM
    bulk_eps: float = DEFAULT_BULK_EPS
    pin_side: float | None = None

    def __post_init__(self):
        if not self.period > 0:
            raise ValueError("period must be positive")
        if not self.bulk_eps > 1:
            raise ValueError("bulk_eps must exceed 1")
        if self.pin_side is not None and not 0 < self.pin_side <= self.period:
            raise ValueError("pin_side must be in (0, period]")


@dataclass(frozen=True, eq=False)
class MappingModel:
    kind: ModelKind = ModelKind.VOLUME_FRACTION
    table: tuple[tuple[float, float], ...] | None = None

    def __post_init__(self):
        object.__setattr__(self, "kind", ModelKind(self.kind))
        if self.kind is ModelKind.LOOKUP_TABLE:
            if self.table is None:
                raise CalibrationError("lookup-table model needs a table")
            _validate_table(self.table)
            t, e = np.array(self.table).T
            object.__setattr__(self, "_interp", PchipInterpolator(t, e, extrapolate=False))

    @property
    def t_range(self):
        return (self.table[0][0], self.table[-1][0]) if self.table else None


VOLUME_FRACTION = MappingModel(ModelKind.VOLUME_FRACTION)
MAXWELL_GARNETT = MappingModel(ModelKind.MAXWELL_GARNETT)


def _validate_table(table):
    if len(table) < 4:
        raise CalibrationError(f"calibration table needs at least 4 points, got {len(table)}")
    bad = []
    for row, ((t_prev, e_prev), (t, e)) in enumerate(zip(table, table[1:]), start=1):
        if not t > t_prev:
            bad.append(f"row {row}: t={t} not above previous t={t_prev}")
        if not e > e_prev:
            bad.append(f"row {row}: eps={e} not above previous eps={e_prev}")
    for row, (t, e) in enumerate(table):
        if not (math.isfinite(t) and math.isfinite(e)) or t < 0 or e < 1:
            bad.append(f"row {row}: invalid point ({t}, {e})")
    if bad:
        raise CalibrationError("non-monotone calibration table: " + "; ".join(bad))


def load_calibration(table) -> MappingModel:
    """Validated lookup-table model from sorted ``(t_mm, eps)`` pairs."""
    rows = tuple((float(t), float(e)) for t, e in table)
    return MappingModel(ModelKind.LOOKUP_TABLE, rows)


def read_calibration_csv(path) -> MappingModel:
    """Parse a ``t_mm,eps_eff`` CSV; ``#`` comment lines are skipped."""
    with open(path, newline="") as fh:
        lines = [ln for ln in fh if ln.strip() and not ln.lstrip().startswith("#")]
    reader = csv.reader(lines)
    header = [h.strip() for h in next(reader, [])]
    if header != ["t_mm", "eps_eff"]:
        raise CalibrationError(f"expected header 't_mm,eps_eff', got {','.join(header)!r}")
    return load_calibration([(r[0], r[1]) for r in reader if r])


def fill_factor(t, period):
    return (t / period) ** 2


def eps_of_thickness(t: float, geom: UnitCellGeometry = UnitCellGeometry(),
                     model: MappingModel = VOLUME_FRACTION) -> float:
    if not 0.0 < t <= geom.period * (1 + 1e-12):
        raise MappingError(f"pin side {t} mm outside (0, {geom.period}]")
    t = min(t, geom.period)
    if model.kind is ModelKind.VOLUME_FRACTION:
        return 1.0 + fill_factor(t, geom.period) * (geom.bulk_eps - 1.0)
    if model.kind is ModelKind.MAXWELL_GARNETT:
        # 2-D mixing for rods in air with the field transverse to the rod axis
        beta = fill_factor(t, geom.period) * (geom.bulk_eps - 1.0) / (geom.bulk_eps + 1.0)
        return (1.0 + beta) / (1.0 - beta)
    lo, hi = model.t_range
    if t < lo or t > hi:
        warnings.warn(f"pin side {t} mm outside calibration range [{lo}, {hi}]; clamped",
                      ExtrapolationWarning, stacklevel=2)
        t = min(max(t, lo), hi)
    return float(model._interp(t))


def thickness_of_eps(eps: float, geom: UnitCellGeometry = UnitCellGeometry(),
                     model: MappingModel = VOLUME_FRACTION, xtol: float = 1e-12) -> float:
    """Pin side (mm) that realises ``eps``, by bracketed root finding."""
    if not 1.0 <= eps <= geom.bulk_eps * (1 + 1e-12):
        raise MappingError(f"eps {eps} outside [1, {geom.bulk_eps}]")
    lo, hi = 0.0, geom.period
    floor = 1.0
    if model.kind is ModelKind.LOOKUP_TABLE:
        (lo, e_lo), (hi, e_hi) = model.table[0], model.table[-1]
        if eps < e_lo or eps > e_hi:
            warnings.warn(f"eps {eps} outside calibration range [{e_lo}, {e_hi}]; clamped",
                          ExtrapolationWarning, stacklevel=2)
        if eps <= e_lo:
            return lo
        if eps >= e_hi:
            return hi
        floor = e_lo
    elif eps == 1.0:
        return 0.0
    elif eps >= geom.bulk_eps:
        return geom.period

    def resid(t):
        return (eps_of_thickness(t, geom, model) if t > 0 else floor) - eps

    return brentq(resid, lo, hi, xtol=xtol, rtol=4 * np.finfo(float).eps)
