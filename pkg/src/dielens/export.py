"""Printable geometry for the pin lens: binary STL and manufacturability checks.

Every pin is a stack of axis-aligned boxes: the matching-layer pins on the
bottom face (outermost first), the full-period body, then the same layers in
reverse on the top face. Boxes are emitted as independent closed prisms
(12 triangles each) resting on an optional backing plate below z = 0.
"""

from __future__ import annotations

import csv
import io
import logging
import os
from dataclasses import dataclass, field, replace

import numpy as np

from .constants import DEFAULT_BASE_THICKNESS_MM, DEFAULT_RESOLUTION_MM
from .effmed import VOLUME_FRACTION, MappingModel, UnitCellGeometry, eps_of_thickness
from .lens import FaceLayer, LensPlan

log = logging.getLogger(__name__)

STL_HEADER = b"dielens binary STL (mm)".ljust(80, b" ")
STL_DTYPE = np.dtype([("normal", "<f4", (3,)), ("vertices", "<f4", (3, 3)), ("attr", "<u2")])

# unit-cube corners and the 12 outward-facing (counter-clockwise) triangles
_CORNERS = np.array([[x, y, z] for z in (0, 1) for y in (0, 1) for x in (0, 1)], dtype=float)
_FACES = np.array([
    [0, 2, 3], [0, 3, 1],  # z = 0
    [4, 5, 7], [4, 7, 6],  # z = 1
    [0, 1, 5], [0, 5, 4],  # y = 0
    [2, 6, 7], [2, 7, 3],  # y = 1
    [0, 4, 6], [0, 6, 2],  # x = 0
    [1, 3, 7], [1, 7, 5],  # x = 1
])
_NORMALS = np.array([
    [0, 0, -1], [0, 0, -1], [0, 0, 1], [0, 0, 1],
    [0, -1, 0], [0, -1, 0], [0, 1, 0], [0, 1, 0],
    [-1, 0, 0], [-1, 0, 0], [1, 0, 0], [1, 0, 0],
], dtype=float)


@dataclass
class SolidModel:
    normals: np.ndarray  # (T, 3)
    vertices: np.ndarray  # (T, 3, 3), mm

    def __len__(self):
        return len(self.normals)

    @property
    def n_triangles(self) -> int:
        return len(self.normals)

    @property
    def bounding_box(self):
        """``(min_xyz, max_xyz)``; zeros for an empty model."""
        if not len(self):
            return np.zeros(3), np.zeros(3)
        v = self.vertices.reshape(-1, 3)
        return v.min(axis=0), v.max(axis=0)

    @classmethod
    def empty(cls) -> SolidModel:
        return cls(np.zeros((0, 3)), np.zeros((0, 3, 3)))


def boxes_to_solid(lo, hi) -> SolidModel:
    """Triangulate axis-aligned boxes given as ``(B, 3)`` corner arrays."""
    lo = np.asarray(lo, dtype=float).reshape(-1, 3)
    hi = np.asarray(hi, dtype=float).reshape(-1, 3)
    if not len(lo):
        return SolidModel.empty()
    size = hi - lo
    corners = lo[:, None, :] + _CORNERS[None, :, :] * size[:, None, :]  # (B, 8, 3)
    verts = corners[:, _FACES, :].reshape(-1, 3, 3)
    normals = np.tile(_NORMALS, (len(lo), 1))
    return SolidModel(normals, verts)


def _element_boxes(plan: LensPlan):
    p = plan.spec.period
    lo, hi = [], []
    dropped = 0
    for e in plan.elements:
        x, y = e.position
        z = 0.0
        segments = [(l.pin_side, l.length) for l in e.face_layers]
        segments = segments + [(p, e.body_len)] + segments[::-1]
        for side, length in segments:
            if side <= 0 or length <= 0:
                dropped += 1
                continue
            h = side / 2.0
            lo.append((x - h, y - h, z))
            hi.append((x + h, y + h, z + length))
            z += length
    if dropped:
        log.warning("dropped %d zero-size pin sections", dropped)
    return lo, hi


def to_solid(plan: LensPlan, base_thickness: float = DEFAULT_BASE_THICKNESS_MM) -> SolidModel:
    """Stepped-pin solid of the whole lens, plate underneath when requested."""
    if base_thickness < 0:
        raise ValueError("base_thickness must be >= 0")
    lo, hi = _element_boxes(plan)
    if base_thickness > 0 and plan.elements:
        x, y, _, _ = plan.arrays()
        h = plan.spec.period / 2.0
        lo.append((x.min() - h, y.min() - h, -base_thickness))
        hi.append((x.max() + h, y.max() + h, 0.0))
    return boxes_to_solid(lo, hi)


def stl_bytes(model: SolidModel) -> bytes:
    rec = np.zeros(len(model), dtype=STL_DTYPE)
    rec["normal"] = model.normals
    rec["vertices"] = model.vertices
    return STL_HEADER + np.uint32(len(model)).astype("<u4").tobytes() + rec.tobytes()


def write_stl(model: SolidModel, destination) -> int:
    """Write binary little-endian STL to a path or binary file; returns bytes written."""
    data = stl_bytes(model)
    if isinstance(destination, (str, os.PathLike)):
        with open(destination, "wb") as fh:
            fh.write(data)
    else:
        destination.write(data)
    return len(data)


def read_stl(source) -> SolidModel:
    """Parse a binary STL (path, bytes or binary file)."""
    if isinstance(source, (bytes, bytearray)):
        data = bytes(source)
    elif isinstance(source, (str, os.PathLike)):
        with open(source, "rb") as fh:
            data = fh.read()
    else:
        data = source.read()
    n = int(np.frombuffer(data, "<u4", count=1, offset=80)[0])
    if len(data) != 84 + 50 * n:
        raise ValueError(f"STL size {len(data)} does not match {n} triangles")
    rec = np.frombuffer(data, STL_DTYPE, count=n, offset=84)
    return SolidModel(rec["normal"].astype(float), rec["vertices"].astype(float))


@dataclass(frozen=True)
class Violation:
    element: tuple[int, int]
    dimension: str
    value: float
    limit: float


@dataclass(frozen=True)
class SnapRecord:
    element: tuple[int, int]
    dimension: str
    value: float
    snapped: float
    eps_delta: float | None = None  # pin sides only


@dataclass
class PrintReport:
    resolution: float
    min_feature: float
    violations: list[Violation] = field(default_factory=list)
    off_grid: list[SnapRecord] = field(default_factory=list)
    snapped_dims: int = 0
    plan: LensPlan | None = field(default=None, repr=False)  # snapped plan when requested

    @property
    def printable(self) -> bool:
        return not self.violations

    def to_text(self) -> str:
        lines = [f"resolution_mm={self.resolution!r} min_feature_mm={self.min_feature!r}",
                 f"violations={len(self.violations)} off_grid={len(self.off_grid)} "
                 f"snapped_dims={self.snapped_dims}"]
        seen = {}
        for v in self.violations:
            seen.setdefault((v.dimension, v.value, v.limit), []).append(v.element)
        for (dim, value, limit), elems in seen.items():
            lines.append(f"  violation {dim}={value:.6g} mm (limit {limit:.6g} mm) "
                         f"on {len(elems)} element(s), first {elems[0]}")
        eps_moves = [r.eps_delta for r in self.off_grid if r.eps_delta is not None]
        if eps_moves:
            lines.append(f"  max |eps change| from snapping pin sides: {max(map(abs, eps_moves)):.3e}")
        lines.append("printable" if self.printable else "NOT printable")
        return "\n".join(lines)

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["i", "j", "kind", "dimension", "value_mm", "limit_or_snapped_mm", "eps_delta"])
        for v in self.violations:
            w.writerow([*v.element, "violation", v.dimension, repr(v.value), repr(v.limit), ""])
        for r in self.off_grid:
            w.writerow([*r.element, "off_grid", r.dimension, repr(r.value), repr(r.snapped),
                        "" if r.eps_delta is None else repr(r.eps_delta)])
        return buf.getvalue()


def snap_value(value: float, resolution: float) -> float:
    return round(value / resolution) * resolution


def _on_grid(value, resolution):
    q = value / resolution
    return abs(q - round(q)) <= 1e-9 * max(1.0, abs(q))


def check_printable(plan: LensPlan, resolution: float = DEFAULT_RESOLUTION_MM,
                    min_feature: float = 0.1, snap: bool = False,
                    geom: UnitCellGeometry | None = None,
                    model: MappingModel = VOLUME_FRACTION) -> PrintReport:
    """Report undersized features and off-grid dimensions.

    Flags pin sides below ``min_feature``, air gaps between neighbouring
    layer pins below ``min_feature`` and bodies shorter than the plan's
    minimum. With ``snap=True`` a copy of the plan with every dimension moved
    to the nearest grid multiple is attached to the report.
    """
    if not resolution > 0:
        raise ValueError("resolution must be positive")
    p = plan.spec.period
    if geom is None:
        geom = UnitCellGeometry(p, plan.spec.bulk_eps)
    occupied = {e.index for e in plan.elements}
    report = PrintReport(resolution, min_feature)
    new_elements = []
    l_min = plan.spec.min_body_len
    for e in plan.elements:
        i, j = e.index
        has_neighbour = any((i + di, j + dj) in occupied
                            for di, dj in ((1, 0), (-1, 0), (0, 1), (0, -1)))
        new_layers = []
        for k, layer in enumerate(e.face_layers, start=1):
            if layer.pin_side < min_feature:
                report.violations.append(Violation(e.index, f"t{k}", layer.pin_side, min_feature))
            gap = p - layer.pin_side
            if has_neighbour and 0 < gap < min_feature:
                report.violations.append(Violation(e.index, f"gap{k}", gap, min_feature))
            t_new, l_new = layer.pin_side, layer.length
            if not _on_grid(layer.pin_side, resolution):
                t_new = min(snap_value(layer.pin_side, resolution), p)
                delta = (eps_of_thickness(t_new, geom, model)
                         - eps_of_thickness(layer.pin_side, geom, model)) if t_new > 0 else None
                report.off_grid.append(SnapRecord(e.index, f"t{k}", layer.pin_side, t_new, delta))
            if not _on_grid(layer.length, resolution):
                l_new = snap_value(layer.length, resolution)
                report.off_grid.append(SnapRecord(e.index, f"l{k}", layer.length, l_new))
            eps_new = eps_of_thickness(t_new, geom, model) if t_new != layer.pin_side and t_new > 0 else layer.eps
            new_layers.append(FaceLayer(t_new, l_new, eps_new))
        if e.body_len < l_min - 1e-9:
            report.violations.append(Violation(e.index, "L", e.body_len, l_min))
        L_new = e.body_len
        if not _on_grid(e.body_len, resolution):
            L_new = snap_value(e.body_len, resolution)
            report.off_grid.append(SnapRecord(e.index, "L", e.body_len, L_new))
        new_elements.append(replace(e, body_len=L_new, face_layers=tuple(new_layers)))
    if snap:
        report.snapped_dims = len(report.off_grid)
        report.plan = LensPlan(plan.spec, new_elements, plan.sections)
    return report
