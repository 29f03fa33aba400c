import io
import logging
import struct
from dataclasses import replace

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from dielens.effmed import UnitCellGeometry, eps_of_thickness
from dielens.export import (SolidModel, boxes_to_solid, check_printable, read_stl, snap_value, stl_bytes,
                            to_solid, write_stl)
from dielens.lens import FaceLayer, LensSpec, attach_layers, attach_matching, plan_lens
from dielens.xformer import MediumPair, SectionPlan, synth_binomial

F0 = 80e9
AIR_RESIN = MediumPair(1.0, 2.738)
GEOM = UnitCellGeometry(1.6, 2.738)

REFERENCE_CELLS = {
    "QW": ([1.05], [0.725]),
    "B2": ([0.7, 1.4], [0.825, 0.625]),
    "B3": ([0.525, 1.05, 1.5], [0.825, 0.725, 0.6]),
    "C2": ([0.9, 1.325], [0.75, 0.65]),
    "C3": ([0.575, 0.875, 1.475], [0.85, 0.725, 0.6]),
}


def reference_sections(name):
    t, l = REFERENCE_CELLS[name]
    return SectionPlan.from_layers([eps_of_thickness(x, GEOM) for x in t], l, AIR_RESIN, F0)


def struct_reader(data):
    """Independent binary STL parser using only the struct module."""
    (n,) = struct.unpack_from("<I", data, 80)
    tris = []
    for k in range(n):
        vals = struct.unpack_from("<12fH", data, 84 + 50 * k)
        tris.append(vals[:12])
    return data[:80], n, tris


@pytest.fixture(scope="module")
def qw_plan():
    return attach_matching(plan_lens(), synth_binomial(AIR_RESIN, 1, F0))


# ------------------------------------------------------------- solids

def test_single_prism():
    m = boxes_to_solid([[0, 0, 0]], [[1, 2, 3]])
    assert m.n_triangles == 12
    assert len(stl_bytes(m)) == 684
    lo, hi = m.bounding_box
    assert list(lo) == [0, 0, 0] and list(hi) == [1, 2, 3]


def test_empty_model():
    data = stl_bytes(SolidModel.empty())
    assert len(data) == 84
    assert struct.unpack_from("<I", data, 80) == (0,)
    assert read_stl(data).n_triangles == 0


def test_one_element_plan():
    plan = plan_lens(replace(LensSpec(), elements_across=1))
    assert to_solid(plan, 0.0).n_triangles == 12
    m = to_solid(plan, 1.0)
    assert m.n_triangles == 24
    lo, hi = m.bounding_box
    assert hi[2] - lo[2] == pytest.approx(3.0)


@pytest.mark.parametrize("N", [0, 1, 2, 3])
def test_triangle_count_identity(N):
    plan = plan_lens()
    if N:
        plan = attach_matching(plan, synth_binomial(AIR_RESIN, N, F0))
    m = to_solid(plan, 1.0)
    assert m.n_triangles == len(plan.elements) * (1 + 2 * N) * 12 + 12
    assert to_solid(plan, 0.0).n_triangles == len(plan.elements) * (1 + 2 * N) * 12


def test_bounding_box_height(qw_plan):
    for base in (0.0, 1.0, 2.5):
        lo, hi = to_solid(qw_plan, base).bounding_box
        assert hi[2] - lo[2] == pytest.approx(qw_plan.total_thickness + base, abs=1e-9)
    lo, hi = to_solid(qw_plan, 1.0).bounding_box
    assert hi[0] - lo[0] == pytest.approx(56.0)


def test_outward_winding(qw_plan):
    m = to_solid(qw_plan, 1.0)
    v = m.vertices
    c = np.cross(v[:, 1] - v[:, 0], v[:, 2] - v[:, 0])
    c /= np.linalg.norm(c, axis=1)[:, None]
    assert np.allclose(c, m.normals, atol=1e-12)
    # each prism is closed: its normals cancel when weighted by area
    area = 0.5 * np.linalg.norm(np.cross(v[:, 1] - v[:, 0], v[:, 2] - v[:, 0]), axis=1)
    per_box = (m.normals * area[:, None]).reshape(-1, 12, 3).sum(axis=1)
    assert np.allclose(per_box, 0.0, atol=1e-9)


def test_layers_stepped_and_centred():
    plan = attach_matching(plan_lens(replace(LensSpec(), elements_across=1)), reference_sections("B3"))
    m = to_solid(plan, 0.0)
    boxes = m.vertices.reshape(-1, 12, 3, 3)
    sides = [b[..., 0].max() - b[..., 0].min() for b in boxes]
    assert sides == pytest.approx([0.525, 1.05, 1.5, 1.6, 1.5, 1.05, 0.525])
    heights = [b[..., 2].max() - b[..., 2].min() for b in boxes]
    assert heights == pytest.approx([0.825, 0.725, 0.6, 2.0, 0.6, 0.725, 0.825])
    for b in boxes:
        assert b[..., 0].mean() == pytest.approx(0.0, abs=1e-12)


def test_zero_size_sections_dropped(caplog):
    plan = plan_lens(replace(LensSpec(), elements_across=1))
    plan = attach_layers(plan, [FaceLayer(0.0, 0.5, 1.0)])
    with caplog.at_level(logging.WARNING, logger="dielens.export"):
        m = to_solid(plan, 0.0)
    assert m.n_triangles == 12
    assert "dropped 2" in caplog.text


def test_negative_base_rejected(qw_plan):
    with pytest.raises(ValueError):
        to_solid(qw_plan, -1.0)


# ------------------------------------------------------------- STL bytes

def test_full_lens_round_trip(qw_plan, tmp_path):
    m = to_solid(qw_plan, 1.0)
    path = tmp_path / "lens.stl"
    n = write_stl(m, path)
    data = path.read_bytes()
    assert n == len(data) == 84 + 50 * m.n_triangles
    header, count, tris = struct_reader(data)
    assert len(header) == 80 and count == m.n_triangles
    payload = np.array(tris, dtype="<f4")
    expected = np.concatenate([m.normals, m.vertices.reshape(-1, 9)], axis=1).astype("<f4")
    assert payload.tobytes() == expected.tobytes()
    back = read_stl(path)
    assert np.array_equal(back.vertices.astype("<f4"), m.vertices.astype("<f4"))
    assert stl_bytes(back) == data


def test_write_to_file_object():
    m = boxes_to_solid([[0, 0, 0]], [[1, 1, 1]])
    buf = io.BytesIO()
    assert write_stl(m, buf) == 684
    assert read_stl(io.BytesIO(buf.getvalue())).n_triangles == 12


def test_truncated_stl_rejected():
    data = stl_bytes(boxes_to_solid([[0, 0, 0]], [[1, 1, 1]]))
    with pytest.raises(ValueError):
        read_stl(data[:-1])


def test_write_failure_surfaces(tmp_path):
    m = boxes_to_solid([[0, 0, 0]], [[1, 1, 1]])
    with pytest.raises(OSError):
        write_stl(m, tmp_path / "missing" / "x.stl")


@given(st.lists(st.tuples(st.floats(-50, 50), st.floats(-50, 50), st.floats(0, 10),
                          st.floats(0.01, 5), st.floats(0.01, 5), st.floats(0.01, 5)), max_size=20))
@settings(max_examples=50, deadline=None)
def test_byte_length_formula(boxes):
    lo = [(x, y, z) for x, y, z, *_ in boxes]
    hi = [(x + a, y + b, z + c) for x, y, z, a, b, c in boxes]
    m = boxes_to_solid(lo, hi)
    data = stl_bytes(m)
    assert len(data) == 84 + 50 * m.n_triangles == 84 + 600 * len(boxes)
    assert stl_bytes(read_stl(data)) == data


# ------------------------------------------------------------- printability

def test_off_grid_thickness_snapped_and_flagged():
    plan = attach_layers(plan_lens(replace(LensSpec(), elements_across=1)),
                         [FaceLayer(0.51, 0.725, eps_of_thickness(0.51, GEOM))])
    rep = check_printable(plan, 0.025, snap=True)
    [rec] = rep.off_grid
    assert rec.dimension == "t1"
    assert rec.snapped == pytest.approx(0.5, abs=1e-12)
    assert rep.snapped_dims == 1
    assert rep.plan.elements[0].face_layers[0].pin_side == pytest.approx(0.5)
    assert rep.printable


@pytest.mark.parametrize("name", sorted(REFERENCE_CELLS))
def test_reference_dimensions_need_no_snapping(name):
    plan = attach_matching(plan_lens(replace(LensSpec(), elements_across=1)), reference_sections(name))
    rep = check_printable(plan, 0.025, snap=True)
    assert rep.off_grid == [] and rep.snapped_dims == 0
    full = check_printable(attach_matching(plan_lens(), reference_sections(name)), 0.025)
    assert not [r for r in full.off_grid if r.dimension != "L"]


def test_min_feature_flags_binomial3_t1():
    plan = attach_matching(plan_lens(), reference_sections("B3"))
    rep = check_printable(plan, 0.025, min_feature=0.6)
    t1 = [v for v in rep.violations if v.dimension == "t1"]
    assert len(t1) == len(plan.elements)
    assert t1[0].value == pytest.approx(0.525) and t1[0].limit == 0.6
    # t3 = 1.5 leaves a 0.1 mm gap to each neighbour
    assert any(v.dimension == "gap3" for v in rep.violations)
    assert not rep.printable
    assert "NOT printable" in rep.to_text()
    assert rep.to_csv().splitlines()[0] == "i,j,kind,dimension,value_mm,limit_or_snapped_mm,eps_delta"


def test_isolated_element_has_no_gap_violation():
    plan = attach_matching(plan_lens(replace(LensSpec(), elements_across=1)), reference_sections("B3"))
    rep = check_printable(plan, 0.025, min_feature=0.6)
    assert {v.dimension for v in rep.violations} == {"t1"}


def test_short_body_flagged():
    plan = plan_lens(replace(LensSpec(), elements_across=1))
    plan = replace(plan, elements=[replace(plan.elements[0], body_len=1.5)])
    rep = check_printable(plan)
    assert [v.dimension for v in rep.violations] == ["L"]


@pytest.mark.parametrize("res", [0.025, 0.05, 0.1])
def test_snapping_bounds_and_eps_delta(qw_plan, res):
    plan = attach_matching(qw_plan, synth_binomial(AIR_RESIN, 3, F0))
    rep = check_printable(plan, res, snap=True)
    assert rep.snapped_dims == len(rep.off_grid) > 0
    for r in rep.off_grid:
        assert abs(r.snapped - r.value) <= res / 2 + 1e-12
        if r.eps_delta is not None:
            assert r.eps_delta == pytest.approx(
                eps_of_thickness(r.snapped, GEOM) - eps_of_thickness(r.value, GEOM), abs=1e-12)
    for e in rep.plan.elements:
        for l in e.face_layers:
            q = l.pin_side / res
            assert abs(q - round(q)) < 1e-9
    assert check_printable(rep.plan, res).off_grid == []


@given(st.floats(0.001, 100), st.sampled_from([0.01, 0.025, 0.05, 0.1]))
def test_snap_value_property(x, res):
    s = snap_value(x, res)
    assert abs(s - x) <= res / 2 + 1e-12
    assert abs(s / res - round(s / res)) < 1e-9


def test_resolution_validated(qw_plan):
    with pytest.raises(ValueError):
        check_printable(qw_plan, 0.0)
