"""End-to-end acceptance checks, one test per criterion, each at its stated tolerance."""

import math
import struct
import time

import numpy as np

from dielens.effmed import UnitCellGeometry, eps_of_thickness, thickness_of_eps
from dielens.export import read_stl, to_solid, write_stl
from dielens.lens import (LensSpec, aperture_directivity_bound_dBi, attach_matching, bare_aperture,
                          element_stack, estimate_pattern, plan_lens)
from dielens.tmm import (Layer, Stack, bandwidth, power_balance, reflect, ripple_extrema, stack_from_plan,
                         sweep)
from dielens.xformer import MediumPair, SectionPlan, synth_binomial, synth_chebyshev

F0 = 80e9
AIR_RESIN = MediumPair(1.0, 2.738)
GEOM = UnitCellGeometry(1.6, 2.738)

# reference dimensions (mm) of the fabricated unit cells
REFERENCE_CELLS = {
    "QW": {"t": [1.05], "l": [0.725]},
    "B2": {"t": [0.7, 1.4], "l": [0.825, 0.625]},
    "B3": {"t": [0.525, 1.05, 1.5], "l": [0.825, 0.725, 0.6]},
    "C2": {"t": [0.9, 1.325], "l": [0.75, 0.65]},
    "C3": {"t": [0.575, 0.875, 1.475], "l": [0.85, 0.725, 0.6]},
}


def designs():
    return {
        "QW": (synth_binomial(AIR_RESIN, 1, F0), 0.0),
        "B2": (synth_binomial(AIR_RESIN, 2, F0), 0.0),
        "B3": (synth_binomial(AIR_RESIN, 3, F0), 0.0),
        "C2": (synth_chebyshev(AIR_RESIN, 2, 0.055, F0), 0.055),
        "C3": (synth_chebyshev(AIR_RESIN, 3, 0.01, F0), 0.01),
    }


def rel(a, b):
    return abs(a - b) / b


def test_c1_table_lengths(criterion):
    d = designs()
    tight = [("QW l1", d["QW"][0].lengths[0], 0.725), ("B2 l1", d["B2"][0].lengths[0], 0.825),
             ("B3 l2", d["B3"][0].lengths[1], 0.725), ("B3 l3", d["B3"][0].lengths[2], 0.6)]
    loose = [("B2 l2", d["B2"][0].lengths[1], 0.625), ("B3 l1", d["B3"][0].lengths[0], 0.825)]
    ok = all(rel(v, r) <= 0.01 for _, v, r in tight) and all(rel(v, r) <= 0.07 for _, v, r in loose)
    detail = ", ".join(f"{n} {v:.4f}/{r} ({100 * rel(v, r):.1f}%)" for n, v, r in tight + loose)
    criterion(1, "section lengths vs reference cells (1% / 7%)", ok, detail)


def test_c2_thickness_cross_check(criterion):
    d = designs()
    rows = []
    for name in ("QW", "B2", "B3"):
        for k, (s, t_ref) in enumerate(zip(d[name][0], REFERENCE_CELLS[name]["t"]), start=1):
            t = thickness_of_eps(s.eps, GEOM)
            rows.append((f"{name} t{k}", t, t_ref))
    ok = all(rel(t, r) <= 0.20 for _, t, r in rows)
    detail = ", ".join(f"{n} {t:.3f}/{r} ({100 * rel(t, r):.1f}%)" for n, t, r in rows)
    criterion(2, "volume-fraction thickness within 20%", ok, detail)


def test_c3_bandwidth_oracle(criterion):
    start = time.perf_counter()
    d = designs()
    qw = bandwidth(sweep(stack_from_plan(d["QW"][0]), 50e9, 110e9, 601, F0), -20.0).fbw
    # binomial bands exceed the 50-110 GHz window, so order them on a wide sweep
    wide = {k: bandwidth(sweep(stack_from_plan(d[k][0]), 1e9, 159e9, 1601, F0), -20.0).fbw
            for k in ("QW", "B2", "B3")}
    cheb = {}
    for k in ("C2", "C3"):
        plan, gm = d[k]
        band = bandwidth(sweep(stack_from_plan(plan), 1e9, 159e9, 1601, F0), 20 * math.log10(gm))
        cheb[k] = (band.fbw, 2 - 4 * plan.theta_m / math.pi)
    elapsed = time.perf_counter() - start
    ok = (abs(qw - 0.517) <= 0.005 and wide["B2"] > wide["QW"] and wide["B3"] > wide["B2"]
          and all(m >= p - 0.01 for m, p in cheb.values()) and elapsed < 1.0)
    detail = (f"QW {qw:.4f}; wide QW {wide['QW']:.3f} < B2 {wide['B2']:.3f} < B3 {wide['B3']:.3f}; "
              + "; ".join(f"{k} {m:.4f} >= {p:.4f}-0.01" for k, (m, p) in cheb.items())
              + f"; {elapsed:.2f} s")
    criterion(3, "ideal-TEM bandwidth oracle and ordering", ok, detail)


def flatness_slope(plan):
    stack = stack_from_plan(plan)
    dev = np.geomspace(1e-3, 1e-2, 41)
    slopes = []
    for sign in (1, -1):
        g = np.abs(reflect(stack, F0 * (1 + sign * dev)))
        slopes.append(np.polyfit(np.log(dev), np.log(g), 1)[0])
    return min(slopes), max(slopes)


def test_c4_equal_ripple_and_flatness(criterion):
    start = time.perf_counter()
    d = designs()
    parts, ok = [], True
    for k in ("C2", "C3"):
        plan, gm = d[k]
        res = sweep(stack_from_plan(plan), 1e9, 159e9, 4001, F0)
        half = 1 - 2 * plan.theta_m / math.pi
        ext = ripple_extrema(res, (F0 * (1 - half), F0 * (1 + half)))
        worst = max(e.mag for e in ext)
        ok &= bool(ext) and worst <= 1.1 * gm
        parts.append(f"{k} max extremum {worst:.5f} <= {1.1 * gm:.4f}")
    for k, N in (("QW", 1), ("B2", 2), ("B3", 3)):
        lo, hi = flatness_slope(d[k][0])
        good = abs(lo - N) <= 0.1 and abs(hi - N) <= 0.1
        ok &= good
        parts.append(f"{k} slope {lo:.3f} (want {N}+-0.1){'' if good else ' MISS'}")
    elapsed = time.perf_counter() - start
    ok &= elapsed < 1.0
    criterion(4, "equal ripple and maximal flatness", ok, "; ".join(parts) + f"; {elapsed:.2f} s")


def test_c5_power_conservation(criterion):
    start = time.perf_counter()
    rng = np.random.default_rng(2024)
    f = np.linspace(50e9, 110e9, 601)
    worst = 0.0
    for _ in range(10):
        n = int(rng.integers(1, 7))
        layers = tuple(Layer(float(rng.uniform(1, 6)), float(rng.uniform(0.05, 3))) for _ in range(n))
        s = Stack(float(rng.uniform(1, 3)), layers, float(rng.uniform(1, 3)))
        worst = max(worst, float(np.max(np.abs(power_balance(s, f) - 1))))
    elapsed = time.perf_counter() - start
    criterion(5, "power conservation on random lossless stacks", worst < 1e-10 and elapsed < 1.0,
              f"max error {worst:.2e}; {elapsed:.3f} s")


def test_c6_unit_cell_length(criterion):
    ref = REFERENCE_CELLS["C3"]
    sections = SectionPlan.from_layers([eps_of_thickness(t, GEOM) for t in ref["t"]], ref["l"], AIR_RESIN, F0)
    plan = attach_matching(plan_lens(), sections)
    shortest = min(e.total_length for e in plan.elements)
    criterion(6, "Chebyshev-3 base cell length 6.35 mm", abs(shortest - 6.35) <= 1e-12,
              f"2*{sum(ref['l'])}+2 = {shortest!r} mm")


def test_c7_lens_pipeline(criterion):
    start = time.perf_counter()
    base = plan_lens(LensSpec())
    parts, ok = [], True
    for k, (sections, ripple) in designs().items():
        plan = attach_matching(base, sections)
        worst = 0.0
        for e in plan.elements:
            # eps regenerated from the realised pin side, not the synthesis value
            layers = tuple(Layer(eps_of_thickness(l.pin_side, GEOM), l.length) for l in e.face_layers)
            worst = max(worst, abs(reflect(Stack(1.0, layers, 2.738), F0)))
        full = max(abs(reflect(element_stack(e, 2.738), F0)) for e in plan.elements)
        good = worst <= ripple + 0.02
        ok &= good
        parts.append(f"{k} face {worst:.2e} <= {ripple + 0.02:g} (whole pin {full:.3f})")
    _, _, _, L = base.arrays()
    in_range = bool(np.all((L >= 2.0) & (L <= 7.724)))
    elapsed = time.perf_counter() - start
    ok &= in_range and elapsed < 5.0
    parts.append(f"L in [{L.min():.4f}, {L.max():.4f}] mm; {len(base.elements)} elements; {elapsed:.2f} s")
    criterion(7, "synthesis -> mapping -> analysis consistency", ok, "; ".join(parts))


def test_c8_pattern_sanity(criterion):
    plan = attach_matching(plan_lens(), synth_binomial(AIR_RESIN, 2, F0))
    start = time.perf_counter()
    pat = estimate_pattern(plan, n_phi=181, n_theta=91)
    elapsed = time.perf_counter() - start
    bare = estimate_pattern(bare_aperture(plan))
    bound = aperture_directivity_bound_dBi(plan)
    cell = pat.theta[1] - pat.theta[0]
    ok = (pat.peak_theta <= cell + 1e-12 and pat.directivity_dBi <= bound + 0.1
          and pat.directivity_dBi > bare.directivity_dBi and elapsed < 10.0)
    criterion(8, "aperture estimator sanity", ok,
              f"peak theta {math.degrees(pat.peak_theta):.1f} deg; D {pat.directivity_dBi:.2f} <= "
              f"{bound:.2f}+0.1 dBi; bare {bare.directivity_dBi:.2f} dBi; {elapsed:.2f} s")


def test_c9_stl_exactness(criterion, tmp_path):
    plan = attach_matching(plan_lens(), synth_binomial(AIR_RESIN, 2, F0))
    start = time.perf_counter()
    model = to_solid(plan, 1.0)
    path = tmp_path / "lens.stl"
    n_bytes = write_stl(model, path)
    data = path.read_bytes()
    (count,) = struct.unpack_from("<I", data, 80)
    payload = b"".join(data[84 + 50 * k: 84 + 50 * k + 48] for k in range(count))
    expected = np.concatenate([model.normals, model.vertices.reshape(-1, 9)], axis=1).astype("<f4").tobytes()
    back = read_stl(path)
    same = (payload == expected
            and back.vertices.astype("<f4").tobytes() == model.vertices.astype("<f4").tobytes())
    elapsed = time.perf_counter() - start
    T = model.n_triangles
    ok = n_bytes == len(data) == 84 + 50 * T and count == T and same and elapsed < 5.0
    criterion(9, "binary STL byte count and round trip", ok,
              f"T={T}; {len(data)} bytes = 84+50*T; payload identical {same}; {elapsed:.2f} s")
