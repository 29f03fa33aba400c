"""Command-line front end: ``dielens synth|sweep|lens|export|report``.

Exit codes: 0 success, 1 I/O failure, 2 usage or configuration error.
"""

from __future__ import annotations

import argparse
import csv
import io
import os
import sys

import numpy as np

from . import effmed, export, lens, tmm, xformer
from .config import ConfigError, RunConfig, load_config

EXIT_OK, EXIT_IO, EXIT_USAGE = 0, 1, 2


class UsageError(Exception):
    pass


def fmt(x) -> str:
    """Shortest round-trip decimal; locale independent."""
    return repr(float(x))


# ---------------------------------------------------------------- config glue

def make_media(cfg: RunConfig) -> xformer.MediumPair:
    return xformer.MediumPair(cfg.media.eps_start, cfg.media.eps_end)


def make_geometry(cfg: RunConfig) -> effmed.UnitCellGeometry:
    bulk = cfg.unitcell.bulk_eps if cfg.unitcell.bulk_eps is not None else cfg.media.eps_end
    return effmed.UnitCellGeometry(cfg.unitcell.period_mm, bulk)


def make_model(cfg: RunConfig) -> effmed.MappingModel:
    kind = effmed.ModelKind(cfg.unitcell.model)
    if kind is effmed.ModelKind.LOOKUP_TABLE:
        if not cfg.unitcell.calibration:
            raise UsageError("lookup-table model needs unitcell.calibration (CSV path)")
        return effmed.read_calibration_csv(cfg.unitcell.calibration)
    return effmed.MappingModel(kind)


def make_sections(cfg: RunConfig) -> xformer.SectionPlan:
    t = cfg.transformer
    media = make_media(cfg)
    f0 = t.f0_ghz * 1e9
    if t.kind == "none":
        return xformer.SectionPlan.empty(media, f0)
    kind = xformer.Kind(t.kind)
    n = 1 if kind is xformer.Kind.QUARTER_WAVE else t.n
    if kind is xformer.Kind.CHEBYSHEV and t.ripple is None:
        raise UsageError("chebyshev transformers need --ripple")
    if kind is not xformer.Kind.CHEBYSHEV and t.ripple is not None:
        raise UsageError(f"--ripple only applies to chebyshev, not {kind.value}")
    spec = xformer.TransformerSpec(kind, n, t.ripple, f0)
    return xformer.synthesize(spec, media)


def make_lens_spec(cfg: RunConfig) -> lens.LensSpec:
    c = cfg.lens
    geom = make_geometry(cfg)
    return lens.LensSpec(
        f0=cfg.transformer.f0_ghz * 1e9, period=geom.period, elements_across=c.elements_across,
        f_over_d=c.f_over_d, bulk_eps=geom.bulk_eps, beam_dir=c.beam_dir,
        ref_phase=c.ref_phase_rad, min_body_len=c.min_body_len_mm, wrap_mode=c.wrap_mode,
        aperture_shape=c.aperture_shape)


def make_plan(cfg: RunConfig) -> lens.LensPlan:
    plan = lens.plan_lens(make_lens_spec(cfg))
    sections = make_sections(cfg)
    if len(sections):
        plan = lens.attach_matching(plan, sections, make_geometry(cfg), make_model(cfg))
    return plan


def realised_stack(cfg: RunConfig, sections) -> tmm.Stack:
    """Sections as realised by pins: eps after the thickness round trip."""
    geom, model = make_geometry(cfg), make_model(cfg)
    layers = []
    for s in sections:
        t = effmed.thickness_of_eps(s.eps, geom, model)
        length = s.length
        if cfg.export.snap:
            t = min(export.snap_value(t, cfg.export.resolution_mm), geom.period)
            length = export.snap_value(length, cfg.export.resolution_mm)
        eps = effmed.eps_of_thickness(t, geom, model) if t > 0 else 1.0
        layers.append(tmm.Layer(eps, length, cfg.sweep.loss_tangent))
    return tmm.Stack(sections.media.eps_start, tuple(layers), sections.media.eps_end)


# ---------------------------------------------------------------- output helpers

def ensure_dir(path):
    os.makedirs(path, exist_ok=True)
    return path


def write_text(path, text):
    with open(path, "w", newline="") as fh:
        fh.write(text)


def sections_csv(plan, cfg) -> str:
    geom, model = make_geometry(cfg), make_model(cfg)
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["section", "eps", "impedance_ohm", "length_mm", "t_mm"])
    for k, s in enumerate(plan, start=1):
        w.writerow([k, fmt(s.eps), fmt(s.impedance), fmt(s.length),
                    fmt(effmed.thickness_of_eps(s.eps, geom, model))])
    return buf.getvalue()


def sweep_csv(res: tmm.SweepResult) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["freq_hz", "re_gamma", "im_gamma", "mag_gamma_db", "re_tau", "im_tau"])
    for f, g, db, t in zip(res.frequencies, res.gamma, res.mag_db, res.tau):
        w.writerow([fmt(f), fmt(g.real), fmt(g.imag), fmt(db), fmt(t.real), fmt(t.imag)])
    return buf.getvalue()


def lens_csv(plan: lens.LensPlan) -> str:
    n = plan.n_layers
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    header = ["i", "j", "x_mm", "y_mm", "R_mm", "phase_rad", "L_mm"]
    for k in range(1, n + 1):
        header += [f"t{k}_mm", f"l{k}_mm"]
    w.writerow(header)
    for e in plan.elements:
        row = [e.index[0], e.index[1], fmt(e.position[0]), fmt(e.position[1]),
               fmt(e.focal_dist), fmt(e.phase), fmt(e.body_len)]
        for l in e.face_layers:
            row += [fmt(l.pin_side), fmt(l.length)]
        w.writerow(row)
    return buf.getvalue()


# ---------------------------------------------------------------- commands

def cmd_synth(cfg, args, out):
    plan = make_sections(cfg)
    text = sections_csv(plan, cfg)
    rows = list(csv.reader(io.StringIO(text)))
    print(f"{cfg.transformer.kind} transformer, {len(plan)} section(s), "
          f"eps {plan.media.eps_start:g} -> {plan.media.eps_end:g}, f0 = {cfg.transformer.f0_ghz:g} GHz")
    print(f"{'#':>2} {'eps':>9} {'Z (ohm)':>10} {'l (mm)':>8} {'t (mm)':>8}")
    for r in rows[1:]:
        print(f"{r[0]:>2} {float(r[1]):9.4f} {float(r[2]):10.3f} {float(r[3]):8.4f} {float(r[4]):8.4f}")
    if plan.theta_m is not None:
        print(f"theta_m_rad={fmt(plan.theta_m)}")
    if args.csv:
        write_text(args.csv, text)
    elif out:
        write_text(os.path.join(ensure_dir(out), "sections.csv"), text)
    return EXIT_OK


def cmd_sweep(cfg, args, out):
    sections = make_sections(cfg)
    stack = realised_stack(cfg, sections)
    s = cfg.sweep
    res = tmm.sweep(stack, s.f_lo_ghz * 1e9, s.f_hi_ghz * 1e9, s.points, cfg.transformer.f0_ghz * 1e9)
    band = tmm.bandwidth(res, s.threshold_db)
    path = os.path.join(ensure_dir(out or cfg.output.dir), "sweep.csv")
    write_text(path, sweep_csv(res))
    if sections.theta_m is not None:
        # equal-ripple passband of the synthesis, not the threshold band
        half = 1.0 - 2.0 * sections.theta_m / np.pi
        window, which = (res.f0 * (1 - half), res.f0 * (1 + half)), "design"
    else:
        window, which = (band.f_low, band.f_high), "threshold"
    in_band = res.mag[(res.frequencies >= window[0]) & (res.frequencies <= window[1])]
    peak = float(in_band.max()) if band.ok and in_band.size else float("nan")
    print(f"fbw_{s.threshold_db:g}dB={band.fbw:.6f} f_low_ghz={band.f_low / 1e9:.6f} "
          f"f_high_ghz={band.f_high / 1e9:.6f} max_in_band_gamma={peak:.6g} band={which}")
    if not band.ok:
        print(f"note: {band.diagnostic}")
    print(f"wrote {path}")
    return EXIT_OK


def _summary(plan):
    L = [e.body_len for e in plan.elements]
    tot = [e.total_length for e in plan.elements]
    return (f"elements={len(plan.elements)} D_mm={plan.aperture_diam:.6g} F_mm={plan.focal_len:.6g} "
            f"layers_per_face={plan.n_layers} body_len_mm=[{min(L):.6g}, {max(L):.6g}] "
            f"total_len_mm=[{min(tot):.6g}, {max(tot):.6g}]")


def cmd_lens(cfg, args, out):
    plan = make_plan(cfg)
    out = ensure_dir(out or cfg.output.dir)
    path = os.path.join(out, "lens_plan.csv")
    write_text(path, lens_csv(plan))
    print(_summary(plan))
    if args.pattern:
        f = (args.pattern_ghz or cfg.transformer.f0_ghz) * 1e9
        pat = lens.estimate_pattern(plan, lens.FeedModel(cfg.lens.feed_exponent), f)
        bare = lens.estimate_pattern(lens.bare_aperture(plan), lens.FeedModel(cfg.lens.feed_exponent), f)
        print(f"directivity_dBi={pat.directivity_dBi:.4f} bare_aperture_dBi={bare.directivity_dBi:.4f} "
              f"bound_dBi={lens.aperture_directivity_bound_dBi(plan, f):.4f}")
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["theta_rad", "phi_rad", "power_db"])
        pdb = pat.power_db
        for a, th in enumerate(pat.theta):
            for b, ph in enumerate(pat.phi):
                w.writerow([fmt(th), fmt(ph), fmt(pdb[a, b])])
        write_text(os.path.join(out, "pattern.csv"), buf.getvalue())
    print(f"wrote {path}")
    return EXIT_OK


def _print_report(cfg, plan, out):
    e = cfg.export
    rep = export.check_printable(plan, e.resolution_mm, e.min_feature_mm, e.snap,
                                 make_geometry(cfg), make_model(cfg))
    write_text(os.path.join(out, "print_report.txt"), rep.to_text() + "\n")
    write_text(os.path.join(out, "print_report.csv"), rep.to_csv())
    print(rep.to_text())
    return rep


def cmd_export(cfg, args, out):
    plan = make_plan(cfg)
    out = ensure_dir(out or cfg.output.dir)
    rep = _print_report(cfg, plan, out)
    if rep.plan is not None:
        plan = rep.plan
    model = export.to_solid(plan, cfg.export.base_thickness_mm)
    path = os.path.join(out, cfg.export.stl_name)
    n = export.write_stl(model, path)
    print(f"triangles={model.n_triangles} bytes={n} wrote {path}")
    return EXIT_OK


def cmd_report(cfg, args, out):
    plan = make_plan(cfg)
    out = ensure_dir(out or cfg.output.dir)
    print(_summary(plan))
    _print_report(cfg, plan, out)
    return EXIT_OK


# ---------------------------------------------------------------- argument parsing

def _add_common(p):
    p.add_argument("--config", help="INI-style run configuration")
    p.add_argument("--out", help="output directory (overrides [output] dir)")


def _add_transformer(p):
    g = p.add_argument_group("transformer")
    g.add_argument("--kind", choices=["quarter-wave", "binomial", "chebyshev", "none"])
    g.add_argument("--n", type=int, help="number of sections")
    g.add_argument("--ripple", type=float, help="chebyshev passband reflection magnitude")
    g.add_argument("--f0-ghz", type=float)
    g.add_argument("--eps", type=float, dest="eps_end", help="end-medium permittivity")
    g.add_argument("--eps-start", type=float)
    g = p.add_argument_group("unit cell")
    g.add_argument("--period-mm", type=float)
    g.add_argument("--bulk-eps", type=float)
    g.add_argument("--model", choices=[m.value for m in effmed.ModelKind])
    g.add_argument("--calibration", help="t_mm,eps_eff calibration CSV")


def _add_sweep(p):
    g = p.add_argument_group("sweep")
    g.add_argument("--f-lo-ghz", type=float)
    g.add_argument("--f-hi-ghz", type=float)
    g.add_argument("--points", type=int)
    g.add_argument("--threshold-db", type=float)
    g.add_argument("--loss-tangent", type=float)
    g.add_argument("--snap", action="store_true", default=None,
                   help="quantise pin dimensions to the print grid first")
    g.add_argument("--resolution-mm", type=float)


def _add_lens(p):
    g = p.add_argument_group("lens")
    g.add_argument("--elements-across", type=int)
    g.add_argument("--f-over-d", type=float)
    g.add_argument("--min-body-len-mm", type=float)
    g.add_argument("--wrap", dest="wrap_mode", choices=[m.value for m in lens.WrapMode])
    g.add_argument("--aperture", dest="aperture_shape", choices=[m.value for m in lens.ApertureShape])


def _add_export(p):
    g = p.add_argument_group("export")
    g.add_argument("--base-thickness-mm", type=float)
    g.add_argument("--resolution-mm", type=float)
    g.add_argument("--min-feature-mm", type=float)
    g.add_argument("--snap", action="store_true", default=None)
    g.add_argument("--stl-name")


def build_parser():
    ap = argparse.ArgumentParser(prog="dielens", description=__doc__.splitlines()[0])
    sub = ap.add_subparsers(dest="command", required=True)
    p = sub.add_parser("synth", help="synthesise matching sections")
    _add_common(p)
    _add_transformer(p)
    p.add_argument("--csv", help="write the section table to this CSV file")
    p.set_defaults(func=cmd_synth)
    p = sub.add_parser("sweep", help="reflection sweep of the matched interface")
    _add_common(p)
    _add_transformer(p)
    _add_sweep(p)
    p.set_defaults(func=cmd_sweep)
    p = sub.add_parser("lens", help="plan the discrete lens")
    _add_common(p)
    _add_transformer(p)
    _add_lens(p)
    p.add_argument("--pattern", action="store_true", help="also estimate the far-field pattern")
    p.add_argument("--pattern-ghz", type=float)
    p.set_defaults(func=cmd_lens)
    for name, func, text in (("export", cmd_export, "write the printable STL"),
                             ("report", cmd_report, "printability report only")):
        p = sub.add_parser(name, help=text)
        _add_common(p)
        _add_transformer(p)
        _add_lens(p)
        _add_export(p)
        p.set_defaults(func=func)
    return ap


_OVERRIDES = {
    "transformer": ("kind", "n", "ripple", "f0_ghz"),
    "media": ("eps_start", "eps_end"),
    "unitcell": ("period_mm", "bulk_eps", "model", "calibration"),
    "sweep": ("f_lo_ghz", "f_hi_ghz", "points", "threshold_db", "loss_tangent"),
    "lens": ("elements_across", "f_over_d", "min_body_len_mm", "wrap_mode", "aperture_shape"),
    "export": ("base_thickness_mm", "resolution_mm", "min_feature_mm", "snap", "stl_name"),
}


def apply_overrides(cfg: RunConfig, args) -> RunConfig:
    for section, keys in _OVERRIDES.items():
        sec = getattr(cfg, section)
        for key in keys:
            value = getattr(args, key, None)
            if value is not None:
                setattr(sec, key, value)
    return cfg


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        cfg = load_config(args.config) if args.config else RunConfig()
    except ConfigError as exc:
        print(f"dielens: config error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except OSError as exc:
        print(f"dielens: cannot read config: {exc}", file=sys.stderr)
        return EXIT_IO
    apply_overrides(cfg, args)
    try:
        with np.errstate(divide="ignore"):
            return args.func(cfg, args, args.out)
    except (UsageError, ConfigError, ValueError) as exc:
        print(f"dielens: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except OSError as exc:
        print(f"dielens: I/O error: {exc}", file=sys.stderr)
        return EXIT_IO


if __name__ == "__main__":
    sys.exit(main())
