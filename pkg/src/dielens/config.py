"""Run configuration: INI-style file with explicit units in every key name.

Example::

    [transformer]
    kind = chebyshev
    n = 3
    ripple = 0.01
    f0_ghz = 80

    [lens]
    elements_across = 35
"""

from __future__ import annotations

import configparser
import re
from dataclasses import dataclass, field, fields

from . import constants as K


class ConfigError(ValueError):
    """Bad config file or option; ``line`` is 1-based when known."""

    def __init__(self, message, line=None, path=None):
        where = f"{path or '<config>'}:{line}: " if line else ""
        super().__init__(where + message)
        self.line = line


def _str(v):
    return v.strip()


def _bool(v):
    s = v.strip().lower()
    if s in ("1", "true", "yes", "on"):
        return True
    if s in ("0", "false", "no", "off"):
        return False
    raise ValueError(f"not a boolean: {v!r}")


def _vec3(v):
    parts = [float(x) for x in re.split(r"[,\s]+", v.strip()) if x]
    if len(parts) != 3:
        raise ValueError(f"expected three components, got {v!r}")
    return tuple(parts)


def _opt_float(v):
    return None if v.strip().lower() in ("", "none") else float(v)


@dataclass
class TransformerSection:
    kind: str = "binomial"  # quarter-wave | binomial | chebyshev | none
    n: int = 2
    ripple: float | None = None
    f0_ghz: float = K.DEFAULT_F0 / 1e9


@dataclass
class MediaSection:
    eps_start: float = 1.0
    eps_end: float = K.DEFAULT_BULK_EPS


@dataclass
class UnitCellSection:
    period_mm: float = K.DEFAULT_PERIOD_MM
    bulk_eps: float | None = None  # defaults to media.eps_end
    model: str = "volume-fraction"
    calibration: str = ""  # path to a t_mm,eps_eff CSV (lookup-table model)


@dataclass
class LensSection:
    elements_across: int = K.DEFAULT_ELEMENTS_ACROSS
    f_over_d: float = K.DEFAULT_F_OVER_D
    min_body_len_mm: float = K.DEFAULT_MIN_BODY_LEN_MM
    wrap_mode: str = "modulo-2pi"
    aperture_shape: str = "square-grid-circular-trim"
    beam_dir: tuple = (0.0, 0.0, 1.0)
    ref_phase_rad: float = 0.0
    feed_exponent: float = 2.0


@dataclass
class SweepSection:
    f_lo_ghz: float = K.DEFAULT_SWEEP_GHZ[0]
    f_hi_ghz: float = K.DEFAULT_SWEEP_GHZ[1]
    points: int = K.DEFAULT_SWEEP_POINTS
    threshold_db: float = -20.0
    loss_tangent: float = 0.0


@dataclass
class ExportSection:
    base_thickness_mm: float = K.DEFAULT_BASE_THICKNESS_MM
    resolution_mm: float = K.DEFAULT_RESOLUTION_MM
    min_feature_mm: float = 0.1
    snap: bool = False
    stl_name: str = "lens.stl"


@dataclass
class OutputSection:
    dir: str = "out"


@dataclass
class RunConfig:
    transformer: TransformerSection = field(default_factory=TransformerSection)
    media: MediaSection = field(default_factory=MediaSection)
    unitcell: UnitCellSection = field(default_factory=UnitCellSection)
    lens: LensSection = field(default_factory=LensSection)
    sweep: SweepSection = field(default_factory=SweepSection)
    export: ExportSection = field(default_factory=ExportSection)
    output: OutputSection = field(default_factory=OutputSection)


_PARSERS = {"int": int, "float": float, "str": _str, "bool": _bool, "tuple": _vec3,
            "float | None": _opt_float}


def _parser_for(f):
    return _PARSERS[f.type]


def _key_lines(text):
    """Map (section, key) to its 1-based line number."""
    out, section = {}, None
    for no, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line or line[0] in "#;":
            continue
        m = re.match(r"\[(.+)\]$", line)
        if m:
            section = m.group(1).strip()
            out[(section, None)] = no
            continue
        key = re.split(r"[=:]", line, maxsplit=1)[0].strip().lower()
        out[(section, key)] = no
    return out


def parse_config(text: str, path: str | None = None) -> RunConfig:
    cp = configparser.ConfigParser(interpolation=None, inline_comment_prefixes=("#", ";"))
    try:
        cp.read_string(text, source=path or "<config>")
    except configparser.ParsingError as exc:
        line = exc.errors[0][0] if exc.errors else None
        raise ConfigError("syntax error", line, path) from exc
    except configparser.Error as exc:
        raise ConfigError(str(exc).splitlines()[0], getattr(exc, "lineno", None), path) from exc
    lines = _key_lines(text)
    cfg = RunConfig()
    for name in cp.sections():
        if not hasattr(cfg, name):
            raise ConfigError(f"unknown section [{name}]", lines.get((name, None)), path)
        sec = getattr(cfg, name)
        known = {f.name: f for f in fields(sec)}
        for key, value in cp.items(name):
            if key not in known:
                raise ConfigError(f"unknown key {key!r} in [{name}]", lines.get((name, key)), path)
            try:
                setattr(sec, key, _parser_for(known[key])(value))
            except ValueError as exc:
                raise ConfigError(f"bad value for {name}.{key}: {exc}", lines.get((name, key)), path) from exc
    return cfg


def load_config(path) -> RunConfig:
    with open(path) as fh:
        return parse_config(fh.read(), str(path))
