"""Physical constants and the default design scenario (80 GHz resin lens)."""

import math

C0 = 299_792_458.0  # m/s
ETA0 = 376.730313  # ohm, free-space wave impedance
ETA0_ROUNDED = 377.0  # the rounded value common in textbook design formulas

DEFAULT_F0 = 80e9  # Hz
DEFAULT_BULK_EPS = 2.738
DEFAULT_LOSS_TANGENT = 0.01
DEFAULT_PERIOD_MM = 1.6
DEFAULT_ELEMENTS_ACROSS = 35
DEFAULT_F_OVER_D = 0.55
DEFAULT_MIN_BODY_LEN_MM = 2.0
DEFAULT_SWEEP_GHZ = (50.0, 110.0)
DEFAULT_SWEEP_POINTS = 601
DEFAULT_RESOLUTION_MM = 0.025
DEFAULT_BASE_THICKNESS_MM = 1.0

MAX_SECTIONS = 8


def wavelength_mm(f):
    """Free-space wavelength in mm at frequency ``f`` (Hz)."""
    return C0 / f * 1e3


def wavenumber_per_mm(f):
    """Free-space propagation constant in rad/mm."""
    return 2.0e-3 * math.pi * f / C0
