"""Numpy implementations of the hot kernels.

These are the reference versions; ``_kernels_ext`` mirrors them loop-for-loop
in Cython. All lengths are metres, frequencies Hz, permittivities complex.
"""

import numpy as np

from .constants import C0, ETA0


def impedance_gamma(eps, thick_m, eps_entry, eps_exit, freqs):
    """Reflection coefficient by back-to-front input-impedance recursion."""
    eps = np.asarray(eps, dtype=complex)
    thick_m = np.asarray(thick_m, dtype=float)
    freqs = np.asarray(freqs, dtype=float)
    z = np.full(freqs.shape, ETA0 / np.sqrt(eps_exit), dtype=complex)
    for e, d in zip(eps[::-1], thick_m[::-1]):
        n = np.sqrt(e)
        zl = ETA0 / n
        bd = 2.0 * np.pi * freqs * n / C0 * d
        c, s = np.cos(bd), np.sin(bd)
        z = zl * (z * c + 1j * zl * s) / (zl * c + 1j * z * s)
    z0 = ETA0 / np.sqrt(eps_entry)
    return (z - z0) / (z + z0)


def abcd_sweep(eps, thick_m, eps_entry, eps_exit, freqs):
    """Forward chain-matrix cascade, returning ``(gamma, tau)``.

    ``tau`` is the field ratio between the exit plane and the incident wave
    at the entry plane.
    """
    eps = np.asarray(eps, dtype=complex)
    thick_m = np.asarray(thick_m, dtype=float)
    freqs = np.asarray(freqs, dtype=float)
    a = np.ones(freqs.shape, dtype=complex)
    b = np.zeros(freqs.shape, dtype=complex)
    c = np.zeros(freqs.shape, dtype=complex)
    d = np.ones(freqs.shape, dtype=complex)
    for e, t in zip(eps, thick_m):
        n = np.sqrt(e)
        zl = ETA0 / n
        delta = 2.0 * np.pi * freqs * n / C0 * t
        cs, sn = np.cos(delta), np.sin(delta)
        a, b, c, d = (
            a * cs + b * 1j * sn / zl,
            a * 1j * zl * sn + b * cs,
            c * cs + d * 1j * sn / zl,
            c * 1j * zl * sn + d * cs,
        )
    z0 = ETA0 / np.sqrt(eps_entry)
    zload = ETA0 / np.sqrt(eps_exit)
    num = a * zload + b
    den_i = z0 * (c * zload + d)
    den = num + den_i
    return (num - den_i) / den, 2.0 * zload / den


def aperture_field(x, y, weights, ux, uy, k, chunk=2048):
    """Sum ``weights[i] * exp(j k (x_i ux + y_i uy))`` for every direction."""
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    weights = np.asarray(weights, dtype=complex)
    ux = np.asarray(ux, dtype=float).ravel()
    uy = np.asarray(uy, dtype=float).ravel()
    out = np.empty(ux.shape, dtype=complex)
    for start in range(0, ux.size, chunk):
        sl = slice(start, start + chunk)
        arg = k * (np.outer(ux[sl], x) + np.outer(uy[sl], y))
        out[sl] = np.exp(1j * arg) @ weights
    return out
