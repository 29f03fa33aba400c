# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled versions of the kernels in ``_kernels_py``."""

import numpy as np

from cython.parallel import prange

cdef extern from "complex.h" nogil:
    double complex cexp(double complex)

cdef extern from "math.h" nogil:
    double cos(double)
    double sin(double)

cdef double C0 = 299792458.0
cdef double ETA0 = 376.730313
cdef double PI = 3.141592653589793


cdef void _cos_sin(double complex x, double complex *c, double complex *s) noexcept nogil:
    # one exponential instead of separate complex cos and sin calls
    cdef double complex ep = cexp(1j * x)
    cdef double complex em = 1.0 / ep
    c[0] = 0.5 * (ep + em)
    s[0] = -0.5j * (ep - em)


def _layer_constants(eps, thick_m):
    n = np.sqrt(np.asarray(eps, dtype=complex))
    return (np.ascontiguousarray(ETA0 / n),
            np.ascontiguousarray(2.0 * PI * n / C0 * np.asarray(thick_m, dtype=float)))


def impedance_gamma(eps, thick_m, double eps_entry, double eps_exit, freqs):
    zs, ph = _layer_constants(eps, thick_m)
    cdef double complex[::1] zv = zs
    cdef double complex[::1] pv = ph
    cdef double[::1] f = np.ascontiguousarray(freqs, dtype=float).ravel()
    cdef Py_ssize_t nl = zv.shape[0], nf = f.shape[0], i, m
    out = np.empty(nf, dtype=complex)
    cdef double complex[::1] g = out
    cdef double complex z, zl, c, s, j = 1j
    cdef double z0 = ETA0 / (eps_entry ** 0.5)
    cdef double zexit = ETA0 / (eps_exit ** 0.5)
    with nogil:
        for i in range(nf):
            z = zexit
            for m in range(nl - 1, -1, -1):
                zl = zv[m]
                _cos_sin(f[i] * pv[m], &c, &s)
                z = zl * (z * c + j * zl * s) / (zl * c + j * z * s)
            g[i] = (z - z0) / (z + z0)
    return out.reshape(np.shape(freqs))


def abcd_sweep(eps, thick_m, double eps_entry, double eps_exit, freqs):
    zs, ph = _layer_constants(eps, thick_m)
    cdef double complex[::1] zv = zs
    cdef double complex[::1] pv = ph
    cdef double[::1] f = np.ascontiguousarray(freqs, dtype=float).ravel()
    cdef Py_ssize_t nl = zv.shape[0], nf = f.shape[0], i, m
    gam = np.empty(nf, dtype=complex)
    tau = np.empty(nf, dtype=complex)
    cdef double complex[::1] gv = gam
    cdef double complex[::1] tv = tau
    cdef double complex a, b, c, d, a2, b2, c2, d2, zl, cs, sn, num, den_i, j = 1j
    cdef double z0 = ETA0 / (eps_entry ** 0.5)
    cdef double zload = ETA0 / (eps_exit ** 0.5)
    with nogil:
        for i in range(nf):
            a = 1.0
            b = 0.0
            c = 0.0
            d = 1.0
            for m in range(nl):
                zl = zv[m]
                _cos_sin(f[i] * pv[m], &cs, &sn)
                a2 = a * cs + b * j * sn / zl
                b2 = a * j * zl * sn + b * cs
                c2 = c * cs + d * j * sn / zl
                d2 = c * j * zl * sn + d * cs
                a = a2
                b = b2
                c = c2
                d = d2
            num = a * zload + b
            den_i = z0 * (c * zload + d)
            gv[i] = (num - den_i) / (num + den_i)
            tv[i] = 2.0 * zload / (num + den_i)
    shape = np.shape(freqs)
    return gam.reshape(shape), tau.reshape(shape)


def aperture_field(x, y, weights, ux, uy, double k, chunk=None):
    cdef double[::1] xv = np.ascontiguousarray(x, dtype=float)
    cdef double[::1] yv = np.ascontiguousarray(y, dtype=float)
    cdef double complex[::1] w = np.ascontiguousarray(weights, dtype=complex)
    cdef double[::1] uxv = np.ascontiguousarray(ux, dtype=float).ravel()
    cdef double[::1] uyv = np.ascontiguousarray(uy, dtype=float).ravel()
    cdef Py_ssize_t ne = xv.shape[0], nd = uxv.shape[0], i, q
    out = np.empty(nd, dtype=complex)
    cdef double complex[::1] o = out
    cdef double re, im, arg, cr, ci
    # directions are independent; each sum runs in a fixed order, so threads
    # do not change the result
    for q in prange(nd, nogil=True, schedule="static"):
        re = 0.0
        im = 0.0
        for i in range(ne):
            arg = k * (xv[i] * uxv[q] + yv[i] * uyv[q])
            cr = cos(arg)
            ci = sin(arg)
            re = re + (w[i].real * cr - w[i].imag * ci)
            im = im + (w[i].real * ci + w[i].imag * cr)
        o[q] = re + 1j * im
    return out
