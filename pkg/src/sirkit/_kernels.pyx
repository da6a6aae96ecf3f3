# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled kernels: ABCD cascade, notch model and tangent-root scan.

Semantics match ``sirkit._kernels_py`` exactly.
"""

import numpy as np
cimport numpy as cnp
from libc.math cimport tan, fabs, floor, cos, sin, M_PI

cnp.import_array()


def cascade(mats):
    cdef double complex[:, :, :, ::1] m = np.ascontiguousarray(mats, dtype=np.complex128)
    if m.shape[2] != 2 or m.shape[3] != 2:
        raise ValueError("expected an array of shape (n_elements, n_freq, 2, 2)")
    cdef Py_ssize_t n_el = m.shape[0], n_f = m.shape[1]
    out_arr = np.empty((n_f, 2, 2), dtype=np.complex128)
    cdef double complex[:, :, ::1] out = out_arr
    cdef Py_ssize_t i, k
    cdef double complex a, b, c, d, a2, b2, c2, d2
    for i in range(n_f):
        a = 1.0
        b = 0.0
        c = 0.0
        d = 1.0
        for k in range(n_el):
            a2 = m[k, i, 0, 0]
            b2 = m[k, i, 0, 1]
            c2 = m[k, i, 1, 0]
            d2 = m[k, i, 1, 1]
            a, b, c, d = (a * a2 + b * c2, a * b2 + b * d2,
                          c * a2 + d * c2, c * b2 + d * d2)
        out[i, 0, 0] = a
        out[i, 0, 1] = b
        out[i, 1, 0] = c
        out[i, 1, 1] = d
    return out_arr


def notch_model(f, double a, double alpha, double tau, double fr, double ql,
                double qc_mag, double phi, double f_ref=0.0):
    cdef double[::1] fv = np.ascontiguousarray(f, dtype=np.float64).ravel()
    cdef Py_ssize_t n = fv.shape[0], i
    out_arr = np.empty(n, dtype=np.complex128)
    cdef double complex[::1] out = out_arr
    cdef double d = ql / qc_mag
    cdef double complex coup = d * (cos(phi) + 1j * sin(phi))
    cdef double ang
    cdef double complex env, den
    for i in range(n):
        ang = alpha - 2.0 * M_PI * (fv[i] - f_ref) * tau
        env = a * (cos(ang) + 1j * sin(ang))
        den = 1.0 + 2j * ql * (fv[i] - fr) / fr
        out[i] = env * (1.0 - coup / den)
    return out_arr.reshape(np.shape(f))


cdef inline double _g(double x, double r, double ratio) nogil:
    return tan(x) * tan(ratio * x) - r


def tan_product_roots(double r, double ratio, double x_max, double step, double tol):
    cdef list roots = []
    cdef Py_ssize_t n = <Py_ssize_t>floor(x_max / step), i
    cdef double x0 = step * 1e-3, x1, g0, g1, lo, hi, glo, mid, gm, edge
    g0 = _g(x0, r, ratio)
    for i in range(1, n + 1):
        x1 = i * step
        g1 = _g(x1, r, ratio)
        if g0 == 0.0:
            roots.append(x0)
        elif g0 * g1 < 0.0:
            lo = x0
            hi = x1
            glo = g0
            edge = max(min(fabs(g0), fabs(g1)), 1e-6)  # ROOT_ABS_TOL in _kernels_py
            while hi - lo > tol:
                mid = 0.5 * (lo + hi)
                gm = _g(mid, r, ratio)
                if gm == 0.0:
                    lo = mid
                    hi = mid
                    break
                if glo * gm < 0.0:
                    hi = mid
                else:
                    lo = mid
                    glo = gm
            mid = 0.5 * (lo + hi)
            if fabs(_g(mid, r, ratio)) <= edge:
                roots.append(mid)
        x0 = x1
        g0 = g1
    return np.array(roots, dtype=np.float64)
