"""Pure-Python/numpy versions of the compiled kernels in ``_kernels.pyx``.

Both modules expose the same three functions with identical semantics;
``sirkit.kernels`` picks one at import time.
"""

import math

import numpy as np

ROOT_ABS_TOL = 1e-6


def cascade(mats):
    """Ordered product of ABCD matrices, frequency by frequency.

    ``mats`` has shape (n_elements, n_freq, 2, 2); the result has shape
    (n_freq, 2, 2). An empty chain returns the identity for every frequency.
    """
    mats = np.asarray(mats, dtype=np.complex128)
    if mats.ndim != 4 or mats.shape[2:] != (2, 2):
        raise ValueError("expected an array of shape (n_elements, n_freq, 2, 2)")
    n_el, n_f = mats.shape[:2]
    if n_el == 0:
        out = np.zeros((n_f, 2, 2), dtype=np.complex128)
        out[:, 0, 0] = out[:, 1, 1] = 1.0
        return out
    out = mats[0].copy()
    for k in range(1, n_el):
        out = np.matmul(out, mats[k])
    return out


def notch_model(f, a, alpha, tau, fr, ql, qc_mag, phi, f_ref=0.0):
    """Hanger-resonator transmission with a cable/background term.

    a * exp(i alpha) * exp(-2 pi i (f - f_ref) tau)
      * [1 - (ql / qc_mag) exp(i phi) / (1 + 2 i ql (f - fr) / fr)]
    """
    f = np.asarray(f, dtype=np.float64)
    env = a * np.exp(1j * (alpha - 2.0 * np.pi * (f - f_ref) * tau))
    return env * (1.0 - (ql / qc_mag) * np.exp(1j * phi) / (1.0 + 2j * ql * (f - fr) / fr))


def _g(x, r, ratio):
    return math.tan(x) * math.tan(ratio * x) - r


def tan_product_roots(r, ratio, x_max, step, tol):
    """Roots of tan(x) * tan(ratio * x) = r on (0, x_max].

    Scans with a fixed step, refines each sign change by bisection to an
    absolute width ``tol`` and discards brackets that close on a pole: a
    kept midpoint has |g| below both bracket ends or below ROOT_ABS_TOL
    (the latter for roots that fall on a scan point).
    """
    roots = []
    n = int(math.floor(x_max / step))
    x0 = step * 1e-3
    g0 = _g(x0, r, ratio)
    for i in range(1, n + 1):
        x1 = i * step
        g1 = _g(x1, r, ratio)
        if g0 == 0.0:
            roots.append(x0)
        elif g0 * g1 < 0.0:
            lo, hi, glo = x0, x1, g0
            edge = max(min(abs(g0), abs(g1)), ROOT_ABS_TOL)
            while hi - lo > tol:
                mid = 0.5 * (lo + hi)
                gm = _g(mid, r, ratio)
                if gm == 0.0:
                    lo = hi = mid
                    break
                if glo * gm < 0.0:
                    hi = mid
                else:
                    lo, glo = mid, gm
            mid = 0.5 * (lo + hi)
            if abs(_g(mid, r, ratio)) <= edge:
                roots.append(mid)
        x0, g0 = x1, g1
    return np.array(roots, dtype=np.float64)
