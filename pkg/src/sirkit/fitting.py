"""Notch-resonator parameter extraction from complex S21.

Pipeline: cable delay and background removal, algebraic (Taubin) circle
fit, arctangent phase fit about the circle centre, diameter correction
for the mismatch angle, then one simultaneous least-squares refinement of
every parameter against the raw data.

Conventions: Q_c = |Q_c| exp(-i phi) and 1/Q_i = 1/Q_L - cos(phi)/|Q_c|.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import least_squares

from sirkit import kernels
from sirkit.errors import (
    ConvergenceError,
    DegenerateError,
    InsufficientSpanError,
    NoResonanceError,
)
from sirkit.network import S21Trace

OUTER_FRACTION = 0.2
MIN_POINTS = 50
MIN_SPAN_LINEWIDTHS = 6.0
NO_DIP_LEVEL = 0.99
LOSSLESS_TOL = 1e-9


def _wrap(x):
    return (np.asarray(x) + np.pi) % (2.0 * np.pi) - np.pi


def notch_s21(f, f_r, q_loaded, q_coupling_mag, phi=0.0, amplitude=1.0, alpha=0.0, delay=0.0):
    """Hanger-resonator S21 including the background ``a e^{i alpha} e^{-2 pi i f tau}``."""
    return kernels.notch_model(
        np.asarray(f, dtype=np.float64), amplitude, alpha, delay, f_r, q_loaded, q_coupling_mag, phi
    )


def loaded_q(q_internal, q_coupling_mag, phi=0.0):
    return 1.0 / (1.0 / q_internal + math.cos(phi) / q_coupling_mag)


# --- circle fit -------------------------------------------------------------


def circle_fit(points):
    """Taubin algebraic circle fit. Returns ``(center, radius)``.

    Exact on noiseless data; raises DegenerateError for fewer than three
    points or (numerically) collinear ones.
    """
    z = np.asarray(points, dtype=np.complex128).ravel()
    if len(z) < 3:
        raise DegenerateError("circle fit needs at least 3 points")
    zm = z.mean()
    w = z - zm
    scale = math.sqrt(float(np.mean(np.abs(w) ** 2)))
    if scale == 0.0:
        raise DegenerateError("all points coincide")
    w = w / scale
    x, y = w.real, w.imag
    sv = np.linalg.svd(np.column_stack([x, y]), compute_uv=False)
    if sv[-1] <= 1e-10 * sv[0]:
        raise DegenerateError("points are collinear")
    zz = x * x + y * y
    mxx, myy, mxy = np.mean(x * x), np.mean(y * y), np.mean(x * y)
    mxz, myz, mzz = np.mean(x * zz), np.mean(y * zz), np.mean(zz * zz)
    mz = mxx + myy
    cov_xy = mxx * myy - mxy * mxy
    var_z = mzz - mz * mz
    a3 = 4.0 * mz
    a2 = -3.0 * mz * mz - mzz
    a1 = var_z * mz + 4.0 * cov_xy * mz - mxz * mxz - myz * myz
    a0 = mxz * (mxz * myy - myz * mxy) + myz * (myz * mxx - mxz * mxy) - var_z * cov_xy
    xn, yn = 0.0, a0
    for _ in range(100):
        dy = a1 + xn * (2.0 * a2 + 3.0 * a3 * xn)
        if dy == 0.0:
            break
        xnew = xn - yn / dy
        if xnew == xn or not math.isfinite(xnew):
            break
        ynew = a0 + xnew * (a1 + xnew * (a2 + xnew * a3))
        if abs(ynew) >= abs(yn):
            break
        xn, yn = xnew, ynew
    det = xn * xn - xn * mz + cov_xy
    if det == 0.0:
        raise DegenerateError("points are collinear")
    cx = (mxz * (myy - xn) - myz * mxy) / det / 2.0
    cy = (myz * (mxx - xn) - mxz * mxy) / det / 2.0
    radius = math.sqrt(cx * cx + cy * cy + mz) * scale
    return zm + complex(cx, cy) * scale, radius


def _geometric_circle(z, center, radius):
    """Geometric refinement of a circle fit (orthogonal distances)."""

    def resid(p):
        return np.abs(z - complex(p[0], p[1])) - p[2]

    sol = least_squares(resid, [center.real, center.imag, radius], method="lm",
                        xtol=1e-15, ftol=1e-15, gtol=1e-15)
    return complex(sol.x[0], sol.x[1]), abs(sol.x[2])


# --- resonance detection ----------------------------------------------------


def _smooth(x, width):
    if width <= 1:
        return x
    kernel = np.ones(width) / width
    pad = width // 2
    xp = np.concatenate([np.full(pad, x[0]), x, np.full(width - 1 - pad, x[-1])])
    return np.convolve(xp, kernel, mode="valid")


def _outer_mask(n, fraction=OUTER_FRACTION):
    k = max(1, int(round(fraction * n)))
    mask = np.zeros(n, dtype=bool)
    mask[:k] = True
    mask[-k:] = True
    return mask


@dataclass
class _Dip:
    index: int
    depth: float
    baseline: float
    width_hz: float


def _find_dip(f, z) -> _Dip:
    n = len(f)
    mag = _smooth(np.abs(z), max(1, n // 200) | 1)
    baseline = float(np.median(mag[_outer_mask(n)]))
    i = int(np.argmin(mag))
    depth = 1.0 - mag[i] / baseline
    level = 0.5 * (baseline**2 + mag[i] ** 2)
    lo = i
    while lo > 0 and mag[lo - 1] ** 2 < level:
        lo -= 1
    hi = i
    while hi < n - 1 and mag[hi + 1] ** 2 < level:
        hi += 1
    step = (f[-1] - f[0]) / (n - 1)
    width = max(f[hi] - f[lo], 2.0 * step)
    return _Dip(i, depth, baseline, width)


# --- background removal -----------------------------------------------------


def _linear_delay(f, z, mask, f_ref, f_dip=None):
    """Delay from the unwrapped phase of the masked points.

    With ``f_dip`` given, the resonance tail (odd in f - f_dip to leading
    order) is regressed out alongside the line, removing most of the bias
    it otherwise puts on the slope.
    """
    phase = np.unwrap(np.angle(z))
    x = f[mask] - f_ref
    cols = [np.ones_like(x), x]
    if f_dip is not None:
        u = (f[mask] - f_dip) / (f[-1] - f[0])
        cols += [1.0 / u, 1.0 / u**2]
    coef, *_ = np.linalg.lstsq(np.column_stack(cols), phase[mask], rcond=None)
    return -coef[1] / (2.0 * np.pi), coef[0]


def _circle_residual(f, z, f_ref, tau):
    zc = z * np.exp(2j * np.pi * (f - f_ref) * tau)
    try:
        c, r = circle_fit(zc)
    except DegenerateError:
        return math.inf
    return float(np.sqrt(np.mean((np.abs(zc - c) - r) ** 2)) / r)


def _fit_delay_circle(f, z, f_ref, tau0, reach=0.005):
    """Delay that makes the resonance locus a circle, with its circle.

    Searches ``tau0 +/- reach / span`` and then polishes delay and circle
    jointly; a polish that drifts out of the search range or inflates the
    circle (locking onto the background arc) is discarded.
    """
    span = f[-1] - f[0]
    taus = tau0 + np.linspace(-reach, reach, 21) / span
    costs = [_circle_residual(f, z, f_ref, t) for t in taus]
    tau = taus[int(np.argmin(costs))]
    c, r = circle_fit(z * np.exp(2j * np.pi * (f - f_ref) * tau))

    df = f - f_ref

    def resid(p):
        zc = z * np.exp(2j * np.pi * df * (p[0] / span))
        return np.abs(zc - complex(p[1], p[2])) - p[3]

    sol = least_squares(resid, [tau * span, c.real, c.imag, r], method="lm",
                        xtol=1e-15, ftol=1e-15, gtol=1e-15, max_nfev=2000)
    tau_p, c_p, r_p = sol.x[0] / span, complex(sol.x[1], sol.x[2]), abs(sol.x[3])
    if abs(tau_p - tau0) * span <= 2.0 * reach and r_p <= 1.5 * r and np.all(np.isfinite(sol.x)):
        return tau_p, c_p, r_p
    return tau, c, r


def phase_fit(f, z_centered, f_r, q_loaded, theta0=None):
    """Fit arg(z - center) = theta0 + 2 atan(2 Q_L (1 - f / f_r)).

    Returns ``(theta0, q_loaded, f_r)``.
    """
    lw = f_r / q_loaded
    ang = np.angle(z_centered)
    if theta0 is None:
        theta0 = float(ang[int(np.argmin(np.abs(f - f_r)))])

    lo, hi = math.log(q_loaded / 100.0), math.log(q_loaded * 100.0)

    def resid(p):
        fr = f_r + p[2] * lw
        ql = math.exp(min(max(p[1], lo), hi))
        return _wrap(ang - p[0] - 2.0 * np.arctan(2.0 * ql * (1.0 - f / fr)))

    best = None
    # a coarse width guess can start on the wrong side of a local minimum;
    # try a few linewidth scalings and keep the best
    for scale in (1.0, 0.5, 2.0):
        sol = least_squares(resid, [theta0, math.log(q_loaded * scale), 0.0], method="lm",
                            xtol=1e-15, ftol=1e-15, gtol=1e-15, max_nfev=5000)
        ok = np.all(np.isfinite(sol.x)) and lo < sol.x[1] < hi
        fr = f_r + sol.x[2] * lw
        ok = ok and f[0] <= fr <= f[-1]
        if ok and (best is None or sol.cost < best.cost):
            best = sol
        if best is not None and best.cost < 1e-20 * len(f):
            break
    if best is None:
        raise ConvergenceError("phase fit diverged", diagnostics={"f_r": f_r, "q_loaded": q_loaded})
    p = best.x
    return float(_wrap(p[0])), math.exp(p[1]), f_r + p[2] * lw


@dataclass
class Calibration:
    """Background and first-pass resonance estimate of a trace."""

    f_ref: float
    delay: float
    alpha_ref: float
    amplitude: float
    f_r: float
    q_loaded: float
    center: complex  # normalised
    radius: float  # normalised
    theta0: float

    @property
    def alpha(self) -> float:
        """Background phase referenced to f = 0."""
        return float(_wrap(self.alpha_ref + 2.0 * np.pi * self.f_ref * self.delay))

    def normalize(self, f, z):
        return z * np.exp(2j * np.pi * (f - self.f_ref) * self.delay - 1j * self.alpha_ref) / self.amplitude


def _check_size(f):
    if len(f) < MIN_POINTS:
        raise InsufficientSpanError(f"trace has {len(f)} points, need at least {MIN_POINTS}")


def _calibrate(f, z, dip: _Dip) -> Calibration:
    n = len(f)
    span = f[-1] - f[0]
    if span < MIN_SPAN_LINEWIDTHS * dip.width_hz:
        raise InsufficientSpanError(
            f"trace spans {span / dip.width_hz:.2g} linewidths, need {MIN_SPAN_LINEWIDTHS:g}"
        )
    f_ref = 0.5 * (f[0] + f[-1])
    fr0 = f[dip.index]
    tau0, _ = _linear_delay(f, z, _outer_mask(n), f_ref, f_dip=fr0)
    tau, c, r = _fit_delay_circle(f, z, f_ref, tau0)
    zc = z * np.exp(2j * np.pi * (f - f_ref) * tau)
    theta0, ql, fr = phase_fit(f, zc - c, fr0, fr0 / dip.width_hz)
    p_off = c + r * np.exp(1j * (theta0 - np.pi))
    a = abs(p_off)
    return Calibration(
        f_ref=f_ref,
        delay=tau,
        alpha_ref=float(np.angle(p_off)),
        amplitude=a,
        f_r=fr,
        q_loaded=ql,
        center=c / p_off,
        radius=r / a,
        theta0=theta0,
    )


def remove_background(trace: S21Trace):
    """Normalise a trace so its off-resonant level is 1 + 0i.

    Returns ``(normalized_trace, delay_s, amplitude, phase_rad)``; the
    phase refers to f = 0, matching ``a e^{i alpha} e^{-2 pi i f tau}``.
    Traces without a visible dip are treated as pure delay and amplitude.
    """
    f, z = trace.frequencies, trace.s21
    _check_size(f)
    dip = _find_dip(f, z)
    if dip.depth < 1.0 - NO_DIP_LEVEL:
        f_ref = 0.5 * (f[0] + f[-1])
        tau, intercept = _linear_delay(f, z, np.ones(len(f), dtype=bool), f_ref)
        a = float(np.mean(np.abs(z)))
        alpha_ref = float(_wrap(intercept))
        zn = z * np.exp(2j * np.pi * (f - f_ref) * tau - 1j * alpha_ref) / a
        alpha = float(_wrap(alpha_ref + 2.0 * np.pi * f_ref * tau))
    else:
        cal = _calibrate(f, z, dip)
        zn = cal.normalize(f, z)
        tau, a, alpha = cal.delay, cal.amplitude, cal.alpha
    out = S21Trace(f.copy(), zn, trace.incident_power_dbm, dict(trace.metadata))
    return out, float(tau), float(a), float(alpha)


# --- full fit ---------------------------------------------------------------


@dataclass
class FitResult:
    f_r: float
    q_loaded: float
    q_coupling_mag: float
    mismatch_angle: float
    q_internal: float
    cable_delay: float
    background_amplitude: float
    background_phase: float
    rms_residual: float
    stderr: dict = field(default_factory=dict)
    n_points: int = 0
    nfev: int = 0
    window: tuple = (math.nan, math.nan)

    @property
    def q_coupling(self) -> complex:
        return self.q_coupling_mag * complex(math.cos(self.mismatch_angle), -math.sin(self.mismatch_angle))

    @property
    def linewidth(self) -> float:
        return self.f_r / self.q_loaded

    def model(self, f):
        return notch_s21(f, self.f_r, self.q_loaded, self.q_coupling_mag, self.mismatch_angle,
                         self.background_amplitude, self.background_phase, self.cable_delay)


@dataclass
class ResonanceEstimate:
    f_r: float
    q_loaded: float
    diameter: float
    mismatch_angle: float
    calibration: Calibration


def _window_pass(f, z, cal: Calibration, f_r, q_loaded, window_linewidths):
    half = window_linewidths * f_r / q_loaded
    mask = np.abs(f - f_r) <= half
    if mask.sum() < MIN_POINTS:
        # too few samples inside the window: widen to the nearest MIN_POINTS
        idx = np.argsort(np.abs(f - f_r))[:MIN_POINTS]
        mask = np.zeros(len(f), dtype=bool)
        mask[idx] = True
    fw = f[mask]
    zn = cal.normalize(fw, z[mask])
    c, r = circle_fit(zn)
    c, r = _geometric_circle(zn, c, r)
    theta0, ql, fr = phase_fit(fw, zn - c, f_r, q_loaded)
    return mask, c, r, ql, fr


def estimate_resonance(trace: S21Trace, window_linewidths: float = 5.0) -> ResonanceEstimate:
    """Algebraic stages only: background, circle and phase fits."""
    f, z = trace.frequencies, trace.s21
    _check_size(f)
    dip = _find_dip(f, z)
    if dip.depth < 1.0 - NO_DIP_LEVEL:
        raise NoResonanceError(f"no dip found (depth {dip.depth:.3g})")
    cal = _calibrate(f, z, dip)
    fr, ql = cal.f_r, cal.q_loaded
    for _ in range(2):
        mask, c, r, ql, fr = _window_pass(f, z, cal, fr, ql, window_linewidths)
    d = 2.0 * r
    phi = float(np.angle(1.0 - c))
    return ResonanceEstimate(fr, ql, d, phi, cal)


def fit_notch(trace: S21Trace, window_linewidths: float = 5.0, max_nfev: int = 4000) -> FitResult:
    """Extract f_r, Q_L, |Q_c|, phi and Q_i from a (raw) notch trace."""
    f, z = trace.frequencies, trace.s21
    est = estimate_resonance(trace, window_linewidths)
    cal = est.calibration
    half = window_linewidths * est.f_r / est.q_loaded
    mask = np.abs(f - est.f_r) <= half
    if mask.sum() < MIN_POINTS:
        idx = np.argsort(np.abs(f - est.f_r))[:MIN_POINTS]
        mask = np.zeros(len(f), dtype=bool)
        mask[idx] = True
    fw, zw = f[mask], z[mask]
    f_ref = cal.f_ref
    lw = est.f_r / est.q_loaded
    span = max(fw[-1] - fw[0], lw)
    a0 = cal.amplitude
    qc0 = est.q_loaded / est.diameter

    def unpack(p):
        return (p[0] * a0, p[1], p[2] / span, est.f_r + p[3] * lw,
                math.exp(p[4]), math.exp(p[5]), p[6])

    def resid(p):
        a, alpha, tau, fr, ql, qc, phi = unpack(p)
        m = kernels.notch_model(fw, a, alpha, tau, fr, ql, qc, phi, f_ref)
        d = (m - zw) / a0
        return np.concatenate([d.real, d.imag])

    p0 = [1.0, cal.alpha_ref, cal.delay * span, 0.0, math.log(est.q_loaded),
          math.log(qc0), est.mismatch_angle]
    sol = least_squares(resid, p0, method="lm", xtol=1e-15, ftol=1e-15, gtol=1e-15,
                        max_nfev=max_nfev)
    if sol.status <= 0 or not np.all(np.isfinite(sol.x)):
        raise ConvergenceError(
            f"refinement did not converge: {sol.message}",
            diagnostics={"nfev": sol.nfev, "cost": float(sol.cost), "x": sol.x.tolist()},
        )
    a, alpha_ref, tau, fr, ql, qc, phi = unpack(sol.x)
    phi = float(_wrap(phi))
    inv_qi = 1.0 / ql - math.cos(phi) / qc
    # a lossless resonator lands within rounding of zero on either side
    if not inv_qi * ql > -LOSSLESS_TOL:
        raise ConvergenceError(
            "fit gives non-positive internal loss",
            diagnostics={"q_loaded": ql, "q_coupling_mag": qc, "mismatch_angle": phi},
        )
    qi = 1.0 / inv_qi if inv_qi * ql > LOSSLESS_TOL else math.inf
    if not fw[0] <= fr <= fw[-1]:
        raise ConvergenceError("fitted resonance left the fit window", diagnostics={"f_r": fr})

    m_pts, n_par = 2 * len(fw), len(sol.x)
    stderr = {}
    try:
        s2 = 2.0 * sol.cost / max(m_pts - n_par, 1)
        cov = np.linalg.pinv(sol.jac.T @ sol.jac) * s2
        sd = np.sqrt(np.clip(np.diag(cov), 0.0, None))
        grad = np.zeros(n_par)
        grad[4] = -1.0 / ql
        grad[5] = math.cos(phi) / qc
        grad[6] = math.sin(phi) / qc
        stderr = {
            "f_r": sd[3] * lw,
            "q_loaded": ql * sd[4],
            "q_coupling_mag": qc * sd[5],
            "mismatch_angle": sd[6],
            "cable_delay": sd[2] / span,
            "q_internal": (qi * qi * math.sqrt(max(float(grad @ cov @ grad), 0.0))
                           if math.isfinite(qi) else math.nan),
        }
    except np.linalg.LinAlgError:
        pass
    rms = math.sqrt(2.0 * sol.cost / len(fw)) * a0 / a

    return FitResult(
        f_r=fr,
        q_loaded=ql,
        q_coupling_mag=qc,
        mismatch_angle=phi,
        q_internal=qi,
        cable_delay=tau,
        background_amplitude=a,
        background_phase=float(_wrap(alpha_ref + 2.0 * np.pi * f_ref * tau)),
        rms_residual=rms,
        stderr=stderr,
        n_points=len(fw),
        nfev=int(sol.nfev),
        window=(float(fw[0]), float(fw[-1])),
    )


# --- synthetic traces -------------------------------------------------------


def synthetic_notch_trace(
    f_r: float,
    q_internal: float,
    q_coupling_mag: float,
    phi: float = 0.0,
    delay: float = 0.0,
    amplitude: float = 1.0,
    alpha: float = 0.0,
    points: int = 1601,
    linewidths: float = 10.0,
    noise_snr_db: float | None = None,
    rng: np.random.Generator | None = None,
    incident_power_dbm: float | None = None,
) -> S21Trace:
    """Closed-form notch trace on f_r +/- ``linewidths`` loaded linewidths.

    Noise is circular complex Gaussian with total standard deviation
    ``amplitude * 10**(-snr/20)``.
    """
    ql = loaded_q(q_internal, q_coupling_mag, phi)
    half = linewidths * f_r / ql
    f = np.linspace(f_r - half, f_r + half, points)
    z = notch_s21(f, f_r, ql, q_coupling_mag, phi, amplitude, alpha, delay)
    if noise_snr_db is not None:
        if rng is None:
            raise ValueError("noise requires an explicit rng")
        sigma = amplitude * 10.0 ** (-noise_snr_db / 20.0) / math.sqrt(2.0)
        z = z + sigma * (rng.standard_normal(points) + 1j * rng.standard_normal(points))
    meta = {"true_f_r": f_r, "true_q_internal": q_internal, "true_q_coupling_mag": q_coupling_mag,
            "true_phi": phi, "true_delay": delay}
    return S21Trace(f, z, incident_power_dbm, meta)
