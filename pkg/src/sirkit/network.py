"""ABCD-matrix simulation of a feedline loaded by notch-coupled resonators.

Each resonator is a series coupling capacitor followed by a chain of line
segments (ordered from the coupled end) ending in a short or an open. The
resonator branch is shunted across the feedline at its tap position; the
whole chain is converted to S-parameters against 50 ohm ports.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field, replace
from typing import Sequence

import numpy as np

from sirkit import kernels
from sirkit.cpw import UM, LineParams
from sirkit.errors import ResolutionError, RootNotFoundError, ValidationError

FF = 1e-15
Z_REF = 50.0


@dataclass(frozen=True)
class TwoPortAbcd:
    a: complex
    b: complex
    c: complex
    d: complex

    @classmethod
    def identity(cls):
        return cls(1.0, 0.0, 0.0, 1.0)

    @property
    def det(self) -> complex:
        return self.a * self.d - self.b * self.c

    def __matmul__(self, other: "TwoPortAbcd") -> "TwoPortAbcd":
        return TwoPortAbcd(
            self.a * other.a + self.b * other.c,
            self.a * other.b + self.b * other.d,
            self.c * other.a + self.d * other.c,
            self.c * other.b + self.d * other.d,
        )

    def to_s(self, z_ref: float = Z_REF):
        """(S11, S21, S12, S22) for equal real reference impedances."""
        return abcd_to_s(self.a, self.b, self.c, self.d, z_ref)


def abcd_to_s(a, b, c, d, z_ref=Z_REF):
    den = a + b / z_ref + c * z_ref + d
    s11 = (a + b / z_ref - c * z_ref - d) / den
    s21 = 2.0 / den
    s12 = 2.0 * (a * d - b * c) / den
    s22 = (-a + b / z_ref - c * z_ref + d) / den
    return s11, s21, s12, s22


@dataclass(frozen=True)
class ResonatorSpec:
    """A notch-coupled resonator.

    segments
        ``(LineParams, length_um)`` pairs, starting at the coupled end.
    termination
        ``"short"`` or ``"open"`` at the far end of the last segment.
    coupling_cap
        Series coupling capacitance to the feedline in fF; 0 describes a
        bare resonator (only meaningful for admittance calculations).
    internal_q
        If set, every segment gets attenuation beta / (2 Q_i) at each
        frequency, replacing its own ``attenuation``.
    shunt_caps
        ``(position_um, cap_fF)`` capacitances to ground measured from the
        coupled end (open-end, step or bend corrections).
    """

    segments: tuple
    termination: str = "short"
    coupling_cap: float = 0.0
    internal_q: float | None = None
    shunt_caps: tuple = ()
    name: str = ""

    def __post_init__(self):
        segs = tuple((line, float(length)) for line, length in self.segments)
        object.__setattr__(self, "segments", segs)
        object.__setattr__(
            self, "shunt_caps", tuple(sorted((float(p), float(c)) for p, c in self.shunt_caps))
        )
        if not segs:
            raise ValidationError("resonator needs at least one segment", field="segments")
        for line, length in segs:
            if not isinstance(line, LineParams):
                raise ValidationError("segment line must be a LineParams", field="segments")
            if not length > 0:
                raise ValidationError(f"segment length must be > 0 (got {length})", field="segments")
        if self.termination not in ("short", "open"):
            raise ValidationError(
                f"termination must be 'short' or 'open' (got {self.termination!r})",
                field="termination",
            )
        if self.coupling_cap < 0:
            raise ValidationError("coupling_cap must be >= 0", field="coupling_cap")
        if self.internal_q is not None and not self.internal_q > 0:
            raise ValidationError("internal_q must be > 0", field="internal_q")
        total = self.total_length
        for pos, cap in self.shunt_caps:
            if cap < 0:
                raise ValidationError("shunt capacitance must be >= 0", field="shunt_caps")
            if not 0.0 <= pos <= total:
                raise ValidationError(
                    f"shunt cap position {pos} um outside resonator (0..{total})", field="shunt_caps"
                )

    @property
    def total_length(self) -> float:
        return sum(length for _, length in self.segments)

    def scaled(self, factor: float) -> "ResonatorSpec":
        """Copy with every length (and cap position) multiplied by ``factor``."""
        return replace(
            self,
            segments=tuple((line, length * factor) for line, length in self.segments),
            shunt_caps=tuple((p * factor, c) for p, c in self.shunt_caps),
        )


@dataclass
class S21Trace:
    """Complex transmission on a strictly increasing frequency grid (Hz)."""

    frequencies: np.ndarray
    s21: np.ndarray
    incident_power_dbm: float | None = None
    metadata: dict = field(default_factory=dict)
    s11: np.ndarray | None = None
    s22: np.ndarray | None = None

    def __post_init__(self):
        self.frequencies = np.asarray(self.frequencies, dtype=np.float64)
        self.s21 = np.asarray(self.s21, dtype=np.complex128)
        if self.frequencies.ndim != 1 or self.s21.shape != self.frequencies.shape:
            raise ValidationError("frequencies and s21 must be 1-D arrays of equal length")
        if np.any(np.diff(self.frequencies) <= 0):
            raise ValidationError("frequency grid must be strictly increasing", field="frequencies")
        for name in ("s11", "s22"):
            arr = getattr(self, name)
            if arr is not None:
                arr = np.asarray(arr, dtype=np.complex128)
                if arr.shape != self.frequencies.shape:
                    raise ValidationError(f"{name} must match the frequency grid")
                setattr(self, name, arr)

    def __len__(self):
        return len(self.frequencies)

    def select(self, mask) -> "S21Trace":
        return S21Trace(
            self.frequencies[mask],
            self.s21[mask],
            self.incident_power_dbm,
            dict(self.metadata),
            None if self.s11 is None else self.s11[mask],
            None if self.s22 is None else self.s22[mask],
        )


# --- element matrices, vectorised over frequency ---------------------------


def _identity(n):
    m = np.zeros((n, 2, 2), dtype=np.complex128)
    m[:, 0, 0] = m[:, 1, 1] = 1.0
    return m


def _line_mats(line: LineParams, length_um: float, f: np.ndarray, internal_q=None):
    beta = 2.0 * np.pi * f / line.phase_velocity
    alpha = beta / (2.0 * internal_q) if internal_q is not None else line.attenuation
    gl = (alpha + 1j * beta) * (length_um * UM)
    ch, sh = np.cosh(gl), np.sinh(gl)
    m = np.empty((len(f), 2, 2), dtype=np.complex128)
    m[:, 0, 0] = ch
    m[:, 0, 1] = line.z0 * sh
    m[:, 1, 0] = sh / line.z0
    m[:, 1, 1] = ch
    return m


def _shunt_mats(y: np.ndarray):
    m = _identity(len(y))
    m[:, 1, 0] = y
    return m


def abcd_line(line: LineParams, length: float, f: float, internal_q=None) -> TwoPortAbcd:
    """Chain matrix of a (possibly lossy) line section of ``length`` um."""
    if length < 0:
        raise ValidationError("line length must be >= 0", field="length")
    m = _line_mats(line, length, np.array([float(f)]), internal_q)[0]
    return TwoPortAbcd(m[0, 0], m[0, 1], m[1, 0], m[1, 1])


def abcd_series(z: complex) -> TwoPortAbcd:
    return TwoPortAbcd(1.0, z, 0.0, 1.0)


def abcd_shunt(y: complex) -> TwoPortAbcd:
    return TwoPortAbcd(1.0, 0.0, y, 1.0)


# --- resonator branch -------------------------------------------------------


def _chain_mats(res: ResonatorSpec, f: np.ndarray) -> np.ndarray:
    """Element stack (n_el, n_f, 2, 2) from the coupled node to the termination."""
    omega = 2.0 * np.pi * f
    caps = list(res.shunt_caps)
    mats = []
    pos = 0.0
    for line, length in res.segments:
        end = pos + length
        cursor = pos
        while caps and caps[0][0] <= end:
            cpos, cap = caps.pop(0)
            if cpos > cursor:
                mats.append(_line_mats(line, cpos - cursor, f, res.internal_q))
                cursor = cpos
            mats.append(_shunt_mats(1j * omega * cap * FF))
        if end > cursor:
            mats.append(_line_mats(line, end - cursor, f, res.internal_q))
        pos = end
    for _, cap in caps:  # positions equal to the far end within rounding
        mats.append(_shunt_mats(1j * omega * cap * FF))
    return np.stack(mats)


def resonator_admittance(res: ResonatorSpec, f) -> np.ndarray:
    """Admittance looking into the segment chain at the coupled node.

    Excludes the coupling capacitor. Open terminations use C/A, shorts
    use D/B, so no infinities appear on the way.
    """
    f = np.atleast_1d(np.asarray(f, dtype=np.float64))
    m = kernels.cascade(_chain_mats(res, f))
    a, b, c, d = m[:, 0, 0], m[:, 0, 1], m[:, 1, 0], m[:, 1, 1]
    with np.errstate(divide="ignore", invalid="ignore"):
        if res.termination == "short":
            return d / b
        return c / a


def input_admittance(res: ResonatorSpec, f) -> np.ndarray:
    """Admittance looking into the coupling capacitor toward the chain."""
    f = np.atleast_1d(np.asarray(f, dtype=np.float64))
    y = resonator_admittance(res, f)
    if res.coupling_cap == 0:
        return y
    yc = 1j * 2.0 * np.pi * f * res.coupling_cap * FF
    return yc * y / (yc + y)


def input_impedance(res: ResonatorSpec, f):
    """Impedance looking into the coupling capacitor toward the chain.

    Poles are clipped to 1e300 ohm in magnitude. Scalar in, scalar out.
    """
    scalar = np.ndim(f) == 0
    y = input_admittance(res, f)
    with np.errstate(divide="ignore", invalid="ignore"):
        z = 1.0 / y
    bad = ~np.isfinite(z)
    if np.any(bad):
        z = np.where(bad, 1e300 + 0j, z)
    return complex(z[0]) if scalar else z


def loaded_admittance(res: ResonatorSpec, f, z_ref: float = Z_REF) -> np.ndarray:
    """Resonator admittance with the coupling capacitor returned to ground
    through the feedline (``z_ref / 2``, both feedline halves in parallel).
    """
    f = np.atleast_1d(np.asarray(f, dtype=np.float64))
    y = resonator_admittance(res, f)
    if res.coupling_cap == 0:
        return y
    zc = 1.0 / (1j * 2.0 * np.pi * f * res.coupling_cap * FF)
    return y + 1.0 / (zc + 0.5 * z_ref)


def _quarter_wave_estimate(res: ResonatorSpec) -> float:
    t = sum(length * UM / line.phase_velocity for line, length in res.segments)
    return 1.0 / (4.0 * t) if res.termination == "short" else 1.0 / (2.0 * t)


def _bisect_zero(func, lo, hi, tol_hz):
    glo = func(lo)
    while hi - lo > tol_hz:
        mid = 0.5 * (lo + hi)
        gm = func(mid)
        if (gm < 0) == (glo < 0):
            lo, glo = mid, gm
        else:
            hi = mid
    return 0.5 * (lo + hi)


def resonance_frequencies(
    res: ResonatorSpec,
    count: int = 1,
    f_max: float | None = None,
    loaded: bool = True,
    points_per_mode: int = 2000,
    tol_hz: float = 1.0,
) -> list:
    """Successive frequencies where Im(Y) crosses zero from below.

    Y is the loaded admittance (coupling capacitor to the feedline) unless
    ``loaded`` is false. Crossings from above are poles and are skipped.
    """
    f_est = _quarter_wave_estimate(res)
    if f_max is None:
        f_max = f_est * (4.0 * count + 2.0)
    n = int(points_per_mode * max(1.0, f_max / f_est))
    grid = np.linspace(f_max / n, f_max, n)
    yfun = loaded_admittance if loaded else resonator_admittance
    im = np.imag(yfun(res, grid))
    found = []
    for i in np.nonzero((im[:-1] < 0) & (im[1:] >= 0))[0]:
        root = _bisect_zero(lambda x: float(np.imag(yfun(res, x))[0]), grid[i], grid[i + 1], tol_hz)
        found.append(root)
        if len(found) == count:
            break
    if not found:
        raise RootNotFoundError(f"no resonance below {f_max:.4g} Hz")
    return found


def fundamental_frequency(res: ResonatorSpec, loaded: bool = True, tol_hz: float = 1.0) -> float:
    """Lowest resonance (Hz) by bracketed scan plus bisection."""
    f_est = _quarter_wave_estimate(res)
    return resonance_frequencies(res, 1, f_max=4.0 * f_est, loaded=loaded, tol_hz=tol_hz)[0]


def _coupling_conductance(res: ResonatorSpec, f, z_ref=Z_REF):
    if res.coupling_cap == 0:
        return 0.0
    wc = 2.0 * np.pi * f * res.coupling_cap * FF
    r = 0.5 * z_ref
    return wc * wc * r / (1.0 + (wc * r) ** 2)


def _lossless(res: ResonatorSpec) -> ResonatorSpec:
    return replace(res, internal_q=None, segments=tuple(
        (line.with_attenuation(0.0), length) for line, length in res.segments
    ))


def susceptance_slope(res: ResonatorSpec, f0: float, z_ref: float = Z_REF) -> float:
    """Slope parameter (f0 / 2) dB/df of the lossless loaded admittance at f0.

    The coupling capacitor and feedline are included, so energy stored in
    them counts toward the resonator's stored energy.
    """
    h = f0 * 1e-7
    y = loaded_admittance(_lossless(res), np.array([f0 - h, f0 + h]), z_ref)
    return 0.5 * f0 * float(np.imag(y[1] - y[0])) / (2.0 * h)


def estimate_coupling_q(res: ResonatorSpec, f0: float | None = None, z_ref=Z_REF) -> float:
    """First-order Q_c = b / G from the slope parameter and the conductance
    the coupling capacitor presents to the feedline."""
    if f0 is None:
        f0 = fundamental_frequency(res)
    g = _coupling_conductance(res, f0, z_ref)
    return math.inf if g == 0 else susceptance_slope(res, f0, z_ref) / g


def estimate_internal_q(res: ResonatorSpec, f0: float | None = None) -> float:
    """Q_i = b / G_i with G_i the loss conductance of the segment chain.

    Slightly above ``res.internal_q`` when a coupling capacitor is present,
    because the capacitor stores energy without loss.
    """
    if f0 is None:
        f0 = fundamental_frequency(res)
    g = float(np.real(resonator_admittance(res, f0))[0])
    return math.inf if g <= 0 else susceptance_slope(res, f0) / g


def line_q_for_internal_q(target_qi: float, res: ResonatorSpec) -> float:
    """Section Q (``ResonatorSpec.internal_q``) giving an effective Q_i of
    ``target_qi`` once the coupling network is attached."""
    if not target_qi > 0:
        raise ValidationError("target Q_i must be > 0", field="target_qi")
    probe = replace(res, internal_q=target_qi)
    return target_qi * target_qi / estimate_internal_q(probe)


def estimate_loaded_q(res: ResonatorSpec, f0: float | None = None) -> float:
    if f0 is None:
        f0 = fundamental_frequency(res)
    inv = 1.0 / estimate_coupling_q(res, f0) + 1.0 / estimate_internal_q(res, f0)
    return math.inf if inv == 0 else 1.0 / inv


# --- feedline sweep ---------------------------------------------------------


def s21_sweep(
    feedline: LineParams,
    resonators: Sequence,
    grid,
    feedline_length: float | None = None,
    z_ref: float = Z_REF,
    spacing: float = 1000.0,
    check_overlap: bool = True,
) -> S21Trace:
    """Transmission of a feedline with shunt resonator branches at taps.

    ``resonators`` holds ``(ResonatorSpec, tap_um)`` pairs. The feedline
    runs from 0 to ``feedline_length`` um (default: last tap + ``spacing``).
    """
    f = np.asarray(grid, dtype=np.float64)
    if f.ndim != 1 or len(f) == 0:
        raise ValidationError("grid must be a non-empty 1-D array", field="grid")
    placed = sorted(((float(tap), res) for res, tap in resonators), key=lambda t: t[0])
    if feedline_length is None:
        feedline_length = (placed[-1][0] if placed else 0.0) + spacing
    for tap, res in placed:
        if not 0.0 <= tap <= feedline_length:
            raise ValidationError(
                f"tap {tap} um outside feedline (0..{feedline_length})", field="tap"
            )
    omega = 2.0 * np.pi * f
    mats = []
    cursor = 0.0
    for tap, res in placed:
        if tap > cursor:
            mats.append(_line_mats(feedline, tap - cursor, f))
            cursor = tap
        y = resonator_admittance(res, f)
        if res.coupling_cap > 0:
            yc = 1j * omega * res.coupling_cap * FF
            with np.errstate(divide="ignore", invalid="ignore"):
                yb = yc * y / (yc + y)
            yb = np.where(np.isfinite(yb), yb, 1e300)
        else:
            yb = y
        mats.append(_shunt_mats(yb))
    if feedline_length > cursor:
        mats.append(_line_mats(feedline, feedline_length - cursor, f))
    if mats:
        m = kernels.cascade(np.stack(mats))
    else:
        m = _identity(len(f))
    s11, s21, _, s22 = abcd_to_s(m[:, 0, 0], m[:, 0, 1], m[:, 1, 0], m[:, 1, 1], z_ref)
    trace = S21Trace(f, s21, s11=s11, s22=s22, metadata={"source": "s21_sweep"})
    if check_overlap and len(placed) > 1:
        overlaps = _overlapping(placed)
        if overlaps:
            trace.metadata["overlapping"] = ";".join(f"{a}/{b}" for a, b in overlaps)
            warnings.warn(f"resonances with intersecting 3 dB windows: {overlaps}", stacklevel=2)
    return trace


def _overlapping(placed):
    windows = []
    for i, (_, res) in enumerate(placed):
        try:
            f0 = fundamental_frequency(res)
            ql = estimate_loaded_q(res, f0)
        except RootNotFoundError:
            continue
        half = 0.5 * f0 / ql if math.isfinite(ql) else 0.0
        windows.append((f0 - half, f0 + half, res.name or f"#{i}"))
    windows.sort()
    out = []
    for (lo1, hi1, n1), (lo2, hi2, n2) in zip(windows, windows[1:]):
        if lo2 <= hi1:
            out.append((n1, n2))
    return out


def notch_grid(f0: float, q_loaded: float, linewidths: float = 10.0, points: int = 1601):
    """Grid of ``points`` samples spanning f0 +/- ``linewidths`` * f0 / Q_L."""
    half = linewidths * f0 / q_loaded
    return np.linspace(f0 - half, f0 + half, points)


def matched_feedline(eps_eff: float = 5.5, z_ref: float = Z_REF) -> LineParams:
    return LineParams(eps_eff=eps_eff, z0=z_ref)


def simulate_notch(
    res: ResonatorSpec,
    feedline: LineParams | None = None,
    linewidths: float = 10.0,
    points: int = 1601,
    spacing: float = 1000.0,
) -> S21Trace:
    """Single resonator at ``spacing`` um on a 2 * ``spacing`` um feedline,
    sampled around its loaded resonance."""
    if feedline is None:
        feedline = matched_feedline(res.segments[0][0].eps_eff)
    f0 = fundamental_frequency(res)
    ql = estimate_loaded_q(res, f0)
    if not math.isfinite(ql) or ql > 1e12:
        raise ResolutionError(f"linewidth unresolvable (Q_L ~ {ql:.3g})")
    trace = s21_sweep(feedline, [(res, spacing)], notch_grid(f0, ql, linewidths, points),
                      feedline_length=2.0 * spacing)
    trace.metadata["f0_admittance_hz"] = f0
    return trace


def coupling_q_from_cap(cap: float, res: ResonatorSpec, f: float | None = None) -> float:
    """Coupling Q of ``res`` with a ``cap`` fF coupling capacitor.

    The lossless resonator (rescaled so its bare resonance sits at ``f``,
    when given) is swept on a matched feedline and Q_c is the loaded Q of
    that sweep, taken from the phase-vs-frequency fit.
    """
    from sirkit.fitting import estimate_resonance

    if not cap > 0:
        raise ValidationError("coupling capacitance must be > 0", field="cap")
    lossless = replace(
        res,
        coupling_cap=cap,
        internal_q=None,
        segments=tuple((line.with_attenuation(0.0), length) for line, length in res.segments),
    )
    if f is not None:
        lossless = lossless.scaled(fundamental_frequency(lossless, loaded=False) / f)
    trace = simulate_notch(lossless)
    return estimate_resonance(trace).q_loaded


def cap_for_coupling_q(target_qc: float, res: ResonatorSpec, f: float | None = None,
                       rtol: float = 1e-4) -> float:
    """Coupling capacitance (fF) giving ``target_qc``; uses Q_c ~ 1/C^2."""
    cap = res.coupling_cap if res.coupling_cap > 0 else 1.0
    for _ in range(8):
        qc = coupling_q_from_cap(cap, res, f)
        if abs(qc / target_qc - 1.0) < rtol:
            break
        cap *= math.sqrt(qc / target_qc)
    return cap
