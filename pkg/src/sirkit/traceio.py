"""Trace and fit-result file formats.

* Touchstone v1 (.s1p/.s2p): written as ``# Hz S RI R 50``; read with
  RI, MA or DB data and any of Hz/kHz/MHz/GHz.
* Trace CSV: ``frequency_hz,s21_re,s21_im`` with optional leading
  ``# key=value`` comment lines (``power_dbm`` is the incident power).
* Fit-result CSV, one row per trace.

Floats are written with ``repr`` so a write/read cycle is lossless.
"""

from __future__ import annotations

import csv
import io
import math
from pathlib import Path

import numpy as np

from sirkit.errors import TraceFormatError, ValidationError
from sirkit.network import S21Trace

_FREQ_UNITS = {"HZ": 1.0, "KHZ": 1e3, "MHZ": 1e6, "GHZ": 1e9}
TRACE_COLUMNS = ("frequency_hz", "s21_re", "s21_im")
FIT_COLUMNS = (
    "trace_id",
    "f_r_hz",
    "q_loaded",
    "q_coupling_mag",
    "mismatch_angle_rad",
    "q_internal",
    "photon_number",
    "rms_residual",
    "status",
)


def _fmt(x: float) -> str:
    return repr(float(x))


def _meta_lines(trace: S21Trace, prefix: str):
    out = []
    if trace.incident_power_dbm is not None:
        out.append(f"{prefix} power_dbm={_fmt(trace.incident_power_dbm)}")
    for key in sorted(trace.metadata):
        if key == "power_dbm":
            continue
        val = trace.metadata[key]
        if isinstance(val, float):
            val = _fmt(val)
        out.append(f"{prefix} {key}={val}")
    return out


def _parse_meta(text: str, meta: dict):
    if "=" not in text:
        return
    key, _, val = text.partition("=")
    key, val = key.strip(), val.strip()
    if not key or " " in key:
        return
    try:
        meta[key] = float(val)
    except ValueError:
        meta[key] = val


def _split_meta(meta):
    power = meta.pop("power_dbm", None)
    return (None if power is None else float(power)), meta


# --- Touchstone -------------------------------------------------------------


def export_touchstone(trace: S21Trace, path) -> Path:
    """Two-port Touchstone v1 file, RI format, Hz, 50 ohm reference.

    S12 is written equal to S21 (reciprocal network); S11/S22 are the
    trace's own values when present, otherwise zero.
    """
    if len(trace) == 0:
        raise ValidationError("cannot export an empty trace")
    path = Path(path)
    s11 = trace.s11 if trace.s11 is not None else np.zeros(len(trace), complex)
    s22 = trace.s22 if trace.s22 is not None else s11
    buf = io.StringIO()
    buf.write("! sirkit S21 trace\n")
    for line in _meta_lines(trace, "!"):
        buf.write(line + "\n")
    buf.write("# Hz S RI R 50\n")
    for f, a, b, d in zip(trace.frequencies, s11, trace.s21, s22):
        cols = [f, a.real, a.imag, b.real, b.imag, b.real, b.imag, d.real, d.imag]
        buf.write(" ".join(_fmt(c) for c in cols) + "\n")
    try:
        path.write_text(buf.getvalue(), encoding="utf-8")
    except OSError as exc:
        raise OSError(f"cannot write {path}: {exc}") from exc
    return path


def read_touchstone(path) -> S21Trace:
    """Read a .s1p or .s2p file into an S21Trace.

    For one-port files the single parameter is taken as the transmission
    trace (VNA exports of S21 alone are commonly saved that way).
    """
    path = Path(path)
    n_ports = 1 if path.suffix.lower() == ".s1p" else 2
    unit, fmt, z_ref = 1e9, "MA", 50.0
    option_seen = False
    meta = {}
    rows = []
    pending: list = []
    pending_line = 0
    with open(path, encoding="utf-8") as fh:
        for lineno, raw in enumerate(fh, start=1):
            text = raw.strip()
            if text.startswith("!"):
                _parse_meta(text[1:].strip(), meta)
                continue
            text = text.split("!", 1)[0].strip()
            if not text:
                continue
            if text.startswith("#"):
                if option_seen:
                    raise TraceFormatError("second option line", path, lineno)
                option_seen = True
                tokens = text[1:].upper().split()
                i = 0
                while i < len(tokens):
                    tok = tokens[i]
                    if tok in _FREQ_UNITS:
                        unit = _FREQ_UNITS[tok]
                    elif tok in ("RI", "MA", "DB"):
                        fmt = tok
                    elif tok == "S":
                        pass
                    elif tok == "R" and i + 1 < len(tokens):
                        try:
                            z_ref = float(tokens[i + 1])
                        except ValueError:
                            raise TraceFormatError(f"bad reference impedance {tokens[i + 1]!r}",
                                                   path, lineno) from None
                        i += 1
                    else:
                        raise TraceFormatError(f"unsupported option {tok!r}", path, lineno)
                    i += 1
                continue
            try:
                values = [float(tok) for tok in text.split()]
            except ValueError:
                raise TraceFormatError(f"non-numeric data: {text[:40]!r}", path, lineno) from None
            if not pending:
                pending_line = lineno
            pending.extend(values)
            need = 1 + 2 * n_ports * n_ports
            if len(pending) == need:
                rows.append(pending)
                pending = []
            elif len(pending) > need:
                raise TraceFormatError(
                    f"expected {need} values per frequency, got {len(pending)}", path, pending_line
                )
    if pending:
        raise TraceFormatError("truncated data record", path, pending_line)
    if not rows:
        raise TraceFormatError("no data records", path)
    data = np.array(rows, dtype=np.float64)
    freq = data[:, 0] * unit
    if np.any(np.diff(freq) <= 0):
        raise TraceFormatError("frequencies not strictly increasing", path)

    def pair(col):
        x, y = data[:, col], data[:, col + 1]
        if fmt == "RI":
            return x + 1j * y
        mag = x if fmt == "MA" else 10.0 ** (x / 20.0)
        return mag * np.exp(1j * np.deg2rad(y))

    power, meta = _split_meta(meta)
    meta["z_ref"] = z_ref
    if n_ports == 1:
        return S21Trace(freq, pair(1), power, meta)
    return S21Trace(freq, pair(3), power, meta, s11=pair(1), s22=pair(7))


# --- CSV traces -------------------------------------------------------------


def write_trace_csv(trace: S21Trace, path) -> Path:
    if len(trace) == 0:
        raise ValidationError("cannot export an empty trace")
    path = Path(path)
    lines = _meta_lines(trace, "#")
    lines.append(",".join(TRACE_COLUMNS))
    for f, s in zip(trace.frequencies, trace.s21):
        lines.append(f"{_fmt(f)},{_fmt(s.real)},{_fmt(s.imag)}")
    path.write_text("\n".join(lines) + "\n", encoding="utf-8")
    return path


def read_trace_csv(path) -> S21Trace:
    path = Path(path)
    meta = {}
    freq, re_, im_ = [], [], []
    header_seen = False
    with open(path, encoding="utf-8") as fh:
        for lineno, raw in enumerate(fh, start=1):
            text = raw.strip()
            if not text:
                continue
            if text.startswith("#"):
                _parse_meta(text[1:].strip(), meta)
                continue
            cells = [c.strip() for c in text.split(",")]
            if not header_seen:
                if tuple(cells) != TRACE_COLUMNS:
                    raise TraceFormatError(f"expected header {','.join(TRACE_COLUMNS)}", path, lineno)
                header_seen = True
                continue
            if len(cells) != 3:
                raise TraceFormatError(f"expected 3 columns, got {len(cells)}", path, lineno)
            try:
                f, a, b = (float(c) for c in cells)
            except ValueError:
                raise TraceFormatError(f"non-numeric data: {text[:40]!r}", path, lineno) from None
            freq.append(f)
            re_.append(a)
            im_.append(b)
    if not freq:
        raise TraceFormatError("no data rows", path)
    power, meta = _split_meta(meta)
    try:
        return S21Trace(np.array(freq), np.array(re_) + 1j * np.array(im_), power, meta)
    except ValidationError as exc:
        raise TraceFormatError(str(exc), path) from None


TRACE_SUFFIXES = (".csv", ".s1p", ".s2p")


def read_trace(path) -> S21Trace:
    """Read a trace, choosing the format from the file suffix."""
    suffix = Path(path).suffix.lower()
    if suffix == ".csv":
        return read_trace_csv(path)
    if suffix in (".s1p", ".s2p"):
        return read_touchstone(path)
    raise TraceFormatError(f"unknown trace format {suffix!r}", path)


def write_trace(trace: S21Trace, path) -> Path:
    suffix = Path(path).suffix.lower()
    if suffix == ".csv":
        return write_trace_csv(trace, path)
    if suffix == ".s2p":
        return export_touchstone(trace, path)
    raise ValidationError(f"cannot write traces as {suffix!r} (use .csv or .s2p)")


# --- fit results ------------------------------------------------------------


def _cell(x):
    if x is None or (isinstance(x, float) and math.isnan(x)):
        return ""
    if isinstance(x, (float, np.floating)):
        return _fmt(x)
    return str(x)


def write_fit_results(rows, path) -> Path:
    """``rows`` are dicts keyed by FIT_COLUMNS; missing values stay empty."""
    path = Path(path)
    with open(path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(FIT_COLUMNS)
        for row in rows:
            writer.writerow([_cell(row.get(col)) for col in FIT_COLUMNS])
    return path


def read_fit_results(path) -> list:
    with open(path, encoding="utf-8", newline="") as fh:
        out = []
        for row in csv.DictReader(fh):
            parsed = {}
            for key, val in row.items():
                if key in ("trace_id", "status"):
                    parsed[key] = val
                else:
                    parsed[key] = float(val) if val != "" else math.nan
            out.append(parsed)
        return out
