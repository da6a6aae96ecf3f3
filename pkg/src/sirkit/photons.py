"""Circulating photon number and incident-power sweeps.

    <n> = P_inc Q_L (1 - Q_L / Q_i) / (n pi h f_r^2)

with n the harmonic index of the probed mode.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from typing import Sequence

from scipy.constants import h as PLANCK

from sirkit.errors import InconsistentQError, SirkitError, ValidationError
from sirkit.fitting import FitResult, fit_notch
from sirkit.network import S21Trace

log = logging.getLogger(__name__)


def dbm_to_watt(p_dbm: float) -> float:
    return 1e-3 * 10.0 ** (p_dbm / 10.0)


def watt_to_dbm(p_w: float) -> float:
    return 10.0 * math.log10(p_w / 1e-3)


def _photon_factor(q_loaded, q_internal, harmonic, f_r):
    if harmonic < 1:
        raise ValidationError(f"harmonic index must be >= 1 (got {harmonic})", field="harmonic")
    if not f_r > 0:
        raise ValidationError("resonance frequency must be > 0", field="f_r")
    if not (0 < q_loaded <= q_internal):
        raise InconsistentQError(
            f"need 0 < Q_L <= Q_i (got Q_L={q_loaded:.6g}, Q_i={q_internal:.6g})"
        )
    return q_loaded * (1.0 - q_loaded / q_internal) / (harmonic * math.pi * PLANCK * f_r**2)


def photon_number(p_inc: float, q_loaded: float, q_internal: float, harmonic: int = 1,
                  f_r: float = 6e9) -> float:
    """Average photon number for an incident power ``p_inc`` in watts."""
    if p_inc < 0:
        raise ValidationError("incident power must be >= 0", field="p_inc")
    return p_inc * _photon_factor(q_loaded, q_internal, harmonic, f_r)


def single_photon_power(q_loaded: float, q_internal: float, harmonic: int = 1,
                        f_r: float = 6e9) -> float:
    """Incident power in dBm that puts one photon in the resonator."""
    factor = _photon_factor(q_loaded, q_internal, harmonic, f_r)
    if factor == 0:
        raise InconsistentQError("Q_L == Q_i leaves no coupling; no finite single-photon power")
    return watt_to_dbm(1.0 / factor)


@dataclass
class PowerPoint:
    incident_power_dbm: float  # at the chip
    photon_number: float
    fit: FitResult
    trace_id: str = ""
    source_power_dbm: float = math.nan


@dataclass
class PowerSweep:
    points: list = field(default_factory=list)
    failures: list = field(default_factory=list)  # (trace_id, message)

    def __iter__(self):
        return iter(self.points)

    def __len__(self):
        return len(self.points)


def power_sweep(traces: Sequence[S21Trace], line_attenuation_db: float, harmonic: int = 1,
                trace_ids: Sequence[str] | None = None) -> PowerSweep:
    """Fit every trace and convert its source power to a photon number.

    Chip power is the trace's ``incident_power_dbm`` minus the line
    attenuation. Fit failures are collected rather than raised; points
    come back sorted by photon number.
    """
    if line_attenuation_db < 0:
        raise ValidationError("attenuation must be >= 0 dB", field="line_attenuation_db")
    if trace_ids is None:
        trace_ids = [str(t.metadata.get("trace_id", i)) for i, t in enumerate(traces)]
    out = PowerSweep()
    for tid, trace in zip(trace_ids, traces):
        if trace.incident_power_dbm is None:
            out.failures.append((tid, "missing incident power"))
            log.warning("%s: no incident power, skipped", tid)
            continue
        chip = trace.incident_power_dbm - line_attenuation_db
        try:
            fit = fit_notch(trace)
            n = photon_number(dbm_to_watt(chip), fit.q_loaded, fit.q_internal, harmonic, fit.f_r)
        except SirkitError as exc:
            out.failures.append((tid, str(exc)))
            log.warning("%s: %s", tid, exc)
            continue
        out.points.append(PowerPoint(chip, n, fit, tid, trace.incident_power_dbm))
    out.points.sort(key=lambda p: p.photon_number)
    return out
