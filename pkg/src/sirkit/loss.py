"""Power-dependent internal loss from saturable two-level systems.

    1/Q_i(n) = F delta0 tanh(h f / 2 k T) / (1 + n / n_c)^beta + 1/Q_other

This is a synthetic generator for exercising the fitting pipeline on
realistic power sweeps; it makes no claim about any particular device.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace
from typing import Sequence

import numpy as np
from scipy.constants import h as PLANCK
from scipy.constants import k as BOLTZMANN

from sirkit.errors import ConvergenceError, ValidationError
from sirkit.network import (
    ResonatorSpec,
    S21Trace,
    coupling_q_from_cap,
    fundamental_frequency,
    line_q_for_internal_q,
    simulate_notch,
)
from sirkit.photons import dbm_to_watt, photon_number

DAMPING = 0.5
FIXED_POINT_RTOL = 1e-6
MAX_ITER = 100


@dataclass(frozen=True)
class LossModelParams:
    tls_loss_tangent: float = 8e-6  # F delta0
    critical_photon_number: float = 10.0
    saturation_exponent: float = 0.5
    power_independent_q: float = 1e6
    temperature: float = 0.010  # K
    frequency: float = 6e9  # Hz

    def __post_init__(self):
        for name in ("tls_loss_tangent", "critical_photon_number", "power_independent_q",
                     "temperature", "frequency"):
            val = getattr(self, name)
            if not (val > 0 and math.isfinite(val)):
                raise ValidationError(f"{name} must be positive (got {val})", field=name)
        if not 0.0 < self.saturation_exponent <= 1.0:
            raise ValidationError("saturation_exponent must lie in (0, 1]",
                                  field="saturation_exponent")

    @property
    def thermal_factor(self) -> float:
        return math.tanh(PLANCK * self.frequency / (2.0 * BOLTZMANN * self.temperature))


def qi_of_photon_number(params: LossModelParams, n):
    """Internal Q at mean photon number ``n`` (scalar or array)."""
    n_arr = np.asarray(n, dtype=np.float64)
    if np.any(n_arr < 0):
        raise ValidationError("photon number must be >= 0", field="n")
    tls = params.tls_loss_tangent * params.thermal_factor
    inv = tls / (1.0 + n_arr / params.critical_photon_number) ** params.saturation_exponent
    q = 1.0 / (inv + 1.0 / params.power_independent_q)
    return float(q) if q.ndim == 0 else q


def self_consistent_qi(params: LossModelParams, chip_power_w: float, q_coupling: float,
                       f_r: float) -> tuple:
    """Solve Q_i = Q_i(n(Q_i)) by damped fixed-point iteration.

    Returns ``(q_internal, photon_number, iterations)``.
    """
    qi = qi_of_photon_number(params, 0.0)
    for it in range(1, MAX_ITER + 1):
        ql = 1.0 / (1.0 / qi + 1.0 / q_coupling)
        n = photon_number(chip_power_w, ql, qi, 1, f_r)
        target = qi_of_photon_number(params, n)
        new = (1.0 - DAMPING) * qi + DAMPING * target
        if abs(target / qi - 1.0) < FIXED_POINT_RTOL:
            ql = 1.0 / (1.0 / target + 1.0 / q_coupling)
            return target, photon_number(chip_power_w, ql, target, 1, f_r), it
        qi = new
    raise ConvergenceError(
        f"Q_i(n) self-consistency did not converge in {MAX_ITER} iterations",
        {"q_internal": qi, "chip_power_w": chip_power_w},
    )


def synthesize_power_sweep(
    params: LossModelParams,
    resonator: ResonatorSpec,
    powers_dbm: Sequence[float],
    attenuation_db: float,
    noise_snr_db: float | None = 40.0,
    seed: int = 0,
    q_coupling: float | None = None,
    points: int = 1601,
    linewidths: float = 10.0,
) -> list:
    """Simulated notch traces at each source power.

    ``q_coupling`` defaults to the coupling Q of ``resonator`` measured on
    the lossless simulation. Each trace records its source power as
    ``incident_power_dbm`` and the programmed Q_i and photon number in
    its metadata. Noise for point ``i`` comes from the sub-seed
    ``(seed, i)``, so traces do not depend on evaluation order. The
    section loss is set so the resonator's effective Q_i, coupling
    network included, equals the programmed value.
    """
    if attenuation_db < 0:
        raise ValidationError("attenuation must be >= 0 dB", field="attenuation_db")
    if resonator.coupling_cap <= 0:
        raise ValidationError("resonator needs a coupling capacitor", field="coupling_cap")
    lossless = replace(resonator, internal_q=None)
    f_r = fundamental_frequency(lossless)
    if q_coupling is None:
        q_coupling = coupling_q_from_cap(resonator.coupling_cap, lossless)

    traces = []
    for i, p_dbm in enumerate(powers_dbm):
        chip_w = dbm_to_watt(p_dbm - attenuation_db)
        qi, n, iters = self_consistent_qi(params, chip_w, q_coupling, f_r)
        lossy = replace(resonator, internal_q=line_q_for_internal_q(qi, lossless))
        trace = simulate_notch(lossy, points=points, linewidths=linewidths)
        s21 = trace.s21
        if noise_snr_db is not None:
            rng = np.random.default_rng([seed, i])
            sigma = np.median(np.abs(s21)) * 10.0 ** (-noise_snr_db / 20.0) / math.sqrt(2.0)
            s21 = s21 + sigma * (rng.standard_normal(len(s21)) + 1j * rng.standard_normal(len(s21)))
        meta = {
            "trace_id": f"p{i:03d}",
            "programmed_qi": qi,
            "programmed_n": n,
            "programmed_qc": q_coupling,
            "fixed_point_iterations": iters,
        }
        traces.append(S21Trace(trace.frequencies, s21, float(p_dbm), meta))
    return traces
